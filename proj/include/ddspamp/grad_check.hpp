#pragma once
#include <functional>
#include <string>
#include <vector>

#include "ddspamp/params.hpp"

namespace ddspamp {

// Central-difference comparison against an analytic gradient. `loss_fn` must
// recompute the scalar loss from the store's current values; the store is
// perturbed in place and restored afterwards.
struct GradCheckEntry {
    std::string name;
    double analytic = 0.0;
    double numeric = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
};

struct GradCheckResult {
    bool pass = true;
    double max_abs_err = 0.0;
    double max_rel_err_failing = 0.0; // over scalars that miss the abs gate
    GradCheckEntry worst;             // scalar with the largest relative error
    std::size_t checked = 0;
    std::size_t failed = 0;
};

GradCheckResult grad_check(const std::function<double(const ParamStore&)>& loss_fn,
                           ParamStore& store, const Gradient& analytic,
                           double step_scale = 1e-5, double abs_tol = 1e-7,
                           double rel_tol = 1e-4);

} // namespace ddspamp
