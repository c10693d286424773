#pragma once
#include <vector>

#include "ddspamp/amp_model.hpp" // KnobVector
#include "ddspamp/params.hpp"
#include "ddspamp/tape.hpp"

namespace ddspamp {

// Black-box baseline: single GRU layer with the knob vector concatenated onto
// every input sample, plus a linear output head. Hidden sizes 8 ("small") and
// 48 ("big"). Parameter count = 3h(1+K+h) + 3h + h + 1.
class ConcatGruModel {
public:
    ConcatGruModel(int hidden, ParamStore& store, unsigned seed, int knob_count = 5);

    int hidden() const { return h_; }
    int knob_count() const { return k_; }
    std::size_t param_count() const;

    struct State {
        std::vector<double> h;
        void reset() { std::fill(h.begin(), h.end(), 0.0); }
    };
    State make_state() const { return {std::vector<double>(static_cast<std::size_t>(h_), 0.0)}; }

    std::vector<double> process(const ParamStore& store, const KnobVector& knobs,
                                const std::vector<double>& block, State& state) const;
    TV build_train_graph(Tape& t, const ParamStore& store, const KnobVector& knobs,
                         const std::vector<double>& input) const;

private:
    int h_;
    int k_;
    int e_wih_, e_whh_, e_bias_, e_headw_, e_headb_;

    std::vector<double> normalized_knobs(const KnobVector& k) const;
};

} // namespace ddspamp
