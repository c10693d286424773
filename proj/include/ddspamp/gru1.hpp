#pragma once
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace ddspamp {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Hidden-size-1 GRU: 9 trainable scalars, one bias per gate.
struct Gru1Params {
    double w_r = 0.0, w_z = 0.0, w_c = 0.0; // input weights
    double u_r = 0.0, u_z = 0.0, u_c = 0.0; // recurrent weights
    double b_r = 0.0, b_z = 0.0, b_c = 0.0; // biases

    std::array<double, 9> flat() const { return {w_r, w_z, w_c, u_r, u_z, u_c, b_r, b_z, b_c}; }
    static Gru1Params from_flat(const double* p) {
        return {p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8]};
    }
};

struct Gru1State {
    double h = 0.0;
    void reset() { h = 0.0; }
};

// r = sig(w_r x + u_r h + b_r); z = sig(w_z x + u_z h + b_z);
// c = tanh(w_c x + r u_c h + b_c); h' = (1-z) c + z h; output is h' itself.
inline double gru1_step(const Gru1Params& p, double x, Gru1State& s) {
    const double r = sigmoid(p.w_r * x + p.u_r * s.h + p.b_r);
    const double z = sigmoid(p.w_z * x + p.u_z * s.h + p.b_z);
    const double c = std::tanh(p.w_c * x + r * p.u_c * s.h + p.b_c);
    s.h = (1.0 - z) * c + z * s.h;
    return s.h;
}

std::vector<double> gru1_process(const Gru1Params& p, const std::vector<double>& segment,
                                 Gru1State& state);

// Steady-state output for a constant input, by fixed-point iteration.
double gru1_fixed_point(const Gru1Params& p, double x, int max_iters = 4096,
                        double tol = 1e-13);

} // namespace ddspamp
