#include "ddspamp/gru1.hpp"

#include <cmath>

namespace ddspamp {

std::vector<double> gru1_process(const Gru1Params& p, const std::vector<double>& segment,
                                 Gru1State& state) {
    std::vector<double> y(segment.size());
    for (std::size_t n = 0; n < segment.size(); ++n)
        y[n] = gru1_step(p, segment[n], state);
    return y;
}

double gru1_fixed_point(const Gru1Params& p, double x, int max_iters, double tol) {
    Gru1State s;
    double prev = 0.0;
    for (int i = 0; i < max_iters; ++i) {
        const double h = gru1_step(p, x, s);
        if (i > 0 && std::abs(h - prev) < tol)
            return h;
        prev = h;
    }
    return prev;
}

} // namespace ddspamp
