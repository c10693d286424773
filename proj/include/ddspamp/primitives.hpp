#pragma once
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ddspamp {

// y = tanh(drive * x); odd symmetric, |y| < 1.
inline double soft_clip(double x, double drive) {
    if (!(drive > 0.0))
        throw std::runtime_error("soft_clip: drive must be positive");
    return std::tanh(drive * x);
}

inline void apply_gain_inplace(std::vector<double>& segment, double g) {
    if (!std::isfinite(g))
        throw std::runtime_error("apply_gain: non-finite gain");
    for (double& v : segment)
        v *= g;
}

inline std::vector<double> apply_gain(std::vector<double> segment, double g) {
    apply_gain_inplace(segment, g);
    return segment;
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 20.0); }
inline double lin_to_db(double lin) { return 20.0 * std::log10(lin); }

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

} // namespace ddspamp
