#pragma once
#include <array>
#include <cstddef>
#include <vector>

#include "ddspamp/tape.hpp"

namespace ddspamp {

// Loss conventions shared by the plain and differentiable paths:
//  - MAE: mean of |y - yhat|, computed as a sequential sum times 1/N.
//  - MR-STFT: for each window w in {128, 512, 2048}, hop w/4, periodic Hann,
//    one-sided bins 0..w/2: spectral convergence ||Y|-|Yh||_F / ||Y||_F plus
//    the mean L1 distance of log(|.| + 1e-7); terms summed over resolutions.
// The tape versions mirror the plain summation order exactly, so values agree
// bit for bit and identities like SC(2y, y) = 1 hold exactly.

inline constexpr std::array<std::size_t, 3> kStftWindows{128, 512, 2048};
inline constexpr double kLogMagEps = 1e-7;

struct MrStftParts {
    double sc = 0.0;
    double log_mag = 0.0;
};

struct MrStftBreakdown {
    std::array<MrStftParts, 3> per_resolution{};
    double total = 0.0;
};

double mae_loss(const std::vector<double>& y, const std::vector<double>& yhat);
MrStftBreakdown mrstft_breakdown(const std::vector<double>& y, const std::vector<double>& yhat);
double mrstft_loss(const std::vector<double>& y, const std::vector<double>& yhat);

// Differentiable versions; `target` enters the graph as constants.
TV mae_loss_tv(Tape& t, const std::vector<double>& target, TV yhat);
TV mrstft_loss_tv(Tape& t, const std::vector<double>& target, TV yhat);

std::vector<double> hann_window(std::size_t n);

} // namespace ddspamp
