#pragma once
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ddspamp/params.hpp"
#include "ddspamp/tape.hpp"

namespace ddspamp {

struct ParamRange {
    double lo = 0.0;
    double hi = 1.0;
    bool log_scale = false;
    // Value the parameter should take at initialization. NaN means "range
    // midpoint". Gains default to unity and EQ gains to 0 dB so an untrained
    // model passes signal at sensible loudness instead of starting from
    // near-silence (a cascade of mid-range log gains attenuates brutally).
    double neutral = std::numeric_limits<double>::quiet_NaN();
};

// Default parameter ranges for every mapped DSP quantity. All log-scaled
// unless noted; chosen as musically sensible bounds.
namespace ranges {
inline constexpr ParamRange low_shelf_fc{30.0, 450.0, true, 120.0};
inline constexpr ParamRange peak_fc{200.0, 4000.0, true, 800.0};
inline constexpr ParamRange high_shelf_fc{1500.0, 12000.0, true, 4000.0};
inline constexpr ParamRange high_pass_fc{10.0, 120.0, true, 35.0};
inline constexpr ParamRange low_pass_fc{4000.0, 20000.0, true, 9000.0};
inline constexpr ParamRange filter_gain_db{-24.0, 24.0, false, 0.0}; // linear
inline constexpr ParamRange filter_q{0.3, 3.0, true, 0.707};
inline constexpr ParamRange pregain{0.1, 20.0, true, 1.0};
inline constexpr ParamRange postgain{0.01, 2.0, true, 1.0};
inline constexpr ParamRange master_gain{1e-3, 1.0, true, 0.3};
inline constexpr ParamRange clip_drive{0.5, 10.0, true, 1.5};
} // namespace ranges

double map_range(const ParamRange& r, double u); // u in (0,1)

// Pre-sigmoid value whose mapped output equals the range's neutral value
// (0 for NaN neutrals, i.e. the midpoint). Used to bias controller outputs.
double neutral_logit(const ParamRange& r);

// Three dense layers in -> 32 -> 32 -> out with LeakyReLU(0.1) between them,
// sigmoid on the output, then a ParamRange per output. Weights are registered
// in the given store under `prefix.` at construction.
class MlpController {
public:
    static constexpr int kHidden = 32;
    static constexpr double kLeakySlope = 0.1;

    MlpController(ParamStore& store, std::string prefix, int in_dim,
                  std::vector<ParamRange> out_ranges, std::mt19937& rng);

    // inputs are knob values already normalized to [-1, 1]
    std::vector<double> eval(const ParamStore& store, const std::vector<double>& inputs) const;
    TV eval_tv(Tape& t, const ParamStore& store, const std::vector<double>& inputs) const;

    int in_dim() const { return in_; }
    int out_dim() const { return static_cast<int>(ranges_.size()); }
    const std::vector<ParamRange>& out_ranges() const { return ranges_; }
    std::size_t param_count() const;

private:
    int in_;
    std::vector<ParamRange> ranges_;
    int e_w1_, e_b1_, e_w2_, e_b2_, e_w3_, e_b3_;
};

// Knob-free controller: raw learnable scalars through sigmoid + range map.
// Raw values start at each range's neutral logit.
class StaticController {
public:
    StaticController(ParamStore& store, std::string prefix, std::vector<ParamRange> out_ranges);

    std::vector<double> eval(const ParamStore& store) const;
    TV eval_tv(Tape& t, const ParamStore& store) const;

    int out_dim() const { return static_cast<int>(ranges_.size()); }
    const std::vector<ParamRange>& out_ranges() const { return ranges_; }
    std::size_t param_count() const { return ranges_.size(); }

private:
    std::vector<ParamRange> ranges_;
    int e_raw_;
};

} // namespace ddspamp
