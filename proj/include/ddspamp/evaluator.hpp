#pragma once
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ddspamp/amp_model.hpp"
#include "ddspamp/dataset.hpp"
#include "ddspamp/model.hpp"

namespace ddspamp {

// Analytic per-output-sample floating-point budget. Conventions, applied
// uniformly to every architecture so ratios are meaningful:
//  - a length-n dot product accumulated onto a scalar costs n muls + n adds;
//  - each elementwise add/sub/mul costs 1; divisions cost 1 (none occur in
//    the streaming paths);
//  - every sigmoid/tanh call costs 30 ops;
//  - knob controllers run once per knob change, not per sample, so their
//    cost amortizes to 0;
//  - memory traffic is not counted.
struct OpsBudget {
    double adds = 0.0;
    double muls = 0.0;
    double divs = 0.0;
    double nonlin_calls = 0.0;

    double total() const { return adds + muls + divs + 30.0 * nonlin_calls; }
    OpsBudget& operator+=(const OpsBudget& o) {
        adds += o.adds;
        muls += o.muls;
        divs += o.divs;
        nonlin_calls += o.nonlin_calls;
        return *this;
    }
};

OpsBudget count_ops(ModelKind kind);
std::size_t count_params(const ParamStore& store);

// Component budgets, exposed for tests.
OpsBudget ops_biquad();
OpsBudget ops_gru1();
OpsBudget ops_wh_block();
OpsBudget ops_concat_gru(int hidden, int knobs);

struct EvalMetrics {
    double mae = 0.0;
    double mrstft = 0.0;
    std::size_t regions = 0;
    std::size_t samples = 0;
};

struct EvalReport {
    std::string arch_id;
    std::size_t params = 0;
    OpsBudget ops;
    bool has_seen = false;
    bool has_unseen = false;
    EvalMetrics seen;
    EvalMetrics unseen;

    std::string to_text() const;
    std::string to_csv() const;
};

// Streams each relevant pair from sample 0 in `block_size` blocks with
// carried state, then scores only the split's region: MAE pooled over
// samples, MR-STFT averaged over regions. Bit-identical for any block size.
EvalMetrics evaluate_split(const Model& model, const ParamStore& store, const Dataset& data,
                           Split split, std::size_t block_size = 4096);

// Full report over the test splits (seen, plus unseen when present).
EvalReport evaluate(const Model& model, const ParamStore& store, const Dataset& data,
                    std::size_t block_size = 4096);

// Steady-state sine probe of one stage. The requested frequency is snapped so
// that a whole period is an even number of samples; after a one-second
// settling run, exactly one period of (input, output) pairs is captured and
// the enclosed loop area is computed by the shoelace formula. Memoryless
// stages retrace one curve and enclose zero area; hysteretic stages do not.
struct DistortionProbe {
    std::vector<double> x;
    std::vector<double> y;
    double loop_area = 0.0;
    double freq_used = 0.0;

    std::string to_csv() const;
};

DistortionProbe probe_distortion_curve(const AmpModel& amp, const DesignedAmp& design,
                                       Stage stage, double freq, double amplitude,
                                       WhNonlin nl = WhNonlin::Gru);
// Whole-model variant (works for the baselines too).
DistortionProbe probe_distortion_curve(const Model& model, const ParamStore& store,
                                       const KnobVector& knobs, double freq, double amplitude,
                                       double fs = 44100.0);

// Magnitude response of a stage's linear filter cascade from the analytic
// biquad product, log-spaced between fmin and fmax.
struct ResponsePoint {
    double freq = 0.0;
    double mag_db = 0.0;
};

std::vector<BiquadCoeffs> stage_filter_cascade(const DesignedAmp& design, Stage stage);
std::vector<ResponsePoint> probe_frequency_response(const std::vector<BiquadCoeffs>& cascade,
                                                    double fs, std::size_t points = 512,
                                                    double fmin = 20.0, double fmax = 20000.0);
std::string response_csv(const std::vector<ResponsePoint>& points);

} // namespace ddspamp
