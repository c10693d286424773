#pragma once
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ddspamp/biquad.hpp"
#include "ddspamp/controller.hpp"
#include "ddspamp/gru1.hpp"
#include "ddspamp/params.hpp"
#include "ddspamp/tape.hpp"

namespace ddspamp {

// Table-1 ablation ladder:
//   C: one 4-block WH chain, conditioned on all five knobs
//   D: WH preamp (gain) + LPH tone stack + second WH chain (master)
//   E: WH preamp + LPH tone stack + push-pull power amp (master)
//   F: E + output transformer
enum class AmpConfig { C, D, E, F };

const char* amp_config_name(AmpConfig c);
AmpConfig amp_config_from_name(const std::string& name);

struct KnobVector {
    double gain = 0.5;
    double bass = 0.5;
    double mid = 0.5;
    double treble = 0.5;
    double master = 0.5;

    void validate() const;
    std::array<double, 5> as_array() const { return {gain, bass, mid, treble, master}; }
    // 2k - 1, the MLP input scaling
    static double normalized(double k) { return 2.0 * k - 1.0; }
};

// Debug selector for the WH nonlinearity (inference path only); Tanh and
// Identity exist to validate plumbing against closed-form references.
enum class WhNonlin { Gru, Tanh, Identity };

// ---- designed (plain-valued) parameters at a fixed knob setting ----

struct DesignedWh {
    std::array<BiquadCoeffs, 3> h1; // low shelf, peak, high shelf
    std::array<BiquadCoeffs, 3> h2;
    Gru1Params gru;
    double pregain = 1.0;
    double postgain = 1.0;
};

struct DesignedAmp {
    AmpConfig config = AmpConfig::F;
    std::vector<DesignedWh> chain1; // preamp (or the whole model for C)
    bool has_tone = false;
    std::array<BiquadCoeffs, 3> tone{};
    std::vector<DesignedWh> chain2; // config D only
    bool has_power = false;
    double master = 1.0;
    BiquadCoeffs feedback = identity_biquad();
    double drive_gain = 1.0;
    double clip_drive = 1.0;
    std::array<DesignedWh, 2> pa{}; // push / pull paths
    double mix_a = 1.0;
    double mix_b = 1.0;
    bool has_transformer = false;
    double t_in = 1.0;
    double t_out = 1.0;
    Gru1Params t_gru;
    BiquadCoeffs t_hp = identity_biquad();
    BiquadCoeffs t_lp = identity_biquad();
};

// ---- streaming state, in the documented order ----
// chain1 blocks 0..3 (each: h1[0..2], gru, h2[0..2]), tone stack filters
// 0..2, chain2 blocks 0..3, power amp (feedback, path a block, path b block),
// transformer (gru, hp, lp). Zero at stream start.

struct WhState {
    std::array<BiquadState, 3> h1;
    Gru1State gru;
    std::array<BiquadState, 3> h2;
    void reset();
};

struct StreamState {
    std::vector<WhState> chain1;
    std::array<BiquadState, 3> tone;
    std::vector<WhState> chain2;
    BiquadState feedback;
    std::array<WhState, 2> pa;
    Gru1State t_gru;
    BiquadState t_hp;
    BiquadState t_lp;
    void reset();
};

// Stage selector for probes and plumbing tests.
enum class Stage { Preamp, ToneStack, PowerAmp, Transformer, Clipper, FullChain };

const char* stage_name(Stage s);
Stage stage_from_name(const std::string& name);

// Free stage kernels (also the building blocks of the model's process()).
std::vector<double> wh_forward(const DesignedWh& w, WhState& s, const std::vector<double>& x,
                               WhNonlin nl = WhNonlin::Gru);
std::vector<double> tonestack_forward(const std::array<BiquadCoeffs, 3>& filters,
                                      std::array<BiquadState, 3>& s,
                                      const std::vector<double>& x);

class AmpModel {
public:
    static constexpr int kWhPerChain = 4;
    static constexpr int kWhCtrlOuts = 20; // per block: pregain + 9 + postgain + 9

    // Registers every trainable scalar in `store` (exactly once, in a fixed
    // order that is the checkpoint layout).
    AmpModel(AmpConfig cfg, ParamStore& store, unsigned seed, double fs = 44100.0);

    AmpConfig config() const { return cfg_; }
    double sample_rate() const { return fs_; }

    DesignedAmp design(const ParamStore& store, const KnobVector& knobs) const;
    StreamState make_state() const;

    std::vector<double> process(const DesignedAmp& d, const std::vector<double>& block,
                                StreamState& state, WhNonlin nl = WhNonlin::Gru) const;
    std::vector<double> process(const ParamStore& store, const KnobVector& knobs,
                                const std::vector<double>& block, StreamState& state) const;
    std::vector<double> process_stage(Stage stage, const DesignedAmp& d,
                                      const std::vector<double>& block, StreamState& state,
                                      WhNonlin nl = WhNonlin::Gru) const;

    // Differentiable forward over one segment: controllers evaluated once,
    // filters applied by frequency sampling, recurrences from zero state.
    TV build_train_graph(Tape& t, const ParamStore& store, const KnobVector& knobs,
                         const std::vector<double>& input) const;

    // Range-mapped controller outputs per stage, for probes/tests.
    std::vector<double> chain1_params(const ParamStore& store, const KnobVector& knobs) const;
    std::vector<double> tone_params(const ParamStore& store, const KnobVector& knobs) const;

    static std::vector<ParamRange> wh_block_ranges();
    static std::vector<ParamRange> tone_ranges();

private:
    AmpConfig cfg_;
    double fs_;
    std::optional<MlpController> ctrl_chain1_;
    int e_gru1_ = -1;
    std::optional<MlpController> ctrl_tone_;
    std::optional<MlpController> ctrl_chain2_;
    int e_gru2_ = -1;
    std::optional<MlpController> ctrl_pow_;
    int e_gru_pow_ = -1;
    std::optional<StaticController> ctrl_trans_;
    int e_gru_trans_ = -1;

    std::vector<double> chain1_inputs(const KnobVector& k) const;
};

} // namespace ddspamp
