#include "ddspamp/amp_model.hpp"

#include <cmath>
#include <stdexcept>

#include "ddspamp/fft.hpp"
#include "ddspamp/primitives.hpp"

namespace ddspamp {

const char* amp_config_name(AmpConfig c) {
    switch (c) {
        case AmpConfig::C: return "C";
        case AmpConfig::D: return "D";
        case AmpConfig::E: return "E";
        case AmpConfig::F: return "F";
    }
    return "?";
}

AmpConfig amp_config_from_name(const std::string& name) {
    if (name == "C") return AmpConfig::C;
    if (name == "D") return AmpConfig::D;
    if (name == "E") return AmpConfig::E;
    if (name == "F") return AmpConfig::F;
    throw std::runtime_error("unknown amp config '" + name + "' (expected C, D, E or F)");
}

void KnobVector::validate() const {
    for (double k : as_array())
        if (!(k >= 0.0 && k <= 1.0))
            throw std::runtime_error("knob value " + std::to_string(k) + " outside [0, 1]");
}

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Preamp: return "preamp";
        case Stage::ToneStack: return "tonestack";
        case Stage::PowerAmp: return "poweramp";
        case Stage::Transformer: return "transformer";
        case Stage::Clipper: return "clipper";
        case Stage::FullChain: return "full";
    }
    return "?";
}

Stage stage_from_name(const std::string& name) {
    for (Stage s : {Stage::Preamp, Stage::ToneStack, Stage::PowerAmp, Stage::Transformer,
                    Stage::Clipper, Stage::FullChain})
        if (name == stage_name(s))
            return s;
    throw std::runtime_error("unknown stage '" + name + "'");
}

void WhState::reset() {
    for (auto& b : h1)
        b.reset();
    gru.reset();
    for (auto& b : h2)
        b.reset();
}

void StreamState::reset() {
    for (auto& w : chain1)
        w.reset();
    for (auto& b : tone)
        b.reset();
    for (auto& w : chain2)
        w.reset();
    feedback.reset();
    for (auto& w : pa)
        w.reset();
    t_gru.reset();
    t_hp.reset();
    t_lp.reset();
}

// ---- controller output layouts ----

std::vector<ParamRange> AmpModel::wh_block_ranges() {
    using namespace ranges;
    return {pregain,
            low_shelf_fc, filter_gain_db, filter_q,
            peak_fc, filter_gain_db, filter_q,
            high_shelf_fc, filter_gain_db, filter_q,
            postgain,
            low_shelf_fc, filter_gain_db, filter_q,
            peak_fc, filter_gain_db, filter_q,
            high_shelf_fc, filter_gain_db, filter_q};
}

std::vector<ParamRange> AmpModel::tone_ranges() {
    using namespace ranges;
    return {low_shelf_fc, filter_gain_db, filter_q,
            peak_fc, filter_gain_db, filter_q,
            high_shelf_fc, filter_gain_db, filter_q};
}

namespace {

std::vector<ParamRange> chain_ranges() {
    std::vector<ParamRange> out;
    for (int b = 0; b < AmpModel::kWhPerChain; ++b) {
        const auto r = AmpModel::wh_block_ranges();
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

// master, feedback high shelf (fc, gain, q), drive gain, clip drive,
// path-a WH (20), path-b WH (20), mix a, mix b -> 48 outputs
std::vector<ParamRange> power_ranges() {
    using namespace ranges;
    std::vector<ParamRange> out{master_gain, high_shelf_fc, filter_gain_db, filter_q,
                                pregain, clip_drive};
    const auto wh = AmpModel::wh_block_ranges();
    out.insert(out.end(), wh.begin(), wh.end());
    out.insert(out.end(), wh.begin(), wh.end());
    out.push_back(postgain);
    out.push_back(postgain);
    return out;
}

// input gain, HP (fc, q), LP (fc, q), output gain
std::vector<ParamRange> transformer_ranges() {
    using namespace ranges;
    return {pregain, high_pass_fc, filter_q, low_pass_fc, filter_q, postgain};
}

// GRU-1 stages start as unit-ish tanh waveshapers: w_c in (1, 2) places the
// small-signal gain near one, b_z = -1 keeps the update gate mostly open so
// the recurrence starts as a light smoother, and the remaining weights stay
// small. Flat order per stage: w_r w_z w_c u_r u_z u_c b_r b_z b_c.
std::vector<double> gru1_init(std::mt19937& rng, std::size_t stages) {
    std::uniform_real_distribution<double> small(-0.25, 0.25);
    std::uniform_real_distribution<double> gain(1.0, 2.0);
    std::vector<double> v(9 * stages, 0.0);
    for (std::size_t s = 0; s < stages; ++s) {
        double* p = &v[9 * s];
        p[0] = small(rng);
        p[1] = small(rng);
        p[2] = gain(rng);
        p[3] = small(rng);
        p[4] = small(rng);
        p[5] = small(rng);
        p[7] = -1.0;
    }
    return v;
}

DesignedWh design_wh(const double* p, const double* g, double fs) {
    DesignedWh w;
    w.pregain = p[0];
    w.h1 = {design_biquad({FilterKind::LowShelf, p[1], p[2], p[3]}, fs),
            design_biquad({FilterKind::Peak, p[4], p[5], p[6]}, fs),
            design_biquad({FilterKind::HighShelf, p[7], p[8], p[9]}, fs)};
    w.postgain = p[10];
    w.h2 = {design_biquad({FilterKind::LowShelf, p[11], p[12], p[13]}, fs),
            design_biquad({FilterKind::Peak, p[14], p[15], p[16]}, fs),
            design_biquad({FilterKind::HighShelf, p[17], p[18], p[19]}, fs)};
    w.gru = Gru1Params::from_flat(g);
    return w;
}

} // namespace

// ---- construction / registration ----

AmpModel::AmpModel(AmpConfig cfg, ParamStore& store, unsigned seed, double fs)
    : cfg_(cfg), fs_(fs) {
    std::mt19937 rng(seed);

    if (cfg_ == AmpConfig::C) {
        ctrl_chain1_.emplace(store, "wh.ctrl", 5, chain_ranges(), rng);
        e_gru1_ = store.add("wh.gru", gru1_init(rng, kWhPerChain));
        return;
    }

    ctrl_chain1_.emplace(store, "pre.ctrl", 1, chain_ranges(), rng);
    e_gru1_ = store.add("pre.gru", gru1_init(rng, kWhPerChain));
    ctrl_tone_.emplace(store, "tone.ctrl", 3, tone_ranges(), rng);

    if (cfg_ == AmpConfig::D) {
        ctrl_chain2_.emplace(store, "wh2.ctrl", 1, chain_ranges(), rng);
        e_gru2_ = store.add("wh2.gru", gru1_init(rng, kWhPerChain));
        return;
    }

    ctrl_pow_.emplace(store, "pow.ctrl", 1, power_ranges(), rng);
    e_gru_pow_ = store.add("pow.gru", gru1_init(rng, 2));

    if (cfg_ == AmpConfig::F) {
        ctrl_trans_.emplace(store, "trans", transformer_ranges());
        e_gru_trans_ = store.add("trans.gru", gru1_init(rng, 1));
    }
}

StreamState AmpModel::make_state() const {
    StreamState s;
    s.chain1.resize(kWhPerChain);
    if (cfg_ == AmpConfig::D)
        s.chain2.resize(kWhPerChain);
    return s;
}

std::vector<double> AmpModel::chain1_inputs(const KnobVector& k) const {
    if (cfg_ == AmpConfig::C) {
        std::vector<double> in;
        for (double v : k.as_array())
            in.push_back(KnobVector::normalized(v));
        return in;
    }
    return {KnobVector::normalized(k.gain)};
}

std::vector<double> AmpModel::chain1_params(const ParamStore& store,
                                            const KnobVector& knobs) const {
    knobs.validate();
    return ctrl_chain1_->eval(store, chain1_inputs(knobs));
}

std::vector<double> AmpModel::tone_params(const ParamStore& store,
                                          const KnobVector& knobs) const {
    knobs.validate();
    if (!ctrl_tone_)
        throw std::runtime_error("config C has no tone stack");
    return ctrl_tone_->eval(store, {KnobVector::normalized(knobs.bass),
                                    KnobVector::normalized(knobs.mid),
                                    KnobVector::normalized(knobs.treble)});
}

// ---- plain design ----

DesignedAmp AmpModel::design(const ParamStore& store, const KnobVector& knobs) const {
    knobs.validate();
    DesignedAmp d;
    d.config = cfg_;

    const auto c1 = ctrl_chain1_->eval(store, chain1_inputs(knobs));
    const auto& g1 = store.at(e_gru1_).value;
    for (int b = 0; b < kWhPerChain; ++b)
        d.chain1.push_back(design_wh(&c1[static_cast<std::size_t>(b) * kWhCtrlOuts],
                                     &g1[static_cast<std::size_t>(b) * 9], fs_));

    if (ctrl_tone_) {
        d.has_tone = true;
        const auto tp = tone_params(store, knobs);
        d.tone = {design_biquad({FilterKind::LowShelf, tp[0], tp[1], tp[2]}, fs_),
                  design_biquad({FilterKind::Peak, tp[3], tp[4], tp[5]}, fs_),
                  design_biquad({FilterKind::HighShelf, tp[6], tp[7], tp[8]}, fs_)};
    }

    if (ctrl_chain2_) {
        const auto c2 = ctrl_chain2_->eval(store, {KnobVector::normalized(knobs.master)});
        const auto& g2 = store.at(e_gru2_).value;
        for (int b = 0; b < kWhPerChain; ++b)
            d.chain2.push_back(design_wh(&c2[static_cast<std::size_t>(b) * kWhCtrlOuts],
                                         &g2[static_cast<std::size_t>(b) * 9], fs_));
    }

    if (ctrl_pow_) {
        d.has_power = true;
        const auto pc = ctrl_pow_->eval(store, {KnobVector::normalized(knobs.master)});
        const auto& gp = store.at(e_gru_pow_).value;
        d.master = pc[0];
        d.feedback = design_biquad({FilterKind::HighShelf, pc[1], pc[2], pc[3]}, fs_);
        d.drive_gain = pc[4];
        d.clip_drive = pc[5];
        d.pa[0] = design_wh(&pc[6], &gp[0], fs_);
        d.pa[1] = design_wh(&pc[26], &gp[9], fs_);
        d.mix_a = pc[46];
        d.mix_b = pc[47];
    }

    if (ctrl_trans_) {
        d.has_transformer = true;
        const auto tv = ctrl_trans_->eval(store);
        d.t_in = tv[0];
        d.t_hp = design_biquad({FilterKind::HighPass, tv[1], 0.0, tv[2]}, fs_);
        d.t_lp = design_biquad({FilterKind::LowPass, tv[3], 0.0, tv[4]}, fs_);
        d.t_out = tv[5];
        d.t_gru = Gru1Params::from_flat(store.at(e_gru_trans_).value.data());
    }
    return d;
}

// ---- plain (streaming) forward ----

std::vector<double> wh_forward(const DesignedWh& w, WhState& s, const std::vector<double>& x,
                               WhNonlin nl) {
    std::vector<double> y = apply_gain(x, w.pregain);
    for (int f = 0; f < 3; ++f)
        y = biquad_process_td(w.h1[static_cast<std::size_t>(f)],
                              s.h1[static_cast<std::size_t>(f)], y);
    switch (nl) {
        case WhNonlin::Gru:
            y = gru1_process(w.gru, y, s.gru);
            break;
        case WhNonlin::Tanh:
            for (double& v : y)
                v = std::tanh(v);
            break;
        case WhNonlin::Identity:
            break;
    }
    apply_gain_inplace(y, w.postgain);
    for (int f = 0; f < 3; ++f)
        y = biquad_process_td(w.h2[static_cast<std::size_t>(f)],
                              s.h2[static_cast<std::size_t>(f)], y);
    return y;
}

std::vector<double> tonestack_forward(const std::array<BiquadCoeffs, 3>& filters,
                                      std::array<BiquadState, 3>& s,
                                      const std::vector<double>& x) {
    std::vector<double> y = x;
    for (int f = 0; f < 3; ++f)
        y = biquad_process_td(filters[static_cast<std::size_t>(f)],
                              s[static_cast<std::size_t>(f)], y);
    return y;
}

namespace {

std::vector<double> poweramp_plain(const DesignedAmp& d, StreamState& st,
                                   const std::vector<double>& x, WhNonlin nl) {
    std::vector<double> y = apply_gain(x, d.master);
    y = biquad_process_td(d.feedback, st.feedback, y);
    apply_gain_inplace(y, d.drive_gain);
    std::vector<double> ua(y.size()), ub(y.size());
    for (std::size_t n = 0; n < y.size(); ++n) {
        ua[n] = std::tanh(d.clip_drive * y[n]);
        ub[n] = std::tanh(d.clip_drive * -y[n]);
    }
    const auto a = wh_forward(d.pa[0], st.pa[0], ua, nl);
    const auto b = wh_forward(d.pa[1], st.pa[1], ub, nl);
    std::vector<double> out(y.size());
    for (std::size_t n = 0; n < y.size(); ++n)
        out[n] = d.mix_a * a[n] - d.mix_b * b[n];
    return out;
}

std::vector<double> transformer_plain(const DesignedAmp& d, StreamState& st,
                                      const std::vector<double>& x) {
    std::vector<double> y = apply_gain(x, d.t_in);
    y = gru1_process(d.t_gru, y, st.t_gru);
    y = biquad_process_td(d.t_hp, st.t_hp, y);
    y = biquad_process_td(d.t_lp, st.t_lp, y);
    apply_gain_inplace(y, d.t_out);
    return y;
}

} // namespace

std::vector<double> AmpModel::process(const DesignedAmp& d, const std::vector<double>& block,
                                      StreamState& state, WhNonlin nl) const {
    if (state.chain1.size() != static_cast<std::size_t>(kWhPerChain))
        throw std::runtime_error("stream state does not match this model (use make_state)");
    std::vector<double> y = block;
    for (std::size_t b = 0; b < d.chain1.size(); ++b)
        y = wh_forward(d.chain1[b], state.chain1[b], y, nl);
    if (d.has_tone)
        y = tonestack_forward(d.tone, state.tone, y);
    for (std::size_t b = 0; b < d.chain2.size(); ++b)
        y = wh_forward(d.chain2[b], state.chain2[b], y, nl);
    if (d.has_power)
        y = poweramp_plain(d, state, y, nl);
    if (d.has_transformer)
        y = transformer_plain(d, state, y);
    return y;
}

std::vector<double> AmpModel::process(const ParamStore& store, const KnobVector& knobs,
                                      const std::vector<double>& block,
                                      StreamState& state) const {
    return process(design(store, knobs), block, state);
}

std::vector<double> AmpModel::process_stage(Stage stage, const DesignedAmp& d,
                                            const std::vector<double>& block,
                                            StreamState& state, WhNonlin nl) const {
    switch (stage) {
        case Stage::FullChain:
            return process(d, block, state, nl);
        case Stage::Preamp: {
            std::vector<double> y = block;
            for (std::size_t b = 0; b < d.chain1.size(); ++b)
                y = wh_forward(d.chain1[b], state.chain1[b], y, nl);
            return y;
        }
        case Stage::ToneStack:
            if (!d.has_tone)
                throw std::runtime_error("config C has no tone stack");
            return tonestack_forward(d.tone, state.tone, block);
        case Stage::PowerAmp:
            if (!d.has_power)
                throw std::runtime_error("this config has no power amp");
            return poweramp_plain(d, state, block, nl);
        case Stage::Transformer:
            if (!d.has_transformer)
                throw std::runtime_error("this config has no output transformer");
            return transformer_plain(d, state, block);
        case Stage::Clipper: {
            if (!d.has_power)
                throw std::runtime_error("this config has no power amp");
            std::vector<double> y(block.size());
            for (std::size_t n = 0; n < block.size(); ++n)
                y[n] = soft_clip(block[n], d.clip_drive);
            return y;
        }
    }
    throw std::runtime_error("unknown stage");
}

// ---- differentiable forward ----

namespace {

TV resp_of(Tape& t, FilterKind kind, TV fc, TV gain, TV q, double fs, int m) {
    const auto c = design_biquad_generic<TV>(kind, fc, gain, q, fs);
    return t.biquad_response(c.b0, c.b1, c.b2, c.a1, c.a2, m);
}

TV fs_apply(Tape& t, TV x, const std::vector<TV>& resps, int len, int m) {
    TV spec = t.fft(t.zero_pad(x, m));
    TV h = resps[0];
    for (std::size_t i = 1; i < resps.size(); ++i)
        h = t.cmul(h, resps[i]);
    return t.slice(t.ifft(t.cmul(spec, h)), 0, len);
}

// One WH block on the tape: ctrl holds 20 mapped outputs starting at `off`,
// gru_all holds flat Gru1Params starting at `gru_off`.
TV wh_tape(Tape& t, TV ctrl, int off, TV gru_all, int gru_off, TV x, double fs, int len, int m) {
    auto sc = [&](int i) { return t.slice(ctrl, off + i, 1); };
    TV y = t.scale(sc(0), x);
    y = fs_apply(t, y,
                 {resp_of(t, FilterKind::LowShelf, sc(1), sc(2), sc(3), fs, m),
                  resp_of(t, FilterKind::Peak, sc(4), sc(5), sc(6), fs, m),
                  resp_of(t, FilterKind::HighShelf, sc(7), sc(8), sc(9), fs, m)},
                 len, m);
    y = t.gru1_seq(t.slice(gru_all, gru_off, 9), y, t.scalar(0.0));
    y = t.scale(sc(10), y);
    y = fs_apply(t, y,
                 {resp_of(t, FilterKind::LowShelf, sc(11), sc(12), sc(13), fs, m),
                  resp_of(t, FilterKind::Peak, sc(14), sc(15), sc(16), fs, m),
                  resp_of(t, FilterKind::HighShelf, sc(17), sc(18), sc(19), fs, m)},
                 len, m);
    return y;
}

} // namespace

TV AmpModel::build_train_graph(Tape& t, const ParamStore& store, const KnobVector& knobs,
                               const std::vector<double>& input) const {
    knobs.validate();
    if (input.empty())
        throw std::runtime_error("empty training segment");
    const int len = static_cast<int>(input.size());
    const int m = static_cast<int>(Fft::next_pow2(2 * input.size()));

    TV y = t.constant(input);

    TV c1 = ctrl_chain1_->eval_tv(t, store, chain1_inputs(knobs));
    TV g1 = t.param(store, e_gru1_);
    for (int b = 0; b < kWhPerChain; ++b)
        y = wh_tape(t, c1, b * kWhCtrlOuts, g1, 9 * b, y, fs_, len, m);

    if (ctrl_tone_) {
        TV tc = ctrl_tone_->eval_tv(t, store, {KnobVector::normalized(knobs.bass),
                                               KnobVector::normalized(knobs.mid),
                                               KnobVector::normalized(knobs.treble)});
        auto sc = [&](int i) { return t.slice(tc, i, 1); };
        y = fs_apply(t, y,
                     {resp_of(t, FilterKind::LowShelf, sc(0), sc(1), sc(2), fs_, m),
                      resp_of(t, FilterKind::Peak, sc(3), sc(4), sc(5), fs_, m),
                      resp_of(t, FilterKind::HighShelf, sc(6), sc(7), sc(8), fs_, m)},
                     len, m);
    }

    if (ctrl_chain2_) {
        TV c2 = ctrl_chain2_->eval_tv(t, store, {KnobVector::normalized(knobs.master)});
        TV g2 = t.param(store, e_gru2_);
        for (int b = 0; b < kWhPerChain; ++b)
            y = wh_tape(t, c2, b * kWhCtrlOuts, g2, 9 * b, y, fs_, len, m);
    }

    if (ctrl_pow_) {
        TV pc = ctrl_pow_->eval_tv(t, store, {KnobVector::normalized(knobs.master)});
        TV gp = t.param(store, e_gru_pow_);
        auto sc = [&](int i) { return t.slice(pc, i, 1); };
        y = t.scale(sc(0), y);
        y = fs_apply(t, y, {resp_of(t, FilterKind::HighShelf, sc(1), sc(2), sc(3), fs_, m)},
                     len, m);
        y = t.scale(sc(4), y);
        TV drive = sc(5);
        TV ua = t.tanh(t.scale(drive, y));
        TV ub = t.tanh(t.scale(drive, t.neg(y)));
        TV a = wh_tape(t, pc, 6, gp, 0, ua, fs_, len, m);
        TV b = wh_tape(t, pc, 26, gp, 9, ub, fs_, len, m);
        y = t.sub(t.scale(sc(46), a), t.scale(sc(47), b));
    }

    if (ctrl_trans_) {
        TV tc = ctrl_trans_->eval_tv(t, store);
        auto sc = [&](int i) { return t.slice(tc, i, 1); };
        TV zero = t.scalar(0.0);
        y = t.scale(sc(0), y);
        y = t.gru1_seq(t.param(store, e_gru_trans_), y, t.scalar(0.0));
        y = fs_apply(t, y,
                     {resp_of(t, FilterKind::HighPass, sc(1), zero, sc(2), fs_, m),
                      resp_of(t, FilterKind::LowPass, sc(3), zero, sc(4), fs_, m)},
                     len, m);
        y = t.scale(sc(5), y);
    }
    return y;
}

} // namespace ddspamp
