#include "ddspamp/evaluator.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "ddspamp/losses.hpp"
#include "ddspamp/primitives.hpp"

namespace ddspamp {
namespace {

OpsBudget dot(int n) {
    OpsBudget b;
    b.muls = n;
    b.adds = n;
    return b;
}

OpsBudget muls(double n) {
    OpsBudget b;
    b.muls = n;
    return b;
}

OpsBudget adds(double n) {
    OpsBudget b;
    b.adds = n;
    return b;
}

OpsBudget nonlin(double n) {
    OpsBudget b;
    b.nonlin_calls = n;
    return b;
}

OpsBudget ops_tone_stack() {
    OpsBudget b;
    for (int i = 0; i < 3; ++i)
        b += ops_biquad();
    return b;
}

OpsBudget ops_power_amp() {
    OpsBudget b;
    b += muls(1);      // master gain
    b += ops_biquad(); // feedback filter
    b += muls(1);      // drive gain
    b += muls(2);      // +/- clip drive products
    b += nonlin(2);    // push and pull tanh
    b += ops_wh_block();
    b += ops_wh_block();
    b += muls(2); // path mix gains
    b += adds(1); // recombination
    return b;
}

OpsBudget ops_transformer() {
    OpsBudget b;
    b += muls(1); // input gain
    b += ops_gru1();
    b += ops_biquad(); // high pass
    b += ops_biquad(); // low pass
    b += muls(1);      // output gain
    return b;
}

} // namespace

OpsBudget ops_biquad() {
    OpsBudget b;
    b.muls = 5;
    b.adds = 4;
    return b;
}

OpsBudget ops_gru1() {
    OpsBudget b;
    b += dot(2);    // r: w_r x + u_r h onto b_r
    b += dot(2);    // z
    b += dot(1);    // c input side onto b_c
    b += dot(1);    // u_c h
    b += muls(1);   // r * (u_c h)
    b += adds(1);   // join into the candidate preactivation
    b += nonlin(3); // sigma, sigma, tanh
    b += muls(2);   // (1-z)c, z h
    b += adds(2);   // 1-z, final sum
    return b;
}

OpsBudget ops_wh_block() {
    OpsBudget b;
    b += muls(1); // pregain
    for (int i = 0; i < 3; ++i)
        b += ops_biquad(); // H1
    b += ops_gru1();
    b += muls(1); // postgain
    for (int i = 0; i < 3; ++i)
        b += ops_biquad(); // H2
    return b;
}

OpsBudget ops_concat_gru(int hidden, int knobs) {
    const int h = hidden;
    const int in_dim = 1 + knobs;
    OpsBudget b;
    for (int g = 0; g < 3 * h; ++g)
        b += dot(in_dim); // input-side rows onto biases
    for (int g = 0; g < 3 * h; ++g)
        b += dot(h); // recurrent rows
    b += muls(h);    // r gating of the candidate recurrent term
    b += adds(h);    // join into the candidate preactivation
    b += nonlin(3 * h);
    b += muls(2 * h); // (1-z)c, z h
    b += adds(2 * h); // 1-z, final sum
    b += dot(h);      // output head onto its bias
    return b;
}

OpsBudget count_ops(ModelKind kind) {
    OpsBudget b;
    switch (kind) {
    case ModelKind::A: return ops_concat_gru(8, 5);
    case ModelKind::B: return ops_concat_gru(48, 5);
    case ModelKind::C:
        for (int i = 0; i < AmpModel::kWhPerChain; ++i)
            b += ops_wh_block();
        return b;
    case ModelKind::D:
        for (int i = 0; i < 2 * AmpModel::kWhPerChain; ++i)
            b += ops_wh_block();
        b += ops_tone_stack();
        return b;
    case ModelKind::E:
        for (int i = 0; i < AmpModel::kWhPerChain; ++i)
            b += ops_wh_block();
        b += ops_tone_stack();
        b += ops_power_amp();
        return b;
    case ModelKind::F:
        for (int i = 0; i < AmpModel::kWhPerChain; ++i)
            b += ops_wh_block();
        b += ops_tone_stack();
        b += ops_power_amp();
        b += ops_transformer();
        return b;
    }
    throw std::runtime_error("count_ops: unknown model kind");
}

std::size_t count_params(const ParamStore& store) { return store.scalar_count(); }

EvalMetrics evaluate_split(const Model& model, const ParamStore& store, const Dataset& data,
                           Split split, std::size_t block_size) {
    if (block_size == 0)
        throw std::runtime_error("evaluate: block_size must be positive");
    EvalMetrics m;
    double abs_sum = 0.0;
    double stft_sum = 0.0;
    for (const Region& region : data.regions(split)) {
        const DatasetPair& pair = data.pairs[region.pair];
        auto stream = model.make_stream();
        std::vector<double> y;
        y.reserve(region.end);
        for (std::size_t pos = 0; pos < region.end; pos += block_size) {
            const std::size_t stop = std::min(region.end, pos + block_size);
            const std::vector<double> block(pair.input.begin() + static_cast<std::ptrdiff_t>(pos),
                                            pair.input.begin() + static_cast<std::ptrdiff_t>(stop));
            const auto out = model.process(store, pair.knobs, block, *stream);
            y.insert(y.end(), out.begin(), out.end());
        }
        const std::vector<double> yr(y.begin() + static_cast<std::ptrdiff_t>(region.begin),
                                     y.begin() + static_cast<std::ptrdiff_t>(region.end));
        const std::vector<double> tr(pair.target.begin() + static_cast<std::ptrdiff_t>(region.begin),
                                     pair.target.begin() + static_cast<std::ptrdiff_t>(region.end));
        for (std::size_t i = 0; i < yr.size(); ++i)
            abs_sum += std::abs(tr[i] - yr[i]);
        stft_sum += mrstft_loss(tr, yr);
        m.regions += 1;
        m.samples += yr.size();
    }
    if (m.samples > 0)
        m.mae = abs_sum / static_cast<double>(m.samples);
    if (m.regions > 0)
        m.mrstft = stft_sum / static_cast<double>(m.regions);
    return m;
}

EvalReport evaluate(const Model& model, const ParamStore& store, const Dataset& data,
                    std::size_t block_size) {
    EvalReport r;
    r.arch_id = model.arch_id();
    r.params = count_params(store);
    r.ops = count_ops(model.kind());
    r.seen = evaluate_split(model, store, data, Split::TestSeen, block_size);
    r.has_seen = r.seen.regions > 0;
    if (data.has_unseen()) {
        r.unseen = evaluate_split(model, store, data, Split::TestUnseen, block_size);
        r.has_unseen = r.unseen.regions > 0;
    }
    return r;
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out.precision(10);
    out << "arch = " << arch_id << "\n";
    out << "params = " << params << "\n";
    out << "ops_per_sample = " << ops.total() << "\n";
    out << "ops_adds = " << ops.adds << "\n";
    out << "ops_muls = " << ops.muls << "\n";
    out << "ops_divs = " << ops.divs << "\n";
    out << "ops_nonlin_calls = " << ops.nonlin_calls << "\n";
    if (has_seen) {
        out << "seen_mae = " << seen.mae << "\n";
        out << "seen_mrstft = " << seen.mrstft << "\n";
    }
    if (has_unseen) {
        out << "unseen_mae = " << unseen.mae << "\n";
        out << "unseen_mrstft = " << unseen.mrstft << "\n";
    }
    return out.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out.precision(10);
    out << "condition,mae,mrstft,params,ops_per_sample\n";
    if (has_seen)
        out << "seen," << seen.mae << "," << seen.mrstft << "," << params << "," << ops.total()
            << "\n";
    if (has_unseen)
        out << "unseen," << unseen.mae << "," << unseen.mrstft << "," << params << ","
            << ops.total() << "\n";
    return out.str();
}

namespace {

DistortionProbe run_probe(double fs, double freq, double amplitude,
                          const std::function<std::vector<double>(const std::vector<double>&)>& stage) {
    if (!(freq > 0.0) || freq >= fs / 2.0)
        throw std::runtime_error("probe: frequency must lie in (0, fs/2)");
    if (!(amplitude > 0.0))
        throw std::runtime_error("probe: amplitude must be positive");
    // Snap the period to an even sample count so the descending half-cycle
    // revisits exactly the ascending half-cycle's input values.
    const std::size_t period =
        2 * std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fs / (2.0 * freq))));
    DistortionProbe probe;
    probe.freq_used = fs / static_cast<double>(period);

    const std::size_t settle_periods =
        (static_cast<std::size_t>(fs) + period - 1) / period; // >= 1 second
    const std::size_t total = (settle_periods + 1) * period;
    std::vector<double> x(total);
    for (std::size_t n = 0; n < total; ++n)
        x[n] = amplitude * std::sin(2.0 * M_PI * static_cast<double>(n % period) /
                                    static_cast<double>(period));
    const auto y = stage(x);
    if (y.size() != total)
        throw std::runtime_error("probe: stage returned a different length");

    probe.x.assign(x.end() - static_cast<std::ptrdiff_t>(period), x.end());
    probe.y.assign(y.end() - static_cast<std::ptrdiff_t>(period), y.end());

    double twice_area = 0.0;
    for (std::size_t i = 0; i < period; ++i) {
        const std::size_t j = (i + 1) % period;
        twice_area += probe.x[i] * probe.y[j] - probe.x[j] * probe.y[i];
    }
    probe.loop_area = 0.5 * std::abs(twice_area);
    return probe;
}

} // namespace

std::string DistortionProbe::to_csv() const {
    std::ostringstream out;
    out.precision(10);
    out << "x,y\n";
    for (std::size_t i = 0; i < x.size(); ++i)
        out << x[i] << "," << y[i] << "\n";
    return out.str();
}

DistortionProbe probe_distortion_curve(const AmpModel& amp, const DesignedAmp& design,
                                       Stage stage, double freq, double amplitude, WhNonlin nl) {
    return run_probe(amp.sample_rate(), freq, amplitude, [&](const std::vector<double>& x) {
        auto state = amp.make_state();
        return amp.process_stage(stage, design, x, state, nl);
    });
}

DistortionProbe probe_distortion_curve(const Model& model, const ParamStore& store,
                                       const KnobVector& knobs, double freq, double amplitude,
                                       double fs) {
    return run_probe(fs, freq, amplitude, [&](const std::vector<double>& x) {
        auto stream = model.make_stream();
        return model.process(store, knobs, x, *stream);
    });
}

std::vector<BiquadCoeffs> stage_filter_cascade(const DesignedAmp& design, Stage stage) {
    std::vector<BiquadCoeffs> cascade;
    auto add_wh = [&](const DesignedWh& w) {
        for (const auto& c : w.h1)
            cascade.push_back(c);
        for (const auto& c : w.h2)
            cascade.push_back(c);
    };
    switch (stage) {
    case Stage::Preamp:
        for (const auto& w : design.chain1)
            add_wh(w);
        break;
    case Stage::ToneStack:
        if (!design.has_tone)
            throw std::runtime_error("probe: this config has no tone stack");
        for (const auto& c : design.tone)
            cascade.push_back(c);
        break;
    case Stage::PowerAmp:
        if (design.has_power) {
            cascade.push_back(design.feedback);
        } else if (!design.chain2.empty()) {
            for (const auto& w : design.chain2)
                add_wh(w);
        } else {
            throw std::runtime_error("probe: this config has no power stage");
        }
        break;
    case Stage::Transformer:
        if (!design.has_transformer)
            throw std::runtime_error("probe: this config has no transformer");
        cascade.push_back(design.t_hp);
        cascade.push_back(design.t_lp);
        break;
    case Stage::Clipper:
        break; // memoryless, unity response
    case Stage::FullChain: {
        for (const auto& w : design.chain1)
            add_wh(w);
        if (design.has_tone)
            for (const auto& c : design.tone)
                cascade.push_back(c);
        for (const auto& w : design.chain2)
            add_wh(w);
        if (design.has_power) {
            cascade.push_back(design.feedback);
            for (const auto& w : design.pa)
                add_wh(w);
        }
        if (design.has_transformer) {
            cascade.push_back(design.t_hp);
            cascade.push_back(design.t_lp);
        }
        break;
    }
    }
    return cascade;
}

std::vector<ResponsePoint> probe_frequency_response(const std::vector<BiquadCoeffs>& cascade,
                                                    double fs, std::size_t points, double fmin,
                                                    double fmax) {
    if (points < 2 || !(fmin > 0.0) || !(fmax > fmin) || fmax >= fs / 2.0 * 1.0001)
        throw std::runtime_error("probe: bad frequency grid");
    std::vector<ResponsePoint> out(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(points - 1);
        const double f = fmin * std::pow(fmax / fmin, frac);
        double db = 0.0;
        for (const auto& c : cascade)
            db += lin_to_db(std::abs(biquad_response_at(c, 2.0 * M_PI * f / fs)));
        out[i] = {f, db};
    }
    return out;
}

std::string response_csv(const std::vector<ResponsePoint>& points) {
    std::ostringstream out;
    out.precision(10);
    out << "freq_hz,mag_db\n";
    for (const auto& p : points)
        out << p.freq << "," << p.mag_db << "\n";
    return out.str();
}

} // namespace ddspamp
