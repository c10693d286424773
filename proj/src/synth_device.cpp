#include "ddspamp/synth_device.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ddspamp {

void SynthDevice::State::reset() {
    for (auto& s : eq)
        s = BiquadState{};
    mem = 0.0;
    hp = BiquadState{};
    lp = BiquadState{};
}

SynthDevice::SynthDevice(double fs) : fs_(fs) {
    hp_ = design_biquad({FilterKind::HighPass, 35.0, 0.0, 0.707}, fs_);
    lp_ = design_biquad({FilterKind::LowPass, 9000.0, 0.0, 0.707}, fs_);
}

double SynthDevice::pregain(double gain_knob) { return 0.5 * std::pow(16.0, gain_knob); }
double SynthDevice::master_gain(double master) { return 0.05 * std::pow(20.0, master); }
double SynthDevice::eq_gain_db(double knob) { return (2.0 * knob - 1.0) * 9.0; }

std::vector<double> SynthDevice::process(const KnobVector& knobs,
                                         const std::vector<double>& block, State& state) const {
    knobs.validate();
    const double pre = pregain(knobs.gain);
    const double master = master_gain(knobs.master);
    const std::array<BiquadCoeffs, 3> eq = {
        design_biquad({FilterKind::LowShelf, 100.0, eq_gain_db(knobs.bass), 0.707}, fs_),
        design_biquad({FilterKind::Peak, 600.0, eq_gain_db(knobs.mid), 0.707}, fs_),
        design_biquad({FilterKind::HighShelf, 3000.0, eq_gain_db(knobs.treble), 0.707}, fs_),
    };
    const double rest = std::tanh(0.15); // removes the bias's DC at silence

    std::vector<double> y(block.size());
    for (std::size_t n = 0; n < block.size(); ++n) {
        double u = std::tanh(pre * block[n]);
        for (int f = 0; f < 3; ++f)
            u = biquad_step(eq[static_cast<std::size_t>(f)], state.eq[static_cast<std::size_t>(f)], u);
        u = std::tanh(master * u + 0.15) - rest;
        state.mem = 0.99 * state.mem + 0.01 * u;
        u = std::tanh(u + 0.5 * state.mem);
        u = biquad_step(hp_, state.hp, u);
        u = biquad_step(lp_, state.lp, u);
        y[n] = u;
    }
    return y;
}

std::vector<double> synth_guitar_signal(std::size_t n, unsigned seed, double fs) {
    std::mt19937 rng(seed);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng()) /
                                 static_cast<double>(std::mt19937::max()));
    };
    // A minor pentatonic across two octaves.
    static const double kPitches[] = {110.0,  130.81, 146.83, 164.81, 196.0,
                                      220.0,  261.63, 293.66, 329.63, 392.0};

    std::vector<double> y(n, 0.0);
    const double note_spacing = 0.28; // seconds between onsets
    const std::size_t step = static_cast<std::size_t>(note_spacing * fs);
    for (std::size_t onset = 0; onset < n; onset += step) {
        const double f0 = kPitches[rng() % (sizeof(kPitches) / sizeof(kPitches[0]))];
        const double amp = uniform(0.35, 1.0);
        const double decay = uniform(0.25, 0.6); // seconds to 1/e
        const std::size_t dur = std::min(n - onset, static_cast<std::size_t>(3.0 * decay * fs));
        for (int k = 1; k <= 6; ++k) {
            const double ak = amp / std::pow(static_cast<double>(k), 1.4);
            const double fk = f0 * k * (1.0 + 0.0004 * k * k); // slight stiffness detune
            if (fk > 0.45 * fs)
                break;
            const double tau = decay / std::sqrt(static_cast<double>(k));
            const double phase = uniform(0.0, 2.0 * M_PI);
            const double w = 2.0 * M_PI * fk / fs;
            for (std::size_t i = 0; i < dur; ++i) {
                const double t = static_cast<double>(i) / fs;
                y[onset + i] += ak * std::exp(-t / tau) * std::sin(w * static_cast<double>(i) + phase);
            }
        }
    }
    // Touch of broadband noise so the spectrum never collapses to lines.
    for (double& v : y)
        v += uniform(-1.0, 1.0) * 3e-4;

    double peak = 0.0;
    for (double v : y)
        peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
        const double g = 0.7 / peak;
        for (double& v : y)
            v *= g;
    }
    return y;
}

} // namespace ddspamp
