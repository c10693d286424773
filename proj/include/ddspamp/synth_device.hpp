#pragma once
#include <array>
#include <cstddef>
#include <vector>

#include "ddspamp/amp_model.hpp" // KnobVector
#include "ddspamp/biquad.hpp"

namespace ddspamp {

// Deterministic reference amplifier used as the system-identification target.
// It is intentionally outside the model family (its EQ centers, drive laws
// and memory nonlinearity are fixed rather than learned) but exercises the
// same phenomena: knob-dependent drive and tone, asymmetric clipping, and a
// slow hysteresis-producing state.
//
// Chain: pregain(gain) -> tanh -> bass/mid/treble EQ -> asymmetric
// master-scaled tanh -> one-pole memory nonlinearity
// (s[n] = 0.99 s[n-1] + 0.01 u[n], y = tanh(u + 0.5 s)) -> 35 Hz high-pass
// -> 9 kHz low-pass.
class SynthDevice {
public:
    explicit SynthDevice(double fs = 44100.0);

    struct State {
        std::array<BiquadState, 3> eq{};
        double mem = 0.0;
        BiquadState hp{};
        BiquadState lp{};
        void reset();
    };
    State make_state() const { return {}; }

    std::vector<double> process(const KnobVector& knobs, const std::vector<double>& block,
                                State& state) const;

    // Knob laws, exposed for tests.
    static double pregain(double gain_knob);   // 0.5 * 16^g  in [0.5, 8]
    static double master_gain(double master);  // 0.05 * 20^m in [0.05, 1]
    static double eq_gain_db(double knob);     // (2k - 1) * 9 dB

private:
    double fs_;
    BiquadCoeffs hp_;
    BiquadCoeffs lp_;
};

// Deterministic guitar-like test signal: a stream of plucked notes (decaying
// detuned harmonic stacks on a pentatonic grid) plus low-level noise; peak
// normalized to ~0.7.
std::vector<double> synth_guitar_signal(std::size_t n, unsigned seed, double fs = 44100.0);

} // namespace ddspamp
