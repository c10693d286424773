#pragma once
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddspamp {

enum class FilterKind { LowShelf, Peak, HighShelf, HighPass, LowPass };

const char* filter_kind_name(FilterKind k);

// Normalized second-order section; a0 is implicitly 1.
template <class S>
struct BiquadCoeffsT {
    S b0, b1, b2, a1, a2;
};
using BiquadCoeffs = BiquadCoeffsT<double>;

// Direct-form II transposed delay line.
struct BiquadState {
    double s1 = 0.0;
    double s2 = 0.0;
    void reset() { s1 = s2 = 0.0; }
};

struct FilterSpec {
    FilterKind kind = FilterKind::Peak;
    double fc = 1000.0;    // Hz, in (0, fs/2)
    double gain_db = 0.0;  // shelf/peak only, [-40, 40]
    double q = 0.70710678118654752; // (0, 32]
};

inline BiquadCoeffs identity_biquad() { return {1.0, 0.0, 0.0, 0.0, 0.0}; }

// Poles strictly inside the unit circle: |a2| < 1 and |a1| < 1 + a2.
bool biquad_is_stable(const BiquadCoeffs& c);

// Audio-EQ cookbook parameterization, shared between the plain and the
// autodiff paths via the scalar type. Scalars need +,-,*,/ against S and
// double plus sin/cos/sqrt/exp found by ADL.
template <class S>
BiquadCoeffsT<S> design_biquad_generic(FilterKind kind, const S& fc, const S& gain_db,
                                       const S& q, double fs) {
    using std::cos;
    using std::exp;
    using std::sin;
    using std::sqrt;
    const double ln10_over_40 = std::log(10.0) / 40.0;
    S w0 = fc * (2.0 * M_PI / fs);
    S cw = cos(w0);
    S sw = sin(w0);
    S alpha = sw / (q * 2.0);
    S b0, b1, b2, a0, a1, a2;
    switch (kind) {
        case FilterKind::Peak: {
            S big_a = exp(gain_db * ln10_over_40);
            b0 = 1.0 + alpha * big_a;
            b1 = cw * -2.0;
            b2 = 1.0 - alpha * big_a;
            a0 = 1.0 + alpha / big_a;
            a1 = cw * -2.0;
            a2 = 1.0 - alpha / big_a;
            break;
        }
        case FilterKind::LowShelf: {
            S big_a = exp(gain_db * ln10_over_40);
            S two_rt_alpha = sqrt(big_a) * alpha * 2.0;
            S ap1 = big_a + 1.0;
            S am1 = big_a - 1.0;
            b0 = big_a * (ap1 - am1 * cw + two_rt_alpha);
            b1 = (big_a * 2.0) * (am1 - ap1 * cw);
            b2 = big_a * (ap1 - am1 * cw - two_rt_alpha);
            a0 = ap1 + am1 * cw + two_rt_alpha;
            a1 = (am1 + ap1 * cw) * -2.0;
            a2 = ap1 + am1 * cw - two_rt_alpha;
            break;
        }
        case FilterKind::HighShelf: {
            S big_a = exp(gain_db * ln10_over_40);
            S two_rt_alpha = sqrt(big_a) * alpha * 2.0;
            S ap1 = big_a + 1.0;
            S am1 = big_a - 1.0;
            b0 = big_a * (ap1 + am1 * cw + two_rt_alpha);
            b1 = (big_a * -2.0) * (am1 + ap1 * cw);
            b2 = big_a * (ap1 + am1 * cw - two_rt_alpha);
            a0 = ap1 - am1 * cw + two_rt_alpha;
            a1 = (am1 - ap1 * cw) * 2.0;
            a2 = ap1 - am1 * cw - two_rt_alpha;
            break;
        }
        case FilterKind::HighPass: {
            S half = (cw + 1.0) * 0.5;
            b0 = half;
            b1 = half * -2.0;
            b2 = half;
            a0 = 1.0 + alpha;
            a1 = cw * -2.0;
            a2 = 1.0 - alpha;
            break;
        }
        case FilterKind::LowPass: {
            S half = (1.0 - cw) * 0.5;
            b0 = half;
            b1 = half * 2.0;
            b2 = half;
            a0 = 1.0 + alpha;
            a1 = cw * -2.0;
            a2 = 1.0 - alpha;
            break;
        }
        default:
            throw std::runtime_error("design_biquad: unknown filter kind");
    }
    return {b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0};
}

// Validating entry point. Zero-gain shelves and peaks collapse to the literal
// identity section.
BiquadCoeffs design_biquad(const FilterSpec& spec, double fs);

// One DF2T step.
inline double biquad_step(const BiquadCoeffs& c, BiquadState& s, double x) {
    const double y = c.b0 * x + s.s1;
    s.s1 = c.b1 * x - c.a1 * y + s.s2;
    s.s2 = c.b2 * x - c.a2 * y;
    return y;
}

// Recursive time-domain path; state carries across calls so block-wise
// processing equals single-call processing bit-for-bit.
std::vector<double> biquad_process_td(const BiquadCoeffs& c, BiquadState& state,
                                      const std::vector<double>& x);

// Frequency-sampling path: zero-pad to M = next pow2 >= 2L, multiply the DFT
// by the sampled transfer function, keep the first L output samples.
std::vector<double> biquad_process_fs(const BiquadCoeffs& c, const std::vector<double>& segment);

// H(e^{jw}) for probes and analytic oracles.
std::complex<double> biquad_response_at(const BiquadCoeffs& c, double omega);

} // namespace ddspamp
