#include "ddspamp/biquad.hpp"

#include "ddspamp/fft.hpp"

namespace ddspamp {

const char* filter_kind_name(FilterKind k) {
    switch (k) {
        case FilterKind::LowShelf: return "low_shelf";
        case FilterKind::Peak: return "peak";
        case FilterKind::HighShelf: return "high_shelf";
        case FilterKind::HighPass: return "high_pass";
        case FilterKind::LowPass: return "low_pass";
    }
    return "?";
}

bool biquad_is_stable(const BiquadCoeffs& c) {
    return std::abs(c.a2) < 1.0 && std::abs(c.a1) < 1.0 + c.a2;
}

BiquadCoeffs design_biquad(const FilterSpec& spec, double fs) {
    if (!(fs > 0.0) || !std::isfinite(fs))
        throw std::runtime_error("design_biquad: sample rate must be positive");
    if (!std::isfinite(spec.fc) || !std::isfinite(spec.gain_db) || !std::isfinite(spec.q))
        throw std::runtime_error("design_biquad: non-finite filter spec");
    if (!(spec.fc > 0.0) || spec.fc >= 0.5 * fs)
        throw std::runtime_error("design_biquad: fc " + std::to_string(spec.fc) +
                                 " Hz outside (0, fs/2)");
    if (!(spec.q > 0.0) || spec.q > 32.0)
        throw std::runtime_error("design_biquad: q must be in (0, 32]");
    if (std::abs(spec.gain_db) > 40.0)
        throw std::runtime_error("design_biquad: gain_db must be in [-40, 40]");

    const bool has_gain = spec.kind == FilterKind::LowShelf || spec.kind == FilterKind::Peak ||
                          spec.kind == FilterKind::HighShelf;
    if (has_gain && spec.gain_db == 0.0)
        return identity_biquad();

    return design_biquad_generic<double>(spec.kind, spec.fc, spec.gain_db, spec.q, fs);
}

std::vector<double> biquad_process_td(const BiquadCoeffs& c, BiquadState& state,
                                      const std::vector<double>& x) {
    std::vector<double> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n)
        y[n] = biquad_step(c, state, x[n]);
    return y;
}

std::vector<double> biquad_process_fs(const BiquadCoeffs& c, const std::vector<double>& segment) {
    if (segment.empty())
        throw std::runtime_error("biquad_process_fs: empty segment");
    for (double v : {c.b0, c.b1, c.b2, c.a1, c.a2})
        if (!std::isfinite(v))
            throw std::runtime_error("biquad_process_fs: non-finite coefficients");

    const std::size_t len = segment.size();
    const std::size_t m = Fft::next_pow2(2 * len);

    std::vector<double> padded(segment);
    padded.resize(m, 0.0);
    std::vector<double> spec = Fft::forward_real(padded);

    for (std::size_t k = 0; k < m; ++k) {
        const double w = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(m);
        const std::complex<double> h = biquad_response_at(c, w);
        const std::complex<double> xk(spec[2 * k], spec[2 * k + 1]);
        const std::complex<double> yk = xk * h;
        spec[2 * k] = yk.real();
        spec[2 * k + 1] = yk.imag();
    }

    std::vector<double> full = Fft::backward_real(spec);
    full.resize(len);
    return full;
}

std::complex<double> biquad_response_at(const BiquadCoeffs& c, double omega) {
    const std::complex<double> e1 = std::polar(1.0, -omega);
    const std::complex<double> e2 = e1 * e1;
    const std::complex<double> num = c.b0 + c.b1 * e1 + c.b2 * e2;
    const std::complex<double> den = 1.0 + c.a1 * e1 + c.a2 * e2;
    return num / den;
}

} // namespace ddspamp
