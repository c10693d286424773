#include "ddspamp/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "ddspamp/fft.hpp"

namespace ddspamp {

namespace {

void check_pair(std::size_t ny, std::size_t nyh) {
    if (ny != nyh)
        throw std::runtime_error("loss: signal lengths differ (" + std::to_string(ny) + " vs " +
                                 std::to_string(nyh) + ")");
    if (ny == 0)
        throw std::runtime_error("loss: empty signals");
}

std::size_t frame_count(std::size_t len, std::size_t win, std::size_t hop) {
    if (len < win)
        return 0;
    return (len - win) / hop + 1;
}

// One-sided magnitudes of a single windowed frame.
std::vector<double> frame_mags(const std::vector<double>& x, std::size_t start,
                               const std::vector<double>& window) {
    const std::size_t w = window.size();
    std::vector<double> frame(w);
    for (std::size_t i = 0; i < w; ++i)
        frame[i] = x[start + i] * window[i];
    const std::vector<double> spec = Fft::forward_real(frame);
    std::vector<double> mags(w / 2 + 1);
    for (std::size_t k = 0; k < mags.size(); ++k)
        mags[k] = std::hypot(spec[2 * k], spec[2 * k + 1]);
    return mags;
}

} // namespace

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

double mae_loss(const std::vector<double>& y, const std::vector<double>& yhat) {
    check_pair(y.size(), yhat.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        acc += std::abs(y[i] - yhat[i]);
    return acc * (1.0 / static_cast<double>(y.size()));
}

MrStftBreakdown mrstft_breakdown(const std::vector<double>& y, const std::vector<double>& yhat) {
    check_pair(y.size(), yhat.size());
    if (y.size() < kStftWindows.back())
        throw std::runtime_error("mrstft: segment shorter than the largest window (" +
                                 std::to_string(kStftWindows.back()) + ")");
    MrStftBreakdown out;
    for (std::size_t r = 0; r < kStftWindows.size(); ++r) {
        const std::size_t w = kStftWindows[r];
        const std::size_t hop = w / 4;
        const std::vector<double> window = hann_window(w);
        const std::size_t frames = frame_count(y.size(), w, hop);

        double num_sq = 0.0, den_sq = 0.0, log_acc = 0.0;
        for (std::size_t f = 0; f < frames; ++f) {
            const auto my = frame_mags(y, f * hop, window);
            const auto mh = frame_mags(yhat, f * hop, window);
            double frame_num = 0.0, frame_den = 0.0, frame_log = 0.0;
            for (std::size_t k = 0; k < my.size(); ++k) {
                const double d = my[k] - mh[k];
                frame_num += d * d;
                frame_den += my[k] * my[k];
                frame_log += std::abs(std::log(my[k] + kLogMagEps) -
                                      std::log(mh[k] + kLogMagEps));
            }
            num_sq += frame_num;
            den_sq += frame_den;
            log_acc += frame_log;
        }
        const std::size_t bins = frames * (w / 2 + 1);
        MrStftParts& p = out.per_resolution[r];
        p.sc = den_sq > 0.0 ? std::sqrt(num_sq) / std::sqrt(den_sq) : std::sqrt(num_sq);
        p.log_mag = bins > 0 ? log_acc * (1.0 / static_cast<double>(bins)) : 0.0;
        out.total += p.sc + p.log_mag;
    }
    return out;
}

double mrstft_loss(const std::vector<double>& y, const std::vector<double>& yhat) {
    return mrstft_breakdown(y, yhat).total;
}

TV mae_loss_tv(Tape& t, const std::vector<double>& target, TV yhat) {
    check_pair(target.size(), yhat.len());
    TV diff = t.sub(t.constant(target), yhat);
    return t.mul_c(t.sum(t.abs(diff)), 1.0 / static_cast<double>(target.size()));
}

TV mrstft_loss_tv(Tape& t, const std::vector<double>& target, TV yhat) {
    check_pair(target.size(), yhat.len());
    if (target.size() < kStftWindows.back())
        throw std::runtime_error("mrstft: segment shorter than the largest window (" +
                                 std::to_string(kStftWindows.back()) + ")");
    TV total = t.scalar(0.0);
    for (std::size_t w : kStftWindows) {
        const std::size_t hop = w / 4;
        const std::vector<double> window = hann_window(w);
        const std::size_t frames = frame_count(target.size(), w, hop);
        const std::size_t bin_count = w / 2 + 1;

        // target-side magnitudes and the constant SC denominator (plain math,
        // same summation order as the tape-side accumulation)
        double den_sq = 0.0;
        std::vector<std::vector<double>> tgt_mags(frames), tgt_logs(frames);
        for (std::size_t f = 0; f < frames; ++f) {
            tgt_mags[f] = frame_mags(target, f * hop, window);
            tgt_logs[f].resize(bin_count);
            double frame_den = 0.0;
            for (std::size_t k = 0; k < bin_count; ++k) {
                frame_den += tgt_mags[f][k] * tgt_mags[f][k];
                tgt_logs[f][k] = std::log(tgt_mags[f][k] + kLogMagEps);
            }
            den_sq += frame_den;
        }

        TV win_const = t.constant(window);
        TV num_sq = t.scalar(0.0);
        TV log_acc = t.scalar(0.0);
        for (std::size_t f = 0; f < frames; ++f) {
            TV frame = t.mul(t.slice(yhat, static_cast<int>(f * hop), static_cast<int>(w)),
                             win_const);
            TV mags = t.slice(t.cabs(t.fft(frame)), 0, static_cast<int>(bin_count));
            TV d = t.sub(t.constant(tgt_mags[f]), mags);
            num_sq = t.add(num_sq, t.sum(t.mul(d, d)));
            TV dl = t.sub(t.constant(tgt_logs[f]), t.log(t.add_c(mags, kLogMagEps)));
            log_acc = t.add(log_acc, t.sum(t.abs(dl)));
        }
        TV sc = den_sq > 0.0 ? t.div(t.sqrt(num_sq), t.scalar(std::sqrt(den_sq)))
                             : t.sqrt(num_sq);
        const std::size_t bins = frames * bin_count;
        TV log_mag = bins > 0 ? t.mul_c(log_acc, 1.0 / static_cast<double>(bins)) : t.scalar(0.0);
        total = t.add(total, t.add(sc, log_mag));
    }
    return total;
}

} // namespace ddspamp
