#include "ddspamp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace ddspamp {
namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// FFTW planning is not thread-safe; executing a cached plan on new arrays is.
std::mutex g_plan_mutex;

PlanPair& plans_for(std::size_t n) {
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto it = cache.find(n);
    if (it != cache.end())
        return it->second;

    // Plan on scratch buffers with FFTW_ESTIMATE so planning never touches
    // user data and always picks the same algorithm for a given size.
    std::vector<double> scratch(2 * n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    PlanPair p;
    p.fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!p.fwd || !p.bwd)
        throw std::runtime_error("fft: plan creation failed for size " + std::to_string(n));
    return cache.emplace(n, p).first->second;
}

void execute(std::vector<double>& interleaved, bool forward) {
    if (interleaved.size() % 2 != 0)
        throw std::runtime_error("fft: interleaved buffer must have even length");
    const std::size_t n = interleaved.size() / 2;
    if (!Fft::is_pow2(n))
        throw std::runtime_error("fft: size must be a power of two, got " + std::to_string(n));
    PlanPair& p = plans_for(n);
    auto* buf = reinterpret_cast<fftw_complex*>(interleaved.data());
    fftw_execute_dft(forward ? p.fwd : p.bwd, buf, buf);
}

} // namespace

void Fft::forward(std::vector<double>& interleaved) { execute(interleaved, true); }
void Fft::backward(std::vector<double>& interleaved) { execute(interleaved, false); }

std::vector<double> Fft::forward_real(const std::vector<double>& x) {
    std::vector<double> buf(2 * x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        buf[2 * i] = x[i];
    forward(buf);
    return buf;
}

std::vector<double> Fft::backward_real(const std::vector<double>& spec) {
    std::vector<double> buf = spec;
    backward(buf);
    const std::size_t n = buf.size() / 2;
    std::vector<double> out(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = buf[2 * i] * scale;
    return out;
}

bool Fft::is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::size_t Fft::next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

} // namespace ddspamp
