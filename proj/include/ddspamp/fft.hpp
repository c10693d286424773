#pragma once
#include <cstddef>
#include <vector>

namespace ddspamp {

// Complex buffers are interleaved [re0, im0, re1, im1, ...], length 2*n.
// Transforms are unnormalized in the FFTW convention: forward uses
// e^{-2*pi*i*jk/n}, backward uses e^{+2*pi*i*jk/n} without the 1/n factor.
// Power-of-two sizes only; plans are cached per size.
class Fft {
public:
    // in-place complex transforms
    static void forward(std::vector<double>& interleaved);
    static void backward(std::vector<double>& interleaved);

    // real signal -> interleaved complex spectrum (all n bins)
    static std::vector<double> forward_real(const std::vector<double>& x);
    // interleaved spectrum -> real part of the normalized inverse transform
    static std::vector<double> backward_real(const std::vector<double>& spec);

    static bool is_pow2(std::size_t n);
    static std::size_t next_pow2(std::size_t n);
};

} // namespace ddspamp
