#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace ddspamp {

struct WavData {
    std::vector<double> samples; // mono
    std::uint32_t sample_rate = 44100;
};

// Reads a mono RIFF/WAVE file. Accepted sample formats: 16-bit PCM, 24-bit
// PCM, 32-bit IEEE float. Stereo files, other formats, and (unless
// required_rate == 0) other sample rates are rejected with a descriptive
// exception. Integer samples are scaled to [-1, 1) by 2^(bits-1).
WavData read_wav(const std::string& path, std::uint32_t required_rate = 44100);

// Writes mono 32-bit IEEE float. read_wav(write_wav(x)) preserves the sample
// bits exactly when x holds float-representable values.
void write_wav_f32(const std::string& path, const std::vector<double>& samples,
                   std::uint32_t sample_rate = 44100);

} // namespace ddspamp
