#include "ddspamp/wav_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ddspamp {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw std::runtime_error("wav: " + path + ": " + why);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(static_cast<std::uint32_t>(p[0]) |
                                      (static_cast<std::uint32_t>(p[1]) << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& out, const char tag[4]) {
    out.insert(out.end(), tag, tag + 4);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

} // namespace

WavData read_wav(const std::string& path, std::uint32_t required_rate) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        fail(path, "cannot open file");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        fail(path, "not a RIFF/WAVE file");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const std::uint8_t* data = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* hdr = bytes.data() + pos;
        const std::uint32_t chunk_len = get_u32(hdr + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_len > bytes.size())
            fail(path, "truncated chunk");
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_len < 16)
                fail(path, "fmt chunk too short");
            const std::uint8_t* p = bytes.data() + body;
            format = get_u16(p);
            channels = get_u16(p + 2);
            rate = get_u32(p + 4);
            bits = get_u16(p + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1); // chunks are word-aligned
    }

    if (!have_fmt)
        fail(path, "missing fmt chunk");
    if (data == nullptr)
        fail(path, "missing data chunk");
    if (channels != 1)
        fail(path, "expected mono, got " + std::to_string(channels) + " channels");
    if (required_rate != 0 && rate != required_rate)
        fail(path, "expected " + std::to_string(required_rate) + " Hz, got " +
                       std::to_string(rate) + " Hz");

    WavData wav;
    wav.sample_rate = rate;
    if (format == kFormatPcm && bits == 16) {
        wav.samples.resize(data_len / 2);
        for (std::size_t i = 0; i < wav.samples.size(); ++i) {
            const auto u = get_u16(data + 2 * i);
            wav.samples[i] = static_cast<std::int16_t>(u) / 32768.0;
        }
    } else if (format == kFormatPcm && bits == 24) {
        wav.samples.resize(data_len / 3);
        for (std::size_t i = 0; i < wav.samples.size(); ++i) {
            const std::uint8_t* p = data + 3 * i;
            std::int32_t v = static_cast<std::int32_t>(
                static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                (static_cast<std::uint32_t>(p[2]) << 16));
            if (v & 0x800000)
                v -= 0x1000000;
            wav.samples[i] = v / 8388608.0;
        }
    } else if (format == kFormatFloat && bits == 32) {
        wav.samples.resize(data_len / 4);
        for (std::size_t i = 0; i < wav.samples.size(); ++i) {
            const std::uint32_t u = get_u32(data + 4 * i);
            float x;
            std::memcpy(&x, &u, 4);
            wav.samples[i] = x;
        }
    } else {
        fail(path, "unsupported sample format (want 16/24-bit PCM or 32-bit float, got format " +
                       std::to_string(format) + ", " + std::to_string(bits) + " bits)");
    }
    return wav;
}

void write_wav_f32(const std::string& path, const std::vector<double>& samples,
                   std::uint32_t sample_rate) {
    const std::uint32_t n = static_cast<std::uint32_t>(samples.size());
    std::vector<std::uint8_t> out;
    out.reserve(58 + 4 * samples.size());

    put_tag(out, "RIFF");
    put_u32(out, 0); // patched below
    put_tag(out, "WAVE");

    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, kFormatFloat);
    put_u16(out, 1); // mono
    put_u32(out, sample_rate);
    put_u32(out, sample_rate * 4); // byte rate
    put_u16(out, 4);               // block align
    put_u16(out, 32);              // bits per sample

    // IEEE-float WAVs carry a fact chunk with the frame count.
    put_tag(out, "fact");
    put_u32(out, 4);
    put_u32(out, n);

    put_tag(out, "data");
    put_u32(out, 4 * n);
    for (double s : samples) {
        const float x = static_cast<float>(s);
        std::uint32_t u;
        std::memcpy(&u, &x, 4);
        put_u32(out, u);
    }

    const std::uint32_t riff_len = static_cast<std::uint32_t>(out.size()) - 8;
    out[4] = static_cast<std::uint8_t>(riff_len & 0xff);
    out[5] = static_cast<std::uint8_t>((riff_len >> 8) & 0xff);
    out[6] = static_cast<std::uint8_t>((riff_len >> 16) & 0xff);
    out[7] = static_cast<std::uint8_t>((riff_len >> 24) & 0xff);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        fail(path, "cannot open for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f)
        fail(path, "write failed");
}

} // namespace ddspamp
