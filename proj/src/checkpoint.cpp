#include "ddspamp/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ddspamp {
namespace {

constexpr char kMagic[4] = {'D', 'A', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw std::runtime_error("checkpoint: " + path + ": " + why);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

class Reader {
public:
    Reader(const std::string& path, const std::vector<std::uint8_t>& bytes)
        : path_(path), bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += 4;
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }
    std::string string() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    float f32() {
        const std::uint32_t u = u32();
        float x;
        std::memcpy(&x, &u, 4);
        return x;
    }
    void expect_magic() {
        need(4);
        if (std::memcmp(bytes_.data() + pos_, kMagic, 4) != 0)
            fail(path_, "bad magic (not a checkpoint file)");
        pos_ += 4;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size())
            fail(path_, "truncated file");
    }
    const std::string& path_;
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

struct ParsedFile {
    CheckpointInfo info;
    std::vector<std::vector<float>> values; // aligned with info.layout
};

ParsedFile parse_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        fail(path, "cannot open file");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 4 + 4)
        fail(path, "truncated file");

    const std::size_t body_len = bytes.size() - 4;
    std::uint32_t stored_crc;
    {
        const std::uint8_t* p = bytes.data() + body_len;
        stored_crc = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                     (static_cast<std::uint32_t>(p[2]) << 16) |
                     (static_cast<std::uint32_t>(p[3]) << 24);
    }
    if (crc32(bytes.data(), body_len) != stored_crc)
        fail(path, "CRC mismatch (file corrupted)");

    Reader r(path, bytes);
    r.expect_magic();
    ParsedFile out;
    out.info.version = r.u32();
    if (out.info.version != kVersion)
        fail(path, "unsupported format version " + std::to_string(out.info.version));
    out.info.arch_id = r.string();
    out.info.knob_count = r.u32();
    out.info.meta = r.string();
    const std::uint32_t entries = r.u32();
    out.info.layout.reserve(entries);
    out.values.reserve(entries);
    for (std::uint32_t e = 0; e < entries; ++e) {
        std::string name = r.string();
        const std::uint32_t count = r.u32();
        std::vector<float> vals(count);
        for (std::uint32_t i = 0; i < count; ++i)
            vals[i] = r.f32();
        out.info.layout.emplace_back(std::move(name), count);
        out.values.push_back(std::move(vals));
    }
    if (r.pos() != body_len)
        fail(path, "trailing bytes after the last entry");
    return out;
}

} // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void save_checkpoint(const std::string& path, const std::string& arch_id,
                     std::uint32_t knob_count, const std::string& meta, const ParamStore& store) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_string(out, arch_id);
    put_u32(out, knob_count);
    put_string(out, meta);
    put_u32(out, static_cast<std::uint32_t>(store.size()));
    for (const auto& e : store.entries()) {
        put_string(out, e.name);
        put_u32(out, static_cast<std::uint32_t>(e.value.size()));
        for (double v : e.value) {
            const float x = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &x, 4);
            put_u32(out, u);
        }
    }
    put_u32(out, crc32(out.data(), out.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        fail(path, "cannot open for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f)
        fail(path, "write failed");
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
    return parse_file(path).info;
}

CheckpointInfo load_checkpoint(const std::string& path, ParamStore& store,
                               const std::string& expect_arch) {
    ParsedFile file = parse_file(path);
    if (!expect_arch.empty() && file.info.arch_id != expect_arch)
        fail(path, "architecture mismatch: file is '" + file.info.arch_id + "', expected '" +
                       expect_arch + "'");
    if (file.info.layout.size() != store.size())
        fail(path, "layout mismatch: file has " + std::to_string(file.info.layout.size()) +
                       " entries, model has " + std::to_string(store.size()));
    for (std::size_t e = 0; e < store.size(); ++e) {
        const auto& [name, count] = file.info.layout[e];
        auto& entry = store.at(static_cast<int>(e));
        if (name != entry.name || count != entry.value.size())
            fail(path, "layout mismatch at entry " + std::to_string(e) + ": file has '" + name +
                           "'[" + std::to_string(count) + "], model has '" + entry.name + "'[" +
                           std::to_string(entry.value.size()) + "]");
        for (std::size_t i = 0; i < count; ++i)
            entry.value[i] = file.values[e][i];
    }
    return file.info;
}

} // namespace ddspamp
