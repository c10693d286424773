#include "ddspamp/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ddspamp/wav_io.hpp"

namespace fs = std::filesystem;

namespace ddspamp {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

constexpr const char* kInputSuffix = ".input.wav";
constexpr const char* kTargetSuffix = ".target.wav";
constexpr const char* kKnobSuffix = ".knobs";

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

const char* split_name(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::TestSeen: return "seen";
    case Split::TestUnseen: return "unseen";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train")
        return Split::Train;
    if (name == "val")
        return Split::Val;
    if (name == "seen" || name == "test-seen")
        return Split::TestSeen;
    if (name == "unseen" || name == "test-unseen")
        return Split::TestUnseen;
    throw std::runtime_error("unknown split '" + name +
                             "' (expected train, val, seen or unseen)");
}

std::pair<KnobVector, bool> parse_knob_sidecar(const std::string& text,
                                               const std::string& origin) {
    KnobVector k;
    bool unseen = false;
    bool have[5] = {false, false, false, false, false};
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& why) -> void {
        throw std::runtime_error("knobs: " + origin + ":" + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail("expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "condition") {
            if (value == "unseen")
                unseen = true;
            else if (value == "seen")
                unseen = false;
            else
                fail("condition must be seen or unseen, got '" + value + "'");
            continue;
        }
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(value, &used);
            if (used != value.size())
                throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail("invalid value for " + key + ": '" + value + "'");
        }
        if (v < 0.0 || v > 1.0)
            fail(key + " = " + value + " outside [0,1]");
        if (key == "gain") {
            k.gain = v;
            have[0] = true;
        } else if (key == "bass") {
            k.bass = v;
            have[1] = true;
        } else if (key == "mid") {
            k.mid = v;
            have[2] = true;
        } else if (key == "treble") {
            k.treble = v;
            have[3] = true;
        } else if (key == "master") {
            k.master = v;
            have[4] = true;
        } else {
            fail("unknown key '" + key +
                 "' (expected gain, bass, mid, treble, master, condition)");
        }
    }
    static const char* names[5] = {"gain", "bass", "mid", "treble", "master"};
    for (int i = 0; i < 5; ++i)
        if (!have[i])
            throw std::runtime_error("knobs: " + origin + ": missing knob '" + names[i] + "'");
    return {k, unseen};
}

std::string knob_sidecar_text(const KnobVector& knobs, bool unseen) {
    std::ostringstream out;
    out << "gain = " << knobs.gain << "\n";
    out << "bass = " << knobs.bass << "\n";
    out << "mid = " << knobs.mid << "\n";
    out << "treble = " << knobs.treble << "\n";
    out << "master = " << knobs.master << "\n";
    if (unseen)
        out << "condition = unseen\n";
    return out.str();
}

Dataset Dataset::load(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw std::runtime_error("dataset: " + dir + " is not a directory");

    std::vector<std::string> names;
    for (const auto& ent : fs::directory_iterator(dir)) {
        const std::string file = ent.path().filename().string();
        if (ends_with(file, kInputSuffix))
            names.push_back(file.substr(0, file.size() - std::string(kInputSuffix).size()));
    }
    std::sort(names.begin(), names.end());
    if (names.empty())
        throw std::runtime_error("dataset: no *.input.wav files in " + dir);

    Dataset data;
    for (const std::string& name : names) {
        const std::string base = (fs::path(dir) / name).string();
        DatasetPair pair;
        pair.name = name;
        pair.input = read_wav(base + kInputSuffix).samples;
        pair.target = read_wav(base + kTargetSuffix).samples;
        if (pair.input.size() != pair.target.size())
            throw std::runtime_error("dataset: " + name + ": input has " +
                                     std::to_string(pair.input.size()) + " samples, target " +
                                     std::to_string(pair.target.size()));
        const std::string knob_path = base + kKnobSuffix;
        std::ifstream kf(knob_path);
        if (!kf)
            throw std::runtime_error("dataset: missing sidecar " + knob_path);
        std::ostringstream buf;
        buf << kf.rdbuf();
        auto [knobs, unseen] = parse_knob_sidecar(buf.str(), knob_path);
        pair.knobs = knobs;
        pair.unseen = unseen;
        data.pairs.push_back(std::move(pair));
    }
    return data;
}

std::vector<Region> Dataset::regions(Split s) const {
    std::vector<Region> out;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const std::size_t n = pairs[p].input.size();
        if (pairs[p].unseen) {
            if (s == Split::TestUnseen && n > 0)
                out.push_back({p, 0, n});
            continue;
        }
        // 6:1:3 by time within each seen pair.
        const std::size_t a = (n * 6) / 10;
        const std::size_t b = (n * 7) / 10;
        switch (s) {
        case Split::Train:
            if (a > 0)
                out.push_back({p, 0, a});
            break;
        case Split::Val:
            if (b > a)
                out.push_back({p, a, b});
            break;
        case Split::TestSeen:
            if (n > b)
                out.push_back({p, b, n});
            break;
        case Split::TestUnseen:
            break;
        }
    }
    return out;
}

std::size_t Dataset::segment_count(Split s, std::size_t segment_length) const {
    std::size_t count = 0;
    for (const Region& r : regions(s))
        count += (r.end - r.begin) / segment_length;
    return count;
}

bool Dataset::has_unseen() const {
    for (const auto& p : pairs)
        if (p.unseen)
            return true;
    return false;
}

std::vector<SegmentRef> make_segments(const Dataset& data, Split s, std::size_t segment_length) {
    if (segment_length == 0)
        throw std::runtime_error("dataset: segment_length must be positive");
    std::vector<SegmentRef> out;
    for (const Region& r : data.regions(s)) {
        const std::size_t count = (r.end - r.begin) / segment_length;
        for (std::size_t i = 0; i < count; ++i)
            out.push_back({r.pair, r.begin + i * segment_length});
    }
    return out;
}

void shuffle_segments(std::vector<SegmentRef>& segs, unsigned seed) {
    std::mt19937 rng(seed);
    for (std::size_t i = segs.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(segs[i - 1], segs[j]);
    }
}

} // namespace ddspamp
