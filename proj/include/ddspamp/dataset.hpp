#pragma once
#include <cstddef>
#include <string>
#include <vector>

#include "ddspamp/amp_model.hpp" // KnobVector

namespace ddspamp {

// On-disk layout: a directory of recordings, three files per pair:
//   <name>.input.wav   mono 44.1 kHz DI signal
//   <name>.target.wav  device output, same length
//   <name>.knobs       text sidecar: gain/bass/mid/treble/master = value in
//                      [0,1], one per line, plus optional `condition = unseen`
// Seen pairs are split 6:1:3 by time (train | val | test); pairs marked
// unseen contribute their full length to the unseen test split.

enum class Split { Train, Val, TestSeen, TestUnseen };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct DatasetPair {
    std::string name;
    std::vector<double> input;
    std::vector<double> target;
    KnobVector knobs;
    bool unseen = false;
};

struct Region {
    std::size_t pair = 0;
    std::size_t begin = 0;
    std::size_t end = 0; // half-open
};

struct Dataset {
    std::vector<DatasetPair> pairs;
    std::uint32_t sample_rate = 44100;

    static Dataset load(const std::string& dir);

    std::vector<Region> regions(Split s) const;
    // Non-overlapping tiling of the split's regions: floor(len / L) per region.
    std::size_t segment_count(Split s, std::size_t segment_length) const;
    bool has_unseen() const;
};

// Parses a knob sidecar; throws on unknown keys, missing knobs, or values
// outside [0,1]. Returns the knob vector and whether condition = unseen.
std::pair<KnobVector, bool> parse_knob_sidecar(const std::string& text,
                                               const std::string& origin = "<string>");
std::string knob_sidecar_text(const KnobVector& knobs, bool unseen);

struct SegmentRef {
    std::size_t pair = 0;
    std::size_t offset = 0;
};

// Deterministic segment list: regions in pair order, offsets ascending.
std::vector<SegmentRef> make_segments(const Dataset& data, Split s, std::size_t segment_length);

// In-place Fisher-Yates driven by a seeded mt19937. Hand-rolled index draw so
// the order is identical across standard-library implementations.
void shuffle_segments(std::vector<SegmentRef>& segs, unsigned seed);

} // namespace ddspamp
