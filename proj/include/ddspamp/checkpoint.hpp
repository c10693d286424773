#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ddspamp/params.hpp"

namespace ddspamp {

// Binary model snapshot. The layout descriptor (ordered entry names and
// lengths) doubles as the architecture fingerprint: loading into a store with
// a different layout is rejected. Values are 32-bit little-endian floats; the
// whole file is covered by a trailing CRC-32. The format contains no
// timestamps, so identical parameters always produce identical bytes.
// Byte-level layout: docs/checkpoint_format.md.

struct CheckpointInfo {
    std::uint32_t version = 1;
    std::string arch_id;
    std::uint32_t knob_count = 5;
    std::string meta; // free-form, deterministic (e.g. "seed=17")
    std::vector<std::pair<std::string, std::size_t>> layout;
};

void save_checkpoint(const std::string& path, const std::string& arch_id,
                     std::uint32_t knob_count, const std::string& meta, const ParamStore& store);

// Verifies the CRC and returns the header without touching any store.
CheckpointInfo read_checkpoint_info(const std::string& path);

// Fills `store` values in place. Throws if the CRC fails, if expect_arch is
// non-empty and differs from the stored id, or if the stored layout does not
// match the store's (same names, lengths, order).
CheckpointInfo load_checkpoint(const std::string& path, ParamStore& store,
                               const std::string& expect_arch = "");

// CRC-32 (reflected, polynomial 0xEDB88320), as used by the checkpoint format.
std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

} // namespace ddspamp
