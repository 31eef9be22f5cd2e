#pragma once

#include <string>

#include "lantern/param_store.hpp"

namespace lantern {

// Checkpoint container, little-endian throughout:
//   magic "R2TK"
//   format version        u32
//   entry count           u64
//   per entry: name length u64, UTF-8 name bytes,
//              shape rank  u64, dims u64 each,
//              values      f64 each (product of dims)
// Round-trips byte-exactly: save(load(save(x))) == save(x).
inline constexpr char kCheckpointMagic[4] = {'R', '2', 'T', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore& store, const std::string& path);

// Fills an existing store: the file must contain exactly the store's entry
// set with matching shapes. Groups/decay flags come from the live model.
void load_checkpoint(ParamStore& store, const std::string& path);

}  // namespace lantern
