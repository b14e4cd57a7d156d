#pragma once

#include "normlab/net/model.hpp"

#include <filesystem>

namespace normlab::cli {

// Little-endian binary checkpoint:
//
//   char[4]  magic "NLCK"
//   u32      version (1)
//   u32      blob count
//   per blob:
//     u32     name length, then the name bytes (no terminator)
//     u32     role: 0 = parameter, 1 = buffer
//     u32     rank, then rank x u64 dimensions
//     f64     values, prod(dimensions) of them
//
// Parameters come first in canonical model order, then buffers.
inline constexpr char kCheckpointMagic[4] = {'N', 'L', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path &path, Model &model);

// Restores values in place. Throws FormatError on a bad header or a blob set
// that does not match the model's names and shapes exactly.
void load_checkpoint(const std::filesystem::path &path, Model &model);

} // namespace normlab::cli
