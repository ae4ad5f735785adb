#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "trl/mlp.hpp"

namespace trl {

// Binary layout, all integers and floats little-endian:
//   "TRL1" | u32 format version | u32 n | u64 sizes[n] | u64 count | f64 values[count]
// n >= 2 describes an MLP layer-size table; n == 1 a flat weight vector.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::vector<std::uint64_t> sizes;
  std::vector<double> values;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
/// Throws kBadCheckpoint on bad magic, unknown version, truncation, or a
/// value count that disagrees with the size table.
Checkpoint read_checkpoint(std::istream& in);

void save_mlp(const std::filesystem::path& path, const MlpParams& params);
MlpParams load_mlp(const std::filesystem::path& path);
void save_weights(const std::filesystem::path& path, std::span<const double> weights);
std::vector<double> load_weights(const std::filesystem::path& path);

}  // namespace trl
