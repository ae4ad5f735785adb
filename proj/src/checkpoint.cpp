#include "trl/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "trl/errors.hpp"

namespace trl {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'R', 'L', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw Error(ErrorCode::kBadCheckpoint, "truncated checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::uint64_t expected_count(const std::vector<std::uint64_t>& sizes) {
  if (sizes.size() == 1) return sizes[0];
  std::uint64_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l] * sizes[l + 1] + sizes[l + 1];
  return n;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  if (ckpt.sizes.empty() || expected_count(ckpt.sizes) != ckpt.values.size()) {
    throw Error(ErrorCode::kBadCheckpoint, "size table does not match value count");
  }
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.sizes.size()));
  for (const auto s : ckpt.sizes) put_le<std::uint64_t>(out, s);
  put_le<std::uint64_t>(out, ckpt.values.size());
  for (const double v : ckpt.values) put_le<double>(out, v);
  if (!out) throw Error(ErrorCode::kBadCheckpoint, "write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::kBadCheckpoint, "bad magic bytes");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kBadCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto n = get_le<std::uint32_t>(in);
  if (n == 0 || n > 1024) throw Error(ErrorCode::kBadCheckpoint, "implausible size table length");
  Checkpoint ckpt;
  ckpt.sizes.resize(n);
  for (auto& s : ckpt.sizes) s = get_le<std::uint64_t>(in);
  const auto count = get_le<std::uint64_t>(in);
  if (count != expected_count(ckpt.sizes)) {
    throw Error(ErrorCode::kBadCheckpoint, "value count disagrees with the size table");
  }
  ckpt.values.resize(count);
  for (auto& v : ckpt.values) v = get_le<double>(in);
  return ckpt;
}

void save_mlp(const std::filesystem::path& path, const MlpParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kBadCheckpoint, "cannot open " + path.string());
  Checkpoint ckpt;
  for (const auto s : params.layout.sizes()) ckpt.sizes.push_back(s);
  ckpt.values = params.values;
  write_checkpoint(out, ckpt);
}

MlpParams load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kBadCheckpoint, "cannot open " + path.string());
  auto ckpt = read_checkpoint(in);
  if (ckpt.sizes.size() < 2) throw Error(ErrorCode::kBadCheckpoint, "checkpoint holds a flat vector, not an MLP");
  MlpParams params{MlpLayout(std::vector<std::size_t>(ckpt.sizes.begin(), ckpt.sizes.end()))};
  params.values = std::move(ckpt.values);
  return params;
}

void save_weights(const std::filesystem::path& path, std::span<const double> weights) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kBadCheckpoint, "cannot open " + path.string());
  write_checkpoint(out, Checkpoint{{weights.size()}, {weights.begin(), weights.end()}});
}

std::vector<double> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kBadCheckpoint, "cannot open " + path.string());
  auto ckpt = read_checkpoint(in);
  if (ckpt.sizes.size() != 1) throw Error(ErrorCode::kBadCheckpoint, "checkpoint holds an MLP, not a flat vector");
  return std::move(ckpt.values);
}

}  // namespace trl
