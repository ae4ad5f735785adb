#include "trl/tile_coder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trl/errors.hpp"

namespace trl {

TileCoder::TileCoder(std::size_t num_tilings, std::vector<std::size_t> tiles_per_dim, std::vector<double> low,
                     std::vector<double> high)
    : num_tilings_(num_tilings), tiles_(std::move(tiles_per_dim)), low_(std::move(low)), high_(std::move(high)) {
  const std::size_t d = tiles_.size();
  if (num_tilings_ == 0 || d == 0 || low_.size() != d || high_.size() != d) {
    throw Error(ErrorCode::kInvalidConfig, "tile coder needs >= 1 tiling and matching bound vectors");
  }
  width_.resize(d);
  stride_.resize(d);
  std::size_t cells = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (tiles_[i] == 0 || !(high_[i] > low_[i])) {
      throw Error(ErrorCode::kInvalidConfig, "tile coder dimension " + std::to_string(i) + " is empty");
    }
    width_[i] = (high_[i] - low_[i]) / static_cast<double>(tiles_[i]);
    stride_[i] = cells;
    cells *= tiles_[i] + 1;
  }
  cells_per_tiling_ = cells;
  total_features_ = cells * num_tilings_;
  if (total_features_ > 0xffffffffULL) {
    throw Error(ErrorCode::kInvalidConfig, "tile coder has more than 2^32 features");
  }
  offset_.resize(num_tilings_ * d);
  for (std::size_t t = 0; t < num_tilings_; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      offset_[t * d + i] = static_cast<double>((t * (2 * i + 1)) % num_tilings_) / static_cast<double>(num_tilings_);
    }
  }
}

void TileCoder::encode(std::span<const double> input, FeatureSet& out) const {
  const std::size_t d = tiles_.size();
  if (input.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch,
                "tile coder expects " + std::to_string(d) + " inputs, got " + std::to_string(input.size()));
  }
  // Scaled coordinates, computed once per call.
  double scaled[16];
  std::vector<double> heap;
  double* s = scaled;
  if (d > 16) {
    heap.resize(d);
    s = heap.data();
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double x = std::clamp(input[i], low_[i], high_[i]);
    s[i] = (x - low_[i]) / width_[i];
  }
  out.resize(num_tilings_);
  for (std::size_t t = 0; t < num_tilings_; ++t) {
    std::size_t index = t * cells_per_tiling_;
    for (std::size_t i = 0; i < d; ++i) {
      auto c = static_cast<std::size_t>(s[i] + offset_[t * d + i]);
      c = std::min(c, tiles_[i]);
      index += c * stride_[i];
    }
    out[t] = static_cast<std::uint32_t>(index);
  }
}

FeatureSet TileCoder::encode(std::span<const double> input) const {
  FeatureSet out;
  encode(input, out);
  return out;
}

namespace {

TileCoder make_joint_coder(const EnvSpec& spec, std::size_t num_tilings, std::size_t tiles_per_dim) {
  std::vector<double> low(spec.obs_low.begin(), spec.obs_low.begin() + static_cast<std::ptrdiff_t>(spec.obs_dim));
  std::vector<double> high(spec.obs_high.begin(), spec.obs_high.begin() + static_cast<std::ptrdiff_t>(spec.obs_dim));
  low.push_back(-1.0);
  high.push_back(1.0);
  return TileCoder(num_tilings, std::vector<std::size_t>(spec.obs_dim + 1, tiles_per_dim), std::move(low),
                   std::move(high));
}

}  // namespace

JointTileFeatures::JointTileFeatures(const EnvSpec& spec, std::size_t num_tilings, std::size_t tiles_per_dim)
    : coder_(make_joint_coder(spec, num_tilings, tiles_per_dim)), obs_dim_(spec.obs_dim) {}

void JointTileFeatures::encode(const Observation& obs, double action, FeatureSet& out) const {
  if (obs.dim != obs_dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "observation dimension does not match the feature map");
  }
  std::array<double, kMaxObsDim + 1> joint{};
  for (std::size_t i = 0; i < obs_dim_; ++i) joint[i] = obs[i];
  joint[obs_dim_] = action;
  coder_.encode(std::span<const double>(joint.data(), obs_dim_ + 1), out);
}

double linear_eval(std::span<const double> weights, std::span<const std::uint32_t> features) {
  double sum = 0.0;
  for (const auto i : features) {
    if (i >= weights.size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "feature " + std::to_string(i) + " >= weight length " + std::to_string(weights.size()));
    }
    sum += weights[i];
  }
  return sum;
}

}  // namespace trl
