#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trl/env.hpp"

namespace trl {

/// Indices of the active binary features.
using FeatureSet = std::vector<std::uint32_t>;

/// Grid tile coding over a bounded box. Tiling t is shifted by
/// ((t * (2d + 1)) mod n) / n tile widths along dimension d, so every
/// dimension sees all n offsets and the finest cells have width w / n.
class TileCoder {
 public:
  TileCoder(std::size_t num_tilings, std::vector<std::size_t> tiles_per_dim, std::vector<double> low,
            std::vector<double> high);

  std::size_t num_tilings() const { return num_tilings_; }
  std::size_t dims() const { return tiles_.size(); }
  std::size_t total_features() const { return total_features_; }
  double tile_width(std::size_t d) const { return width_[d]; }
  double low(std::size_t d) const { return low_[d]; }
  double high(std::size_t d) const { return high_[d]; }

  /// Clamps out-of-bound inputs; throws kDimensionMismatch on wrong length.
  void encode(std::span<const double> input, FeatureSet& out) const;
  FeatureSet encode(std::span<const double> input) const;

 private:
  std::size_t num_tilings_;
  std::vector<std::size_t> tiles_;
  std::vector<double> low_;
  std::vector<double> high_;
  std::vector<double> width_;
  std::vector<std::size_t> stride_;
  std::vector<double> offset_;  // [tiling * dims + d], in tile widths
  std::size_t cells_per_tiling_ = 0;
  std::size_t total_features_ = 0;
};

/// Maps an (observation, action) pair to a sparse binary feature set. The
/// SARSA learner and the feedback predictor share one of these.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual std::size_t size() const = 0;
  /// Number of indices every encoding activates.
  virtual std::size_t active_count() const = 0;
  virtual void encode(const Observation& obs, double action, FeatureSet& out) const = 0;

  FeatureSet encode(const Observation& obs, double action) const {
    FeatureSet out;
    encode(obs, action, out);
    return out;
  }
};

/// Tile coder over the joint vector (observation..., action).
class JointTileFeatures final : public FeatureMap {
 public:
  JointTileFeatures(const EnvSpec& spec, std::size_t num_tilings, std::size_t tiles_per_dim);

  using FeatureMap::encode;

  std::size_t size() const override { return coder_.total_features(); }
  std::size_t active_count() const override { return coder_.num_tilings(); }
  void encode(const Observation& obs, double action, FeatureSet& out) const override;
  const TileCoder& coder() const { return coder_; }

 private:
  TileCoder coder_;
  std::size_t obs_dim_;
};

/// Sum of weights at the active indices. Throws kIndexOutOfRange.
double linear_eval(std::span<const double> weights, std::span<const std::uint32_t> features);

}  // namespace trl
