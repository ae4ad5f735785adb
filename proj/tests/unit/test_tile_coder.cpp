#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "trl/errors.hpp"
#include "trl/tile_coder.hpp"

using namespace trl;

namespace {

TileCoder unit_coder(std::size_t tilings, std::size_t tiles, std::size_t dims) {
  return TileCoder(tilings, std::vector<std::size_t>(dims, tiles), std::vector<double>(dims, 0.0),
                   std::vector<double>(dims, 1.0));
}

}  // namespace

TEST(TileCoder, ActivatesExactlyOnePerTiling) {
  const auto coder = unit_coder(8, 8, 5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeatureSet f;
  for (int n = 0; n < 10000; ++n) {
    std::vector<double> x(5);
    for (auto& v : x) v = u(rng);
    coder.encode(x, f);
    ASSERT_EQ(f.size(), 8u);
    EXPECT_EQ(std::set<std::uint32_t>(f.begin(), f.end()).size(), 8u);
    for (auto i : f) EXPECT_LT(i, coder.total_features());
  }
}

TEST(TileCoder, SameCellSameFeatures) {
  const auto coder = unit_coder(4, 4, 2);
  // Offsets are multiples of width/4 = 1/16; both points sit in [0.125, 0.1875).
  const std::vector<double> a{0.13, 0.13};
  const std::vector<double> b{0.18, 0.18};
  EXPECT_EQ(coder.encode(a), coder.encode(b));
}

TEST(TileCoder, DistantInputsShareNothing) {
  const auto coder = unit_coder(8, 8, 3);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 0.4);
  for (int n = 0; n < 2000; ++n) {
    std::vector<double> a(3), b(3);
    for (std::size_t d = 0; d < 3; ++d) {
      a[d] = u(rng);
      b[d] = a[d] + coder.tile_width(d) * 1.01 + u(rng);
      b[d] = std::min(b[d], 1.0);
      if (b[d] - a[d] <= coder.tile_width(d)) b[d] = a[d] + coder.tile_width(d) * 1.01;
    }
    const auto fa = coder.encode(a);
    const auto fb = coder.encode(b);
    for (std::size_t t = 0; t < 8; ++t) EXPECT_NE(fa[t], fb[t]);
  }
}

TEST(TileCoder, ClampsOutOfRangeInput) {
  const auto coder = unit_coder(2, 4, 1);
  EXPECT_EQ(coder.encode(std::vector<double>{-5.0}), coder.encode(std::vector<double>{0.0}));
  const auto f = coder.encode(std::vector<double>{7.0});
  for (auto i : f) EXPECT_LT(i, coder.total_features());
}

TEST(TileCoder, RejectsWrongDimension) {
  const auto coder = unit_coder(2, 4, 3);
  FeatureSet f;
  EXPECT_THROW(coder.encode(std::vector<double>{0.1, 0.2}, f), Error);
}

TEST(JointTileFeatures, EncodesObservationAndAction) {
  const auto spec = default_spec(EnvId::kCartPole);
  JointTileFeatures map(spec, 8, 8);
  EXPECT_EQ(map.active_count(), 8u);
  Observation o;
  o.dim = 4;
  o.data = {0.1, 0.0, 0.01, 0.0};
  const auto left = map.encode(o, -1.0);
  const auto right = map.encode(o, 1.0);
  EXPECT_EQ(left.size(), 8u);
  EXPECT_NE(left, right);
  EXPECT_EQ(left, map.encode(o, -1.0));
}

TEST(LinearEval, SumsActiveWeights) {
  const std::vector<double> w{1.0, 2.0, 4.0, 8.0};
  const FeatureSet f{0, 2, 3};
  EXPECT_EQ(linear_eval(w, f), 13.0);
  const FeatureSet bad{5};
  EXPECT_THROW(linear_eval(w, bad), Error);
}
