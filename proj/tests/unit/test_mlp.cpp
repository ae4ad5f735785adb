#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "../oracles/naive_mlp.hpp"
#include "trl/checkpoint.hpp"
#include "trl/errors.hpp"
#include "trl/mlp.hpp"

using namespace trl;

TEST(MlpLayout, CountsParameters) {
  MlpLayout l({4, 64, 64, 2});
  EXPECT_EQ(l.parameter_count(), 4u * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
  EXPECT_EQ(l.num_layers(), 3u);
  EXPECT_EQ(l.weight_offset(0), 0u);
  EXPECT_EQ(l.bias_offset(0), 256u);
}

TEST(Mlp, ForwardMatchesNaive) {
  std::mt19937_64 rng(3);
  const auto p = make_mlp({3, 5, 4, 2}, rng);
  const std::vector<double> x{0.3, -0.7, 0.1};
  const auto fast = mlp_forward(p, x);
  const auto slow = oracle::naive_forward(p, x);
  ASSERT_EQ(fast.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(fast[i], slow[i], 1e-14);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int fixture = 0; fixture < 20; ++fixture) {
    const auto p = make_mlp({3, 6, 2}, rng);
    std::vector<double> x(3), cot(2);
    for (auto& v : x) v = n(rng);
    for (auto& v : cot) v = n(rng);
    const auto fb = mlp_forward_backward(p, x, cot);
    const auto fd = oracle::central_difference(
        p,
        [&](const MlpParams& q) {
          const auto y = oracle::naive_forward(q, x);
          return y[0] * cot[0] + y[1] * cot[1];
        },
        1e-6);
    for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_NEAR(fb.grads.values[i], fd[i], 1e-7);
  }
}

TEST(Mlp, RejectsWrongInputSize) {
  std::mt19937_64 rng(5);
  const auto p = make_mlp({3, 4, 1}, rng);
  EXPECT_THROW(mlp_forward(p, std::vector<double>{1.0}), Error);
}

TEST(Mlp, AllFinite) {
  EXPECT_TRUE(all_finite(std::vector<double>{1.0, -2.0}));
  EXPECT_FALSE(all_finite(std::vector<double>{1.0, std::nan("")}));
}

TEST(Checkpoint, RoundTripsMlp) {
  std::mt19937_64 rng(6);
  const auto p = make_mlp({4, 8, 2}, rng);
  const auto path = std::filesystem::temp_directory_path() / "trl_ckpt_test.bin";
  save_mlp(path, p);
  const auto q = load_mlp(path);
  EXPECT_TRUE(q.layout == p.layout);
  EXPECT_EQ(q.values, p.values);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RoundTripsWeights) {
  const std::vector<double> w{1.5, -2.25, 0.0, 1e-300};
  const auto path = std::filesystem::temp_directory_path() / "trl_weights_test.bin";
  save_weights(path, w);
  EXPECT_EQ(load_weights(path), w);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream bad_magic("XXXX");
  EXPECT_THROW(read_checkpoint(bad_magic), Error);

  Checkpoint c{{2, 1}, {0.5, 0.25, 0.125}};
  std::stringstream full;
  write_checkpoint(full, c);
  const auto bytes = full.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_checkpoint(truncated), Error);

  std::stringstream ok(bytes);
  const auto back = read_checkpoint(ok);
  EXPECT_EQ(back.sizes, c.sizes);
  EXPECT_EQ(back.values, c.values);

  // A 2-1 MLP needs 3 values; rewrite the count field (offset 28) to 1.
  std::string patched = bytes.substr(0, bytes.size() - 16);
  patched[28] = 1;
  std::stringstream mismatched(patched);
  EXPECT_THROW(read_checkpoint(mismatched), Error);

  Checkpoint wrong{{2, 1}, {0.5}};
  std::stringstream sink;
  EXPECT_THROW(write_checkpoint(sink, wrong), Error);
}
