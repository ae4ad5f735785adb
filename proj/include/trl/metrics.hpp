#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "trl/env.hpp"

namespace trl {

struct EpisodeMetrics {
  int episode = 0;  // 1-based
  double reward = 0.0;
  int steps = 0;
  int feedback_count = 0;
  double ms = 0.0;

  friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

/// What a training loop reports after each environment step, before the
/// learning update for that step runs.
struct StepContext {
  int worker = 0;
  int episode = 0;  // 1-based, per worker
  int step = 0;     // 1-based within the episode
  std::int64_t global_step = 0;  // steps taken by this loop since it started
  const Observation& obs;
  double action;
  double reward;
  double cum_reward;
  const Observation& next_obs;
  bool terminal;
  bool truncated;
};

/// Moving average of the last `window` rewards (fewer if not enough yet).
double moving_average(std::span<const EpisodeMetrics> episodes, int window);

/// Smallest 1-based episode e whose trailing window [e-window+1, e] averages
/// at least `threshold`.
std::optional<int> episodes_to_convergence(std::span<const EpisodeMetrics> episodes, double threshold, int window);
std::optional<int> episodes_to_convergence(std::span<const double> rewards, double threshold, int window);

/// 64-bit mixing used to derive independent seeds for episodes and workers.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace trl
