#include "trl/metrics.hpp"

#include <algorithm>

namespace trl {

double moving_average(std::span<const EpisodeMetrics> episodes, int window) {
  if (episodes.empty() || window <= 0) return 0.0;
  const auto n = std::min<std::size_t>(episodes.size(), static_cast<std::size_t>(window));
  double sum = 0.0;
  for (std::size_t i = episodes.size() - n; i < episodes.size(); ++i) sum += episodes[i].reward;
  return sum / static_cast<double>(n);
}

std::optional<int> episodes_to_convergence(std::span<const double> rewards, double threshold, int window) {
  if (window < 1) return std::nullopt;
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t end = w; end <= rewards.size(); ++end) {
    double sum = 0.0;
    for (std::size_t i = end - w; i < end; ++i) sum += rewards[i];
    if (sum / static_cast<double>(w) >= threshold) return static_cast<int>(end);
  }
  return std::nullopt;
}

std::optional<int> episodes_to_convergence(std::span<const EpisodeMetrics> episodes, double threshold, int window) {
  std::vector<double> rewards;
  rewards.reserve(episodes.size());
  for (const auto& e : episodes) rewards.push_back(e.reward);
  return episodes_to_convergence(rewards, threshold, window);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined state
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace trl
