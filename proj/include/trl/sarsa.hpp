#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "trl/env.hpp"
#include "trl/metrics.hpp"
#include "trl/tile_coder.hpp"

namespace trl {

/// Per-episode multiplicative decay: epsilon(e) = max(minimum, initial * decay^e).
struct EpsilonSchedule {
  double initial = 0.1;
  double decay = 1.0;
  double minimum = 0.0;

  double at(int episode_index) const;
};

struct SarsaConfig {
  double alpha = 0.1;
  double discount = 0.99;
  double lambda = 0.9;
  EpsilonSchedule epsilon;
  int action_grid = 7;
  // Traces whose magnitude decays below this are dropped from the sparse
  // active set. Zero keeps every trace.
  double trace_cutoff = 1e-4;
  // Every Q(O,A) starts at this value (spread evenly over the active tiles).
  double initial_q = 0.0;
  // Optional early stop once the moving-average reward reaches the threshold.
  std::optional<double> convergence_threshold;
  int convergence_window = 20;

  /// Throws kInvalidConfig naming the offending field.
  void validate() const;
};

/// The discretized action set: `grid` evenly spaced levels spanning [-1, 1].
std::vector<double> action_levels(int grid);

/// Linear Q over sparse binary features, with accumulating eligibility traces.
class SarsaAgent {
 public:
  SarsaAgent(const FeatureMap& features, const SarsaConfig& cfg);

  const FeatureMap& features() const { return *features_; }
  const std::vector<double>& levels() const { return levels_; }
  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> traces() const { return traces_; }
  std::span<const std::uint32_t> active_traces() const { return active_; }

  double q(const Observation& obs, double action) const;
  double q(std::span<const std::uint32_t> features) const;
  /// Q at every action level, in level order.
  void q_all(const Observation& obs, std::vector<double>& out) const;

  void reset_traces();
  /// e(O,A) += 1 for every active feature.
  void accumulate_trace(std::span<const std::uint32_t> features);
  /// w += step * e over the active set, then e *= decay; drops tiny traces.
  void apply_traces(double step, double decay, double cutoff);

 private:
  const FeatureMap* features_;
  std::vector<double> levels_;
  std::vector<double> weights_;
  std::vector<double> traces_;
  std::vector<std::uint32_t> active_;
  std::vector<char> is_active_;
  mutable FeatureSet scratch_;
};

struct ActionChoice {
  int bin = 0;
  double action = 0.0;
  bool greedy = true;
};

/// Highest-Q level; ties go to the lowest bin index.
int greedy_bin(const SarsaAgent& agent, const Observation& obs);

/// Epsilon-greedy over the action grid.
ActionChoice select_action_sarsa(const SarsaAgent& agent, const Observation& obs, double epsilon,
                                 std::mt19937_64& rng);

struct Transition {
  Observation obs;
  double action = 0.0;
  double reward = 0.0;
  Observation next_obs;
  double next_action = 0.0;
  bool terminal = false;
  // Whether next_action was the greedy choice (Watkins trace cut).
  bool next_greedy = true;
};

/// SARSA(lambda) step. Returns the TD error. Weight steps are divided by the
/// feature map's active count so the effective step size is alpha.
/// Throws kNonFiniteUpdate.
double sarsa_update(SarsaAgent& agent, const Transition& t, const SarsaConfig& cfg);

/// Watkins Q(lambda): greedy target; traces cleared after an exploratory
/// next action.
double q_learning_update(SarsaAgent& agent, const Transition& t, const SarsaConfig& cfg);

/// Extension point the hybrid trainer uses to inject teacher feedback.
class SarsaHooks {
 public:
  virtual ~SarsaHooks() = default;
  virtual void on_episode_start(int /*episode*/) {}
  /// Called after each environment step and before the TD update. The return
  /// value is added to the reward the TD update sees.
  virtual double on_step(const StepContext& /*ctx*/, SarsaAgent& /*agent*/) { return 0.0; }
  /// Non-neutral feedback events applied since the last call.
  virtual int take_feedback_count() { return 0; }
  virtual bool stop_requested() const { return false; }
};

enum class TdTarget { kSarsa, kQLearning };

struct SarsaRunOptions {
  int episodes = 0;
  std::uint64_t seed = 0;
  TdTarget target = TdTarget::kSarsa;
  bool record_wall_clock = true;
};

/// Full training loop; one metrics entry per finished episode.
std::vector<EpisodeMetrics> run_sarsa(Environment& env, SarsaAgent& agent, const SarsaConfig& cfg,
                                      const SarsaRunOptions& opts, SarsaHooks* hooks = nullptr);

}  // namespace trl
