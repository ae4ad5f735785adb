#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <shared_mutex>
#include <span>
#include <vector>

#include "trl/env.hpp"
#include "trl/metrics.hpp"
#include "trl/mlp.hpp"

namespace trl {

enum class Optimizer { kSgd, kRmsProp };

struct A3cConfig {
  int num_workers = 1;
  int rollout_length = 20;  // t_max
  double discount = 0.99;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double entropy_coef = 0.01;
  std::int64_t max_global_steps = 10'000'000;  // T_max
  std::vector<std::size_t> hidden = {64, 64};
  // The actor's second output plus this bias is the log standard deviation,
  // clamped to [log_std_min, log_std_max].
  double init_log_std = 0.0;
  double log_std_min = -2.0;
  double log_std_max = 0.0;
  Optimizer optimizer = Optimizer::kRmsProp;
  double rms_decay = 0.99;
  double rms_epsilon = 1e-6;
  // Per-set gradient norm clip applied in a3c_apply; zero disables it.
  double max_grad_norm = 0.0;
  // Rewards are multiplied by this before returns are formed.
  double reward_scale = 0.1;
  std::optional<double> convergence_threshold;
  int convergence_window = 20;

  void validate() const;
};

/// Gaussian policy head over the 1-D action.
struct GaussianHead {
  double mean = 0.0;
  double log_std = 0.0;
  bool log_std_clamped = false;

  double stddev() const;
};

GaussianHead gaussian_head(std::span<const double> actor_output, const A3cConfig& cfg);
double gaussian_log_prob(const GaussianHead& head, double action);
double gaussian_entropy(const GaussianHead& head);

/// Observation rescaled to roughly [-1, 1] using the spec's nominal range.
std::vector<double> policy_input(const EnvSpec& spec, const Observation& obs);

/// grads += scale * d log pi(action | input) / d actor.
void add_log_prob_gradient(const MlpParams& actor, std::span<const double> input, double action, double scale,
                           const A3cConfig& cfg, GradientSet& grads);

/// Log-probability of an executed action under the Gaussian clamped to
/// [-1, 1]: the density inside the range, the tail mass at either bound.
double executed_log_prob(const GaussianHead& head, double action);

/// grads += scale * d executed_log_prob(action | input) / d actor.
void add_executed_log_prob_gradient(const MlpParams& actor, std::span<const double> input, double action,
                                    double scale, const A3cConfig& cfg, GradientSet& grads);

struct RolloutStep {
  std::vector<double> input;
  double raw_action = 0.0;  // Gaussian sample before clamping
  double action = 0.0;      // what the environment received
  double reward = 0.0;
  double value = 0.0;       // V(s) under the rollout's critic snapshot
  ForwardCache actor_cache;
  ForwardCache critic_cache;
};

struct RolloutBuffer {
  std::vector<RolloutStep> steps;
  double bootstrap_value = 0.0;  // 0 when the rollout ended in a terminal state
  std::vector<double> returns;

  /// G_t = r_t + discount * G_{t+1}, with G after the last step = bootstrap.
  void compute_returns(double discount);
};

struct A3cGradients {
  GradientSet actor;
  GradientSet critic;
};

struct A3cLosses {
  double actor = 0.0;   // sum of -log pi * advantage - beta * entropy
  double critic = 0.0;  // sum of (G - V)^2
};

/// Losses over a rollout whose returns are already computed.
A3cLosses a3c_losses(const MlpParams& actor, const MlpParams& critic, const RolloutBuffer& rollout,
                     const A3cConfig& cfg);
/// Analytic gradients of a3c_losses; advantages are constants for the actor.
/// Throws kNonFiniteGradient.
A3cGradients a3c_gradients(const MlpParams& actor, const MlpParams& critic, const RolloutBuffer& rollout,
                           const A3cConfig& cfg);

/// Shared actor/critic parameters and global step counter T. Snapshots take a
/// shared lock; apply takes the exclusive lock.
class A3cGlobals {
 public:
  A3cGlobals(const EnvSpec& spec, const A3cConfig& cfg, std::uint64_t seed);
  A3cGlobals(MlpParams actor, MlpParams critic);

  struct Snapshot {
    MlpParams actor;
    MlpParams critic;
    std::int64_t global_steps = 0;
  };

  Snapshot snapshot() const;
  std::int64_t global_steps() const { return steps_.load(); }

  /// Descent step on both parameter sets and T += steps. Throws
  /// kShapeMismatch when gradient shapes differ from the parameters.
  void apply(const A3cGradients& grads, std::int64_t steps, const A3cConfig& cfg);

 private:
  mutable std::shared_mutex mutex_;
  MlpParams actor_;
  MlpParams critic_;
  std::vector<double> actor_sq_;
  std::vector<double> critic_sq_;
  std::atomic<std::int64_t> steps_{0};
};

void a3c_apply(A3cGlobals& globals, const A3cGradients& grads, std::int64_t steps, const A3cConfig& cfg);

/// Extension point for teacher feedback; only worker 0 receives hooks.
class A3cHooks {
 public:
  virtual ~A3cHooks() = default;
  virtual void on_episode_start(int /*episode*/) {}
  /// Called after each environment step with the worker's parameter snapshot
  /// and its actor gradient accumulator (a descent direction). The return
  /// value is added to the step's reward before returns are formed.
  virtual double on_step(const StepContext& /*ctx*/, const MlpParams& /*actor*/, GradientSet& /*d_actor*/) {
    return 0.0;
  }
  virtual int take_feedback_count() { return 0; }
  virtual bool stop_requested() const { return false; }
};

/// Per-worker loop state: one environment, one RNG, the episode in progress.
struct A3cWorker {
  A3cWorker(int id, const EnvSpec& spec, std::uint64_t run_seed);

  int id;
  EnvSpec spec;
  std::unique_ptr<Environment> env;
  std::mt19937_64 rng;
  std::uint64_t seed;
  Observation obs;
  bool in_episode = false;
  int episode = 0;  // local episode counter
  int episode_steps = 0;
  double cum_reward = 0.0;
  std::int64_t steps_taken = 0;
  double episode_started_ms = 0.0;
};

struct FinishedEpisode {
  double reward = 0.0;
  int steps = 0;
  int feedback_count = 0;
  double ms = 0.0;
};

struct RolloutResult {
  RolloutBuffer buffer;
  A3cGradients grads;
  std::int64_t steps = 0;
  std::vector<FinishedEpisode> finished;
};

/// Collects up to rollout_length transitions with a private parameter
/// snapshot and returns the accumulated gradients.
RolloutResult a3c_worker_rollout(const A3cGlobals& globals, A3cWorker& worker, const A3cConfig& cfg,
                                 A3cHooks* hooks = nullptr);

struct A3cRunOptions {
  int episodes = 0;
  std::uint64_t seed = 0;
  bool record_wall_clock = true;
};

/// Runs workers until the episode budget, T_max, or convergence. Metrics are
/// numbered in completion order across workers.
std::vector<EpisodeMetrics> run_a3c(const EnvSpec& spec, A3cGlobals& globals, const A3cConfig& cfg,
                                    const A3cRunOptions& opts, A3cHooks* hooks = nullptr);

}  // namespace trl
