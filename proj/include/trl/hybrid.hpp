#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

#include "trl/a3c.hpp"
#include "trl/feedback.hpp"
#include "trl/sarsa.hpp"
#include "trl/teacher.hpp"

namespace trl {

/// Where teacher feedback comes from. Implementations are driven by the
/// session loop: observe() after every action, drain() before the update.
class FeedbackSource {
 public:
  virtual ~FeedbackSource() = default;
  virtual void observe(std::int64_t step, double time, const Observation& obs, double action) = 0;
  /// Appends every event emitted at or before `now`, in emission order.
  virtual void drain(double now, std::vector<FeedbackEvent>& out) = 0;
};

/// Simulated teacher: judges each action against a reference policy and
/// releases the verdict after its sampled reaction delay. Owns its RNG so a
/// silent teacher never perturbs the learner's random stream.
class OracleFeedbackSource final : public FeedbackSource {
 public:
  OracleFeedbackSource(TeacherProfile profile, ReferencePolicy policy, std::uint64_t seed, double step_period);

  void observe(std::int64_t step, double time, const Observation& obs, double action) override;
  void drain(double now, std::vector<FeedbackEvent>& out) override;
  std::size_t pending() const { return pending_.size(); }

 private:
  TeacherProfile profile_;
  ReferencePolicy policy_;
  std::mt19937_64 rng_;
  double step_period_;
  std::vector<FeedbackEvent> pending_;  // sorted by emission time, stable
};

/// Thread-safe queue for live feedback. push() may be called from any
/// thread; events are stamped with the session clock at arrival and drained
/// in arrival order.
class QueueFeedbackSource final : public FeedbackSource {
 public:
  /// Returns the arrival timestamp assigned to the event.
  double push(int value, FeedbackOrigin origin = FeedbackOrigin::kHuman);
  void observe(std::int64_t step, double time, const Observation& obs, double action) override;
  void drain(double now, std::vector<FeedbackEvent>& out) override;
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::vector<FeedbackEvent> queue_;
  std::atomic<double> now_{0.0};
};

/// Optional tap on every step (the live service streams state through it and
/// pauses the loop inside on_step).
class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void on_step(const StepContext& ctx) = 0;
  virtual bool stop_requested() const { return false; }
};

struct FeedbackSettings {
  SupervisedConfig supervised;
  // Credit-assignment model; for simulated teachers normally equal to the
  // teacher's own delay distribution.
  DelayDistribution credit_delay = DelayDistribution::gamma(2.0, 15.0);
  double bias_rate = 0.05;
  double rate_cap = 1.0;
  double step_period = 0.02;  // seconds per environment step on the session clock
  // Off by default: adds shaping_scale * FB(O,A) to the learning reward on
  // steps where the teacher is silent.
  bool predictor_shaping = false;
  double shaping_scale = 1.0;

  void validate() const;
};

/// Feedback drained for one step, applied to a SARSA agent: evaluator first,
/// then the supervised Q nudge, per credited tuple. Returns non-neutral count.
int apply_feedback_sarsa(SarsaAgent& agent, FeedbackLayer& layer, std::span<const FeedbackEvent> pending);

/// Same for an A3C worker: the supervised term lands in d_actor.
int apply_feedback_a3c(const MlpParams& actor, GradientSet& d_actor, FeedbackLayer& layer, const EnvSpec& spec,
                       const A3cConfig& cfg, std::span<const FeedbackEvent> pending);

/// One hybrid SARSA step on an already-sampled transition: buffer (O, A),
/// apply pending feedback, then the unchanged SARSA update. Returns the TD error.
double hybrid_sarsa_step(SarsaAgent& agent, FeedbackLayer& layer, const Transition& t, double time,
                         std::span<const FeedbackEvent> pending, const SarsaConfig& cfg);

/// One hybrid A3C step: buffer (O, A) and fold pending feedback into d_actor.
int hybrid_a3c_step(const MlpParams& actor, GradientSet& d_actor, FeedbackLayer& layer, const EnvSpec& spec,
                    const A3cConfig& cfg, const Observation& obs, double action, double time,
                    std::span<const FeedbackEvent> pending);

class HybridSarsaHooks final : public SarsaHooks {
 public:
  HybridSarsaHooks(FeedbackLayer& layer, FeedbackSource& source, const FeedbackSettings& settings,
                   StepObserver* observer = nullptr);

  double on_step(const StepContext& ctx, SarsaAgent& agent) override;
  int take_feedback_count() override;
  bool stop_requested() const override { return observer_ && observer_->stop_requested(); }

 private:
  FeedbackLayer* layer_;
  FeedbackSource* source_;
  FeedbackSettings settings_;
  StepObserver* observer_;
  std::vector<FeedbackEvent> pending_;
  int count_ = 0;
};

class HybridA3cHooks final : public A3cHooks {
 public:
  HybridA3cHooks(FeedbackLayer& layer, FeedbackSource& source, const FeedbackSettings& settings,
                 const EnvSpec& spec, const A3cConfig& cfg, StepObserver* observer = nullptr);

  double on_step(const StepContext& ctx, const MlpParams& actor, GradientSet& d_actor) override;
  int take_feedback_count() override;
  bool stop_requested() const override { return observer_ && observer_->stop_requested(); }

 private:
  FeedbackLayer* layer_;
  FeedbackSource* source_;
  FeedbackSettings settings_;
  EnvSpec spec_;
  A3cConfig cfg_;
  StepObserver* observer_;
  std::vector<FeedbackEvent> pending_;
  int count_ = 0;
};

}  // namespace trl
