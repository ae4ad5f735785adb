#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "trl/a3c.hpp"
#include "trl/env.hpp"
#include "trl/sarsa.hpp"
#include "trl/tile_coder.hpp"

namespace trl {

enum class FeedbackOrigin { kHuman, kOracle };

/// Teacher signal: +1 approve, -1 disapprove, 0 silent.
struct FeedbackEvent {
  int value = 0;
  double emission_time = 0.0;  // seconds on the session clock
  FeedbackOrigin source = FeedbackOrigin::kOracle;
};

/// Linear teacher-feedback predictor FB(O,A) = psi . theta(O,A).
struct FeedbackModel {
  std::vector<double> psi;
  double bias_rate = 0.05;
  double rate_cap = 1.0;

  FeedbackModel() = default;
  explicit FeedbackModel(std::size_t features, double bias = 0.05, double cap = 1.0)
      : psi(features, 0.0), bias_rate(bias), rate_cap(cap) {}

  void validate() const;
};

struct FeedbackPrediction {
  double raw = 0.0;      // unclamped, feeds the adaptive rate
  double clamped = 0.0;  // in [-1, 1], for reporting
};

FeedbackPrediction fb_predict(const FeedbackModel& model, std::span<const std::uint32_t> features);

/// min(|fb| + b, cap).
double adaptive_rate(double fb_value, const FeedbackModel& model);

/// psi += credit * rate * (f - FB) * theta / |theta|^2 for binary theta.
/// Neutral events are ignored. Returns the residual f - FB before the update.
double evaluator_update(FeedbackModel& model, const FeedbackEvent& event, std::span<const std::uint32_t> features,
                        double credit_weight);

/// Discretized reaction-delay mass RD[i], i = 0..horizon-1: the probability
/// that feedback arriving now concerns the action i steps ago. Parameters are
/// in steps.
class DelayDistribution {
 public:
  enum class Kind { kDelta, kUniform, kGamma };

  static DelayDistribution delta(double delay_steps, int horizon = 50);
  /// Continuous uniform delay on [min_steps, max_steps).
  static DelayDistribution uniform(double min_steps, double max_steps, int horizon = 50);
  static DelayDistribution gamma(double shape, double scale, int horizon = 50);

  Kind kind() const { return kind_; }
  int horizon() const { return horizon_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  double mean() const;
  /// Normalized over the horizon; sums to 1.
  const std::vector<double>& weights() const { return weights_; }
  /// Continuous delay in steps, for simulated teachers.
  double sample(std::mt19937_64& rng) const;

 private:
  DelayDistribution(Kind kind, double a, double b, int horizon);

  Kind kind_;
  double a_;
  double b_;
  int horizon_;
  std::vector<double> weights_;
};

struct BufferedTuple {
  double time = 0.0;
  Observation obs;
  double action = 0.0;
  FeatureSet features;
};

/// Ring of the most recent state-action tuples, oldest first.
class FlagBuffer {
 public:
  explicit FlagBuffer(std::size_t capacity);

  void push(BufferedTuple tuple);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const BufferedTuple& operator[](std::size_t i) const { return items_[i]; }
  void clear() { items_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<BufferedTuple> items_;
};

struct Credit {
  const BufferedTuple* tuple;
  double weight;
};

/// Splits one event over the buffered tuples by reaction-delay mass,
/// renormalized over the tuples present. Empty when no present tuple carries
/// mass. Throws kEmptyBuffer.
std::vector<Credit> distribute_feedback(const FlagBuffer& buffer, const FeedbackEvent& event,
                                        const DelayDistribution& delay, double step_period);

struct SupervisedConfig {
  double k = 0.2;
  double supervised_rate = 0.1;

  void validate() const;
};

/// e = f * k * credit.
double supervision_error(const FeedbackEvent& event, const SupervisedConfig& cfg, double credit_weight);

/// SARSA: Q(O,A) moves by exactly supervised_rate * e.
void supervised_correction(SarsaAgent& agent, std::span<const std::uint32_t> features, const FeedbackEvent& event,
                           const SupervisedConfig& cfg, double credit_weight);

/// A3C: adds -supervised_rate * e * d log pi(A|O)/d theta to the actor's
/// descent accumulator, so a descent step raises log pi for approved actions.
/// pi is the executing policy (Gaussian clamped to the action range), so an
/// action at a bound is scored by its tail mass.
void supervised_correction(const MlpParams& actor, std::span<const double> input, double action,
                           const FeedbackEvent& event, const SupervisedConfig& cfg, double credit_weight,
                           const A3cConfig& a3c, GradientSet& d_actor);

/// The per-session feedback blocks: flag buffer, delay model, predictor and
/// evaluator, plus the supervised-correction scale.
class FeedbackLayer {
 public:
  FeedbackLayer(const FeatureMap& features, FeedbackModel model, DelayDistribution delay, SupervisedConfig supervised,
                double step_period);

  /// Buffers (O, A) at `time`.
  void record(double time, const Observation& obs, double action);

  /// Applies the evaluator update then calls correct(tuple, event, credit)
  /// for every credited tuple of every non-neutral event. Returns the number
  /// of non-neutral events.
  template <typename Correct>
  int process(std::span<const FeedbackEvent> events, Correct&& correct) {
    int applied = 0;
    for (const auto& ev : events) {
      if (ev.value == 0 || buffer_.empty()) continue;
      ++applied;
      for (const auto& c : distribute_feedback(buffer_, ev, delay_, step_period_)) {
        evaluator_update(model_, ev, c.tuple->features, c.weight);
        correct(*c.tuple, ev, c.weight);
      }
    }
    return applied;
  }

  FeedbackPrediction predict(const Observation& obs, double action) const;

  const FeedbackModel& model() const { return model_; }
  FeedbackModel& model() { return model_; }
  const FlagBuffer& buffer() const { return buffer_; }
  const DelayDistribution& delay() const { return delay_; }
  const SupervisedConfig& supervised() const { return supervised_; }
  const FeatureMap& features() const { return *features_; }
  double step_period() const { return step_period_; }

 private:
  const FeatureMap* features_;
  FeedbackModel model_;
  DelayDistribution delay_;
  SupervisedConfig supervised_;
  double step_period_;
  FlagBuffer buffer_;
  mutable FeatureSet scratch_;
};

}  // namespace trl
