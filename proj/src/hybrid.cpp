#include "trl/hybrid.hpp"

#include <algorithm>
#include <utility>

#include "trl/errors.hpp"

namespace trl {

OracleFeedbackSource::OracleFeedbackSource(TeacherProfile profile, ReferencePolicy policy, std::uint64_t seed,
                                           double step_period)
    : profile_(std::move(profile)), policy_(policy), rng_(mix_seed(seed, 0x7eac)), step_period_(step_period) {
  profile_.validate();
}

void OracleFeedbackSource::observe(std::int64_t step, double time, const Observation& obs, double action) {
  const double reference = reference_action(policy_, obs);
  auto ev = oracle_feedback(profile_, step, action, reference, rng_, time, step_period_);
  if (!ev) return;
  const auto pos = std::upper_bound(pending_.begin(), pending_.end(), ev->emission_time,
                                    [](double t, const FeedbackEvent& e) { return t < e.emission_time; });
  pending_.insert(pos, *ev);
}

void OracleFeedbackSource::drain(double now, std::vector<FeedbackEvent>& out) {
  constexpr double kSlack = 1e-9;
  auto end = pending_.begin();
  while (end != pending_.end() && end->emission_time <= now + kSlack) ++end;
  out.insert(out.end(), pending_.begin(), end);
  pending_.erase(pending_.begin(), end);
}

double QueueFeedbackSource::push(int value, FeedbackOrigin origin) {
  std::lock_guard lock(mutex_);
  const double t = now_.load();
  queue_.push_back(FeedbackEvent{value, t, origin});
  return t;
}

void QueueFeedbackSource::observe(std::int64_t, double time, const Observation&, double) { now_.store(time); }

void QueueFeedbackSource::drain(double, std::vector<FeedbackEvent>& out) {
  std::lock_guard lock(mutex_);
  out.insert(out.end(), queue_.begin(), queue_.end());
  queue_.clear();
}

std::size_t QueueFeedbackSource::size() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

void QueueFeedbackSource::clear() {
  std::lock_guard lock(mutex_);
  queue_.clear();
  now_.store(0.0);
}

void FeedbackSettings::validate() const {
  supervised.validate();
  if (!(step_period > 0.0)) throw Error(ErrorCode::kInvalidConfig, "feedback.step_period must be > 0");
  if (!(bias_rate > 0.0)) throw Error(ErrorCode::kInvalidConfig, "feedback.bias_rate must be > 0");
  if (!(rate_cap >= bias_rate)) throw Error(ErrorCode::kInvalidConfig, "feedback.rate_cap must be >= bias_rate");
}

int apply_feedback_sarsa(SarsaAgent& agent, FeedbackLayer& layer, std::span<const FeedbackEvent> pending) {
  const auto& supervised = layer.supervised();
  return layer.process(pending, [&](const BufferedTuple& tuple, const FeedbackEvent& ev, double credit) {
    supervised_correction(agent, tuple.features, ev, supervised, credit);
  });
}

int apply_feedback_a3c(const MlpParams& actor, GradientSet& d_actor, FeedbackLayer& layer, const EnvSpec& spec,
                       const A3cConfig& cfg, std::span<const FeedbackEvent> pending) {
  const auto& supervised = layer.supervised();
  return layer.process(pending, [&](const BufferedTuple& tuple, const FeedbackEvent& ev, double credit) {
    const auto input = policy_input(spec, tuple.obs);
    supervised_correction(actor, input, tuple.action, ev, supervised, credit, cfg, d_actor);
  });
}

double hybrid_sarsa_step(SarsaAgent& agent, FeedbackLayer& layer, const Transition& t, double time,
                         std::span<const FeedbackEvent> pending, const SarsaConfig& cfg) {
  layer.record(time, t.obs, t.action);
  apply_feedback_sarsa(agent, layer, pending);
  return sarsa_update(agent, t, cfg);
}

int hybrid_a3c_step(const MlpParams& actor, GradientSet& d_actor, FeedbackLayer& layer, const EnvSpec& spec,
                    const A3cConfig& cfg, const Observation& obs, double action, double time,
                    std::span<const FeedbackEvent> pending) {
  layer.record(time, obs, action);
  return apply_feedback_a3c(actor, d_actor, layer, spec, cfg, pending);
}

namespace {

double shaping_bonus(const FeedbackSettings& settings, const FeedbackLayer& layer, int applied,
                     const StepContext& ctx) {
  if (!settings.predictor_shaping || applied > 0) return 0.0;
  return settings.shaping_scale * layer.predict(ctx.obs, ctx.action).clamped;
}

}  // namespace

HybridSarsaHooks::HybridSarsaHooks(FeedbackLayer& layer, FeedbackSource& source, const FeedbackSettings& settings,
                                   StepObserver* observer)
    : layer_(&layer), source_(&source), settings_(settings), observer_(observer) {
  settings_.validate();
}

double HybridSarsaHooks::on_step(const StepContext& ctx, SarsaAgent& agent) {
  if (observer_) observer_->on_step(ctx);
  const double time = static_cast<double>(ctx.global_step) * settings_.step_period;
  layer_->record(time, ctx.obs, ctx.action);
  source_->observe(ctx.global_step, time, ctx.obs, ctx.action);
  pending_.clear();
  source_->drain(time, pending_);
  const int applied = apply_feedback_sarsa(agent, *layer_, pending_);
  count_ += applied;
  return shaping_bonus(settings_, *layer_, applied, ctx);
}

int HybridSarsaHooks::take_feedback_count() { return std::exchange(count_, 0); }

HybridA3cHooks::HybridA3cHooks(FeedbackLayer& layer, FeedbackSource& source, const FeedbackSettings& settings,
                               const EnvSpec& spec, const A3cConfig& cfg, StepObserver* observer)
    : layer_(&layer), source_(&source), settings_(settings), spec_(spec), cfg_(cfg), observer_(observer) {
  settings_.validate();
}

double HybridA3cHooks::on_step(const StepContext& ctx, const MlpParams& actor, GradientSet& d_actor) {
  if (observer_) observer_->on_step(ctx);
  const double time = static_cast<double>(ctx.global_step) * settings_.step_period;
  layer_->record(time, ctx.obs, ctx.action);
  source_->observe(ctx.global_step, time, ctx.obs, ctx.action);
  pending_.clear();
  source_->drain(time, pending_);
  const int applied = apply_feedback_a3c(actor, d_actor, *layer_, spec_, cfg_, pending_);
  count_ += applied;
  return shaping_bonus(settings_, *layer_, applied, ctx);
}

int HybridA3cHooks::take_feedback_count() { return std::exchange(count_, 0); }

}  // namespace trl
