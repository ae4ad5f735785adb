#include "trl/feedback.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <string>

#include "trl/errors.hpp"

namespace trl {

void FeedbackModel::validate() const {
  if (!(bias_rate > 0.0)) throw Error(ErrorCode::kInvalidConfig, "feedback_model.bias_rate must be > 0");
  if (!(rate_cap >= bias_rate)) throw Error(ErrorCode::kInvalidConfig, "feedback_model.rate_cap must be >= bias_rate");
}

FeedbackPrediction fb_predict(const FeedbackModel& model, std::span<const std::uint32_t> features) {
  const double raw = linear_eval(model.psi, features);
  return {raw, std::clamp(raw, -1.0, 1.0)};
}

double adaptive_rate(double fb_value, const FeedbackModel& model) {
  return std::min(std::abs(fb_value) + model.bias_rate, model.rate_cap);
}

double evaluator_update(FeedbackModel& model, const FeedbackEvent& event, std::span<const std::uint32_t> features,
                        double credit_weight) {
  if (event.value == 0 || features.empty()) return 0.0;
  const double prediction = fb_predict(model, features).raw;
  const double residual = static_cast<double>(event.value) - prediction;
  const double rate = adaptive_rate(prediction, model);
  const double step = credit_weight * rate * residual / static_cast<double>(features.size());
  for (const auto i : features) model.psi[i] += step;
  return residual;
}

DelayDistribution::DelayDistribution(Kind kind, double a, double b, int horizon)
    : kind_(kind), a_(a), b_(b), horizon_(horizon) {
  if (horizon < 1) throw Error(ErrorCode::kInvalidConfig, "delay.horizon must be >= 1");
  weights_.assign(static_cast<std::size_t>(horizon), 0.0);
  switch (kind) {
    case Kind::kDelta: {
      if (!(a >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "delay.steps must be >= 0");
      const auto bin = static_cast<std::size_t>(std::floor(a));
      if (bin < weights_.size()) weights_[bin] = 1.0;
      break;
    }
    case Kind::kUniform: {
      if (!(a >= 0.0 && b >= a)) throw Error(ErrorCode::kInvalidConfig, "delay uniform needs 0 <= min <= max");
      if (a == b) {
        const auto bin = static_cast<std::size_t>(std::floor(a));
        if (bin < weights_.size()) weights_[bin] = 1.0;
        break;
      }
      for (int i = 0; i < horizon; ++i) {
        const double lo = std::max(a, static_cast<double>(i));
        const double hi = std::min(b, static_cast<double>(i + 1));
        if (hi > lo) weights_[static_cast<std::size_t>(i)] = (hi - lo) / (b - a);
      }
      break;
    }
    case Kind::kGamma: {
      if (!(a > 0.0 && b > 0.0)) throw Error(ErrorCode::kInvalidConfig, "delay gamma needs shape > 0 and scale > 0");
      double prev = 0.0;
      for (int i = 0; i < horizon; ++i) {
        const double cdf = boost::math::gamma_p(a, static_cast<double>(i + 1) / b);
        weights_[static_cast<std::size_t>(i)] = cdf - prev;
        prev = cdf;
      }
      break;
    }
  }
  double total = 0.0;
  for (const double w : weights_) total += w;
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidConfig, "delay distribution has no mass inside the horizon");
  for (double& w : weights_) w /= total;
}

DelayDistribution DelayDistribution::delta(double delay_steps, int horizon) {
  return {Kind::kDelta, delay_steps, 0.0, horizon};
}

DelayDistribution DelayDistribution::uniform(double min_steps, double max_steps, int horizon) {
  return {Kind::kUniform, min_steps, max_steps, horizon};
}

DelayDistribution DelayDistribution::gamma(double shape, double scale, int horizon) {
  return {Kind::kGamma, shape, scale, horizon};
}

double DelayDistribution::mean() const {
  switch (kind_) {
    case Kind::kDelta: return a_;
    case Kind::kUniform: return 0.5 * (a_ + b_);
    case Kind::kGamma: return a_ * b_;
  }
  return 0.0;
}

double DelayDistribution::sample(std::mt19937_64& rng) const {
  switch (kind_) {
    case Kind::kDelta: return a_;
    case Kind::kUniform: {
      if (a_ == b_) return a_;
      std::uniform_real_distribution<double> d(a_, b_);
      return d(rng);
    }
    case Kind::kGamma: {
      std::gamma_distribution<double> d(a_, b_);
      return d(rng);
    }
  }
  return 0.0;
}

FlagBuffer::FlagBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::kInvalidConfig, "flag buffer capacity must be >= 1");
}

void FlagBuffer::push(BufferedTuple tuple) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(tuple));
}

std::vector<Credit> distribute_feedback(const FlagBuffer& buffer, const FeedbackEvent& event,
                                        const DelayDistribution& delay, double step_period) {
  if (buffer.empty()) throw Error(ErrorCode::kEmptyBuffer, "no buffered state-action tuples to credit");
  constexpr double kSlack = 1e-9;
  const auto& rd = delay.weights();
  std::vector<Credit> credits;
  double total = 0.0;
  for (std::size_t k = 0; k < buffer.size(); ++k) {
    const auto& tuple = buffer[k];
    const double lag = (event.emission_time - tuple.time) / step_period;
    if (lag < -kSlack) continue;
    const auto bin = static_cast<std::size_t>(std::floor(lag + kSlack));
    if (bin >= rd.size() || rd[bin] == 0.0) continue;
    credits.push_back({&tuple, rd[bin]});
    total += rd[bin];
  }
  for (auto& c : credits) c.weight /= total;
  return credits;
}

void SupervisedConfig::validate() const {
  if (!(k > 0.0)) throw Error(ErrorCode::kInvalidConfig, "supervised.k must be > 0");
  if (!(supervised_rate >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "supervised.supervised_rate must be >= 0");
}

double supervision_error(const FeedbackEvent& event, const SupervisedConfig& cfg, double credit_weight) {
  return static_cast<double>(event.value) * cfg.k * credit_weight;
}

void supervised_correction(SarsaAgent& agent, std::span<const std::uint32_t> features, const FeedbackEvent& event,
                           const SupervisedConfig& cfg, double credit_weight) {
  if (event.value == 0 || features.empty()) return;
  const double step = cfg.supervised_rate * supervision_error(event, cfg, credit_weight) /
                      static_cast<double>(features.size());
  auto w = agent.weights();
  for (const auto i : features) {
    if (i >= w.size()) throw Error(ErrorCode::kIndexOutOfRange, "feature index beyond the Q weights");
    w[i] += step;
  }
}

void supervised_correction(const MlpParams& actor, std::span<const double> input, double action,
                           const FeedbackEvent& event, const SupervisedConfig& cfg, double credit_weight,
                           const A3cConfig& a3c, GradientSet& d_actor) {
  if (event.value == 0) return;
  const double e = supervision_error(event, cfg, credit_weight);
  add_executed_log_prob_gradient(actor, input, action, -cfg.supervised_rate * e, a3c, d_actor);
}

FeedbackLayer::FeedbackLayer(const FeatureMap& features, FeedbackModel model, DelayDistribution delay,
                             SupervisedConfig supervised, double step_period)
    : features_(&features),
      model_(std::move(model)),
      delay_(std::move(delay)),
      supervised_(supervised),
      step_period_(step_period),
      buffer_(static_cast<std::size_t>(delay_.horizon())) {
  model_.validate();
  supervised_.validate();
  if (!(step_period > 0.0)) throw Error(ErrorCode::kInvalidConfig, "step_period must be > 0");
  if (model_.psi.size() != features.size()) {
    throw Error(ErrorCode::kShapeMismatch, "feedback model length differs from the feature map size");
  }
}

void FeedbackLayer::record(double time, const Observation& obs, double action) {
  BufferedTuple tuple;
  tuple.time = time;
  tuple.obs = obs;
  tuple.action = action;
  features_->encode(obs, action, tuple.features);
  buffer_.push(std::move(tuple));
}

FeedbackPrediction FeedbackLayer::predict(const Observation& obs, double action) const {
  features_->encode(obs, action, scratch_);
  return fb_predict(model_, scratch_);
}

}  // namespace trl
