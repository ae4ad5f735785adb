#include "trl/sarsa.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "trl/errors.hpp"

namespace trl {
namespace {

void require_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, std::string("sarsa.") + name + " must lie in [0, 1]");
  }
}

}  // namespace

double EpsilonSchedule::at(int episode_index) const {
  const double e = initial * std::pow(decay, static_cast<double>(episode_index));
  return e < minimum ? minimum : e;
}

void SarsaConfig::validate() const {
  require_rate(alpha, "alpha");
  require_rate(discount, "discount");
  require_rate(lambda, "lambda");
  require_rate(epsilon.initial, "epsilon.initial");
  require_rate(epsilon.decay, "epsilon.decay");
  require_rate(epsilon.minimum, "epsilon.minimum");
  if (action_grid < 2) throw Error(ErrorCode::kInvalidConfig, "sarsa.action_grid must be >= 2");
  if (trace_cutoff < 0.0) throw Error(ErrorCode::kInvalidConfig, "sarsa.trace_cutoff must be >= 0");
  if (convergence_window < 1) throw Error(ErrorCode::kInvalidConfig, "sarsa.convergence_window must be >= 1");
  if (!std::isfinite(initial_q)) throw Error(ErrorCode::kInvalidConfig, "sarsa.initial_q must be finite");
}

std::vector<double> action_levels(int grid) {
  std::vector<double> levels(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) levels[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (grid - 1);
  return levels;
}

SarsaAgent::SarsaAgent(const FeatureMap& features, const SarsaConfig& cfg)
    : features_(&features),
      levels_(action_levels(cfg.action_grid)),
      weights_(features.size(), cfg.initial_q / static_cast<double>(features.active_count())),
      traces_(features.size(), 0.0),
      is_active_(features.size(), 0) {}

double SarsaAgent::q(std::span<const std::uint32_t> features) const { return linear_eval(weights_, features); }

double SarsaAgent::q(const Observation& obs, double action) const {
  features_->encode(obs, action, scratch_);
  return linear_eval(weights_, scratch_);
}

void SarsaAgent::q_all(const Observation& obs, std::vector<double>& out) const {
  out.resize(levels_.size());
  for (std::size_t i = 0; i < levels_.size(); ++i) out[i] = q(obs, levels_[i]);
}

void SarsaAgent::reset_traces() {
  for (const auto i : active_) {
    traces_[i] = 0.0;
    is_active_[i] = 0;
  }
  active_.clear();
}

void SarsaAgent::accumulate_trace(std::span<const std::uint32_t> features) {
  for (const auto i : features) {
    traces_[i] += 1.0;
    if (!is_active_[i]) {
      is_active_[i] = 1;
      active_.push_back(i);
    }
  }
}

void SarsaAgent::apply_traces(double step, double decay, double cutoff) {
  std::size_t kept = 0;
  for (std::size_t k = 0; k < active_.size(); ++k) {
    const auto i = active_[k];
    weights_[i] += step * traces_[i];
    traces_[i] *= decay;
    if (cutoff > 0.0 && std::abs(traces_[i]) < cutoff) {
      traces_[i] = 0.0;
      is_active_[i] = 0;
    } else {
      active_[kept++] = i;
    }
  }
  active_.resize(kept);
}

int greedy_bin(const SarsaAgent& agent, const Observation& obs) {
  const auto& levels = agent.levels();
  int best = 0;
  double best_q = agent.q(obs, levels[0]);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const double v = agent.q(obs, levels[i]);
    if (v > best_q) {
      best_q = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

ActionChoice select_action_sarsa(const SarsaAgent& agent, const Observation& obs, double epsilon,
                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& levels = agent.levels();
  const int greedy = greedy_bin(agent, obs);
  if (unit(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(levels.size()) - 1);
    const int bin = pick(rng);
    return {bin, levels[static_cast<std::size_t>(bin)], bin == greedy};
  }
  return {greedy, levels[static_cast<std::size_t>(greedy)], true};
}

namespace {

double td_step(SarsaAgent& agent, const Transition& t, const SarsaConfig& cfg, double next_value) {
  const auto& map = agent.features();
  const FeatureSet features = map.encode(t.obs, t.action);
  const double delta = t.reward + cfg.discount * next_value - agent.q(features);
  if (!std::isfinite(delta)) throw Error(ErrorCode::kNonFiniteUpdate, "TD error is not finite");
  agent.accumulate_trace(features);
  const double step = cfg.alpha * delta / static_cast<double>(map.active_count());
  agent.apply_traces(step, cfg.discount * cfg.lambda, cfg.trace_cutoff);
  for (const auto i : agent.active_traces()) {
    if (!std::isfinite(agent.weights()[i])) throw Error(ErrorCode::kNonFiniteUpdate, "weight became non-finite");
  }
  return delta;
}

}  // namespace

double sarsa_update(SarsaAgent& agent, const Transition& t, const SarsaConfig& cfg) {
  const double next = t.terminal ? 0.0 : agent.q(t.next_obs, t.next_action);
  return td_step(agent, t, cfg, next);
}

double q_learning_update(SarsaAgent& agent, const Transition& t, const SarsaConfig& cfg) {
  double next = 0.0;
  if (!t.terminal) {
    const auto& levels = agent.levels();
    next = agent.q(t.next_obs, levels[0]);
    for (std::size_t i = 1; i < levels.size(); ++i) next = std::max(next, agent.q(t.next_obs, levels[i]));
  }
  const double delta = td_step(agent, t, cfg, next);
  if (!t.next_greedy) agent.reset_traces();
  return delta;
}

std::vector<EpisodeMetrics> run_sarsa(Environment& env, SarsaAgent& agent, const SarsaConfig& cfg,
                                      const SarsaRunOptions& opts, SarsaHooks* hooks) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  std::mt19937_64 rng(mix_seed(opts.seed, 0x5a55a));
  std::vector<EpisodeMetrics> metrics;
  metrics.reserve(static_cast<std::size_t>(opts.episodes));
  std::int64_t global_step = 0;

  for (int ep = 1; ep <= opts.episodes; ++ep) {
    if (hooks && hooks->stop_requested()) break;
    const auto started = Clock::now();
    const double epsilon = cfg.epsilon.at(ep - 1);
    Observation obs = env.reset(mix_seed(opts.seed, static_cast<std::uint64_t>(ep)));
    agent.reset_traces();
    if (hooks) hooks->on_episode_start(ep);

    ActionChoice choice = select_action_sarsa(agent, obs, epsilon, rng);
    EpisodeMetrics m;
    m.episode = ep;
    bool stopped = false;
    while (true) {
      const StepResult res = env.step(choice.action);
      ++global_step;
      m.reward += res.reward;
      ++m.steps;

      ActionChoice next{};
      if (!res.terminal) next = select_action_sarsa(agent, res.next_obs, epsilon, rng);

      double learn_reward = res.reward;
      if (hooks) {
        const StepContext ctx{0, ep, m.steps, global_step, obs, choice.action, res.reward, m.reward,
                              res.next_obs, res.terminal, res.truncated};
        learn_reward += hooks->on_step(ctx, agent);
      }

      const Transition t{obs, choice.action, learn_reward, res.next_obs, next.action, res.terminal, next.greedy};
      if (opts.target == TdTarget::kSarsa) {
        sarsa_update(agent, t, cfg);
      } else {
        q_learning_update(agent, t, cfg);
      }

      if (res.done()) break;
      if (hooks && hooks->stop_requested()) {
        stopped = true;
        break;
      }
      obs = res.next_obs;
      choice = next;
    }
    if (hooks) m.feedback_count = hooks->take_feedback_count();
    if (opts.record_wall_clock) {
      m.ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
    }
    if (stopped) break;
    metrics.push_back(m);
    if (cfg.convergence_threshold && metrics.size() >= static_cast<std::size_t>(cfg.convergence_window) &&
        moving_average(metrics, cfg.convergence_window) >= *cfg.convergence_threshold) {
      break;
    }
  }
  return metrics;
}

}  // namespace trl
