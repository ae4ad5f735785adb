#include "trl/a3c.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

#include "trl/errors.hpp"

namespace trl {
namespace {

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return s;
}

void descend(std::vector<double>& params, std::vector<double>& sq, const GradientSet& grad, double lr,
             const A3cConfig& cfg) {
  double scale = 1.0;
  if (cfg.max_grad_norm > 0.0) {
    const double norm = std::sqrt(squared_norm(grad.values));
    if (norm > cfg.max_grad_norm) scale = cfg.max_grad_norm / norm;
  }
  const std::size_t n = params.size();
  if (cfg.optimizer == Optimizer::kSgd) {
    for (std::size_t i = 0; i < n; ++i) params[i] -= lr * scale * grad.values[i];
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double g = scale * grad.values[i];
    sq[i] = cfg.rms_decay * sq[i] + (1.0 - cfg.rms_decay) * g * g;
    params[i] -= lr * g / std::sqrt(sq[i] + cfg.rms_epsilon);
  }
}

std::vector<std::size_t> net_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

void A3cConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, "a3c." + msg); };
  if (num_workers < 1) fail("num_workers must be >= 1");
  if (rollout_length < 1) fail("rollout_length must be >= 1");
  if (!(discount >= 0.0 && discount <= 1.0)) fail("discount must lie in [0, 1]");
  if (!(actor_lr > 0.0)) fail("actor_lr must be > 0");
  if (!(critic_lr > 0.0)) fail("critic_lr must be > 0");
  if (entropy_coef < 0.0) fail("entropy_coef must be >= 0");
  if (max_global_steps < 1) fail("max_global_steps must be >= 1");
  if (hidden.empty()) fail("hidden must list at least one layer");
  for (const auto h : hidden) {
    if (h == 0) fail("hidden layer sizes must be positive");
  }
  if (!(log_std_min < log_std_max)) fail("log_std_min must be < log_std_max");
  if (!(rms_decay >= 0.0 && rms_decay < 1.0)) fail("rms_decay must lie in [0, 1)");
  if (!(rms_epsilon > 0.0)) fail("rms_epsilon must be > 0");
  if (max_grad_norm < 0.0) fail("max_grad_norm must be >= 0");
  if (!(reward_scale > 0.0)) fail("reward_scale must be > 0");
  if (convergence_window < 1) fail("convergence_window must be >= 1");
}

double GaussianHead::stddev() const { return std::exp(log_std); }

GaussianHead gaussian_head(std::span<const double> actor_output, const A3cConfig& cfg) {
  GaussianHead head;
  head.mean = actor_output[0];
  const double raw = actor_output[1] + cfg.init_log_std;
  head.log_std = std::clamp(raw, cfg.log_std_min, cfg.log_std_max);
  head.log_std_clamped = raw < cfg.log_std_min || raw > cfg.log_std_max;
  return head;
}

double gaussian_log_prob(const GaussianHead& head, double action) {
  const double z = (action - head.mean) / head.stddev();
  return -0.5 * z * z - head.log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

double gaussian_entropy(const GaussianHead& head) {
  return head.log_std + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

std::vector<double> policy_input(const EnvSpec& spec, const Observation& obs) {
  std::vector<double> in(spec.obs_dim);
  for (std::size_t i = 0; i < spec.obs_dim; ++i) {
    const double mid = 0.5 * (spec.obs_high[i] + spec.obs_low[i]);
    const double half = 0.5 * (spec.obs_high[i] - spec.obs_low[i]);
    in[i] = (obs[i] - mid) / half;
  }
  return in;
}

void add_log_prob_gradient(const MlpParams& actor, std::span<const double> input, double action, double scale,
                           const A3cConfig& cfg, GradientSet& grads) {
  ForwardCache cache;
  mlp_forward(actor, input, cache);
  const GaussianHead head = gaussian_head(cache.output(), cfg);
  const double var = head.stddev() * head.stddev();
  const double diff = action - head.mean;
  const double d_mean = diff / var;
  const double d_log_std = head.log_std_clamped ? 0.0 : diff * diff / var - 1.0;
  const double cot[2] = {scale * d_mean, scale * d_log_std};
  mlp_backward_accumulate(actor, cache, cot, grads);
}

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log Q(z), Q the standard normal upper tail.
double log_upper_tail(double z) {
  const double q = 0.5 * std::erfc(z / std::numbers::sqrt2);
  if (q > 0.0) return std::log(q);
  return -0.5 * z * z - kLogSqrt2Pi - std::log(z);
}

// phi(z) / Q(z).
double inverse_mills(double z) {
  const double q = 0.5 * std::erfc(z / std::numbers::sqrt2);
  if (q > 1e-300) return std::exp(-0.5 * z * z - kLogSqrt2Pi) / q;
  return z + 1.0 / z;
}

}  // namespace

double executed_log_prob(const GaussianHead& head, double action) {
  const double sigma = head.stddev();
  if (action >= 1.0) return log_upper_tail((1.0 - head.mean) / sigma);
  if (action <= -1.0) return log_upper_tail((1.0 + head.mean) / sigma);
  return gaussian_log_prob(head, action);
}

void add_executed_log_prob_gradient(const MlpParams& actor, std::span<const double> input, double action,
                                    double scale, const A3cConfig& cfg, GradientSet& grads) {
  if (action > -1.0 && action < 1.0) {
    add_log_prob_gradient(actor, input, action, scale, cfg, grads);
    return;
  }
  ForwardCache cache;
  mlp_forward(actor, input, cache);
  const GaussianHead head = gaussian_head(cache.output(), cfg);
  const double sigma = head.stddev();
  // Distance from the mean to the bound, in stddevs, measured into the tail.
  const double sign = action >= 1.0 ? 1.0 : -1.0;
  const double z = (1.0 - sign * head.mean) / sigma;
  const double m = inverse_mills(z);
  const double d_mean = sign * m / sigma;
  const double d_log_std = head.log_std_clamped ? 0.0 : m * z;
  const double cot[2] = {scale * d_mean, scale * d_log_std};
  mlp_backward_accumulate(actor, cache, cot, grads);
}

void RolloutBuffer::compute_returns(double discount) {
  returns.assign(steps.size(), 0.0);
  double g = bootstrap_value;
  for (std::size_t i = steps.size(); i-- > 0;) {
    g = steps[i].reward + discount * g;
    returns[i] = g;
  }
}

A3cLosses a3c_losses(const MlpParams& actor, const MlpParams& critic, const RolloutBuffer& rollout,
                     const A3cConfig& cfg) {
  A3cLosses losses;
  for (std::size_t t = 0; t < rollout.steps.size(); ++t) {
    const auto& s = rollout.steps[t];
    const double v = mlp_forward(critic, s.input)[0];
    const double adv = rollout.returns[t] - v;
    const GaussianHead head = gaussian_head(mlp_forward(actor, s.input), cfg);
    losses.critic += adv * adv;
    losses.actor += -gaussian_log_prob(head, s.raw_action) * adv - cfg.entropy_coef * gaussian_entropy(head);
  }
  return losses;
}

A3cGradients a3c_gradients(const MlpParams& actor, const MlpParams& critic, const RolloutBuffer& rollout,
                           const A3cConfig& cfg) {
  A3cGradients grads{GradientSet(actor.layout), GradientSet(critic.layout)};
  ForwardCache actor_cache;
  ForwardCache critic_cache;
  for (std::size_t t = 0; t < rollout.steps.size(); ++t) {
    const auto& s = rollout.steps[t];
    mlp_forward(critic, s.input, critic_cache);
    const double v = critic_cache.output()[0];
    const double adv = rollout.returns[t] - v;
    const double critic_cot = -2.0 * adv;
    mlp_backward_accumulate(critic, critic_cache, std::span<const double>(&critic_cot, 1), grads.critic);

    mlp_forward(actor, s.input, actor_cache);
    const GaussianHead head = gaussian_head(actor_cache.output(), cfg);
    const double var = head.stddev() * head.stddev();
    const double diff = s.raw_action - head.mean;
    const double d_mean = -adv * diff / var;
    const double d_log_std = head.log_std_clamped ? 0.0 : -adv * (diff * diff / var - 1.0) - cfg.entropy_coef;
    const double cot[2] = {d_mean, d_log_std};
    mlp_backward_accumulate(actor, actor_cache, cot, grads.actor);
  }
  if (!grads.actor.all_finite() || !grads.critic.all_finite()) {
    throw Error(ErrorCode::kNonFiniteGradient, "A3C gradient contains non-finite entries");
  }
  return grads;
}

A3cGlobals::A3cGlobals(const EnvSpec& spec, const A3cConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(mix_seed(seed, 0xa3c));
  actor_ = make_mlp(net_sizes(spec.obs_dim, cfg.hidden, 2), rng, 0.1);
  critic_ = make_mlp(net_sizes(spec.obs_dim, cfg.hidden, 1), rng, 1.0);
  actor_sq_.assign(actor_.values.size(), 0.0);
  critic_sq_.assign(critic_.values.size(), 0.0);
}

A3cGlobals::A3cGlobals(MlpParams actor, MlpParams critic)
    : actor_(std::move(actor)),
      critic_(std::move(critic)),
      actor_sq_(actor_.values.size(), 0.0),
      critic_sq_(critic_.values.size(), 0.0) {}

A3cGlobals::Snapshot A3cGlobals::snapshot() const {
  std::shared_lock lock(mutex_);
  return Snapshot{actor_, critic_, steps_.load()};
}

void A3cGlobals::apply(const A3cGradients& grads, std::int64_t steps, const A3cConfig& cfg) {
  std::unique_lock lock(mutex_);
  if (!(grads.actor.layout == actor_.layout) || !(grads.critic.layout == critic_.layout) ||
      grads.actor.values.size() != actor_.values.size() || grads.critic.values.size() != critic_.values.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient shapes differ from the global parameters");
  }
  descend(actor_.values, actor_sq_, grads.actor, cfg.actor_lr, cfg);
  descend(critic_.values, critic_sq_, grads.critic, cfg.critic_lr, cfg);
  steps_.fetch_add(steps);
}

void a3c_apply(A3cGlobals& globals, const A3cGradients& grads, std::int64_t steps, const A3cConfig& cfg) {
  globals.apply(grads, steps, cfg);
}

A3cWorker::A3cWorker(int worker_id, const EnvSpec& env_spec, std::uint64_t run_seed)
    : id(worker_id),
      spec(env_spec),
      env(make_env(env_spec)),
      rng(mix_seed(run_seed, 1000 + static_cast<std::uint64_t>(worker_id))),
      seed(mix_seed(run_seed, 2000 + static_cast<std::uint64_t>(worker_id))) {}

RolloutResult a3c_worker_rollout(const A3cGlobals& globals, A3cWorker& w, const A3cConfig& cfg, A3cHooks* hooks) {
  const A3cGlobals::Snapshot snap = globals.snapshot();
  RolloutResult result;
  GradientSet d_actor(snap.actor.layout);
  auto& buf = result.buffer;
  buf.steps.reserve(static_cast<std::size_t>(cfg.rollout_length));

  bool ended_terminal = false;
  for (int t = 0; t < cfg.rollout_length; ++t) {
    if (!w.in_episode) {
      ++w.episode;
      w.obs = w.env->reset(mix_seed(w.seed, static_cast<std::uint64_t>(w.episode)));
      w.in_episode = true;
      w.episode_steps = 0;
      w.cum_reward = 0.0;
      w.episode_started_ms = now_ms();
      if (hooks) hooks->on_episode_start(w.episode);
    }
    RolloutStep step;
    step.input = policy_input(w.spec, w.obs);
    mlp_forward(snap.actor, step.input, step.actor_cache);
    mlp_forward(snap.critic, step.input, step.critic_cache);
    const GaussianHead head = gaussian_head(step.actor_cache.output(), cfg);
    std::normal_distribution<double> noise(0.0, 1.0);
    step.raw_action = head.mean + head.stddev() * noise(w.rng);
    step.action = clamp_action(step.raw_action);
    step.value = step.critic_cache.output()[0];

    const Observation obs = w.obs;
    const StepResult res = w.env->step(step.action);
    ++w.episode_steps;
    ++w.steps_taken;
    w.cum_reward += res.reward;
    double learn_reward = res.reward;
    if (hooks) {
      const StepContext ctx{w.id, w.episode, w.episode_steps, w.steps_taken, obs, step.action,
                            res.reward, w.cum_reward, res.next_obs, res.terminal, res.truncated};
      learn_reward += hooks->on_step(ctx, snap.actor, d_actor);
    }
    step.reward = cfg.reward_scale * learn_reward;
    buf.steps.push_back(std::move(step));
    w.obs = res.next_obs;

    if (res.done()) {
      FinishedEpisode fin;
      fin.reward = w.cum_reward;
      fin.steps = w.episode_steps;
      fin.ms = now_ms() - w.episode_started_ms;
      if (hooks) fin.feedback_count = hooks->take_feedback_count();
      result.finished.push_back(fin);
      w.in_episode = false;
      ended_terminal = res.terminal;
      break;
    }
    if (hooks && hooks->stop_requested()) break;
  }

  if (ended_terminal) {
    buf.bootstrap_value = 0.0;
  } else {
    // Truncated episodes and partial rollouts bootstrap from V(s_next).
    buf.bootstrap_value = mlp_forward(snap.critic, policy_input(w.spec, w.obs))[0];
  }
  buf.compute_returns(cfg.discount);
  result.steps = static_cast<std::int64_t>(buf.steps.size());
  result.grads = a3c_gradients(snap.actor, snap.critic, buf, cfg);
  for (std::size_t i = 0; i < d_actor.values.size(); ++i) result.grads.actor.values[i] += d_actor.values[i];
  if (!result.grads.actor.all_finite()) {
    throw Error(ErrorCode::kNonFiniteGradient, "feedback correction produced a non-finite actor gradient");
  }
  return result;
}

std::vector<EpisodeMetrics> run_a3c(const EnvSpec& spec, A3cGlobals& globals, const A3cConfig& cfg,
                                    const A3cRunOptions& opts, A3cHooks* hooks) {
  cfg.validate();
  std::vector<EpisodeMetrics> metrics;
  metrics.reserve(static_cast<std::size_t>(std::max(opts.episodes, 0)));
  if (opts.episodes <= 0) return metrics;

  std::mutex metrics_mutex;
  std::atomic<bool> done{false};

  auto record = [&](const std::vector<FinishedEpisode>& finished) {
    std::lock_guard lock(metrics_mutex);
    for (const auto& f : finished) {
      if (static_cast<int>(metrics.size()) >= opts.episodes) break;
      EpisodeMetrics m;
      m.episode = static_cast<int>(metrics.size()) + 1;
      m.reward = f.reward;
      m.steps = f.steps;
      m.feedback_count = f.feedback_count;
      m.ms = opts.record_wall_clock ? f.ms : 0.0;
      metrics.push_back(m);
    }
    if (static_cast<int>(metrics.size()) >= opts.episodes) done = true;
    if (cfg.convergence_threshold && metrics.size() >= static_cast<std::size_t>(cfg.convergence_window) &&
        moving_average(metrics, cfg.convergence_window) >= *cfg.convergence_threshold) {
      done = true;
    }
  };

  std::exception_ptr failure;
  auto worker_loop = [&](int id) {
    try {
      A3cWorker worker(id, spec, opts.seed);
      A3cHooks* own_hooks = id == 0 ? hooks : nullptr;
      while (!done.load()) {
        if (globals.global_steps() >= cfg.max_global_steps) break;
        if (own_hooks && own_hooks->stop_requested()) break;
        RolloutResult r = a3c_worker_rollout(globals, worker, cfg, own_hooks);
        a3c_apply(globals, r.grads, r.steps, cfg);
        if (!r.finished.empty()) record(r.finished);
      }
    } catch (...) {
      std::lock_guard lock(metrics_mutex);
      if (!failure) failure = std::current_exception();
    }
    done = true;
  };

  if (cfg.num_workers == 1) {
    worker_loop(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(cfg.num_workers));
    for (int id = 0; id < cfg.num_workers; ++id) threads.emplace_back(worker_loop, id);
  }
  if (failure) std::rethrow_exception(failure);
  return metrics;
}

}  // namespace trl
