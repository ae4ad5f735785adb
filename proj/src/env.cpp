#include "trl/env.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "trl/errors.hpp"

namespace trl {

std::string_view to_string(EnvId id) {
  switch (id) {
    case EnvId::kCartPole: return "cartpole-continuous";
    case EnvId::kMountainCar: return "mountaincar-continuous";
  }
  return "unknown";
}

EnvId parse_env_id(std::string_view name) {
  if (name == "cartpole-continuous") return EnvId::kCartPole;
  if (name == "mountaincar-continuous") return EnvId::kMountainCar;
  throw Error(ErrorCode::kInvalidConfig, "unknown environment id '" + std::string(name) + "'");
}

EnvSpec default_spec(EnvId id) {
  EnvSpec spec{};
  spec.id = id;
  if (id == EnvId::kCartPole) {
    spec.obs_dim = 4;
    spec.max_steps_per_episode = 500;
    spec.obs_low = {-CartPole::kXThreshold, -3.0, -CartPole::kThetaThreshold, -3.5};
    spec.obs_high = {CartPole::kXThreshold, 3.0, CartPole::kThetaThreshold, 3.5};
  } else {
    spec.obs_dim = 2;
    spec.max_steps_per_episode = 999;
    spec.obs_low = {MountainCar::kMinPosition, -MountainCar::kMaxSpeed, 0.0, 0.0};
    spec.obs_high = {MountainCar::kMaxPosition, MountainCar::kMaxSpeed, 0.0, 0.0};
  }
  return spec;
}

std::unique_ptr<Environment> make_env(const EnvSpec& spec) {
  if (spec.id == EnvId::kCartPole) return std::make_unique<CartPole>(spec);
  return std::make_unique<MountainCar>(spec);
}

std::unique_ptr<Environment> make_env(EnvId id) { return make_env(default_spec(id)); }

namespace {

void check_dim(const Observation& obs, std::size_t dim) {
  if (obs.dim != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "observation has " + std::to_string(obs.dim) + " values, expected " + std::to_string(dim));
  }
}

}  // namespace

CartPole::CartPole(EnvSpec spec) : spec_(spec) { state_.dim = 4; }

Observation CartPole::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(-0.05, 0.05);
  state_.dim = 4;
  for (std::size_t i = 0; i < 4; ++i) state_[i] = start(rng);
  steps_ = 0;
  finished_ = false;
  return state_;
}

void CartPole::set_state(const Observation& obs) {
  check_dim(obs, 4);
  state_ = obs;
  finished_ = false;
}

StepResult CartPole::step(double action) {
  if (finished_) throw Error(ErrorCode::kStepAfterTerminal, "cart-pole episode already finished");
  const double force = kForceMag * clamp_action(action);
  double x = state_[0], x_dot = state_[1], theta = state_[2], theta_dot = state_[3];

  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

  x += kTau * x_dot;
  x_dot += kTau * x_acc;
  theta += kTau * theta_dot;
  theta_dot += kTau * theta_acc;
  state_.data = {x, x_dot, theta, theta_dot};
  ++steps_;

  StepResult out;
  out.next_obs = state_;
  out.terminal = std::abs(x) > kXThreshold || std::abs(theta) > kThetaThreshold;
  out.reward = out.terminal ? 0.0 : 1.0;
  out.truncated = !out.terminal && steps_ >= spec_.max_steps_per_episode;
  finished_ = out.done();
  return out;
}

MountainCar::MountainCar(EnvSpec spec) : spec_(spec) { state_.dim = 2; }

Observation MountainCar::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(-0.6, -0.4);
  state_.dim = 2;
  state_[0] = start(rng);
  state_[1] = 0.0;
  steps_ = 0;
  finished_ = false;
  return state_;
}

void MountainCar::set_state(const Observation& obs) {
  check_dim(obs, 2);
  state_ = obs;
  finished_ = false;
}

StepResult MountainCar::step(double action) {
  if (finished_) throw Error(ErrorCode::kStepAfterTerminal, "mountain-car episode already finished");
  double position = state_[0];
  double velocity = state_[1];

  velocity += kPower * clamp_action(action) - kGravityTerm * std::cos(3.0 * position);
  velocity = std::clamp(velocity, -kMaxSpeed, kMaxSpeed);
  position += velocity;
  position = std::clamp(position, kMinPosition, kMaxPosition);
  if (position == kMinPosition && velocity < 0.0) velocity = 0.0;

  state_[0] = position;
  state_[1] = velocity;
  ++steps_;

  StepResult out;
  out.next_obs = state_;
  out.reward = -1.0;
  out.terminal = position >= kGoalPosition;
  out.truncated = !out.terminal && steps_ >= spec_.max_steps_per_episode;
  finished_ = out.done();
  return out;
}

}  // namespace trl
