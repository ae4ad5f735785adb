#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace trl {

inline constexpr std::size_t kMaxObsDim = 4;

/// Fixed-capacity observation vector. Cart-pole uses four entries
/// (x, x_dot, theta, theta_dot), mountain car two (position, velocity).
struct Observation {
  std::array<double, kMaxObsDim> data{};
  std::size_t dim = 0;

  std::span<const double> values() const { return {data.data(), dim}; }
  std::span<double> values() { return {data.data(), dim}; }
  double operator[](std::size_t i) const { return data[i]; }
  double& operator[](std::size_t i) { return data[i]; }

  friend bool operator==(const Observation& a, const Observation& b) {
    if (a.dim != b.dim) return false;
    for (std::size_t i = 0; i < a.dim; ++i) {
      if (a.data[i] != b.data[i]) return false;
    }
    return true;
  }
};

/// Normalized force in [-1, 1].
inline double clamp_action(double a) { return a < -1.0 ? -1.0 : (a > 1.0 ? 1.0 : a); }

struct StepResult {
  Observation next_obs;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;

  bool done() const { return terminal || truncated; }
};

enum class EnvId { kCartPole, kMountainCar };

std::string_view to_string(EnvId id);
/// Accepts "cartpole-continuous" and "mountaincar-continuous".
EnvId parse_env_id(std::string_view name);

struct EnvSpec {
  EnvId id;
  std::size_t obs_dim;
  int max_steps_per_episode;
  // Nominal observation range, used for tile-coder bounds and network input
  // scaling. Not a termination bound.
  std::array<double, kMaxObsDim> obs_low{};
  std::array<double, kMaxObsDim> obs_high{};
};

EnvSpec default_spec(EnvId id);

class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  /// Draws the start state from the standard small-perturbation range.
  virtual Observation reset(std::uint64_t seed) = 0;
  /// Throws Error(kStepAfterTerminal) once the episode has ended.
  virtual StepResult step(double action) = 0;
  /// Overwrites the physical state (tests and fixtures).
  virtual void set_state(const Observation& obs) = 0;
  virtual Observation state() const = 0;
  virtual int steps_taken() const = 0;
};

std::unique_ptr<Environment> make_env(EnvId id);
std::unique_ptr<Environment> make_env(const EnvSpec& spec);

class CartPole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kMassPole * kHalfLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  static constexpr double kXThreshold = 2.4;

  explicit CartPole(EnvSpec spec);

  const EnvSpec& spec() const override { return spec_; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(double action) override;
  void set_state(const Observation& obs) override;
  Observation state() const override { return state_; }
  int steps_taken() const override { return steps_; }

 private:
  EnvSpec spec_;
  Observation state_;
  int steps_ = 0;
  bool finished_ = false;
};

class MountainCar final : public Environment {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPosition = 0.45;
  static constexpr double kPower = 0.0015;
  static constexpr double kGravityTerm = 0.0025;

  explicit MountainCar(EnvSpec spec);

  const EnvSpec& spec() const override { return spec_; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(double action) override;
  void set_state(const Observation& obs) override;
  Observation state() const override { return state_; }
  int steps_taken() const override { return steps_; }

 private:
  EnvSpec spec_;
  Observation state_;
  int steps_ = 0;
  bool finished_ = false;
};

}  // namespace trl
