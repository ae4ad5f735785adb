#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "trl/env.hpp"
#include "trl/feedback.hpp"

namespace trl {

/// How a simulated teacher behaves: contingency (p_give), instability
/// (p_flip), reaction delay, and an optional withdrawal schedule.
struct TeacherProfile {
  double p_give = 0.3;
  double p_flip = 0.0;
  DelayDistribution delay = DelayDistribution::gamma(2.0, 15.0);
  // After this many steps p_give ramps linearly to zero over
  // withdraw_duration steps (immediately when the duration is 0).
  std::optional<std::int64_t> withdraw_after;
  std::int64_t withdraw_duration = 0;
  double tolerance = 0.25;

  void validate() const;
  double give_probability(std::int64_t step) const;
};

/// Gains of the cart-pole PD rule a = clamp(k_angle*theta + k_ang_vel*omega
/// + k_position*x + k_velocity*v).
struct PdGains {
  double angle = 10.0;
  double angular_velocity = 2.0;
  double position = 0.5;
  double velocity = 1.0;
};

/// Stands in for the teacher's task knowledge.
struct ReferencePolicy {
  EnvId env = EnvId::kCartPole;
  PdGains gains;
};

/// Cart-pole: PD rule. Mountain car: push in the direction of motion, +1 at rest.
double reference_action(const ReferencePolicy& policy, const Observation& obs);

/// Returns nothing with probability 1 - p_give; otherwise +1 when the taken
/// action is within tolerance of the reference and -1 when not, flipped with
/// probability p_flip, emitted at clock + sampled delay * step_period.
std::optional<FeedbackEvent> oracle_feedback(const TeacherProfile& profile, std::int64_t step, double taken,
                                             double reference, std::mt19937_64& rng, double clock,
                                             double step_period);

}  // namespace trl
