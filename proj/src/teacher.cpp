#include "trl/teacher.hpp"

#include <cmath>
#include <string>

#include "trl/errors.hpp"

namespace trl {

void TeacherProfile::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidConfig, std::string("teacher.") + name + " must lie in [0, 1]");
  };
  prob(p_give, "p_give");
  prob(p_flip, "p_flip");
  if (!(tolerance > 0.0)) throw Error(ErrorCode::kInvalidConfig, "teacher.tolerance must be > 0");
  if (withdraw_after && *withdraw_after < 0) throw Error(ErrorCode::kInvalidConfig, "teacher.withdraw_after must be >= 0");
  if (withdraw_duration < 0) throw Error(ErrorCode::kInvalidConfig, "teacher.withdraw_duration must be >= 0");
}

double TeacherProfile::give_probability(std::int64_t step) const {
  if (!withdraw_after || step < *withdraw_after) return p_give;
  if (withdraw_duration == 0) return 0.0;
  const double progress = static_cast<double>(step - *withdraw_after) / static_cast<double>(withdraw_duration);
  return progress >= 1.0 ? 0.0 : p_give * (1.0 - progress);
}

double reference_action(const ReferencePolicy& policy, const Observation& obs) {
  if (policy.env == EnvId::kCartPole) {
    const auto& g = policy.gains;
    return clamp_action(g.angle * obs[2] + g.angular_velocity * obs[3] + g.position * obs[0] + g.velocity * obs[1]);
  }
  return obs[1] < 0.0 ? -1.0 : 1.0;
}

std::optional<FeedbackEvent> oracle_feedback(const TeacherProfile& profile, std::int64_t step, double taken,
                                             double reference, std::mt19937_64& rng, double clock,
                                             double step_period) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (!(unit(rng) < profile.give_probability(step))) return std::nullopt;
  int value = std::abs(taken - reference) <= profile.tolerance ? 1 : -1;
  if (profile.p_flip > 0.0 && unit(rng) < profile.p_flip) value = -value;
  const double delay = profile.delay.sample(rng);
  return FeedbackEvent{value, clock + delay * step_period, FeedbackOrigin::kOracle};
}

}  // namespace trl
