#include <gtest/gtest.h>

#include <random>

#include "../oracles/quadrature.hpp"
#include "trl/errors.hpp"
#include "trl/teacher.hpp"

using namespace trl;

TEST(Teacher, SilentWhenPGiveIsZero) {
  TeacherProfile p;
  p.p_give = 0.0;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(oracle_feedback(p, i, 0.0, 0.0, rng, 0.0, 0.02));
}

TEST(Teacher, IdealTeacherJudgesAgainstReference) {
  TeacherProfile p;
  p.p_give = 1.0;
  p.delay = DelayDistribution::delta(0.0);
  std::mt19937_64 rng(2);
  const auto good = oracle_feedback(p, 0, 0.5, 0.6, rng, 1.5, 0.02);
  ASSERT_TRUE(good);
  EXPECT_EQ(good->value, 1);
  EXPECT_DOUBLE_EQ(good->emission_time, 1.5);
  const auto bad = oracle_feedback(p, 0, -0.5, 0.6, rng, 1.5, 0.02);
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->value, -1);
}

TEST(Teacher, FlipAndGiveRatesMatchProfile) {
  TeacherProfile p;
  p.p_give = 0.3;
  p.p_flip = 0.1;
  p.delay = DelayDistribution::delta(0.0);
  std::mt19937_64 rng(3);
  const int n = 50000;
  double silent = 0, approve = 0, disapprove = 0;
  for (int i = 0; i < n; ++i) {
    const auto ev = oracle_feedback(p, i, 0.0, 0.0, rng, 0.0, 0.02);
    if (!ev) silent += 1;
    else if (ev->value > 0) approve += 1;
    else disapprove += 1;
  }
  const std::vector<double> observed{silent, approve, disapprove};
  const std::vector<double> expected{n * 0.7, n * 0.3 * 0.9, n * 0.3 * 0.1};
  EXPECT_GT(oracle::chi_square_p_value(observed, expected), 1e-3);
}

TEST(Teacher, DelayShiftsEmissionTime) {
  TeacherProfile p;
  p.p_give = 1.0;
  p.delay = DelayDistribution::delta(5.0);
  std::mt19937_64 rng(4);
  const auto ev = oracle_feedback(p, 0, 0.0, 0.0, rng, 1.0, 0.02);
  ASSERT_TRUE(ev);
  EXPECT_DOUBLE_EQ(ev->emission_time, 1.1);
}

TEST(Teacher, WithdrawalRampsDown) {
  TeacherProfile p;
  p.p_give = 0.8;
  p.withdraw_after = 100;
  p.withdraw_duration = 50;
  EXPECT_DOUBLE_EQ(p.give_probability(99), 0.8);
  EXPECT_DOUBLE_EQ(p.give_probability(125), 0.4);
  EXPECT_DOUBLE_EQ(p.give_probability(150), 0.0);
  p.withdraw_duration = 0;
  EXPECT_DOUBLE_EQ(p.give_probability(100), 0.0);
}

TEST(Teacher, ProfileValidation) {
  TeacherProfile p;
  p.p_flip = 1.5;
  EXPECT_THROW(p.validate(), Error);
  p = TeacherProfile{};
  p.tolerance = 0.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Reference, CartPolePdRule) {
  ReferencePolicy pol{EnvId::kCartPole, {}};
  Observation o;
  o.dim = 4;
  o.data = {0.1, -0.2, 0.02, 0.1};
  EXPECT_DOUBLE_EQ(reference_action(pol, o), 10 * 0.02 + 2 * 0.1 + 0.5 * 0.1 + 1.0 * -0.2);
  o.data = {0, 0, 0.2, 0};
  EXPECT_EQ(reference_action(pol, o), 1.0);
}

TEST(Reference, CartPolePdRuleBalances) {
  ReferencePolicy pol{EnvId::kCartPole, {}};
  auto env = make_env(EnvId::kCartPole);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto obs = env->reset(seed);
    StepResult r;
    int steps = 0;
    do {
      r = env->step(reference_action(pol, obs));
      obs = r.next_obs;
      ++steps;
    } while (!r.done());
    EXPECT_TRUE(r.truncated) << "seed " << seed;
    EXPECT_EQ(steps, 500);
  }
}

TEST(Reference, MountainCarFollowsVelocity) {
  ReferencePolicy pol{EnvId::kMountainCar, {}};
  auto env = make_env(EnvId::kMountainCar);
  auto obs = env->reset(0);
  StepResult r;
  do {
    r = env->step(reference_action(pol, obs));
    obs = r.next_obs;
  } while (!r.done());
  EXPECT_TRUE(r.terminal);
  EXPECT_LT(env->steps_taken(), 200);
}
