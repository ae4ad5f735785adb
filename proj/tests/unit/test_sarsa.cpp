#include <gtest/gtest.h>

#include <random>

#include "../oracles/chain_mdp.hpp"
#include "../oracles/tabular_sarsa.hpp"
#include "trl/errors.hpp"
#include "trl/sarsa.hpp"

using namespace trl;
using oracle::chain_obs;

namespace {

SarsaConfig exact(double alpha, double discount, double lambda) {
  SarsaConfig cfg;
  cfg.alpha = alpha;
  cfg.discount = discount;
  cfg.lambda = lambda;
  cfg.action_grid = 2;
  cfg.trace_cutoff = 0.0;
  return cfg;
}

double level(int a) { return a == 0 ? -1.0 : 1.0; }

}  // namespace

TEST(Sarsa, FirstUpdateFromZeroWeights) {
  const auto spec = default_spec(EnvId::kCartPole);
  JointTileFeatures map(spec, 8, 8);
  SarsaConfig cfg;
  cfg.alpha = 0.1;
  SarsaAgent agent(map, cfg);
  Observation o;
  o.dim = 4;
  o.data = {0.0, 0.0, 0.0, 0.0};
  Observation o2 = o;
  o2[0] = 2.0;
  const Transition t{o, 0.0, 1.0, o2, 1.0, false, true};
  EXPECT_DOUBLE_EQ(sarsa_update(agent, t, cfg), 1.0);
  for (auto i : map.encode(o, 0.0)) EXPECT_DOUBLE_EQ(agent.weights()[i], 0.1 / 8.0);
  EXPECT_NEAR(agent.q(o, 0.0), 0.1, 1e-15);
}

TEST(Sarsa, InitialQIsSpreadOverActiveTiles) {
  JointTileFeatures map(default_spec(EnvId::kMountainCar), 8, 8);
  SarsaConfig cfg;
  cfg.initial_q = 4.0;
  SarsaAgent agent(map, cfg);
  Observation o;
  o.dim = 2;
  o.data = {-0.5, 0.0, 0, 0};
  EXPECT_NEAR(agent.q(o, 0.3), 4.0, 1e-12);
}

TEST(Sarsa, MatchesTabularOracle) {
  oracle::OneHotChainFeatures map;
  const auto cfg = exact(0.3, 0.9, 0.8);
  SarsaAgent agent(map, cfg);
  oracle::TabularLambda ref(3, 2, 0.3, 0.9, 0.8);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coin(0, 1), state(0, 2);

  for (int episode = 0; episode < 200; ++episode) {
    agent.reset_traces();
    ref.clear_traces();
    int s = state(rng);
    int a = coin(rng);
    for (int t = 0; t < 10; ++t) {
      const auto r = oracle::chain_step(s, a);
      const int a2 = coin(rng);
      sarsa_update(agent, {chain_obs(s), level(a), r.reward, chain_obs(r.next), level(a2), r.terminal, true}, cfg);
      ref.sarsa(s, a, r.reward, r.next, a2, r.terminal);
      for (int qs = 0; qs < 3; ++qs) {
        for (int qa = 0; qa < 2; ++qa) ASSERT_NEAR(agent.q(chain_obs(qs), level(qa)), ref.q(qs, qa), 1e-12);
      }
      if (r.terminal) break;
      s = r.next;
      a = a2;
    }
  }
}

TEST(QLearning, MatchesWatkinsOracle) {
  oracle::OneHotChainFeatures map;
  const auto cfg = exact(0.25, 0.9, 0.7);
  SarsaAgent agent(map, cfg);
  oracle::TabularLambda ref(3, 2, 0.25, 0.9, 0.7);
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> coin(0, 1), state(0, 2);

  for (int episode = 0; episode < 200; ++episode) {
    agent.reset_traces();
    ref.clear_traces();
    int s = state(rng);
    int a = coin(rng);
    for (int t = 0; t < 10; ++t) {
      const auto r = oracle::chain_step(s, a);
      const int a2 = coin(rng);
      const bool greedy = ref.q(r.next, a2) >= ref.q(r.next, 1 - a2);
      q_learning_update(agent,
                        {chain_obs(s), level(a), r.reward, chain_obs(r.next), level(a2), r.terminal, greedy}, cfg);
      ref.watkins(s, a, r.reward, r.next, greedy, r.terminal);
      for (int qs = 0; qs < 3; ++qs) {
        for (int qa = 0; qa < 2; ++qa) ASSERT_NEAR(agent.q(chain_obs(qs), level(qa)), ref.q(qs, qa), 1e-12);
      }
      if (r.terminal) break;
      s = r.next;
      a = a2;
    }
  }
}

TEST(Sarsa, TraceCutoffDropsSmallTraces) {
  oracle::OneHotChainFeatures map;
  auto cfg = exact(0.1, 0.5, 0.5);
  cfg.trace_cutoff = 0.1;
  SarsaAgent agent(map, cfg);
  sarsa_update(agent, {chain_obs(0), 1.0, 0.0, chain_obs(1), 1.0, false, true}, cfg);
  EXPECT_EQ(agent.active_traces().size(), 1u);  // 0.25 survives
  sarsa_update(agent, {chain_obs(1), 1.0, 0.0, chain_obs(2), 1.0, false, true}, cfg);
  EXPECT_EQ(agent.active_traces().size(), 1u);  // 0.0625 dropped, the new 0.25 kept
}

TEST(Sarsa, GreedyTiesGoToLowestBin) {
  oracle::OneHotChainFeatures map;
  SarsaAgent agent(map, exact(0.1, 0.9, 0.0));
  EXPECT_EQ(greedy_bin(agent, chain_obs(1)), 0);
  agent.weights()[1 * 2 + 1] = 0.5;
  EXPECT_EQ(greedy_bin(agent, chain_obs(1)), 1);
}

TEST(Sarsa, EpsilonGreedyExploresAtTheConfiguredRate) {
  oracle::OneHotChainFeatures map;
  SarsaAgent agent(map, exact(0.1, 0.9, 0.0));
  agent.weights()[1] = 1.0;  // state 0 prefers right
  std::mt19937_64 rng(5);
  int left = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) left += select_action_sarsa(agent, chain_obs(0), 0.2, rng).bin == 0;
  EXPECT_NEAR(static_cast<double>(left) / n, 0.1, 0.01);
}

TEST(Sarsa, NonFiniteUpdateThrows) {
  oracle::OneHotChainFeatures map;
  const auto cfg = exact(0.1, 0.9, 0.0);
  SarsaAgent agent(map, cfg);
  const Transition t{chain_obs(0), 1.0, std::numeric_limits<double>::infinity(), chain_obs(1), 1.0, false, true};
  EXPECT_THROW(sarsa_update(agent, t, cfg), Error);
}

TEST(Sarsa, ConfigValidation) {
  SarsaConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = SarsaConfig{};
  cfg.action_grid = 1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Sarsa, EpsilonScheduleDecays) {
  EpsilonSchedule e{0.5, 0.5, 0.1};
  EXPECT_DOUBLE_EQ(e.at(0), 0.5);
  EXPECT_DOUBLE_EQ(e.at(1), 0.25);
  EXPECT_DOUBLE_EQ(e.at(10), 0.1);
}

TEST(Sarsa, ActionLevelsSpanTheRange) {
  const auto l = action_levels(7);
  ASSERT_EQ(l.size(), 7u);
  EXPECT_EQ(l.front(), -1.0);
  EXPECT_EQ(l.back(), 1.0);
  EXPECT_NEAR(l[3], 0.0, 1e-15);
}

TEST(Sarsa, CartPoleLearns) {
  // Mean reward of the last 50 episodes beats the first 50.
  auto env = make_env(EnvId::kCartPole);
  JointTileFeatures map(env->spec(), 8, 8);
  SarsaConfig cfg;
  cfg.epsilon.initial = 0.0;
  cfg.initial_q = 100.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SarsaAgent agent(map, cfg);
    const auto m = run_sarsa(*env, agent, cfg, {300, seed, TdTarget::kSarsa, false});
    double first = 0, last = 0;
    for (int i = 0; i < 50; ++i) {
      first += m[static_cast<std::size_t>(i)].reward;
      last += m[m.size() - 1 - static_cast<std::size_t>(i)].reward;
    }
    EXPECT_GT(last, first) << "seed " << seed;
  }
}

TEST(Sarsa, RunIsDeterministic) {
  auto env = make_env(EnvId::kMountainCar);
  JointTileFeatures map(env->spec(), 8, 8);
  SarsaConfig cfg;
  SarsaAgent a(map, cfg), b(map, cfg);
  const auto ma = run_sarsa(*env, a, cfg, {5, 9, TdTarget::kSarsa, false});
  const auto mb = run_sarsa(*env, b, cfg, {5, 9, TdTarget::kSarsa, false});
  EXPECT_EQ(ma, mb);
  EXPECT_TRUE(std::equal(a.weights().begin(), a.weights().end(), b.weights().begin()));
}

TEST(Sarsa, StopsEarlyOnConvergence) {
  oracle::ChainEnv env(10);
  oracle::OneHotChainFeatures map;
  auto cfg = exact(0.5, 0.9, 0.5);
  cfg.epsilon.initial = 0.0;
  cfg.initial_q = 1.0;
  cfg.convergence_threshold = 0.99;
  cfg.convergence_window = 5;
  SarsaAgent agent(map, cfg);
  const auto m = run_sarsa(env, agent, cfg, {1000, 1, TdTarget::kSarsa, false});
  EXPECT_LT(m.size(), 1000u);
  EXPECT_GE(moving_average(m, 5), 0.99);
}
