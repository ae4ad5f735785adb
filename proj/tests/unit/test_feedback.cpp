#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "../oracles/chain_mdp.hpp"
#include "../oracles/naive_mlp.hpp"
#include "../oracles/quadrature.hpp"
#include "trl/errors.hpp"
#include "trl/feedback.hpp"

using namespace trl;

namespace {

FeedbackEvent event(int value, double time) { return {value, time, FeedbackOrigin::kOracle}; }

FlagBuffer filled_buffer(int n, double period) {
  FlagBuffer buf(50);
  for (int i = 0; i < n; ++i) {
    BufferedTuple t;
    t.time = i * period;
    t.action = i;
    buf.push(t);
  }
  return buf;
}

double total(const std::vector<Credit>& credits) {
  double s = 0.0;
  for (const auto& c : credits) s += c.weight;
  return s;
}

}  // namespace

TEST(FeedbackModel, PredictionIsLinearAndClamped) {
  FeedbackModel m(16);
  const FeatureSet f{1, 4, 9, 12};
  for (auto i : f) m.psi[i] = 0.25;
  EXPECT_DOUBLE_EQ(fb_predict(m, f).raw, 1.0);
  for (auto i : f) m.psi[i] = 0.5;
  const auto p = fb_predict(m, f);
  EXPECT_DOUBLE_EQ(p.raw, 2.0);
  EXPECT_DOUBLE_EQ(p.clamped, 1.0);
}

TEST(FeedbackModel, AdaptiveRate) {
  FeedbackModel m(4, 0.05, 1.0);
  EXPECT_DOUBLE_EQ(adaptive_rate(0.0, m), 0.05);
  EXPECT_DOUBLE_EQ(adaptive_rate(-0.5, m), 0.55);
  EXPECT_DOUBLE_EQ(adaptive_rate(3.0, m), 1.0);
}

TEST(FeedbackModel, EvaluatorMovesPredictionByRateTimesResidual) {
  FeedbackModel m(32, 0.05, 1.0);
  const FeatureSet f{0, 5, 10, 15, 20, 25, 30, 31};
  const double residual = evaluator_update(m, event(+1, 0.0), f, 1.0);
  EXPECT_DOUBLE_EQ(residual, 1.0);
  for (auto i : f) EXPECT_DOUBLE_EQ(m.psi[i], 0.05 / 8.0);
  EXPECT_NEAR(fb_predict(m, f).raw, 0.05, 1e-15);

  // Neutral feedback is a no-op.
  const auto before = m.psi;
  evaluator_update(m, event(0, 0.0), f, 1.0);
  EXPECT_EQ(m.psi, before);
}

TEST(FeedbackModel, EvaluatorRespectsCreditWeight) {
  FeedbackModel m(8, 0.05, 1.0);
  const FeatureSet f{2};
  evaluator_update(m, event(-1, 0.0), f, 0.5);
  EXPECT_DOUBLE_EQ(m.psi[2], -0.025);
}

TEST(FeedbackModel, RejectsBadParameters) {
  FeedbackModel m(4, 0.0, 1.0);
  EXPECT_THROW(m.validate(), Error);
}

TEST(Delay, DeltaPutsAllMassOnOneBin) {
  const auto d = DelayDistribution::delta(3.0, 10);
  ASSERT_EQ(d.weights().size(), 10u);
  EXPECT_EQ(d.weights()[3], 1.0);
  EXPECT_DOUBLE_EQ(std::accumulate(d.weights().begin(), d.weights().end(), 0.0), 1.0);
}

TEST(Delay, UniformIsFlatOverItsSupport) {
  const auto d = DelayDistribution::uniform(2.0, 6.0, 10);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(d.weights()[i], (i >= 2 && i < 6) ? 0.25 : 0.0, 1e-15);
}

TEST(Delay, GammaBinsMatchQuadrature) {
  const double shape = 2.0, scale = 15.0;
  const auto d = DelayDistribution::gamma(shape, scale, 50);
  std::vector<double> ref(50);
  for (int i = 0; i < 50; ++i) {
    ref[i] = oracle::simpson([&](double x) { return oracle::gamma_pdf(x, shape, scale); }, i, i + 1.0);
  }
  const double norm = std::accumulate(ref.begin(), ref.end(), 0.0);
  for (int i = 0; i < 50; ++i) EXPECT_NEAR(d.weights()[i], ref[i] / norm, 1e-10);
  EXPECT_NEAR(std::accumulate(d.weights().begin(), d.weights().end(), 0.0), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(d.mean(), 30.0);
}

TEST(Delay, GammaSamplesFollowTheDensity) {
  const auto d = DelayDistribution::gamma(2.0, 5.0, 50);
  std::mt19937_64 rng(31);
  const int n = 20000;
  std::vector<double> observed(6, 0.0), expected(6, 0.0);
  const double edges[7] = {0, 3, 6, 9, 12, 18, 1e9};
  for (int k = 0; k < n; ++k) {
    const double x = d.sample(rng);
    for (int b = 0; b < 6; ++b) {
      if (x >= edges[b] && x < edges[b + 1]) observed[b] += 1.0;
    }
  }
  for (int b = 0; b < 6; ++b) {
    const double hi = std::min(edges[b + 1], 400.0);
    expected[b] = n * oracle::simpson([](double x) { return oracle::gamma_pdf(x, 2.0, 5.0); }, edges[b], hi, 20000);
  }
  EXPECT_GT(oracle::chi_square_p_value(observed, expected), 1e-3);
}

TEST(Delay, RejectsMassOutsideHorizon) {
  EXPECT_THROW(DelayDistribution::delta(60.0, 50), Error);
  EXPECT_THROW(DelayDistribution::gamma(-1.0, 2.0), Error);
  EXPECT_THROW(DelayDistribution::uniform(5.0, 2.0), Error);
}

TEST(FlagBuffer, EvictsOldest) {
  FlagBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    BufferedTuple t;
    t.action = i;
    buf.push(t);
  }
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf[0].action, 2.0);
  EXPECT_EQ(buf[2].action, 4.0);
}

TEST(Credit, DeltaDelayHitsTheTupleStepsBack) {
  const double period = 0.02;
  const auto buf = filled_buffer(5, period);  // times 0 .. 0.08
  const auto credits = distribute_feedback(buf, event(+1, 4 * period), DelayDistribution::delta(2.0), period);
  ASSERT_EQ(credits.size(), 1u);
  EXPECT_EQ(credits[0].tuple->action, 2.0);
  EXPECT_EQ(credits[0].weight, 1.0);
}

TEST(Credit, WeightsSumToOne) {
  const double period = 0.02;
  const auto buf = filled_buffer(40, period);
  for (const auto& d : {DelayDistribution::gamma(2.0, 15.0), DelayDistribution::uniform(1.0, 30.0),
                        DelayDistribution::delta(0.0)}) {
    const auto credits = distribute_feedback(buf, event(-1, 39 * period), d, period);
    EXPECT_NEAR(total(credits), 1.0, 1e-12);
  }
}

TEST(Credit, RenormalizesOverPresentTuples) {
  const double period = 0.02;
  const auto buf = filled_buffer(3, period);
  const auto credits = distribute_feedback(buf, event(+1, 2 * period), DelayDistribution::uniform(0.0, 10.0), period);
  ASSERT_EQ(credits.size(), 3u);
  for (const auto& c : credits) EXPECT_NEAR(c.weight, 1.0 / 3.0, 1e-15);
}

TEST(Credit, NoMassMeansNoCredit) {
  const double period = 0.02;
  const auto buf = filled_buffer(2, period);
  EXPECT_TRUE(distribute_feedback(buf, event(+1, 1 * period), DelayDistribution::delta(20.0), period).empty());
}

TEST(Credit, EmptyBufferThrows) {
  FlagBuffer buf(5);
  EXPECT_THROW(distribute_feedback(buf, event(+1, 0.0), DelayDistribution::delta(0.0), 0.02), Error);
}

TEST(Supervised, SarsaNudgeIsExact) {
  oracle::OneHotChainFeatures map;
  SarsaConfig scfg;
  scfg.action_grid = 2;
  SarsaAgent agent(map, scfg);
  const SupervisedConfig cfg{0.2, 0.1};
  const auto f = map.encode(oracle::chain_obs(1), 1.0);
  supervised_correction(agent, f, event(+1, 0.0), cfg, 1.0);
  EXPECT_DOUBLE_EQ(agent.q(oracle::chain_obs(1), 1.0), 0.02);
  supervised_correction(agent, f, event(-1, 0.0), cfg, 0.5);
  EXPECT_DOUBLE_EQ(agent.q(oracle::chain_obs(1), 1.0), 0.01);
}

TEST(Supervised, DisapprovingASaturatedActionPullsTheMeanBack) {
  // Mean far beyond the upper bound: every executed action is +1. A
  // disapproval must move the mean down, not further out.
  A3cConfig a3c;
  a3c.hidden = {1};
  MlpParams actor(MlpLayout({1, 1, 2}));
  actor.values.assign(actor.values.size(), 0.0);
  const auto& layout = actor.layout;
  actor.values[layout.bias_offset(1)] = 5.0;  // mean 5
  const std::vector<double> in{0.0};
  GradientSet d(actor.layout);
  supervised_correction(actor, in, 1.0, event(-1, 0.0), SupervisedConfig{0.2, 1.0}, 1.0, a3c, d);
  // Descent step: params -= lr * d. The mean bias gradient must be positive.
  EXPECT_GT(d.values[layout.bias_offset(1)], 0.0);
}

TEST(Supervised, SignCorrectnessForA3c) {
  std::mt19937_64 rng(41);
  A3cConfig a3c;
  a3c.hidden = {6};
  const SupervisedConfig cfg{0.2, 0.1};
  for (int trial = 0; trial < 50; ++trial) {
    auto actor = make_mlp({2, 6, 2}, rng, 0.5);
    const std::vector<double> in{0.1 * trial - 2.0, 0.3};
    const double action = 0.05 * trial - 1.0;
    for (int sign : {+1, -1}) {
      GradientSet d(actor.layout);
      supervised_correction(actor, in, action, event(sign, 0.0), cfg, 1.0, a3c, d);
      auto stepped = actor;
      for (std::size_t i = 0; i < d.values.size(); ++i) stepped.values[i] -= 1e-3 * d.values[i];
      const double before = gaussian_log_prob(gaussian_head(oracle::naive_forward(actor, in), a3c), action);
      const double after = gaussian_log_prob(gaussian_head(oracle::naive_forward(stepped, in), a3c), action);
      if (sign > 0) EXPECT_GE(after, before);
      else EXPECT_LE(after, before);
    }
  }
}

TEST(FeedbackLayer, ProcessRunsEvaluatorThenCorrection) {
  const auto spec = default_spec(EnvId::kMountainCar);
  JointTileFeatures map(spec, 8, 8);
  FeedbackLayer layer(map, FeedbackModel(map.size()), DelayDistribution::delta(1.0), SupervisedConfig{}, 0.02);
  Observation o;
  o.dim = 2;
  o.data = {-0.5, 0.01, 0, 0};
  layer.record(0.00, o, -1.0);
  layer.record(0.02, o, 1.0);
  std::vector<double> credited_actions;
  std::vector<FeedbackEvent> events{event(+1, 0.02), event(0, 0.02)};
  const int n = layer.process(events, [&](const BufferedTuple& t, const FeedbackEvent&, double w) {
    credited_actions.push_back(t.action);
    EXPECT_EQ(w, 1.0);
    // Evaluator already ran for this tuple.
    EXPECT_GT(fb_predict(layer.model(), t.features).raw, 0.0);
  });
  EXPECT_EQ(n, 1);
  EXPECT_EQ(credited_actions, std::vector<double>{-1.0});
}
