#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "logicforge/bilevel.hpp"
#include "support/gradient_check.hpp"
#include "support/oracles.hpp"

using namespace logicforge;
using namespace logicforge::testgen;


TEST(Objectives, ClipArithmetic) {
  // one context, two candidates; choose theta so rho of candidate 0 is exact
  SoftmaxPolicy old(Table{{0.0, 0.0}});  // p_old = 0.5
  auto with_prob = [](double p) { return SoftmaxPolicy(Table{{std::log(p / (1 - p)), 0.0}}); };
  std::vector<SampledGroup> pos{{0, {0}, {1.0}}}, neg{{0, {0}, {-1.0}}};
  EXPECT_NEAR(upper_objective(with_prob(0.75), old, pos, 0.2), 1.2, 1e-12);  // rho 1.5
  EXPECT_NEAR(upper_objective(with_prob(0.25), old, neg, 0.2), -0.8, 1e-12);  // rho 0.5
  SoftmaxPolicy old3(Table{{0.0, 0.0, 0.0, 0.0}});  // p_old = 0.25
  SoftmaxPolicy rho3(Table{{std::log(0.75 / (0.25 / 3)), 0.0, 0.0, 0.0}});
  EXPECT_NEAR(lower_objective(rho3, old3, pos, 0.2), 1.2, 1e-12);  // rho 3 saturates
  std::vector<SampledGroup> pair{{0, {0, 1}, {1.0, -1.0}}};
  EXPECT_NEAR(lower_objective(old, old, pair, 0.2), 0.0, 1e-15);
}

TEST(Objectives, FreshSnapshotIdentity) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    auto c = random_config(rng);
    double expect = 0;
    for (const auto& g : c.groups) expect += oracle::mean(g.advantages);
    expect /= c.groups.size();
    EXPECT_NEAR(upper_objective(c.theta, c.theta, c.groups, c.epsilon), expect, 1e-9);
    EXPECT_NEAR(lower_objective(c.theta, c.theta, c.groups, c.epsilon), 0.0, 1e-9);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    auto c = random_config(rng);
    auto analytic = objective_gradient(Level::upper, c.theta, c.theta_old, c.groups, c.epsilon, c.kl);
    EXPECT_LT(relative_error(analytic, finite_difference(c)), 1e-6) << "config " << t;
  }
}

TEST(Gradient, FreshSnapshotIsScoreFunction) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto c = random_config(rng);
    c.theta_old = c.theta;
    c.kl = 0;
    // sum over samples of A * d log pi, weighted as in the surrogate
    Table score = c.theta.zeros_like();
    for (const auto& g : c.groups) {
      auto p = c.theta.probs(g.context);
      for (std::size_t i = 0; i < g.actions.size(); ++i)
        for (std::size_t k = 0; k < p.size(); ++k)
          score[g.context][k] += g.advantages[i] * ((k == g.actions[i]) - p[k]) /
                                 (g.actions.size() * c.groups.size());
    }
    auto analytic = surrogate_gradient(c.theta, c.theta_old, c.groups, c.epsilon);
    EXPECT_LT(relative_error(analytic, score), 1e-12);
    EXPECT_LT(relative_error(analytic, finite_difference(c)), 1e-6);
  }
}

TEST(Gradient, ClippedSamplesContributeZero) {
  SoftmaxPolicy old(Table{{0.0, 0.0, 0.0}});
  SoftmaxPolicy cur(Table{{1.0, 0.0, 0.0}});  // rho(0) ~ 1.73
  std::vector<SampledGroup> pos{{0, {0}, {1.0}}};
  auto g = surrogate_gradient(cur, old, pos, 0.2);
  for (double x : g[0]) EXPECT_EQ(x, 0.0);
  SoftmaxPolicy low(Table{{-1.0, 0.0, 0.0}});  // rho(0) ~ 0.42
  std::vector<SampledGroup> neg{{0, {0}, {-1.0}}};
  auto g_neg = surrogate_gradient(low, old, neg, 0.2);
  for (double x : g_neg[0]) EXPECT_EQ(x, 0.0);
  // unclipped side still carries gradient
  EXPECT_NE(surrogate_gradient(low, old, pos, 0.2)[0][0], 0.0);
}

TEST(Gradient, ClipMonotonicity) {
  SoftmaxPolicy old(Table{{0.0, 0.0, 0.0}});
  std::vector<SampledGroup> pos{{0, {0}, {1.0}}};
  // rho = 1 + eps where 3 e^x / (e^x + 2) = 1.2, i.e. x = ln(2.4 / 1.8)
  double kink = std::log(2.4 / 1.8);
  double at_kink = upper_objective(SoftmaxPolicy(Table{{kink + 1e-9, 0.0, 0.0}}), old, pos, 0.2);
  for (double dx : {0.01, 0.5, 2.0, 10.0})
    EXPECT_EQ(upper_objective(SoftmaxPolicy(Table{{kink + dx, 0.0, 0.0}}), old, pos, 0.2), at_kink);
}

TEST(Sft, LossValues) {
  EXPECT_NEAR(sft_loss(SoftmaxPolicy::uniform({2}), {{0, 1}}), std::log(2.0), 1e-12);
  EXPECT_NEAR(sft_loss(SoftmaxPolicy::uniform({4}), {{0, 0}, {0, 3}}), 2 * std::log(4.0), 1e-12);
}

TEST(Sft, DescentDecreasesMonotonically) {
  SoftmaxPolicy p = SoftmaxPolicy::uniform({3, 2});
  std::vector<SftExample> data{{0, 2}, {1, 0}, {0, 2}};
  double prev = sft_loss(p, data);
  for (int step = 0; step < 50; ++step) {
    p.ascend(sft_gradient(p, data), -0.5);
    double cur = sft_loss(p, data);
    EXPECT_LT(cur, prev) << "step " << step;
    prev = cur;
  }
  SoftmaxPolicy saturated(Table{{-800.0, -800.0, 0.0}, {0.0, -800.0}});
  EXPECT_NEAR(sft_loss(saturated, data), 0.0, 1e-12);
}

TEST(Sft, GradientMatchesFiniteDifferences) {
  SoftmaxPolicy p(Table{{0.3, -1.2, 0.7}, {2.0, 0.1}});
  std::vector<SftExample> data{{0, 1}, {1, 0}, {0, 2}};
  auto g = sft_gradient(p, data);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t a = 0; a < p.candidates(k); ++a) {
      SoftmaxPolicy plus = p, minus = p;
      plus.logits()[k][a] += 1e-6;
      minus.logits()[k][a] -= 1e-6;
      EXPECT_NEAR(g[k][a], (sft_loss(plus, data) - sft_loss(minus, data)) / 2e-6, 1e-8);
    }
}

TEST(Gap, BestResponseAndUniform) {
  ToyHierarchicalTask t;
  t.models = {{0, 1}};
  t.rewards = {{1.0, 0.0, 0.2}, {0.5, 0.9}};
  auto x = SoftmaxPolicy::uniform(t.upper_sizes());
  EXPECT_NEAR(bilevel_gap(t, x, best_response(t)), 0.0, 1e-9);
  EXPECT_GT(bilevel_gap(t, x, SoftmaxPolicy::uniform(t.lower_sizes())), 0.0);
  // enumerated by hand: uniform x, uniform y -> (0.4 + 0.7) / 2; best -> (1 + 0.9) / 2
  EXPECT_NEAR(bilevel_gap(t, x, SoftmaxPolicy::uniform(t.lower_sizes())), 0.95 - 0.55, 1e-12);
  EXPECT_NEAR(optimal_expected_reward(t), 1.0, 0);
}

TEST(Task, Validation) {
  ToyHierarchicalTask t;
  t.models = {{0}, {0}};
  t.rewards = {{1.0}};
  EXPECT_THROW(t.check(), ConfigInvalid);
  t.models = {{0}};
  t.rewards = {{1.5}};
  EXPECT_THROW(t.check(), ConfigInvalid);
  EXPECT_THROW(nlohmann::json({{"I", 0}}).get<TrainConfig>(), ConfigInvalid);
  EXPECT_THROW(nlohmann::json({{"epsilon", 1.0}}).get<TrainConfig>(), ConfigInvalid);
}

// ---- training

namespace {

// Independent enumeration of the dominant task's optimum: 1 per question.
double dominant_optimum(const ToyHierarchicalTask& t) {
  double best = 0;
  for (const auto& ms : t.models) {
    double q_best = 0;
    for (auto m : ms)
      for (double r : t.rewards[m]) q_best = std::max(q_best, r);
    best += q_best;
  }
  return best / t.models.size();
}

}  // namespace

TEST(Train, DominantModelTaskConverges) {
  std::vector<std::size_t> dominant{2, 0, 3, 1};
  auto task = make_dominant_task(dominant, 4, 4);
  TrainConfig cfg;
  cfg.seed = 7;
  auto h = train_alternating(task, cfg);
  ASSERT_EQ(h.iterations.size(), cfg.I);
  double optimum = dominant_optimum(task);
  EXPECT_EQ(optimum, 1.0);
  EXPECT_GE(h.iterations.back().expected_reward, 0.95 * optimum);
  for (std::size_t q = 0; q < dominant.size(); ++q) EXPECT_EQ(h.theta_x.argmax(q), dominant[q]);
  EXPECT_LE(bilevel_gap(task, h.theta_x, h.theta_y), 0.05);

  double sigma = std::sqrt(0.25 / static_cast<double>(cfg.G * cfg.P * cfg.B));
  double prev = expected_reward(task, SoftmaxPolicy::uniform(task.upper_sizes()),
                                SoftmaxPolicy::uniform(task.lower_sizes()));
  for (const auto& r : h.iterations) {
    EXPECT_GE(r.expected_reward, prev - 3 * sigma) << "iteration " << r.iteration;
    prev = r.expected_reward;
    for (const auto* pol : {&*r.theta_x, &*r.theta_y})
      for (std::size_t c = 0; c < pol->contexts(); ++c) {
        auto p = pol->probs(c);
        EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
      }
  }
}

TEST(Train, LowerLevelLearnsDistinguishableOutputs) {
  ToyHierarchicalTask t;
  t.models = {{0, 1}, {2, 3}};
  t.rewards = {{1.0, 0.0, 0.0}, {0.2, 0.6, 0.0}, {0.0, 0.0, 1.0}, {0.5, 0.5, 0.5}};
  TrainConfig cfg;
  cfg.seed = 3;
  auto h = train_alternating(t, cfg);
  auto y0 = SoftmaxPolicy::uniform(t.lower_sizes());
  auto x0 = SoftmaxPolicy::uniform(t.upper_sizes());
  EXPECT_LT(bilevel_gap(t, h.theta_x, h.theta_y), bilevel_gap(t, x0, y0));
  EXPECT_LE(bilevel_gap(t, h.theta_x, h.theta_y), 0.05);
  EXPECT_GE(h.iterations.back().expected_reward, 0.9);
}

TEST(Train, ConstantRewardsAreAFixedPoint) {
  ToyHierarchicalTask t;
  t.models = {{0, 1}, {2}};
  t.rewards = {{0.5, 0.5}, {0.5, 0.5, 0.5}, {0.5}};
  TrainConfig cfg;
  cfg.I = 20;
  auto h = train_alternating(t, cfg);
  for (const auto* pol : {&h.theta_x, &h.theta_y})
    for (const auto& row : pol->logits())
      for (double l : row) EXPECT_LE(std::fabs(l), 1e-6);
}

TEST(Train, SameSeedSameHistory) {
  auto task = make_dominant_task({1, 0, 2}, 3, 3);
  TrainConfig cfg;
  cfg.I = 30;
  cfg.seed = 11;
  auto a = train_alternating(task, cfg);
  auto b = train_alternating(task, cfg);
  EXPECT_EQ(a, b);
  std::ostringstream sa, sb;
  a.write_jsonl(sa);
  b.write_jsonl(sb);
  EXPECT_EQ(sa.str(), sb.str());
  cfg.seed = 12;
  EXPECT_NE(train_alternating(task, cfg), a);
}

TEST(Sampler, CategoricalFrequencies) {
  Sampler s(5);
  std::vector<double> p{0.1, 0.0, 0.6, 0.3};
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[s.categorical(p)];
  EXPECT_EQ(counts[1], 0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(counts[k] / double(n), p[k], 0.01);
}
