#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "admission/learner.hpp"
#include "oracles.hpp"

using namespace admission;

namespace {

QueueModel two_class() {
  QueueModel model;
  model.capacity = 20;
  model.servers = 5;
  model.service_rate = 0.3;
  model.classes = {{20.0, 0.1, 1.0, {}}, {10.0, 0.1, 1.0, {}}};
  model.lambda_min = 1.0;
  model.lambda_max = 4.0;
  return model;
}

QueueModel two_class(double lambda_min, double lambda_max) {
  QueueModel model;
  model.capacity = 3;
  model.servers = 1;
  model.service_rate = 1.0;
  model.classes = {{2.0, 0.0, 1.0, {}}, {1.0, 0.0, 1.0, {}}};
  model.lambda_min = lambda_min;
  model.lambda_max = lambda_max;
  return model;
}

}  // namespace

TEST(Estimator, FirstSampleIsTheMean) {
  auto state = EstimatorState::start(2, 1.0, 0.01);
  state = update_estimator(state, 0.5, 0);
  EXPECT_EQ(state.tau, 1);
  EXPECT_DOUBLE_EQ(state.inv_mean, 0.5);
  EXPECT_DOUBLE_EQ(state.rate_estimate(), 2.0);
}

TEST(Estimator, RecursiveMeanMatchesBatchMean) {
  // delta = 0.5 keeps threshold(2) ~ 2.4 above both gaps
  auto state = EstimatorState::start(2, 1.0, 0.5);
  state.observe(0.5, 0);
  state.observe(1.5, 1);
  EXPECT_DOUBLE_EQ(state.inv_mean, 1.0);
  EXPECT_EQ(state.episode_counts, (std::vector<long>{1, 1}));
  EXPECT_EQ(state.total, 2);
}

TEST(Estimator, LongGapIsTruncated) {
  auto state = EstimatorState::start(1, 1.0, 0.01);
  // threshold(1) = sqrt(2 / ln 100) ~ 0.659
  EXPECT_NEAR(state.threshold(1), std::sqrt(2.0 / std::log(100.0)), 1e-15);
  state.observe(0.6, 0);
  state.observe(5.0, 0);
  EXPECT_DOUBLE_EQ(state.inv_mean, 0.3);
}

TEST(Estimator, ThresholdUsesPostIncrementCount) {
  auto state = EstimatorState::start(1, 1.0, 0.01);
  const double gap = 0.5 * (state.threshold(1) + state.threshold(2));
  state.observe(0.1, 0);
  state.observe(gap, 0);  // above threshold(1), below threshold(2)
  EXPECT_DOUBLE_EQ(state.inv_mean, 0.5 * (0.1 + gap));
}

TEST(Estimator, EpisodeResetKeepsCumulativeCounts) {
  auto state = EstimatorState::start(2, 1.0, 0.1);
  state.observe(0.3, 0);
  state.observe(0.3, 1);
  state.begin_episode(0.05);
  EXPECT_EQ(state.tau, 0);
  EXPECT_EQ(state.inv_mean, 0.0);
  EXPECT_EQ(state.episode_counts, (std::vector<long>{0, 0}));
  EXPECT_EQ(state.total_counts, (std::vector<long>{1, 1}));
  EXPECT_EQ(state.total, 2);
}

TEST(Estimator, RejectsBadDelta) {
  auto state = EstimatorState::start(1, 1.0, 0.1);
  EXPECT_THROW(state.begin_episode(1.0), std::invalid_argument);
  EXPECT_THROW(state.begin_episode(0.0), std::invalid_argument);
  EXPECT_THROW(state.observe(-1.0, 0), std::invalid_argument);
}

TEST(Estimator, NoTruncationGivesBatchReciprocal) {
  auto state = EstimatorState::start(1, 1.0, 0.01);
  state.truncate = false;
  Rng sim_rng(2);
  double total = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const double gap = draw_exponential(sim_rng, 0.3);
    total += gap;
    state.observe(gap, 0);
  }
  EXPECT_NEAR(state.rate_estimate(), 1000.0 / total, 1e-12 * 1000.0 / total);
}

TEST(Schedule, DoublingLengths) {
  const EpisodeSchedule schedule{100.0};
  EXPECT_EQ(schedule.length(1), 100.0);
  EXPECT_EQ(schedule.length(2), 100.0);
  EXPECT_EQ(schedule.length(3), 200.0);
  EXPECT_EQ(schedule.end(11), 102400.0);
  for (int K = 1; K <= 20; ++K) {
    double total = 0.0;
    for (int k = 1; k <= K; ++k) total += schedule.length(k);
    EXPECT_EQ(total, schedule.end(K));
  }
  EXPECT_DOUBLE_EQ(schedule.delta(3, 0.3), 1.0 / 60.0);
  EXPECT_EQ(schedule.episodes_for(102400.0), 11);
  EXPECT_THROW(schedule.episodes_for(150.0), std::invalid_argument);
  EXPECT_THROW(schedule.length(0), std::invalid_argument);
}

TEST(Confidence, RateRadius) {
  const auto model = two_class(1.0, 4.0);
  auto state = EstimatorState::start(2, 1.0, 0.01);
  for (int n = 0; n < 512; ++n) state.observe(0.5, n % 2);
  const auto conf = build_confidence(state, model);
  EXPECT_NEAR(conf.eps_lambda, 64.0 * std::sqrt(2.0 * std::log(100.0) / 512), 1e-12);
  EXPECT_NEAR(conf.eps_lambda, 8.584, 5e-4);
  EXPECT_EQ(conf.lambda_lo, 1.0);
  EXPECT_EQ(conf.lambda_hi, conf.lambda_bar);
  EXPECT_LE(conf.lambda_bar, 4.0);
}

TEST(Confidence, ClassRadius) {
  const auto model = two_class(1.0, 4.0);
  auto state = EstimatorState::start(2, 1.0, 0.01);
  for (int n = 0; n < 800; ++n) state.observe(0.5, n % 4 == 0 ? 1 : 0);
  const auto conf = build_confidence(state, model);
  EXPECT_NEAR(conf.eps_p, std::sqrt(4.0 / 800 * std::log(200.0)), 1e-15);
  EXPECT_NEAR(conf.eps_p, 0.1628, 5e-5);
  EXPECT_DOUBLE_EQ(conf.p_hat[0], 0.75);
  EXPECT_NEAR(conf.p_hat[0] + conf.p_hat[1], 1.0, 1e-12);
}

TEST(Confidence, EmptyEpisodeThrows) {
  const auto model = two_class(1.0, 4.0);
  const auto state = EstimatorState::start(2, 1.0, 0.01);
  EXPECT_THROW(build_confidence(state, model), EmptyEpisode);
}

TEST(Confidence, InfiniteEstimateSpansTheRange) {
  const auto model = two_class(1.0, 4.0);
  auto state = EstimatorState::start(2, 1.0, 0.5);
  state.observe(100.0, 0);  // truncated to zero
  const auto conf = build_confidence(state, model, false);
  EXPECT_TRUE(std::isinf(conf.lambda_hat));
  EXPECT_EQ(conf.lambda_lo, 1.0);
  EXPECT_EQ(conf.lambda_hi, 4.0);
}

TEST(Confidence, FirstEpisodeIsMaximallyOptimistic) {
  const auto model = two_class();
  const auto conf = initial_confidence(model);
  const auto rates = optimistic_model(conf, expected_rewards(model));
  for (int s = 0; s <= 20; ++s) {
    EXPECT_EQ(rates(s, 0), 4.0);
    EXPECT_EQ(rates(s, 1), 0.0);
  }
}

TEST(Refine, LargeRadiusBranch) {
  EXPECT_DOUBLE_EQ(refine_lambda_bar_radius(2.0, 0.6, 4.0), 4.0);
  EXPECT_DOUBLE_EQ(refine_lambda_bar_radius(2.0, 0.6, 10.0), 10.0);
  EXPECT_DOUBLE_EQ(refine_lambda_bar_radius(2.0, 0.6, 1.5), 1.5);
  // 2 + 0.6 * 1.9^2 = 4.166 > 1.9
  EXPECT_DOUBLE_EQ(refine_lambda_bar_radius(2.0, 0.6, 1.9), 1.9);
}

TEST(Refine, SmallRadiusBranch) {
  EXPECT_DOUBLE_EQ(refine_lambda_bar_radius(2.0, 0.1, 4.0), 2.5);
}

TEST(Refine, VanishingRadius) {
  EXPECT_NEAR(refine_lambda_bar_radius(2.0, 1e-12, 4.0), 2.0, 1e-10);
  EXPECT_NEAR(refine_lambda_bar_radius(5.0, 1e-12, 4.0), 4.0, 1e-10);
}

TEST(Optimism, ShiftTowardsTopClass) {
  const std::vector<int> priority{0, 1};
  const auto p = optimistic_distribution({0.5, 0.5}, 0.2, priority);
  EXPECT_NEAR(p[0], 0.6, 1e-15);
  EXPECT_NEAR(p[1], 0.4, 1e-15);
  EXPECT_NEAR(oracle::l1_ball_max({0.5, 0.5}, 0.2, {2.0, 1.0}, 1000), 0.6 * 2 + 0.4, 1e-12);
}

TEST(Optimism, FullRadiusGivesPointMass) {
  const std::vector<int> priority{2, 0, 1};
  const auto p = optimistic_distribution({0.2, 0.3, 0.5}, 2.0, priority);
  EXPECT_EQ(p, (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST(Optimism, ZeroRadiusKeepsEstimate) {
  const std::vector<int> priority{1, 0};
  const auto p = optimistic_distribution({0.3, 0.7}, 0.0, priority);
  EXPECT_EQ(p, (std::vector<double>{0.3, 0.7}));
}

TEST(Optimism, MaximizesOverTheBall) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    const int m = 2 + n % 2;
    std::vector<double> r(m), p_hat(m);
    for (auto& v : r) v = std::round(10 * u(rng));
    // p_hat on the oracle grid so the grid contains the exact optimum
    const int grid = 60;
    std::vector<int> k(m);
    int left = grid;
    for (int i = 0; i + 1 < m; ++i) {
      k[i] = static_cast<int>(u(rng) * (left + 1));
      left -= k[i];
    }
    k[m - 1] = left;
    for (int i = 0; i < m; ++i) p_hat[i] = static_cast<double>(k[i]) / grid;
    const double eps = static_cast<double>(rng() % 40) / grid;

    std::vector<int> priority(m);
    std::iota(priority.begin(), priority.end(), 0);
    std::stable_sort(priority.begin(), priority.end(),
                     [&](int a, int b) { return r[a] > r[b]; });
    const auto p = optimistic_distribution(p_hat, eps, priority);
    double mass = 0.0, dist = 0.0, value = 0.0;
    for (int i = 0; i < m; ++i) {
      EXPECT_GE(p[i], 0.0);
      mass += p[i];
      dist += std::abs(p[i] - p_hat[i]);
      value += p[i] * r[i];
    }
    EXPECT_NEAR(mass, 1.0, 1e-12);
    EXPECT_LE(dist, eps + 1e-12);
    // half-radius moves land on the doubled grid
    EXPECT_NEAR(value, oracle::l1_ball_max(p_hat, eps, r, 2 * grid), 1e-9);
  }
}

TEST(Optimism, GlobalRateIsUpperEnd) {
  const auto model = two_class();
  ConfidenceSet conf;
  conf.lambda_hi = 2.7;
  conf.p_hat = {0.45, 0.55};
  conf.eps_p = 0.1;
  const auto rates = optimistic_model(conf, expected_rewards(model));
  for (int s = 0; s <= 20; ++s) EXPECT_NEAR(rates.global(s), 2.7, 1e-12);
  EXPECT_NEAR(rates(3, 0), 2.7 * 0.5, 1e-12);
}

TEST(Learner, SingleClassOptimismIsRateOnly) {
  QueueModel model;
  model.capacity = 4;
  model.servers = 1;
  model.service_rate = 1.0;
  model.classes = {{1.0, 0.0, 1.0, {}}};
  model.lambda_min = 0.5;
  model.lambda_max = 2.0;
  LearnerOptions opts;
  opts.t1 = 50;
  opts.episodes = 5;
  opts.seed = 3;
  const auto run = ucrl_ac_run(model, opts);
  for (const auto& e : run.episodes) {
    EXPECT_EQ(e.conf.p_hat, (std::vector<double>{1.0}));
    EXPECT_EQ(e.policy, Policy::accept_all(4, 1));
  }
}

TEST(Learner, DeterministicPerSeed) {
  const auto model = two_class();
  LearnerOptions opts;
  opts.t1 = 100;
  opts.episodes = 6;
  opts.seed = 42;
  const auto a = ucrl_ac_run(model, opts);
  const auto b = ucrl_ac_run(model, opts);
  EXPECT_EQ(a.regret.checkpoints, b.regret.checkpoints);
  opts.seed = 43;
  const auto c = ucrl_ac_run(model, opts);
  EXPECT_NE(a.regret.checkpoints, c.regret.checkpoints);
}

TEST(Learner, RecordsFollowTheSchedule) {
  const auto model = two_class();
  LearnerOptions opts;
  opts.t1 = 100;
  opts.episodes = 6;
  opts.seed = 1;
  const auto run = ucrl_ac_run(model, opts);
  ASSERT_EQ(run.episodes.size(), 6u);
  const EpisodeSchedule schedule{100};
  for (const auto& e : run.episodes) {
    EXPECT_EQ(e.length, schedule.length(e.k));
    EXPECT_EQ(e.end, schedule.end(e.k));
    EXPECT_LE(e.conf.lambda_lo, e.conf.lambda_hi);
    EXPECT_GE(e.conf.lambda_lo, model.lambda_min);
    EXPECT_LE(e.conf.lambda_hi, model.lambda_max);
  }
  EXPECT_EQ(run.regret.checkpoints.back().first, schedule.end(6));
  EXPECT_EQ(run.episodes.back().regret_at_end, run.regret.checkpoints.back().second);
}

TEST(Learner, RejectsShortFirstEpisode) {
  const auto model = two_class();
  LearnerOptions opts;
  opts.t1 = 3.0;  // mu * t1 < 1
  EXPECT_THROW(ucrl_ac_run(model, opts), std::invalid_argument);
}
