#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "admission/solvers.hpp"
#include "oracles.hpp"

using namespace admission;

namespace {

QueueModel make(int S, int c, double mu, std::vector<double> lambda,
                std::vector<double> reward, double gamma = 0.0) {
  QueueModel model;
  model.capacity = S;
  model.servers = c;
  model.service_rate = mu;
  double total = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    model.classes.push_back({reward[i], gamma, lambda[i], {}});
    total += lambda[i];
  }
  model.lambda_min = total;
  model.lambda_max = total;
  return model;
}

QueueModel three_state() { return make(2, 1, 1.0, {1.0}, {1.0}); }

QueueModel two_class() {
  auto model = make(20, 5, 0.3, {1.0, 1.0}, {20.0, 10.0}, 0.1);
  model.lambda_min = 1.0;
  model.lambda_max = 4.0;
  return model;
}

}  // namespace

TEST(Improve, AcceptsWhenRewardClearsBias) {
  const auto model = three_state();
  const auto p = improve(expected_rewards(model), {1.0 / 3, 2.0 / 3});
  EXPECT_EQ(p, Policy::accept_all(2, 1));
}

TEST(Improve, RejectsWhenBiasExceedsEveryReward) {
  const auto model = make(2, 1, 1.0, {1, 1}, {3, 2});
  const auto p = improve(expected_rewards(model), {3.5, 1.0});
  EXPECT_EQ(p.admitted(0), 0u);
  EXPECT_EQ(p.admitted(1), 0b11u);
}

TEST(Improve, ExactTieIsAccepted) {
  const auto model = make(1, 1, 1.0, {1}, {2});
  const auto table = expected_rewards(model);
  EXPECT_TRUE(improve(table, {2.0}).accepts(0, 0));
  EXPECT_FALSE(improve(table, {2.0}, TieRule::Reject).accepts(0, 0));
}

TEST(PolicyIteration, ThreeStateFixedPoint) {
  const auto model = three_state();
  const auto result = policy_iteration(RateField::constant(model), model, expected_rewards(model));
  EXPECT_EQ(result.policy, Policy::accept_all(2, 1));
  EXPECT_NEAR(result.eval.gain, 2.0 / 3, 1e-15);
}

TEST(PolicyIteration, ZeroRewardsRejectEverything) {
  auto model = make(5, 2, 1.0, {1, 1}, {0, 0}, 0.5);
  const auto result = policy_iteration(RateField::constant(model), model, expected_rewards(model));
  EXPECT_EQ(result.eval.gain, 0.0);
  for (int s = 0; s < 5; ++s) {
    // Zero-reward classes tie with a zero bias in free-server states.
    for (int i = 0; i < 2; ++i)
      if (result.policy.accepts(s, i)) EXPECT_EQ(expected_rewards(model)(s, i), 0.0);
  }
}

TEST(PolicyIteration, TwoClassModelIsTrunkReservation) {
  const auto model = two_class();
  const auto rates = RateField::constant(model);
  const auto result = policy_iteration(rates, model, expected_rewards(model));
  EXPECT_TRUE(result.policy.is_trunk_reservation(2));
  const auto levels = result.policy.thresholds(2);
  EXPECT_GE(levels[0], levels[1]);
  EXPECT_TRUE(check_bias_bounds(result.eval, model, rates).all_pass());
  EXPECT_LE(bellman_residual(result.eval, rates, model, expected_rewards(model)), 1e-8);
}

TEST(PolicyIteration, StartingPointDoesNotChangeTheAnswer) {
  const auto model = two_class();
  const auto rates = RateField::constant(model);
  const auto table = expected_rewards(model);
  PolicyIterationOptions opts;
  opts.initial = Policy::reject_all(20);
  const auto a = policy_iteration(rates, model, table);
  const auto b = policy_iteration(rates, model, table, opts);
  EXPECT_EQ(a.policy, b.policy);
}

TEST(PolicyIteration, CapRaisesNonTermination) {
  const auto model = two_class();
  PolicyIterationOptions opts;
  opts.max_iterations = 1;
  EXPECT_THROW(policy_iteration(RateField::constant(model), model, expected_rewards(model), opts),
               NonTermination);
}

TEST(PolicyIteration, BeatsExhaustiveEnumeration) {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 20; ++n) {
    const int m = 1 + n % 3;
    const int S = m == 1 ? 10 : (m == 2 ? 7 : 5);
    const auto model = oracle::random_model(rng, S, m);
    const auto rates = n % 2 ? oracle::random_rates(rng, S, m, 1.0) : RateField::constant(model);
    const auto result = policy_iteration(rates, model, expected_rewards(model));
    double best = -INFINITY;
    oracle::for_each_prefix_policy(model, [&](const Policy& p) {
      best = std::max(best, oracle::gain_product_form(p, rates, model));
    });
    EXPECT_NEAR(result.eval.gain, best, 1e-10 * std::max(1.0, best));
  }
}

TEST(PolicyIteration, BellmanEquationOverAllSubsets) {
  std::mt19937_64 rng(4);
  for (int n = 0; n < 30; ++n) {
    const auto model = oracle::random_model(rng, 12, 3);
    const auto rates = oracle::random_rates(rng, 12, 3, 1.0);
    const auto result = policy_iteration(rates, model, expected_rewards(model));
    const auto& dh = result.eval.relative_bias;
    for (int s = 0; s <= 12; ++s) {
      const double drift = s < 12 ? oracle::best_subset_drift(model, rates, s, dh[s]) : 0.0;
      const double down = s > 0 ? oracle::service(model, s) * dh[s - 1] : 0.0;
      EXPECT_NEAR(result.eval.gain, drift + down, 1e-8 * std::max(1.0, result.eval.gain));
    }
  }
}

TEST(PolicyIteration, TieRuleDominatesStrictRule) {
  // Integer data makes exact ties between rewards and biases likely.
  std::mt19937_64 rng(13);
  for (int n = 0; n < 40; ++n) {
    auto model = make(8, 1 + n % 3, 1.0, {1.0, 1.0}, {2.0, 1.0});
    if (n % 2) model.classes[1].reward = 1.0 + static_cast<double>(rng() % 3);
    const auto rates = RateField::constant(model);
    const auto table = expected_rewards(model);
    PolicyIterationOptions strict;
    strict.tie_rule = TieRule::Reject;
    const auto a = policy_iteration(rates, model, table);
    const auto b = policy_iteration(rates, model, table, strict);
    EXPECT_TRUE(a.policy.contains(b.policy));
    EXPECT_NEAR(a.eval.gain, b.eval.gain, 1e-12);
  }
}

TEST(Uniformize, ThreeStateRows) {
  const auto model = three_state();
  const auto chain = uniformize(RateField::constant(model), Policy::accept_all(2, 1), model,
                                expected_rewards(model));
  EXPECT_EQ(chain.rate, 2.0);
  EXPECT_EQ(chain.stay[0], 0.5);
  EXPECT_EQ(chain.up[0], 0.5);
  EXPECT_EQ(chain.down[1], 0.5);
  EXPECT_EQ(chain.stay[1], 0.0);
  EXPECT_EQ(chain.up[1], 0.5);
  EXPECT_EQ(chain.down[2], 0.5);
  EXPECT_EQ(chain.stay[2], 0.5);
  EXPECT_EQ(chain.up[2], 0.0);
}

TEST(Uniformize, RejectAllOnlyMovesDown) {
  const auto model = two_class();
  const auto chain = uniformize(RateField::constant(model), Policy::reject_all(20), model,
                                expected_rewards(model));
  for (int s = 0; s <= 20; ++s) {
    EXPECT_EQ(chain.up[s], 0.0);
    EXPECT_NEAR(chain.down[s], model.service(s) / chain.rate, 1e-15);
    EXPECT_NEAR(chain.stay[s], 1.0 - model.service(s) / chain.rate, 1e-15);
  }
}

TEST(Uniformize, RowsAreStochastic) {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 50; ++n) {
    auto model = oracle::random_model(rng, 10, 2);
    const auto rates = oracle::random_rates(rng, 10, 2, model.lambda_max / 2);
    const auto chain = uniformize(rates, oracle::random_policy(rng, 10, 2), model,
                                  expected_rewards(model));
    for (int s = 0; s <= 10; ++s) {
      for (double v : {chain.down[s], chain.stay[s], chain.up[s]}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_NEAR(chain.down[s] + chain.stay[s] + chain.up[s], 1.0, 1e-12);
    }
  }
}

TEST(Uniformize, RejectsRatesAboveMaximum) {
  auto model = three_state();
  RateField rates(2, 1);
  for (int s = 0; s <= 2; ++s) rates.at(s, 0) = 1.5;
  EXPECT_THROW(uniformize(rates, Policy::accept_all(2, 1), model, expected_rewards(model)),
               std::invalid_argument);
}

TEST(ValueIteration, ThreeStateMatchesPolicyIteration) {
  const auto model = three_state();
  ValueIterationOptions opts;
  opts.epsilon = 1e-6;
  const auto vi = value_iteration(RateField::constant(model), model, expected_rewards(model), opts);
  EXPECT_EQ(vi.policy, Policy::accept_all(2, 1));
  EXPECT_NEAR(vi.eval.gain, 2.0 / 3, 1e-6);
}

TEST(ValueIteration, RequiresPositiveEpsilon) {
  const auto model = three_state();
  EXPECT_THROW(value_iteration(RateField::constant(model), model, expected_rewards(model), {}),
               std::invalid_argument);
}

TEST(ValueIteration, ExactWarmStartStopsAtOnce) {
  const auto model = two_class();
  const auto rates = RateField::constant(model);
  const auto table = expected_rewards(model);
  const auto pi = policy_iteration(rates, model, table);
  ValueIterationOptions opts;
  opts.epsilon = 1e-6;
  opts.warm_start = warm_start_from(pi.eval);
  const auto vi = value_iteration(rates, model, table, opts);
  EXPECT_LE(vi.iterations, 2);
  EXPECT_EQ(vi.policy, pi.policy);
}

TEST(ValueIteration, GainGapWithinEpsilon) {
  std::mt19937_64 rng(17);
  for (int n = 0; n < 30; ++n) {
    const auto model = oracle::random_model(rng, 10, 2);
    const auto rates = oracle::random_rates(rng, 10, 2, model.lambda_max / 2);
    const auto table = expected_rewards(model);
    const auto pi = policy_iteration(rates, model, table);
    for (double eps : {1e-3, 1e-6}) {
      ValueIterationOptions opts;
      opts.epsilon = eps;
      const auto vi = value_iteration(rates, model, table, opts);
      EXPECT_GE(oracle::gain_product_form(vi.policy, rates, model), pi.eval.gain - eps);
      EXPECT_LT(vi.vi_residual, eps / (model.lambda_max + model.max_service()));
    }
  }
}

TEST(ValueIteration, IterationsGrowSlowlyWithPrecision) {
  const auto model = two_class();
  const auto rates = RateField::constant(model);
  const auto table = expected_rewards(model);
  std::vector<int> counts;
  for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
    ValueIterationOptions opts;
    opts.epsilon = eps;
    counts.push_back(value_iteration(rates, model, table, opts).iterations);
  }
  // Equal steps in log(1/eps) add roughly equal iteration counts.
  const int first = counts[1] - counts[0];
  for (std::size_t k = 2; k < counts.size(); ++k)
    EXPECT_LE(counts[k] - counts[k - 1], 2 * first + 10);
}

TEST(SolveResult, MethodNames) {
  EXPECT_STREQ(to_string(SolverKind::PolicyIteration), "PI");
  EXPECT_STREQ(to_string(SolverKind::ValueIteration), "VI");
}
