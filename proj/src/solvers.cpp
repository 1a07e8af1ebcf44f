#include "admission/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace admission {

const char* to_string(SolverKind kind) {
  return kind == SolverKind::PolicyIteration ? "PI" : "VI";
}

Policy improve(const RewardTable& table, const std::vector<double>& relative_bias,
               TieRule rule) {
  const int S = table.states();
  if (static_cast<int>(relative_bias.size()) != S)
    throw std::invalid_argument("improve: relative bias must have S entries");
  Policy next(S);
  for (int s = 0; s < S; ++s) {
    const double bar = relative_bias[s];
    for (int i = 0; i < table.classes(); ++i) {
      const bool admit = rule == TieRule::Accept
                             ? table(s, i) >= bar - kTieTolerance
                             : table(s, i) > bar + kTieTolerance;
      if (admit) next.admit(s, i);
    }
  }
  return next;
}

SolveResult policy_iteration(const RateField& rates, const QueueModel& model,
                             const RewardTable& table,
                             const PolicyIterationOptions& options) {
  const int S = model.capacity;
  const int m = model.num_classes();
  const int cap = options.max_iterations > 0 ? options.max_iterations
                                             : 10 * (m + 1) * S;
  SolveResult result;
  result.method = SolverKind::PolicyIteration;
  result.policy = options.initial ? *options.initial : Policy::accept_all(S, m);
  if (result.policy.capacity() != S)
    throw std::invalid_argument("policy_iteration: initial policy size != S");

  for (int it = 1; it <= cap; ++it) {
    result.eval = evaluate(result.policy, rates, model, table);
    Policy next = improve(table, result.eval.relative_bias, options.tie_rule);
    result.iterations = it;
    if (next == result.policy) return result;
    result.policy = std::move(next);
  }
  throw NonTermination("policy_iteration: no fixed point after " +
                       std::to_string(cap) + " iterations");
}

std::vector<double> UniformizedChain::apply(const std::vector<double>& u) const {
  const std::size_t n = u.size();
  std::vector<double> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    double v = stay[s] * u[s];
    if (s > 0) v += down[s] * u[s - 1];
    if (s + 1 < n) v += up[s] * u[s + 1];
    out[s] = v;
  }
  return out;
}

UniformizedChain uniformize(const RateField& rates, const Policy& policy,
                            const QueueModel& model, const RewardTable& table) {
  const auto dyn = effective_dynamics(policy, rates, table);
  const int S = model.capacity;
  UniformizedChain chain;
  chain.rate = model.lambda_max + model.max_service();
  chain.down.assign(S + 1, 0.0);
  chain.stay.assign(S + 1, 0.0);
  chain.up.assign(S + 1, 0.0);
  chain.reward.assign(S + 1, 0.0);
  for (int s = 0; s <= S; ++s) {
    const double birth = dyn.birth[s];
    if (birth > model.lambda_max * (1 + 1e-12))
      throw std::invalid_argument("uniformize: birth rate exceeds lambda_max in state " +
                                  std::to_string(s));
    chain.up[s] = birth / chain.rate;
    chain.down[s] = model.service(s) / chain.rate;
    chain.stay[s] = 1.0 - chain.up[s] - chain.down[s];
    chain.reward[s] = dyn.reward[s] / chain.rate;
  }
  return chain;
}

std::vector<double> warm_start_from(const Evaluation& eval) {
  std::vector<double> u(eval.relative_bias.size() + 1, 0.0);
  for (std::size_t s = 1; s < u.size(); ++s)
    u[s] = u[s - 1] - eval.relative_bias[s - 1];
  return u;
}

SolveResult value_iteration(const RateField& rates, const QueueModel& model,
                            const RewardTable& table,
                            const ValueIterationOptions& options) {
  if (!(options.epsilon > 0.0))
    throw std::invalid_argument("value_iteration: epsilon must be positive");
  const int S = model.capacity;
  std::vector<double> u = options.warm_start
                              ? *options.warm_start
                              : std::vector<double>(S + 1, 0.0);
  if (static_cast<int>(u.size()) != S + 1)
    throw std::invalid_argument("value_iteration: warm start must have S+1 entries");

  const double U = model.lambda_max + model.max_service();
  const double stop = options.epsilon / U;
  std::vector<double> diff(S);

  SolveResult result;
  result.method = SolverKind::ValueIteration;
  for (int it = 1; it <= options.max_iterations; ++it) {
    for (int s = 0; s < S; ++s) diff[s] = u[s] - u[s + 1];
    result.policy = improve(table, diff);
    const auto chain = uniformize(rates, result.policy, model, table);
    auto next = chain.apply(u);
    double lo = INFINITY, hi = -INFINITY;
    for (int s = 0; s <= S; ++s) {
      next[s] += chain.reward[s];
      const double d = next[s] - u[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    u = std::move(next);
    result.iterations = it;
    result.vi_residual = hi - lo;
    if (result.vi_residual < stop) {
      result.eval = evaluate(result.policy, rates, model, table);
      return result;
    }
  }
  throw NonTermination("value_iteration: span criterion not met after " +
                       std::to_string(options.max_iterations) + " iterations");
}

double bellman_residual(const Evaluation& eval, const RateField& rates,
                        const QueueModel& model, const RewardTable& table) {
  const int S = model.capacity;
  double worst = 0.0;
  for (int s = 0; s <= S; ++s) {
    // Best prefix of the priority order; the empty action scores zero.
    double best = 0.0;
    if (s < S) {
      double prefix = 0.0;
      for (int i : table.priority(s)) {
        prefix += rates(s, i) * (table(s, i) - eval.relative_bias[s]);
        best = std::max(best, prefix);
      }
    }
    const double departures =
        s > 0 ? model.service(s) * eval.relative_bias[s - 1] : 0.0;
    worst = std::max(worst, std::abs(eval.gain - best - departures));
  }
  return worst;
}

}  // namespace admission
