#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "admission/model.hpp"

namespace admission {

namespace {

constexpr double kHugeWeight = 1e300;
constexpr double kTinyWeight = 1e-300;

void check_dims(const Policy& policy, const RateField& rates,
                const RewardTable& table) {
  if (policy.capacity() != table.states() ||
      rates.capacity() != table.states() || rates.classes() != table.classes())
    throw std::invalid_argument("policy, rate field and reward table disagree");
}

void check_dims(const Dynamics& dyn, const QueueModel& model) {
  const auto n = static_cast<std::size_t>(model.capacity) + 1;
  if (dyn.birth.size() != n || dyn.reward.size() != n)
    throw std::invalid_argument("dynamics must have S+1 entries");
}

}  // namespace

Dynamics effective_dynamics(const Policy& policy, const RateField& rates,
                            const RewardTable& table) {
  check_dims(policy, rates, table);
  const int S = table.states();
  Dynamics dyn{std::vector<double>(S + 1, 0.0),
               std::vector<double>(S + 1, 0.0)};
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < table.classes(); ++i) {
      if (!policy.accepts(s, i)) continue;
      dyn.birth[s] += rates(s, i);
      dyn.reward[s] += rates(s, i) * table(s, i);
    }
  }
  return dyn;
}

std::vector<double> stationary_distribution(std::span<const double> birth,
                                            const QueueModel& model) {
  const int S = model.capacity;
  if (static_cast<int>(birth.size()) < S)
    throw std::invalid_argument("birth rates must cover states 0..S-1");

  std::vector<double> weights(S + 1, 0.0);
  weights[0] = 1.0;
  bool out_of_range = false;
  for (int p = 1; p <= S; ++p) {
    weights[p] = weights[p - 1] * birth[p - 1] / model.service(p);
    if (weights[p] > kHugeWeight ||
        (weights[p] > 0.0 && weights[p] < kTinyWeight))
      out_of_range = true;
  }

  if (out_of_range) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> logw(S + 1, kNegInf);
    logw[0] = 0.0;
    for (int p = 1; p <= S; ++p) {
      if (logw[p - 1] == kNegInf || birth[p - 1] <= 0.0) break;
      logw[p] = logw[p - 1] + std::log(birth[p - 1]) - std::log(model.service(p));
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    for (int p = 0; p <= S; ++p)
      weights[p] = logw[p] == kNegInf ? 0.0 : std::exp(logw[p] - top);
  }

  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return weights;
}

double average_reward(const Dynamics& dyn, const QueueModel& model) {
  check_dims(dyn, model);
  const auto pi = stationary_distribution(dyn.birth, model);
  double gain = 0.0;
  for (std::size_t p = 0; p < pi.size(); ++p) gain += dyn.reward[p] * pi[p];
  return gain;
}

std::vector<double> relative_bias_recursive(double gain, const Dynamics& dyn,
                                            const QueueModel& model) {
  check_dims(dyn, model);
  const int S = model.capacity;
  std::vector<double> dh(S);
  dh[S - 1] = gain / model.service(S);
  for (int s = S - 1; s >= 1; --s)
    dh[s - 1] = (gain - dyn.reward[s] + dyn.birth[s] * dh[s]) / model.service(s);
  return dh;
}

std::vector<double> relative_bias_matrix(double gain, const Dynamics& dyn,
                                         const QueueModel& model) {
  check_dims(dyn, model);
  const int S = model.capacity;
  // Rows s = 0..S-1, columns q = 0..S.
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(S, S + 1);
  for (int s = 0; s < S; ++s) {
    double entry = 1.0 / model.service(s + 1);
    for (int q = s + 1; q <= S; ++q) {
      U(s, q) = entry;
      if (q < S) entry *= dyn.birth[q] / model.service(q + 1);
    }
  }
  Eigen::VectorXd excess(S + 1);
  for (int q = 0; q <= S; ++q) excess(q) = gain - dyn.reward[q];
  const Eigen::VectorXd dh = U * excess;
  return {dh.data(), dh.data() + S};
}

std::vector<double> Evaluation::bias() const {
  const auto S = relative_bias.size();
  std::vector<double> h(S + 1, 0.0);
  for (std::size_t s = S; s-- > 0;) h[s] = h[s + 1] + relative_bias[s];
  return h;
}

Evaluation evaluate(const Policy& policy, const RateField& rates,
                    const QueueModel& model, const RewardTable& table) {
  const auto dyn = effective_dynamics(policy, rates, table);
  Evaluation eval;
  eval.gain = average_reward(dyn, model);
  eval.relative_bias = relative_bias_recursive(eval.gain, dyn, model);
  return eval;
}

DenseEvaluation evaluate_dense(const Policy& policy, const RateField& rates,
                               const QueueModel& model,
                               const RewardTable& table) {
  const auto dyn = effective_dynamics(policy, rates, table);
  const int S = model.capacity;
  const int n = S + 2;  // unknowns: rho, h(0..S)
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  // rho - (Z h)(s) = R(s)
  for (int s = 0; s <= S; ++s) {
    const double up = s < S ? dyn.birth[s] : 0.0;
    const double down = model.service(s);
    A(s, 0) = 1.0;
    A(s, 1 + s) = up + down;
    if (s < S) A(s, 2 + s) = -up;
    if (s > 0) A(s, s) = -down;
    b(s) = dyn.reward[s];
  }
  A(S + 1, 1 + S) = 1.0;  // h(S) = 0

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible())
    throw std::runtime_error("evaluate_dense: singular linear system");
  const Eigen::VectorXd x = lu.solve(b);
  DenseEvaluation out;
  out.gain = x(0);
  out.bias.assign(x.data() + 1, x.data() + n);
  return out;
}

double balance_residual(double gain, std::span<const double> relative_bias,
                        const Dynamics& dyn, const QueueModel& model) {
  const int S = model.capacity;
  double worst = 0.0;
  for (int s = 0; s <= S; ++s) {
    double rhs = dyn.reward[s];
    if (s < S) rhs -= dyn.birth[s] * relative_bias[s];
    if (s > 0) rhs += model.service(s) * relative_bias[s - 1];
    worst = std::max(worst, std::abs(gain - rhs));
  }
  return worst;
}

bool BiasBoundReport::all_pass() const {
  return gain_below_state0 && gain_below_max &&
         std::all_of(positive.begin(), positive.end(), [](bool b) { return b; }) &&
         std::all_of(below_cap.begin(), below_cap.end(), [](bool b) { return b; });
}

BiasBoundReport check_bias_bounds(const Evaluation& eval,
                                  const QueueModel& model,
                                  const RateField& rates) {
  constexpr double kRelTol = 1e-9;
  const double slack = kRelTol * std::max(1.0, std::abs(eval.gain));
  const double cap = eval.gain / model.max_service();

  BiasBoundReport report;
  for (double dh : eval.relative_bias) {
    report.positive.push_back(dh > 0.0);
    report.below_cap.push_back(dh <= cap + slack);
  }
  double state0 = 0.0;
  for (int i = 0; i < model.num_classes(); ++i)
    state0 += rates(0, i) * model.classes[i].reward;
  report.gain_below_state0 = eval.gain <= state0 + slack;
  report.gain_below_max =
      eval.gain <= model.lambda_max * model.max_reward() + slack;
  return report;
}

}  // namespace admission
