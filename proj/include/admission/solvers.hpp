#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "admission/model.hpp"

namespace admission {

/// Raised when a solver exceeds its iteration cap.
class NonTermination : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolverKind { PolicyIteration, ValueIteration };

const char* to_string(SolverKind kind);

/// How improvement treats r(i, s) == dh(s).
enum class TieRule {
  Accept,  // r >= dh: converges to the bias optimal policy
  Reject,  // r > dh
};

inline constexpr double kTieTolerance = 1e-12;

struct SolveResult {
  Policy policy;
  Evaluation eval;
  int iterations = 0;
  SolverKind method = SolverKind::PolicyIteration;
  double vi_residual = 0.0;  // span of the last VI difference
};

/// accept(s) = {i : r(i, s) >= dh(s)} (or > under TieRule::Reject), with an
/// absolute tolerance of kTieTolerance.
Policy improve(const RewardTable& table, const std::vector<double>& relative_bias,
               TieRule rule = TieRule::Accept);

struct PolicyIterationOptions {
  std::optional<Policy> initial;  // default: accept all
  TieRule tie_rule = TieRule::Accept;
  int max_iterations = 0;         // 0 selects 10 (m+1) S
};

SolveResult policy_iteration(const RateField& rates, const QueueModel& model,
                             const RewardTable& table,
                             const PolicyIterationOptions& options = {});

/// Tridiagonal uniformized kernel P = I + Z / U with U = Lambda_max + mu_max.
struct UniformizedChain {
  double rate = 0.0;  // U
  std::vector<double> down, stay, up;  // P(s, s-1), P(s, s), P(s, s+1)
  std::vector<double> reward;          // R / U

  std::vector<double> apply(const std::vector<double>& u) const;  // P u
};

UniformizedChain uniformize(const RateField& rates, const Policy& policy,
                            const QueueModel& model, const RewardTable& table);

struct ValueIterationOptions {
  double epsilon = 0.0;  // gain tolerance, must be positive
  std::optional<std::vector<double>> warm_start;  // u0 over 0..S
  int max_iterations = 10'000'000;
};

SolveResult value_iteration(const RateField& rates, const QueueModel& model,
                            const RewardTable& table,
                            const ValueIterationOptions& options);

/// Warm start built from an evaluation: u0(0) = 0, u0(s) = -sum_{x<s} dh(x).
std::vector<double> warm_start_from(const Evaluation& eval);

/// Largest |rho - max_a [sum_{i in a} lambda_i(s)(r_i(s) - dh(s))] - mu(s) dh(s-1)|
/// over states, maximizing over the m+1 priority prefixes.
double bellman_residual(const Evaluation& eval, const RateField& rates,
                        const QueueModel& model, const RewardTable& table);

}  // namespace admission
