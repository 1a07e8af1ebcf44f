#pragma once

// Admission control to an M/M/c/S queue viewed as a controlled birth-death
// chain on states 0..S. Everything here is a pure function of immutable
// inputs.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace admission {

/// Bitmask over job classes; bit i set means class i is admitted.
using ClassSet = std::uint64_t;
inline constexpr int kMaxClasses = 64;

inline constexpr ClassSet class_bit(int i) { return ClassSet{1} << i; }

struct JobClass {
  double reward = 0.0;        // immediate reward on admission
  double holding_cost = 0.0;  // cost per unit of waiting time
  double arrival_rate = 0.0;  // Poisson rate of this class
  // Optional E[C(W(s))] for s = 0..S-1. When non-empty it replaces the
  // linear-cost Erlang mean.
  std::vector<double> expected_cost;
};

struct QueueModel {
  int capacity = 1;  // S, states are 0..S
  int servers = 1;   // c
  double service_rate = 1.0;  // per-server rate mu
  std::vector<JobClass> classes;
  double lambda_min = 0.0;
  double lambda_max = 0.0;

  int num_classes() const { return static_cast<int>(classes.size()); }
  /// Total service rate min(s, c) * mu.
  double service(int s) const;
  double max_service() const { return service(capacity); }
  double global_rate() const;
  double max_reward() const;
  std::vector<double> arrival_rates() const;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

/// Expected admission rewards r(i, s) for s = 0..S-1 together with the
/// per-state priority order (decreasing reward, ties to the smaller index).
class RewardTable {
 public:
  RewardTable() = default;
  /// rewards[s][i], one row per state 0..S-1.
  explicit RewardTable(std::vector<std::vector<double>> rewards);

  int states() const { return static_cast<int>(rewards_.size()); }
  int classes() const { return num_classes_; }
  double operator()(int s, int i) const { return rewards_[s][i]; }
  std::span<const double> row(int s) const { return rewards_[s]; }
  /// Classes sorted by decreasing r(., s).
  std::span<const int> priority(int s) const { return priority_[s]; }
  double max_in_state(int s) const;

 private:
  int num_classes_ = 0;
  std::vector<std::vector<double>> rewards_;
  std::vector<std::vector<int>> priority_;
};

RewardTable expected_rewards(const QueueModel& model);

/// Per-state, per-class arrival rates lambda_i(s). Rows cover s = 0..S; the
/// row for S never influences the dynamics.
class RateField {
 public:
  RateField() = default;
  RateField(int capacity, int num_classes);

  /// State-independent field holding the model's true rates.
  static RateField constant(const QueueModel& model);
  static RateField constant(int capacity, std::span<const double> rates);

  int capacity() const { return capacity_; }
  int classes() const { return num_classes_; }
  double operator()(int s, int i) const { return rates_[index(s, i)]; }
  double& at(int s, int i) { return rates_[index(s, i)]; }
  double global(int s) const;
  bool state_independent(double tol = 0.0) const;

 private:
  std::size_t index(int s, int i) const {
    return static_cast<std::size_t>(s) * num_classes_ + i;
  }
  int capacity_ = 0;
  int num_classes_ = 0;
  std::vector<double> rates_;
};

/// Deterministic stationary policy: admitted classes per state 0..S-1.
/// State S admits nothing.
class Policy {
 public:
  Policy() = default;
  explicit Policy(int capacity) : accept_(capacity, 0) {}

  static Policy accept_all(int capacity, int num_classes);
  static Policy reject_all(int capacity) { return Policy(capacity); }

  int capacity() const { return static_cast<int>(accept_.size()); }
  ClassSet admitted(int s) const {
    return s < capacity() ? accept_[s] : ClassSet{0};
  }
  bool accepts(int s, int i) const { return (admitted(s) & class_bit(i)) != 0; }
  void set(int s, ClassSet classes) { accept_[s] = classes; }
  void admit(int s, int i) { accept_[s] |= class_bit(i); }

  /// Number of admitted classes per state, summed.
  int total_admissions() const;
  /// True when each state's admitted set is a prefix of table.priority(s).
  bool prefix_closed(const RewardTable& table) const;
  /// Per class i, the first state where i is rejected (S if never).
  std::vector<int> thresholds(int num_classes) const;
  /// Class i admitted iff s < threshold(i), for every class.
  bool is_trunk_reservation(int num_classes) const;
  /// Statewise superset relation.
  bool contains(const Policy& other) const;

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::vector<ClassSet> accept_;
};

/// Birth rates and reward rates of the chain induced by a policy, both of
/// length S+1 with a zero entry for state S.
struct Dynamics {
  std::vector<double> birth;
  std::vector<double> reward;
};

Dynamics effective_dynamics(const Policy& policy, const RateField& rates,
                            const RewardTable& table);

/// Product-form stationary law of the birth-death chain. Weights switch to
/// log space when a partial product leaves [1e-300, 1e300].
std::vector<double> stationary_distribution(std::span<const double> birth,
                                            const QueueModel& model);

double average_reward(const Dynamics& dyn, const QueueModel& model);

/// Backward recursion from mu(S) * dh(S-1) = gain. O(S).
std::vector<double> relative_bias_recursive(double gain, const Dynamics& dyn,
                                            const QueueModel& model);

/// dh = U (gain * e - R) with the upper-triangular product matrix U. O(S^2);
/// used to cross-check the recursion.
std::vector<double> relative_bias_matrix(double gain, const Dynamics& dyn,
                                         const QueueModel& model);

struct Evaluation {
  double gain = 0.0;
  std::vector<double> relative_bias;  // dh(s) = h(s) - h(s+1), s = 0..S-1

  /// Full bias normalised so that h(S) = 0.
  std::vector<double> bias() const;
};

/// Gain and relative bias through the closed forms.
Evaluation evaluate(const Policy& policy, const RateField& rates,
                    const QueueModel& model, const RewardTable& table);

struct DenseEvaluation {
  double gain = 0.0;
  std::vector<double> bias;  // h(0..S), h(S) = 0
};

/// Solves rho = R + Z h together with h(S) = 0 as one dense linear system.
DenseEvaluation evaluate_dense(const Policy& policy, const RateField& rates,
                               const QueueModel& model,
                               const RewardTable& table);

/// max_s |rho - R(s) + birth(s) dh(s) - mu(s) dh(s-1)| over s = 0..S.
double balance_residual(double gain, std::span<const double> relative_bias,
                        const Dynamics& dyn, const QueueModel& model);

/// Lower bound on the diameter of the uniformized chain (U = Lambda + mu(S)).
/// Uses the M/M/1/S, M/M/S/S or M/M/c/S closed form as appropriate; at the
/// removable singularity c*mu == Lambda the geometric ratio is replaced by
/// its term count.
double diameter_lower_bound(const QueueModel& model, double global_rate);

struct BiasBoundReport {
  std::vector<bool> positive;   // 0 < dh(s)
  std::vector<bool> below_cap;  // dh(s) <= rho / mu_max
  bool gain_below_state0 = false;  // rho <= sum_i lambda_i(0) R_i
  bool gain_below_max = false;     // rho <= Lambda_max R_max
  bool all_pass() const;
};

BiasBoundReport check_bias_bounds(const Evaluation& eval,
                                  const QueueModel& model,
                                  const RateField& rates);

}  // namespace admission
