#pragma once

// UCRL-AC: episodic optimistic learning of unknown arrival rates.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "admission/model.hpp"
#include "admission/sim.hpp"
#include "admission/solvers.hpp"

namespace admission {

/// Thrown when a confidence set is requested from an episode without arrivals.
class EmptyEpisode : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Online truncated-mean estimator of 1 / Lambda plus class counts.
struct EstimatorState {
  long tau = 0;            // arrivals this episode
  double inv_mean = 0.0;   // truncated running mean of inter-arrival times
  double delta = 0.5;      // confidence parameter of this episode
  double lambda_min = 1.0;
  bool truncate = true;    // false disables truncation (plain running mean)
  std::vector<long> episode_counts;  // n_i this episode
  std::vector<long> total_counts;    // N_i over all episodes
  long total = 0;                    // N

  static EstimatorState start(int num_classes, double lambda_min, double delta);

  /// Resets tau, the running mean and the episode counts.
  void begin_episode(double episode_delta);
  /// sqrt(2 t / (Lambda_min^2 log(1/delta))).
  double threshold(long t) const;
  /// 1 / inv_mean, +inf while the mean is zero.
  double rate_estimate() const;
  void observe(double inter_arrival, int job_class);
};

EstimatorState update_estimator(EstimatorState state, double inter_arrival,
                                int job_class);

/// Deterministic doubling schedule: t_1 given, t_k = 2^(k-2) t_1, T_k = 2^(k-1) t_1.
struct EpisodeSchedule {
  double first = 1.0;

  double length(int k) const;
  double end(int k) const;
  double delta(int k, double service_rate) const;  // 1 / (mu t_k)
  /// K with end(K) == horizon; throws if the horizon is off the schedule.
  int episodes_for(double horizon) const;
};

struct ConfidenceSet {
  double lambda_hat = 0.0;
  double eps_lambda = 0.0;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  double lambda_bar = 0.0;
  std::vector<double> p_hat;
  double eps_p = 0.0;
};

/// Episode-1 set: Lambda = Lambda_max and all class mass on the top priority
/// class of each state (an L1 radius of 2 around the uniform vector).
ConfidenceSet initial_confidence(const QueueModel& model);

/// Confidence set from the episode just finished (its tau and delta).
/// Throws EmptyEpisode when tau == 0.
ConfidenceSet build_confidence(const EstimatorState& state,
                               const QueueModel& model,
                               bool refine_upper = true);

/// Upper rate from the reciprocal-scale radius eps.
double refine_lambda_bar_radius(double lambda_hat, double eps, double lambda_max);
double refine_lambda_bar(double lambda_hat, long arrivals, double delta,
                         const QueueModel& model);

/// Per-state optimistic class distribution: the L1-ball maximizer of
/// sum_i p_i r_i(s) around p_hat.
std::vector<double> optimistic_distribution(const std::vector<double>& p_hat,
                                            double eps_p,
                                            std::span<const int> priority);

/// Rates Lambda_hi * p~(s) for every state (row S copies row S-1).
RateField optimistic_model(const ConfidenceSet& conf, const RewardTable& table);

struct LearnerOptions {
  double t1 = 100.0;
  int episodes = 1;
  SolverKind solver = SolverKind::PolicyIteration;
  std::uint64_t seed = 0;  // per-run seed; episode streams derive from it
  std::vector<double> checkpoints;
  bool refine_upper = true;  // use the refined Lambda_bar upper rate
};

struct EpisodeRecord {
  int k = 0;
  double length = 0.0;
  double end = 0.0;
  ConfidenceSet conf;
  Policy policy;
  double optimistic_gain = 0.0;
  int solver_iterations = 0;
  long arrivals = 0;
  double regret_at_end = 0.0;
};

struct LearnerRun {
  double rho_star = 0.0;
  Policy optimal_policy;
  RegretSeries regret;
  std::vector<EpisodeRecord> episodes;
};

LearnerRun ucrl_ac_run(const QueueModel& model, const LearnerOptions& options);

}  // namespace admission
