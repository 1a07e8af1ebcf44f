#pragma once

// Experiment orchestration: multi-seed learning runs, regret aggregation,
// theoretical bound curves and CSV/JSON persistence.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "admission/io.hpp"
#include "admission/learner.hpp"

namespace admission {

struct ExperimentConfig {
  QueueModel model;
  double t1 = 100.0;
  int episodes = 1;  // horizon is t1 * 2^(episodes-1)
  int num_seeds = 1;
  std::uint64_t seed = 0;  // master seed
  SolverKind solver = SolverKind::PolicyIteration;
  int checkpoints = 200;   // log-spaced grid size in [t1, T]
  std::filesystem::path output_dir = "out";
  int threads = 0;         // 0 selects hardware concurrency

  double horizon() const { return EpisodeSchedule{t1}.end(episodes); }
  void validate() const;
};

/// Model keys plus optional t1, horizon | episodes, seeds, seed, solver,
/// checkpoints, out.
ExperimentConfig config_from_json(const Json& doc);
Json to_json(const ExperimentConfig& config);

SolverKind parse_solver(const std::string& name);

/// n log-spaced times from t1 to T inclusive.
std::vector<double> log_grid(double t1, double horizon, int n);

struct BoundCurve {
  SolverKind method = SolverKind::PolicyIteration;
  double a = 0.0, b = 0.0, c = 0.0;
  double v = 0.0;  // VI only; worst case with Lambda_max in every birth rate
  std::vector<std::pair<double, double>> points;  // (T, bound)

  double at(double T, double t1, double service_rate) const;
};

/// Worst-case V: Lambda_max R_max / mu * max_s sum_{q>s} prod Lambda_max / mu(p+1).
double worst_case_v(const QueueModel& model);

BoundCurve theoretical_bound(const QueueModel& model, double global_rate,
                             double t1, double rho_star,
                             const std::vector<double>& grid, SolverKind method);

struct AggregatePoint {
  double t = 0.0;
  double mean = 0.0;
  double lo = 0.0;  // 2.5% empirical percentile
  double hi = 0.0;  // 97.5% empirical percentile
};

/// Linear-interpolation percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

std::vector<AggregatePoint> aggregate(const std::vector<RegretSeries>& series);

struct ExperimentResult {
  std::vector<std::uint64_t> seeds;
  std::vector<LearnerRun> runs;
  std::vector<AggregatePoint> mean_regret;
  SolveResult exact;
  double diameter = 0.0;
  BoundCurve bound;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// regret_seed_<n>.csv, regret_agg.csv, episodes.csv, bound.csv, solve.json,
/// meta.json under config.output_dir.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

std::string regret_csv(const RegretSeries& series);
std::string aggregate_csv(const std::vector<AggregatePoint>& points);
std::string episodes_csv(const ExperimentResult& result, int num_classes);
std::string bound_csv(const BoundCurve& curve);

}  // namespace admission
