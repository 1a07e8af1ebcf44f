#include "admission/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

namespace admission {

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  if (!(t1 > 0.0)) throw ConfigError("key 't1' must be positive");
  if (!(model.service_rate * t1 > 1.0))
    throw ConfigError("key 't1' must satisfy mu * t1 > 1");
  if (episodes < 1) throw ConfigError("key 'episodes' must be >= 1");
  if (num_seeds < 1) throw ConfigError("key 'seeds' must be >= 1");
  if (checkpoints < 2) throw ConfigError("key 'checkpoints' must be >= 2");
}

SolverKind parse_solver(const std::string& name) {
  if (name == "pi" || name == "PI") return SolverKind::PolicyIteration;
  if (name == "vi" || name == "VI") return SolverKind::ValueIteration;
  throw ConfigError("key 'solver' must be 'pi' or 'vi'");
}

ExperimentConfig config_from_json(const Json& doc) {
  ExperimentConfig config;
  config.model = model_from_json(doc);
  auto get_number = [&doc](const char* key, double fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc.at(key).is_number())
      throw ConfigError(std::string("key '") + key + "' must be a number");
    return doc.at(key).get<double>();
  };
  auto get_int = [&doc](const char* key, long long fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc.at(key).is_number_integer())
      throw ConfigError(std::string("key '") + key + "' must be an integer");
    return doc.at(key).get<long long>();
  };
  config.t1 = get_number("t1", config.t1);
  config.num_seeds = static_cast<int>(get_int("seeds", config.num_seeds));
  config.seed = static_cast<std::uint64_t>(get_int("seed", 0));
  config.checkpoints = static_cast<int>(get_int("checkpoints", config.checkpoints));
  config.episodes = static_cast<int>(get_int("episodes", config.episodes));
  if (doc.contains("horizon")) {
    const int k = EpisodeSchedule{config.t1}.episodes_for(get_number("horizon", 0.0));
    if (doc.contains("episodes") && k != config.episodes)
      throw ConfigError("keys 'horizon' and 'episodes' disagree");
    config.episodes = k;
  }
  if (doc.contains("solver")) {
    if (!doc.at("solver").is_string()) throw ConfigError("key 'solver' must be a string");
    config.solver = parse_solver(doc.at("solver").get<std::string>());
  }
  if (doc.contains("out")) {
    if (!doc.at("out").is_string()) throw ConfigError("key 'out' must be a string");
    config.output_dir = doc.at("out").get<std::string>();
  }
  config.validate();
  return config;
}

Json to_json(const ExperimentConfig& config) {
  Json doc = to_json(config.model);
  doc["t1"] = config.t1;
  doc["episodes"] = config.episodes;
  doc["horizon"] = config.horizon();
  doc["seeds"] = config.num_seeds;
  doc["seed"] = config.seed;
  doc["solver"] = config.solver == SolverKind::PolicyIteration ? "pi" : "vi";
  doc["checkpoints"] = config.checkpoints;
  doc["out"] = config.output_dir.string();
  return doc;
}

std::vector<double> log_grid(double t1, double horizon, int n) {
  if (!(t1 > 0.0) || horizon < t1 || n < 2)
    throw std::invalid_argument("log_grid: need 0 < t1 <= T and n >= 2");
  std::vector<double> grid(n);
  const double step = std::log(horizon / t1) / (n - 1);
  for (int i = 0; i < n; ++i) grid[i] = t1 * std::exp(step * i);
  grid.front() = t1;
  grid.back() = horizon;
  return grid;
}

double BoundCurve::at(double T, double t1, double service_rate) const {
  if (T < t1) throw std::invalid_argument("bound: T must be >= t1");
  return a * std::sqrt(T * std::log(2.0 * service_rate * T)) +
         b * (1.0 + std::log2(T / t1)) + c;
}

double worst_case_v(const QueueModel& model) {
  const int S = model.capacity;
  const double lmax = model.lambda_max;
  double best = 0.0;
  for (int s = 0; s < S; ++s) {
    double sum = 0.0;
    double prod = 1.0;
    for (int q = s + 1; q <= S; ++q) {
      sum += prod;
      if (q < S) prod *= lmax / model.service(q + 1);
    }
    best = std::max(best, sum);
  }
  return lmax * model.max_reward() / model.service_rate * best;
}

BoundCurve theoretical_bound(const QueueModel& model, double global_rate,
                             double t1, double rho_star,
                             const std::vector<double>& grid, SolverKind method) {
  const double lmax = model.lambda_max;
  const double lmin = model.lambda_min;
  const double rmax = model.max_reward();
  const double mu = model.service_rate;
  const double mu_max = model.max_service();
  const double lambda = global_rate;
  const int m = model.num_classes();

  const double rate_term =
      4.0 * lmax * lmax / (lmin * std::sqrt(lambda)) + std::sqrt(m * lambda);
  const double episode_term = (4.0 / mu + 14.0 / lambda) * rho_star;

  BoundCurve curve;
  curve.method = method;
  curve.c = rho_star * t1;
  if (method == SolverKind::PolicyIteration) {
    curve.a = 14.0 * rate_term * (1.0 + lmax / mu_max) * rmax;
    curve.b = episode_term + model.capacity * lmax * rmax / mu_max;
  } else {
    curve.v = worst_case_v(model);
    curve.a = 14.0 * rate_term * (rmax + curve.v);
    curve.b = episode_term + rmax + curve.v;
  }
  for (double T : grid) curve.points.emplace_back(T, curve.at(T, t1, mu));
  return curve;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

std::vector<AggregatePoint> aggregate(const std::vector<RegretSeries>& series) {
  std::vector<AggregatePoint> out;
  if (series.empty()) return out;
  const auto n = series.front().checkpoints.size();
  for (const auto& s : series)
    if (s.checkpoints.size() != n)
      throw std::invalid_argument("aggregate: series use different grids");
  std::vector<double> column(series.size());
  for (std::size_t j = 0; j < n; ++j) {
    AggregatePoint point;
    point.t = series.front().checkpoints[j].first;
    double total = 0.0;
    for (std::size_t r = 0; r < series.size(); ++r) {
      column[r] = series[r].checkpoints[j].second;
      total += column[r];
    }
    point.mean = total / series.size();
    point.lo = percentile(column, 0.025);
    point.hi = percentile(column, 0.975);
    out.push_back(point);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto& model = config.model;
  const auto table = expected_rewards(model);
  const double horizon = config.horizon();

  ExperimentResult result;
  result.exact = policy_iteration(RateField::constant(model), model, table);
  result.diameter = diameter_lower_bound(model, model.global_rate());

  LearnerOptions base;
  base.t1 = config.t1;
  base.episodes = config.episodes;
  base.solver = config.solver;
  base.checkpoints = log_grid(config.t1, horizon, config.checkpoints);

  for (int n = 0; n < config.num_seeds; ++n)
    result.seeds.push_back(derive_seed(config.seed, static_cast<std::uint64_t>(n) + 1));
  result.runs.resize(config.num_seeds);

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int n = next++; n < config.num_seeds; n = next++) {
      try {
        LearnerOptions options = base;
        options.seed = result.seeds[n];
        result.runs[n] = ucrl_ac_run(model, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(
      config.threads > 0 ? config.threads
                         : static_cast<int>(std::thread::hardware_concurrency()),
      1, config.num_seeds);
  std::vector<std::jthread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);

  std::vector<RegretSeries> series;
  for (const auto& run : result.runs) series.push_back(run.regret);
  result.mean_regret = aggregate(series);

  std::vector<double> grid;
  for (const auto& p : result.mean_regret) grid.push_back(p.t);
  result.bound = theoretical_bound(model, model.global_rate(), config.t1,
                                   result.exact.eval.gain, grid, config.solver);
  return result;
}

std::string regret_csv(const RegretSeries& series) {
  std::ostringstream out;
  out << "T,delta\n";
  for (const auto& [t, d] : series.checkpoints) out << num(t) << ',' << num(d) << '\n';
  return out.str();
}

std::string aggregate_csv(const std::vector<AggregatePoint>& points) {
  std::ostringstream out;
  out << "T,mean,lo,hi\n";
  for (const auto& p : points)
    out << num(p.t) << ',' << num(p.mean) << ',' << num(p.lo) << ',' << num(p.hi) << '\n';
  return out.str();
}

std::string episodes_csv(const ExperimentResult& result, int num_classes) {
  std::ostringstream out;
  out << "seed,k,t_k,T_k,lambda_hat,eps_lambda,lambda_lo,lambda_hi,lambda_bar,eps_p";
  for (int i = 0; i < num_classes; ++i) out << ",p_hat_" << i;
  for (int i = 0; i < num_classes; ++i) out << ",threshold_" << i;
  out << ",optimistic_gain,solver_iterations,arrivals,regret\n";
  for (std::size_t n = 0; n < result.runs.size(); ++n) {
    for (const auto& e : result.runs[n].episodes) {
      out << n << ',' << e.k << ',' << num(e.length) << ',' << num(e.end) << ','
          << num(e.conf.lambda_hat) << ',' << num(e.conf.eps_lambda) << ','
          << num(e.conf.lambda_lo) << ',' << num(e.conf.lambda_hi) << ','
          << num(e.conf.lambda_bar) << ',' << num(e.conf.eps_p);
      for (double p : e.conf.p_hat) out << ',' << num(p);
      for (int level : e.policy.thresholds(num_classes)) out << ',' << level;
      out << ',' << num(e.optimistic_gain) << ',' << e.solver_iterations << ','
          << e.arrivals << ',' << num(e.regret_at_end) << '\n';
    }
  }
  return out.str();
}

std::string bound_csv(const BoundCurve& curve) {
  std::ostringstream out;
  out << "T,bound\n";
  for (const auto& [t, b] : curve.points) out << num(t) << ',' << num(b) << '\n';
  return out.str();
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  const int m = config.model.num_classes();
  for (std::size_t n = 0; n < result.runs.size(); ++n)
    write_text(dir / ("regret_seed_" + std::to_string(n) + ".csv"),
               regret_csv(result.runs[n].regret));
  write_text(dir / "regret_agg.csv", aggregate_csv(result.mean_regret));
  write_text(dir / "episodes.csv", episodes_csv(result, m));
  write_text(dir / "bound.csv", bound_csv(result.bound));

  Json solve = to_json(result.exact, m);
  solve["diameter_lower_bound"] = result.diameter;
  write_text(dir / "solve.json", solve.dump(2) + "\n");

  Json bound{{"method", to_string(result.bound.method)},
             {"a", result.bound.a},
             {"b", result.bound.b},
             {"c", result.bound.c}};
  if (result.bound.method == SolverKind::ValueIteration) {
    bound["V"] = result.bound.v;
    bound["V_note"] = "worst case: lambda_max used for every optimistic birth rate";
  }
  Json meta{{"config", to_json(config)},
            {"seeds", result.seeds},
            {"band", "empirical 2.5% and 97.5% percentiles across seeds"},
            {"bound", bound},
            {"version", "1.0.0"}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace admission
