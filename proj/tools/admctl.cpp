// admctl: exact solves, simulation and learning experiments for
// multi-class admission control.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "admission/harness.hpp"

using namespace admission;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string solver;
  std::string policy;
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  std::optional<double> horizon;
  std::optional<double> t1;
  std::optional<double> eps;
  int checkpoints = 0;
  int threads = 0;
};

void print_thresholds(const Policy& policy, int m) {
  const auto levels = policy.thresholds(m);
  std::printf("thresholds:");
  for (int level : levels) std::printf(" %d", level);
  std::printf("\n");
}

ExperimentConfig load(const Flags& f) {
  auto doc = read_json(f.config);
  // Command-line flags take precedence over document keys.
  if (f.t1) doc["t1"] = *f.t1;
  if (f.horizon) {
    doc["horizon"] = *f.horizon;
    doc.erase("episodes");
  }
  if (f.seeds) doc["seeds"] = *f.seeds;
  if (f.seed) doc["seed"] = *f.seed;
  if (!f.solver.empty()) doc["solver"] = f.solver;
  if (!f.out.empty()) doc["out"] = f.out;
  if (f.checkpoints > 0) doc["checkpoints"] = f.checkpoints;
  auto config = config_from_json(doc);
  config.threads = f.threads;
  return config;
}

int cmd_solve(const Flags& f) {
  const auto config = load(f);
  const auto& model = config.model;
  const auto table = expected_rewards(model);
  const auto rates = RateField::constant(model);
  SolveResult result;
  if (config.solver == SolverKind::PolicyIteration) {
    result = policy_iteration(rates, model, table);
  } else {
    if (!f.eps) throw std::invalid_argument("--eps is required with --solver vi");
    ValueIterationOptions options;
    options.epsilon = *f.eps;
    result = value_iteration(rates, model, table, options);
  }
  const int m = model.num_classes();
  std::printf("method: %s (%d iterations)\n", to_string(result.method), result.iterations);
  std::printf("rho: %.10g\n", result.eval.gain);
  print_thresholds(result.policy, m);
  std::printf("nabla_h:");
  for (double d : result.eval.relative_bias) std::printf(" %.10g", d);
  std::printf("\n");
  if (!f.out.empty()) {
    std::filesystem::create_directories(f.out);
    write_text(std::filesystem::path(f.out) / "solve.json", to_json(result, m).dump(2) + "\n");
  }
  return 0;
}

int cmd_simulate(const Flags& f) {
  const auto config = load(f);
  const auto& model = config.model;
  const auto table = expected_rewards(model);
  const int m = model.num_classes();
  Policy policy = f.policy.empty()
                      ? policy_iteration(RateField::constant(model), model, table).policy
                      : policy_from_json(read_json(f.policy), model.capacity, m);
  const double duration = f.horizon ? *f.horizon : config.horizon();
  Rng rng(derive_seed(config.seed, 0, 0));
  const auto log = simulate(model, table, policy, duration, rng);
  const auto exact = evaluate(policy, RateField::constant(model), model, table);

  std::printf("duration: %.10g\n", duration);
  std::printf("arrivals: %ld\n", log.arrivals);
  std::printf("reward: %.10g (rate %.10g, exact gain %.10g)\n", log.reward_collected,
              log.reward_collected / duration, exact.gain);
  const auto dyn = effective_dynamics(policy, RateField::constant(model), table);
  const auto pi = stationary_distribution(dyn.birth, model);
  std::printf("state  occupancy  stationary\n");
  for (int s = 0; s <= model.capacity; ++s)
    std::printf("%5d  %9.6f  %10.6f\n", s, log.sojourn[s] / duration, pi[s]);
  return 0;
}

int cmd_learn(const Flags& f) {
  const auto config = load(f);
  const auto result = run_experiment(config);
  write_outputs(config, result);
  const auto& last = result.mean_regret.back();
  std::printf("seeds: %d  horizon: %.10g  solver: %s\n", config.num_seeds,
              config.horizon(), to_string(config.solver));
  std::printf("rho*: %.10g\n", result.exact.eval.gain);
  std::printf("mean regret at T: %.10g [%.10g, %.10g]\n", last.mean, last.lo, last.hi);
  std::printf("bound at T: %.10g\n", result.bound.points.back().second);
  std::printf("outputs: %s\n", config.output_dir.string().c_str());
  return 0;
}

int cmd_bounds(const Flags& f) {
  const auto config = load(f);
  const auto& model = config.model;
  const auto table = expected_rewards(model);
  const auto exact = policy_iteration(RateField::constant(model), model, table);
  const auto grid = log_grid(config.t1, config.horizon(), config.checkpoints);
  const auto curve = theoretical_bound(model, model.global_rate(), config.t1,
                                       exact.eval.gain, grid, config.solver);
  std::printf("method: %s\n", to_string(curve.method));
  std::printf("a: %.10g\nb: %.10g\nc: %.10g\n", curve.a, curve.b, curve.c);
  if (curve.method == SolverKind::ValueIteration)
    std::printf("V: %.10g (worst case)\n", curve.v);
  std::printf("bound(T=%.10g): %.10g\n", curve.points.back().first,
              curve.points.back().second);
  if (!f.out.empty()) {
    std::filesystem::create_directories(f.out);
    write_text(std::filesystem::path(f.out) / "bound.csv", bound_csv(curve));
  }
  return 0;
}

int cmd_diameter(const Flags& f) {
  const auto config = load(f);
  std::printf("%.4f\n", diameter_lower_bound(config.model, config.model.global_rate()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Admission control for multi-class M/M/c/S queues"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON model/experiment file");
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--solver", f.solver, "pi or vi")
        ->check(CLI::IsMember({"pi", "vi", "PI", "VI"}));
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--horizon", f.horizon, "horizon T");
    sub->add_option("--t1", f.t1, "first episode length");
  };

  auto* solve = app.add_subcommand("solve", "exact PI/VI solve of the true model");
  common(solve);
  solve->add_option("--eps", f.eps, "VI stopping tolerance");
  auto* sim = app.add_subcommand("simulate", "simulate a fixed policy");
  common(sim);
  sim->add_option("--policy", f.policy, "policy JSON (default: optimal)");
  auto* learn = app.add_subcommand("learn", "multi-seed learning experiment");
  common(learn);
  learn->add_option("--seeds", f.seeds, "number of trajectories");
  learn->add_option("--checkpoints", f.checkpoints, "regret grid size");
  learn->add_option("--threads", f.threads, "worker threads (0: all cores)");
  auto* bounds = app.add_subcommand("bounds", "theoretical regret bound");
  common(bounds);
  bounds->add_option("--checkpoints", f.checkpoints, "grid size");
  auto* diam = app.add_subcommand("diameter", "diameter lower bound");
  common(diam);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto* chosen = app.get_subcommands().front();
  if (f.config.empty()) {
    std::cerr << "error: --config is required\n\n" << chosen->help();
    return 2;
  }

  try {
    if (chosen == solve) return cmd_solve(f);
    if (chosen == sim) return cmd_simulate(f);
    if (chosen == learn) return cmd_learn(f);
    if (chosen == bounds) return cmd_bounds(f);
    return cmd_diameter(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
