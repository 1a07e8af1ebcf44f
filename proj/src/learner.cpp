#include "admission/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace admission {

EstimatorState EstimatorState::start(int num_classes, double lambda_min,
                                     double delta) {
  EstimatorState state;
  state.lambda_min = lambda_min;
  state.episode_counts.assign(num_classes, 0);
  state.total_counts.assign(num_classes, 0);
  state.begin_episode(delta);
  return state;
}

void EstimatorState::begin_episode(double episode_delta) {
  if (!(episode_delta > 0.0 && episode_delta < 1.0))
    throw std::invalid_argument("estimator: delta must lie in (0, 1)");
  delta = episode_delta;
  tau = 0;
  inv_mean = 0.0;
  std::fill(episode_counts.begin(), episode_counts.end(), 0);
}

double EstimatorState::threshold(long t) const {
  if (!truncate) return std::numeric_limits<double>::infinity();
  return std::sqrt(2.0 * t / (lambda_min * lambda_min * std::log(1.0 / delta)));
}

double EstimatorState::rate_estimate() const {
  return inv_mean > 0.0 ? 1.0 / inv_mean
                        : std::numeric_limits<double>::infinity();
}

void EstimatorState::observe(double inter_arrival, int job_class) {
  if (!(inter_arrival >= 0.0))
    throw std::invalid_argument("estimator: inter-arrival time must be >= 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("estimator: delta must lie in (0, 1)");
  ++tau;
  // The t-th arrival of the episode is tested against threshold(t).
  const double y = inter_arrival <= threshold(tau) ? inter_arrival : 0.0;
  inv_mean += (y - inv_mean) / static_cast<double>(tau);
  ++episode_counts.at(job_class);
  ++total_counts.at(job_class);
  ++total;
}

EstimatorState update_estimator(EstimatorState state, double inter_arrival,
                                int job_class) {
  state.observe(inter_arrival, job_class);
  return state;
}

double EpisodeSchedule::length(int k) const {
  if (k < 1) throw std::invalid_argument("episode index starts at 1");
  return k == 1 ? first : std::ldexp(first, k - 2);
}

double EpisodeSchedule::end(int k) const {
  if (k < 1) throw std::invalid_argument("episode index starts at 1");
  return std::ldexp(first, k - 1);
}

double EpisodeSchedule::delta(int k, double service_rate) const {
  return 1.0 / (service_rate * length(k));
}

int EpisodeSchedule::episodes_for(double horizon) const {
  const double ratio = horizon / first;
  const int k = 1 + static_cast<int>(std::lround(std::log2(ratio)));
  if (!(ratio >= 1.0) || std::abs(end(k) - horizon) > 1e-9 * horizon)
    throw std::invalid_argument("horizon must equal t1 * 2^(K-1) for some K >= 1");
  return k;
}

ConfidenceSet initial_confidence(const QueueModel& model) {
  ConfidenceSet conf;
  const int m = model.num_classes();
  conf.lambda_hat = model.lambda_max;
  conf.lambda_lo = model.lambda_min;
  conf.lambda_hi = model.lambda_max;
  conf.lambda_bar = model.lambda_max;
  conf.p_hat.assign(m, 1.0 / m);
  conf.eps_p = 2.0;
  return conf;
}

double refine_lambda_bar_radius(double lambda_hat, double eps,
                                double lambda_max) {
  const double additive = lambda_hat + lambda_max * lambda_max * eps;
  if (lambda_hat * eps >= 1.0) return std::min(lambda_max, additive);
  return std::min({lambda_max, lambda_hat / (1.0 - lambda_hat * eps), additive});
}

double refine_lambda_bar(double lambda_hat, long arrivals, double delta,
                         const QueueModel& model) {
  if (arrivals < 1) throw EmptyEpisode("refine_lambda_bar: no arrivals");
  const double eps = 4.0 / model.lambda_min *
                     std::sqrt(2.0 / arrivals * std::log(1.0 / delta));
  return refine_lambda_bar_radius(lambda_hat, eps, model.lambda_max);
}

ConfidenceSet build_confidence(const EstimatorState& state,
                               const QueueModel& model, bool refine_upper) {
  if (state.tau < 1)
    throw EmptyEpisode("build_confidence: previous episode had no arrivals");
  const int m = model.num_classes();
  const double log_inv = std::log(1.0 / state.delta);

  ConfidenceSet conf;
  conf.lambda_hat = state.rate_estimate();
  conf.eps_lambda = 4.0 * model.lambda_max * model.lambda_max /
                    model.lambda_min * std::sqrt(2.0 / state.tau * log_inv);
  conf.lambda_bar =
      refine_upper ? refine_lambda_bar(conf.lambda_hat, state.tau, state.delta, model)
                   : model.lambda_max;
  // The true rate is at least lambda_min, so the set never goes below it.
  conf.lambda_bar = std::max(conf.lambda_bar, model.lambda_min);
  if (std::isinf(conf.lambda_hat)) {
    conf.lambda_lo = model.lambda_min;
    conf.lambda_hi = conf.lambda_bar;
  } else {
    conf.lambda_lo = std::clamp(conf.lambda_hat - conf.eps_lambda,
                                model.lambda_min, conf.lambda_bar);
    conf.lambda_hi = std::clamp(conf.lambda_hat + conf.eps_lambda,
                                model.lambda_min, conf.lambda_bar);
  }

  conf.p_hat.resize(m);
  for (int i = 0; i < m; ++i)
    conf.p_hat[i] = static_cast<double>(state.total_counts[i]) / state.total;
  conf.eps_p = std::sqrt(2.0 * m / state.total * std::log(2.0 / state.delta));
  return conf;
}

std::vector<double> optimistic_distribution(const std::vector<double>& p_hat,
                                            double eps_p,
                                            std::span<const int> priority) {
  std::vector<double> p = p_hat;
  const int top = priority.front();
  const double shift = std::min(eps_p / 2.0, 1.0 - p[top]);
  if (shift <= 0.0) return p;
  p[top] += shift;
  double excess = shift;
  for (std::size_t k = priority.size(); k-- > 1 && excess > 0.0;) {
    const int i = priority[k];
    const double take = std::min(p[i], excess);
    p[i] -= take;
    excess -= take;
  }
  return p;
}

RateField optimistic_model(const ConfidenceSet& conf, const RewardTable& table) {
  const int S = table.states();
  const int m = table.classes();
  RateField field(S, m);
  for (int s = 0; s < S; ++s) {
    const auto p = optimistic_distribution(conf.p_hat, conf.eps_p, table.priority(s));
    for (int i = 0; i < m; ++i) field.at(s, i) = conf.lambda_hi * p[i];
  }
  for (int i = 0; i < m; ++i) field.at(S, i) = field(S - 1, i);
  return field;
}

LearnerRun ucrl_ac_run(const QueueModel& model, const LearnerOptions& options) {
  model.validate();
  if (!(options.t1 > 0.0)) throw std::invalid_argument("t1 must be positive");
  if (options.episodes < 1) throw std::invalid_argument("need at least one episode");
  if (!(model.service_rate * options.t1 > 1.0))
    throw std::invalid_argument("mu * t1 must exceed 1 so that every delta_k < 1");

  const auto table = expected_rewards(model);
  const EpisodeSchedule schedule{options.t1};

  LearnerRun run;
  {
    const auto truth = policy_iteration(RateField::constant(model), model, table);
    run.rho_star = truth.eval.gain;
    run.optimal_policy = truth.policy;
  }

  auto estimator =
      EstimatorState::start(model.num_classes(), model.lambda_min,
                            schedule.delta(1, model.service_rate));
  ConfidenceSet conf = initial_confidence(model);
  std::vector<EpisodeLog> logs;
  logs.reserve(options.episodes);
  std::optional<Policy> previous;
  int state = 0;

  for (int k = 1; k <= options.episodes; ++k) {
    if (k > 1) {
      try {
        conf = build_confidence(estimator, model, options.refine_upper);
      } catch (const EmptyEpisode&) {
        // keep the previous set
      }
    }
    const auto rates = optimistic_model(conf, table);

    SolveResult solved;
    if (options.solver == SolverKind::PolicyIteration) {
      solved = policy_iteration(rates, model, table);
    } else {
      ValueIterationOptions vi;
      vi.epsilon = model.max_reward() / schedule.length(k);
      if (previous) vi.warm_start = warm_start_from(evaluate(*previous, rates, model, table));
      solved = value_iteration(rates, model, table, vi);
    }

    estimator.begin_episode(schedule.delta(k, model.service_rate));
    Rng rng(derive_seed(options.seed, 0, static_cast<std::uint64_t>(k)));
    auto log = simulate(model, table, solved.policy, schedule.length(k), rng,
                        state, schedule.end(k) - schedule.length(k));
    double last = log.start_time;
    for (const auto& ev : log.events) {
      if (ev.kind != EventKind::Arrival) continue;
      estimator.observe(ev.time - last, ev.job_class);
      last = ev.time;
    }
    state = log.final_state;

    EpisodeRecord record;
    record.k = k;
    record.length = log.duration;
    record.end = log.end_time();
    record.conf = conf;
    record.policy = solved.policy;
    record.optimistic_gain = solved.eval.gain;
    record.solver_iterations = solved.iterations;
    record.arrivals = log.arrivals;
    run.episodes.push_back(std::move(record));

    previous = solved.policy;
    logs.push_back(std::move(log));
  }

  run.regret = accumulate_regret(logs, run.rho_star, options.checkpoints);
  for (auto& record : run.episodes) {
    for (const auto& [t, delta] : run.regret.checkpoints) {
      if (t == record.end) {
        record.regret_at_end = delta;
        break;
      }
    }
  }
  return run;
}

}  // namespace admission
