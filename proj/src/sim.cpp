#include "admission/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace admission {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform on the open interval (0, 1).
double open_uniform(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run,
                          std::uint64_t episode) {
  return splitmix64(splitmix64(splitmix64(master) ^ run) ^ episode);
}

double draw_exponential(Rng& rng, double rate) {
  return -std::log(open_uniform(rng)) / rate;
}

EpisodeLog simulate(const QueueModel& model, const RewardTable& table,
                    const Policy& policy, double duration, Rng& rng,
                    int initial_state, double start_time) {
  if (!(duration > 0.0))
    throw std::invalid_argument("simulate: duration must be positive");
  const int S = model.capacity;
  const int m = model.num_classes();
  if (policy.capacity() != S || table.states() != S)
    throw std::invalid_argument("simulate: policy or table size != S");
  if (initial_state < 0 || initial_state > S)
    throw std::invalid_argument("simulate: initial state out of range");

  const auto rates = model.arrival_rates();
  const double lambda = model.global_rate();

  EpisodeLog log;
  log.start_time = start_time;
  log.duration = duration;
  log.initial_state = initial_state;
  log.sojourn.assign(S + 1, 0.0);
  log.admissions.assign(S, std::vector<long>(m, 0));

  const double end = start_time + duration;
  double now = start_time;
  int state = initial_state;
  for (;;) {
    const double departure_rate = model.service(state);
    const double total = lambda + departure_rate;
    const double next = now + draw_exponential(rng, total);
    if (next >= end) {
      log.sojourn[state] += end - now;
      break;
    }
    log.sojourn[state] += next - now;
    now = next;

    Event ev;
    ev.time = now;
    ev.state_before = state;
    if (open_uniform(rng) * total < lambda) {
      ev.kind = EventKind::Arrival;
      double pick = open_uniform(rng) * lambda;
      int cls = 0;
      while (cls < m - 1 && pick >= rates[cls]) pick -= rates[cls++];
      ev.job_class = cls;
      ++log.arrivals;
      if (state < S && policy.accepts(state, cls)) {
        ev.accepted = true;
        ev.reward = table(state, cls);
        ++log.admissions[state][cls];
        log.reward_collected += ev.reward;
        ++state;
      }
    } else {
      ev.kind = EventKind::Departure;
      --state;
    }
    log.events.push_back(ev);
  }
  log.final_state = state;
  return log;
}

EpisodeLog simulate(const QueueModel& model, const Policy& policy,
                    double duration, Rng& rng) {
  return simulate(model, expected_rewards(model), policy, duration, rng);
}

RegretSeries accumulate_regret(const std::vector<EpisodeLog>& logs,
                               double rho_star,
                               const std::vector<double>& grid) {
  RegretSeries series;
  series.rho_star = rho_star;
  if (logs.empty()) return series;

  std::vector<double> times;
  const double horizon = logs.back().end_time();
  for (double t : grid)
    if (t >= logs.front().start_time && t <= horizon) times.push_back(t);
  for (const auto& log : logs) times.push_back(log.end_time());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  double collected = 0.0;
  auto t_it = times.begin();
  for (const auto& log : logs) {
    for (const auto& ev : log.events) {
      while (t_it != times.end() && *t_it < ev.time) {
        series.checkpoints.emplace_back(*t_it, *t_it * rho_star - collected);
        ++t_it;
      }
      collected += ev.reward;
    }
  }
  for (; t_it != times.end(); ++t_it)
    series.checkpoints.emplace_back(*t_it, *t_it * rho_star - collected);
  return series;
}

}  // namespace admission
