#pragma once

// Event-driven simulation of the controlled M/M/c/S queue.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "admission/model.hpp"

namespace admission {

using Rng = std::mt19937_64;

/// Deterministic seed for stream (run, episode) of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run,
                          std::uint64_t episode = 0);

enum class EventKind { Arrival, Departure };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Arrival;
  int job_class = -1;  // arrivals only
  bool accepted = false;
  int state_before = 0;
  double reward = 0.0;  // r(class, state_before) when accepted
};

struct EpisodeLog {
  double start_time = 0.0;
  double duration = 0.0;
  int initial_state = 0;
  int final_state = 0;
  std::vector<Event> events;
  std::vector<double> sojourn;                 // time spent in each state 0..S
  std::vector<std::vector<long>> admissions;   // [s][i]
  long arrivals = 0;                           // accepted or not
  double reward_collected = 0.0;

  double end_time() const { return start_time + duration; }
};

/// Runs the queue under `policy` for `duration` time units starting from
/// `initial_state` at `start_time`. Arrivals come from the merged Poisson
/// stream of rate sum_i lambda_i, labelled with probability lambda_i / Lambda.
EpisodeLog simulate(const QueueModel& model, const RewardTable& table,
                    const Policy& policy, double duration, Rng& rng,
                    int initial_state = 0, double start_time = 0.0);

EpisodeLog simulate(const QueueModel& model, const Policy& policy,
                    double duration, Rng& rng);

struct RegretSeries {
  double rho_star = 0.0;
  std::vector<std::pair<double, double>> checkpoints;  // (T, Delta(T))
};

/// Delta(T) = T rho* - (rewards collected up to T), evaluated at every
/// episode end and at each grid time covered by the logs.
RegretSeries accumulate_regret(const std::vector<EpisodeLog>& logs,
                               double rho_star,
                               const std::vector<double>& grid = {});

/// Exponential draw from an open-interval uniform; always strictly positive.
double draw_exponential(Rng& rng, double rate);

}  // namespace admission
