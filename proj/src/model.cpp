#include "admission/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace admission {

double QueueModel::service(int s) const {
  return std::min(s, servers) * service_rate;
}

double QueueModel::global_rate() const {
  double total = 0.0;
  for (const auto& cls : classes) total += cls.arrival_rate;
  return total;
}

double QueueModel::max_reward() const {
  double best = 0.0;
  for (const auto& cls : classes) best = std::max(best, cls.reward);
  return best;
}

std::vector<double> QueueModel::arrival_rates() const {
  std::vector<double> rates;
  rates.reserve(classes.size());
  for (const auto& cls : classes) rates.push_back(cls.arrival_rate);
  return rates;
}

void QueueModel::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid model: " + what);
  };
  if (capacity < 1) fail("S must be a positive integer");
  if (servers < 1 || servers > capacity) fail("c must satisfy 1 <= c <= S");
  if (!(service_rate > 0.0) || !std::isfinite(service_rate))
    fail("mu must be positive");
  if (classes.empty()) fail("at least one class is required");
  if (num_classes() > kMaxClasses) fail("at most 64 classes are supported");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& cls = classes[i];
    const std::string tag = "classes[" + std::to_string(i) + "].";
    if (!(cls.reward >= 0.0)) fail(tag + "R must be nonnegative");
    if (!(cls.holding_cost >= 0.0)) fail(tag + "gamma must be nonnegative");
    if (!(cls.arrival_rate > 0.0)) fail(tag + "lambda must be positive");
    if (!cls.expected_cost.empty() &&
        static_cast<int>(cls.expected_cost.size()) != capacity)
      fail(tag + "expected_cost must have S entries");
  }
  if (!(lambda_min > 0.0)) fail("lambda_min must be positive");
  if (!(lambda_max >= lambda_min)) fail("lambda_max must be >= lambda_min");
  const double total = global_rate();
  if (total < lambda_min * (1 - 1e-12) || total > lambda_max * (1 + 1e-12))
    fail("sum of class rates must lie in [lambda_min, lambda_max]");
}

RewardTable::RewardTable(std::vector<std::vector<double>> rewards)
    : rewards_(std::move(rewards)) {
  num_classes_ = rewards_.empty() ? 0 : static_cast<int>(rewards_[0].size());
  priority_.resize(rewards_.size());
  for (std::size_t s = 0; s < rewards_.size(); ++s) {
    if (static_cast<int>(rewards_[s].size()) != num_classes_)
      throw std::invalid_argument("reward table rows must have equal length");
    auto& order = priority_[s];
    order.resize(num_classes_);
    std::iota(order.begin(), order.end(), 0);
    const auto& row = rewards_[s];
    std::stable_sort(order.begin(), order.end(),
                     [&row](int a, int b) { return row[a] > row[b]; });
  }
}

double RewardTable::max_in_state(int s) const {
  return rewards_[s][priority_[s].front()];
}

RewardTable expected_rewards(const QueueModel& model) {
  model.validate();
  const int c = model.servers;
  const double full_rate = c * model.service_rate;
  std::vector<std::vector<double>> rewards(
      model.capacity, std::vector<double>(model.num_classes()));
  for (int s = 0; s < model.capacity; ++s) {
    // W(s) ~ Erlang(s - c + 1, c mu) once every server is busy.
    const double mean_wait = std::max(0, s - c + 1) / full_rate;
    for (int i = 0; i < model.num_classes(); ++i) {
      const auto& cls = model.classes[i];
      const double cost = cls.expected_cost.empty()
                              ? cls.holding_cost * mean_wait
                              : cls.expected_cost[s];
      rewards[s][i] = cls.reward - cost;
    }
  }
  return RewardTable(std::move(rewards));
}

RateField::RateField(int capacity, int num_classes)
    : capacity_(capacity),
      num_classes_(num_classes),
      rates_(static_cast<std::size_t>(capacity + 1) * num_classes, 0.0) {}

RateField RateField::constant(const QueueModel& model) {
  const auto rates = model.arrival_rates();
  return constant(model.capacity, rates);
}

RateField RateField::constant(int capacity, std::span<const double> rates) {
  RateField field(capacity, static_cast<int>(rates.size()));
  for (int s = 0; s <= capacity; ++s)
    for (int i = 0; i < field.classes(); ++i) field.at(s, i) = rates[i];
  return field;
}

double RateField::global(int s) const {
  double total = 0.0;
  for (int i = 0; i < num_classes_; ++i) total += (*this)(s, i);
  return total;
}

bool RateField::state_independent(double tol) const {
  for (int s = 1; s <= capacity_; ++s)
    for (int i = 0; i < num_classes_; ++i)
      if (std::abs((*this)(s, i) - (*this)(0, i)) > tol) return false;
  return true;
}

Policy Policy::accept_all(int capacity, int num_classes) {
  Policy policy(capacity);
  const ClassSet all =
      num_classes >= kMaxClasses ? ~ClassSet{0} : class_bit(num_classes) - 1;
  for (int s = 0; s < capacity; ++s) policy.set(s, all);
  return policy;
}

int Policy::total_admissions() const {
  int total = 0;
  for (ClassSet set : accept_) total += std::popcount(set);
  return total;
}

bool Policy::prefix_closed(const RewardTable& table) const {
  // Admitting j forces every class with r(i, s) >= r(j, s), ties included.
  for (int s = 0; s < capacity(); ++s)
    for (int j = 0; j < table.classes(); ++j) {
      if (!accepts(s, j)) continue;
      for (int i = 0; i < table.classes(); ++i)
        if (table(s, i) >= table(s, j) && !accepts(s, i)) return false;
    }
  return true;
}

std::vector<int> Policy::thresholds(int num_classes) const {
  std::vector<int> levels(num_classes, capacity());
  for (int i = 0; i < num_classes; ++i) {
    for (int s = 0; s < capacity(); ++s) {
      if (!accepts(s, i)) {
        levels[i] = s;
        break;
      }
    }
  }
  return levels;
}

bool Policy::is_trunk_reservation(int num_classes) const {
  const auto levels = thresholds(num_classes);
  for (int i = 0; i < num_classes; ++i)
    for (int s = 0; s < capacity(); ++s)
      if (accepts(s, i) != (s < levels[i])) return false;
  return true;
}

bool Policy::contains(const Policy& other) const {
  if (other.capacity() != capacity()) return false;
  for (int s = 0; s < capacity(); ++s)
    if ((other.admitted(s) & ~admitted(s)) != 0) return false;
  return true;
}

}  // namespace admission
