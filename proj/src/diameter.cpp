#include <cmath>

#include "admission/model.hpp"

namespace admission {

namespace {

// 1 + r + ... + r^(n-1), with the removable singularity at r == 1.
double geometric_sum(double ratio, int terms) {
  if (terms <= 0) return 0.0;
  if (ratio == 1.0) return terms;
  return (std::pow(ratio, terms) - 1.0) / (ratio - 1.0);
}

// sum_{s=0}^{n-1} x^s / s!
double truncated_exponential(double x, int n) {
  double term = 1.0;
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    total += term;
    term *= x / (s + 1);
  }
  return total;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

double diameter_lower_bound(const QueueModel& model, double global_rate) {
  if (!(global_rate > 0.0))
    throw std::invalid_argument("diameter_lower_bound: rate must be positive");
  const int S = model.capacity;
  const int c = model.servers;
  const double mu = model.service_rate;
  const double lambda = global_rate;
  const double full = c * mu;
  const double escape = full / (lambda + full);  // 1 - Lambda / U

  if (c == 1 && S > 1) return escape * geometric_sum(mu / lambda, S);
  if (c == S) {
    return escape * std::pow(mu / lambda, S - 1) * factorial(S - 1) *
           truncated_exponential(lambda / mu, S);
  }
  return escape *
         (geometric_sum(full / lambda, S - c) +
          std::pow(c, S - c - 1) * factorial(c) * std::pow(mu / lambda, S - 1) *
              truncated_exponential(lambda / mu, c));
}

}  // namespace admission
