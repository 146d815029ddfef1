#include "pedteach/logmath.hpp"

#include <algorithm>
#include <cmath>

namespace pedteach {

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return kNegInf;
  double hi = *std::max_element(xs.begin(), xs.end());
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

void log_normalize(std::span<double> xs) {
  double z = log_sum_exp(xs);
  for (double& x : xs) x -= z;
}

std::vector<double> exp_all(std::span<const double> xs) {
  std::vector<double> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [](double x) { return std::exp(x); });
  return out;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace pedteach
