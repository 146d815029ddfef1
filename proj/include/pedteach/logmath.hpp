#pragma once

#include <limits>
#include <span>
#include <vector>

namespace pedteach {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Tolerances shared by validation code and tests.
struct Tolerance {
  static constexpr double kNormalization = 1e-9;
  static constexpr double kLogSpace = 1e-12;
};

/// log(sum(exp(x))). Returns -inf for an empty span or all -inf input.
double log_sum_exp(std::span<const double> xs);

/// Subtracts log_sum_exp in place. Requires at least one finite entry.
void log_normalize(std::span<double> xs);

std::vector<double> exp_all(std::span<const double> xs);

/// Shannon entropy in nats; zero-probability entries contribute nothing.
double entropy(std::span<const double> probs);

}  // namespace pedteach
