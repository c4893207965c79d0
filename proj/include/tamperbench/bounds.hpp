#pragma once

#include <cmath>
#include <stdexcept>

namespace tamperbench {

// Two-sided Hoeffding tail for the mean of n [0,1]-valued samples at
// deviation xi: 2 exp(-2 n xi^2), clipped to 1.
inline double hoeffding_tail(std::int64_t n, double xi) {
  if (n < 1) throw std::invalid_argument("hoeffding_tail: n >= 1 required");
  if (!(xi >= 0)) throw std::invalid_argument("hoeffding_tail: xi >= 0 required");
  return std::min(1.0, 2.0 * std::exp(-2.0 * static_cast<double>(n) * xi * xi));
}

// Upper Chernoff tail for the mean of n Boolean samples with mean lambda,
// at relative deviation gamma: exp(-n lambda gamma^2 / 3).
inline double chernoff_tail(std::int64_t n, double lambda, double gamma) {
  if (n < 1) throw std::invalid_argument("chernoff_tail: n >= 1 required");
  if (!(lambda >= 0 && lambda <= 1))
    throw std::invalid_argument("chernoff_tail: lambda in [0,1] required");
  if (!(gamma >= 0 && gamma <= 1))
    throw std::invalid_argument("chernoff_tail: gamma in [0,1] required");
  return std::exp(-static_cast<double>(n) * lambda * gamma * gamma / 3.0);
}

}  // namespace tamperbench
