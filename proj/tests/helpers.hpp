#pragma once

#include <cmath>
#include <random>

#include "fpaccel/linalg.hpp"

namespace testing {

inline fpaccel::Vector random_vector(std::size_t n, std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  fpaccel::Vector v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_diff(std::span<const double> a, std::span<const double> b) {
  return fpaccel::norm2(fpaccel::subtract(a, b)) / std::max(1.0, fpaccel::norm2(b));
}

}  // namespace testing
