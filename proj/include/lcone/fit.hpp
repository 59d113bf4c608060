#pragma once

#include <cstddef>
#include <span>

namespace lcone {

/// Ordinary least squares y ~ intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;  // clamped to [0, 1]
  std::size_t points = 0;
  double x_min = 0.0;
  double x_max = 0.0;
};

/// Throws ValidationError with fewer than two points or constant x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace lcone
