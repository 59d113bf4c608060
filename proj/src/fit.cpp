#include "lcone/fit.hpp"

#include <algorithm>
#include <cmath>

#include "lcone/error.hpp"

namespace lcone {

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit", "x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("fit", "degenerate fit window: fewer than two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("fit", "degenerate fit window: constant abscissa");
  LinearFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  f.x_min = *lo;
  f.x_max = *hi;
  return f;
}

}  // namespace lcone
