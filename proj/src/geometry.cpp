#include "lcone/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "lcone/error.hpp"

namespace lcone {

std::string to_string(Norm norm) {
  switch (norm) {
    case Norm::euclidean: return "euclidean";
    case Norm::sup: return "sup";
    case Norm::taxicab: return "taxicab";
  }
  return "euclidean";
}

Norm parse_norm(std::string_view name) {
  if (name == "euclidean") return Norm::euclidean;
  if (name == "sup") return Norm::sup;
  if (name == "taxicab") return Norm::taxicab;
  throw ValidationError("", "unknown norm '" + std::string(name) + "'");
}

BoxGeometry::BoxGeometry(int dimension, int half_width, Norm norm)
    : dim_(dimension), half_width_(half_width), norm_(norm), count_(1) {
  if (dimension < 1 || dimension > kMaxDimension)
    throw ValidationError("dimension", "must be in [1, " + std::to_string(kMaxDimension) + "]");
  if (half_width < 1) throw ValidationError("half_width", "must be a positive integer");
  for (int i = 0; i < dim_; ++i) count_ *= static_cast<std::size_t>(side());
}

Coord BoxGeometry::coord(std::size_t index) const {
  Coord x;
  const auto s = static_cast<std::size_t>(side());
  for (int i = 0; i < dim_; ++i) {
    x[i] = static_cast<int>(index % s) - half_width_;
    index /= s;
  }
  return x;
}

bool BoxGeometry::contains(const Coord& x) const {
  for (int i = 0; i < kMaxDimension; ++i) {
    if (i < dim_) {
      if (std::abs(x[i]) > half_width_) return false;
    } else if (x[i] != 0) {
      return false;
    }
  }
  return true;
}

std::optional<std::size_t> BoxGeometry::index(const Coord& x) const {
  if (!contains(x)) return std::nullopt;
  std::size_t idx = 0;
  std::size_t stride = 1;
  const auto s = static_cast<std::size_t>(side());
  for (int i = 0; i < dim_; ++i) {
    idx += static_cast<std::size_t>(x[i] + half_width_) * stride;
    stride *= s;
  }
  return idx;
}

std::size_t BoxGeometry::origin() const { return *index(Coord{}); }

double BoxGeometry::length(const Coord& x) const {
  switch (norm_) {
    case Norm::euclidean: {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += static_cast<double>(x[i]) * x[i];
      return std::sqrt(s);
    }
    case Norm::sup: {
      int m = 0;
      for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(x[i]));
      return m;
    }
    case Norm::taxicab: {
      int s = 0;
      for (int i = 0; i < dim_; ++i) s += std::abs(x[i]);
      return s;
    }
  }
  return 0.0;
}

double BoxGeometry::distance(const Coord& x, const Coord& y) const {
  Coord d;
  for (int i = 0; i < dim_; ++i) d[i] = x[i] - y[i];
  return length(d);
}

double BoxGeometry::distance(std::size_t i, std::size_t j) const {
  return distance(coord(i), coord(j));
}

}  // namespace lcone
