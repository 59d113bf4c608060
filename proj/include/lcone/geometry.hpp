#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace lcone {

inline constexpr int kMaxDimension = 4;

enum class Norm { euclidean, sup, taxicab };

std::string to_string(Norm norm);
Norm parse_norm(std::string_view name);

/// Integer lattice point; coordinates beyond the box dimension are zero.
struct Coord {
  std::array<int, kMaxDimension> c{};
  int& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  int operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  friend bool operator==(const Coord&, const Coord&) = default;
};

/// The box {x in Z^d : |x_i| <= L} with a chosen norm on Z^d.
///
/// Sites are enumerated with the first coordinate varying fastest, so the
/// flat index of x is sum_i (x_i + L) (2L+1)^i.
class BoxGeometry {
 public:
  BoxGeometry(int dimension, int half_width, Norm norm = Norm::euclidean);

  int dimension() const noexcept { return dim_; }
  int half_width() const noexcept { return half_width_; }
  Norm norm() const noexcept { return norm_; }
  int side() const noexcept { return 2 * half_width_ + 1; }
  std::size_t site_count() const noexcept { return count_; }

  Coord coord(std::size_t index) const;
  std::optional<std::size_t> index(const Coord& x) const;
  std::size_t origin() const;
  bool contains(const Coord& x) const;

  double length(const Coord& x) const;
  double distance(std::size_t i, std::size_t j) const;
  double distance(const Coord& x, const Coord& y) const;
  /// |x| for the site with flat index i.
  double radius(std::size_t i) const { return length(coord(i)); }

  friend bool operator==(const BoxGeometry&, const BoxGeometry&) = default;

 private:
  int dim_;
  int half_width_;
  Norm norm_;
  std::size_t count_;
};

}  // namespace lcone
