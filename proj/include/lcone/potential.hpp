#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "lcone/geometry.hpp"

namespace lcone {

enum class PotentialKind { zero, fixed, piecewise_random, quasiperiodic, tabulated };

/// One plane-wave component of a quasiperiodic drive:
/// cos(2 pi k (x_1 + ... + x_d) + omega t + phase).
struct DriveMode {
  double wavenumber = 0.0;
  double omega = 0.0;
  double phase = 0.0;
};

/// Time-dependent diagonal potential V(t) on a box.
///
/// Piecewise-constant schedules (random refreshes, tabulated) report their
/// switching times through breakpoints() so integrators never step across
/// a jump.
class PotentialSchedule {
 public:
  static PotentialSchedule zero();
  static PotentialSchedule fixed(std::vector<double> values);
  /// I.i.d. uniform on [-W, W] per site, redrawn every `interval`. Values are a
  /// pure function of (seed, site, refresh index).
  static PotentialSchedule piecewise_random(double amplitude, double interval, std::uint64_t seed);
  /// A / J * sum_j cos(2 pi k_j sum_i x_i + omega_j t + phase_j) over J modes.
  static PotentialSchedule quasiperiodic(double amplitude, std::vector<DriveMode> modes);
  /// V(t) = rows[j] for t in [times[j], times[j+1]), last row thereafter.
  static PotentialSchedule tabulated(std::vector<double> times, std::vector<std::vector<double>> rows);

  PotentialKind kind() const noexcept { return kind_; }
  /// Declared sup norm: |V(t)(x)| <= bound() for all t, x.
  double bound() const noexcept { return bound_; }
  bool is_zero() const noexcept { return kind_ == PotentialKind::zero; }
  bool is_static() const noexcept {
    return kind_ == PotentialKind::zero || kind_ == PotentialKind::fixed;
  }
  bool piecewise_constant() const noexcept {
    return kind_ == PotentialKind::piecewise_random || kind_ == PotentialKind::tabulated;
  }

  /// V(t) at every site of the box, written into `out`.
  void evaluate(const BoxGeometry& geometry, double t, std::vector<double>& out) const;
  std::vector<double> evaluate(const BoxGeometry& geometry, double t) const;
  /// Jump times in the open interval (a, b), ascending.
  std::vector<double> breakpoints(double a, double b) const;

  /// Throws ValidationError if the schedule does not fit the box.
  void validate(const BoxGeometry& geometry) const;

  /// Largest |V(t)(x)| - bound() over a grid of `samples` times in [0, T].
  double bound_violation(const BoxGeometry& geometry, double T, int samples = 64) const;

  friend void to_json(nlohmann::json& j, const PotentialSchedule& p);
  friend void from_json(const nlohmann::json& j, PotentialSchedule& p);

 private:
  PotentialKind kind_ = PotentialKind::zero;
  double bound_ = 0.0;
  double amplitude_ = 0.0;
  double interval_ = 0.1;
  std::uint64_t seed_ = 0;
  std::vector<double> values_;
  std::vector<DriveMode> modes_;
  std::vector<double> times_;
  std::vector<std::vector<double>> rows_;
};

/// Uniform variate in [-1, 1] keyed by (seed, site, refresh index).
double counter_uniform(std::uint64_t seed, std::uint64_t site, std::uint64_t refresh);

}  // namespace lcone
