#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <json.hpp>

#include "lcone/kernel.hpp"
#include "lcone/potential.hpp"

namespace lcone {

struct WaveState {
  BoxGeometry geometry;
  CVector amplitudes;
  double t = 0.0;

  double norm() const { return amplitudes.norm(); }
  std::size_t size() const { return static_cast<std::size_t>(amplitudes.size()); }
};

// Initial states. All are returned normalised.
WaveState delta_state(const BoxGeometry& g, const Coord& site = {});
/// exp(-|x - c|^2 / (2 w^2) + i k x_1).
WaveState gaussian_state(const BoxGeometry& g, double width, double momentum = 0.0,
                         const Coord& center = {});
/// |u(x)| proportional to (1 + |x|)^{-exponent} for |x| <= radius, zero beyond.
WaveState power_tail_state(const BoxGeometry& g, double exponent, double radius);
WaveState explicit_state(const BoxGeometry& g, CVector amplitudes);

/// Diagonal potential seen by the integrator. Implementations are immutable.
class PotentialSource {
 public:
  virtual ~PotentialSource() = default;
  virtual void evaluate(double t, std::vector<double>& out) const = 0;
  /// Jump times strictly inside (a, b).
  virtual std::vector<double> breakpoints(double a, double b) const = 0;
  /// True if V is constant between breakpoints; the integrator then samples
  /// it once per step at the step midpoint.
  virtual bool piecewise_constant() const = 0;
  virtual double bound() const = 0;
};

/// Adapts a PotentialSchedule to a box.
class ScheduleSource final : public PotentialSource {
 public:
  ScheduleSource(const PotentialSchedule& schedule, BoxGeometry geometry)
      : schedule_(schedule), geometry_(geometry) {}
  void evaluate(double t, std::vector<double>& out) const override {
    schedule_.evaluate(geometry_, t, out);
  }
  std::vector<double> breakpoints(double a, double b) const override {
    return schedule_.breakpoints(a, b);
  }
  bool piecewise_constant() const override { return schedule_.piecewise_constant(); }
  double bound() const override { return schedule_.bound(); }

 private:
  const PotentialSchedule& schedule_;
  BoxGeometry geometry_;
};

/// t -> V(T - t), used for time-reversal checks.
class ReversedSource final : public PotentialSource {
 public:
  ReversedSource(const PotentialSource& inner, double horizon) : inner_(inner), horizon_(horizon) {}
  void evaluate(double t, std::vector<double>& out) const override {
    inner_.evaluate(horizon_ - t, out);
  }
  std::vector<double> breakpoints(double a, double b) const override;
  bool piecewise_constant() const override { return inner_.piecewise_constant(); }
  double bound() const override { return inner_.bound(); }

 private:
  const PotentialSource& inner_;
  double horizon_;
};

/// Power nonlinearity N(q) = g |q|^{p-1}; enters the equation as |N(q)| q.
struct NonlinearSpec {
  double g = 0.0;
  double p = 3.0;
  /// Hypothesis constants: |N(q)| <= C1 whenever |q| <= C2.
  double C1 = 1.0;
  double C2 = 1.0;

  bool active() const noexcept { return g != 0.0; }
  double modulus(double abs_q) const { return std::abs(g) * std::pow(abs_q, p - 1.0); }
  void validate() const;
  /// max over a grid of |q| in [0, C2] of |N(q)| - C1; <= 0 when the declared
  /// constants are consistent.
  double bound_violation(int samples = 1024) const;
};

void to_json(nlohmann::json& j, const NonlinearSpec& n);
void from_json(const nlohmann::json& j, NonlinearSpec& n);

struct IntegratorSettings {
  /// Accepted steps satisfy (local error estimate) <= tolerance * h.
  double tolerance = 1e-10;
  double initial_step = 0.01;
  double max_step = 0.05;
  double min_step = 1e-9;
  /// Fixed-step mode: each segment between stops is split into equal steps
  /// no longer than fixed_step, without error control.
  bool adaptive = true;
  double fixed_step = 0.01;
  /// Also store the state after every accepted step.
  bool record_steps = false;
  bool preflight = true;
  /// Mass allowed past the boundary by the long-range preflight.
  double preflight_tail = 1e-12;
};

void to_json(nlohmann::json& j, const IntegratorSettings& s);
void from_json(const nlohmann::json& j, IntegratorSettings& s);

struct Trajectory {
  BoxGeometry geometry{1, 1};
  std::vector<double> times;
  std::vector<CVector> states;
  /// | ||u_t|| - 1 | at each snapshot.
  std::vector<double> norm_drift;

  long accepted_steps = 0;
  long rejected_steps = 0;
  double smallest_step = 0.0;
  double largest_step = 0.0;
  double max_local_error = 0.0;

  /// NLS only: largest |q_t(x)| seen at a snapshot and whether it exceeded C2.
  double max_amplitude = 0.0;
  bool hypothesis_violation = false;

  nlohmann::json metadata = nlohmann::json::object();

  std::size_t size() const { return times.size(); }
  WaveState snapshot(std::size_t i) const { return {geometry, states[i], times[i]}; }
  double max_norm_drift() const;
  /// Index of the snapshot at time t (within 1e-12), or throws.
  std::size_t index_of(double t) const;
};

struct PreflightReport {
  int required_half_width = 0;
  double support_radius = 0.0;  // smallest R with sqrt(P(R, 0)) <= 5e-7
  double kappa = 0.0;
  double taylor_order = 0.0;    // finite range: K with sum_{k>K} (rho T)^k/k! <= 5e-7
  bool long_range = false;
  bool passed = false;
};

void to_json(nlohmann::json& j, const PreflightReport& r);

/// Box-size check for an evolution up to time T. Uses only H0, u0 and T.
PreflightReport preflight(const LatticeKernel& H0, const WaveState& u0, double T,
                          const IntegratorSettings& settings = {});

/// i du/dt = (H0 + V(t)) u from u0 at t = 0. `output_times` must be
/// nondecreasing in [0, T]; T itself is always recorded.
Trajectory evolve(const LatticeKernel& H0, const PotentialSchedule& V, const WaveState& u0,
                  double T, std::vector<double> output_times,
                  const IntegratorSettings& settings = {});
Trajectory evolve(const LatticeKernel& H0, const PotentialSource& V, const WaveState& u0, double T,
                  std::vector<double> output_times, const IntegratorSettings& settings = {});

/// i dq/dt = (H0 + Vbar(t) + |N(q)|) q.
Trajectory evolve_nls(const LatticeKernel& H0, const PotentialSchedule& Vbar,
                      const NonlinearSpec& N, const WaveState& u0, double T,
                      std::vector<double> output_times, const IntegratorSettings& settings = {});

struct ReplayResult {
  double max_deviation = 0.0;  // max over snapshots of ||u_t - q_t||
  std::vector<double> deviations;
  double max_gap = 0.0;
};

/// Evolves the linear equation with the frozen potential Vbar(t) + |N(q_t)|,
/// q_t taken from the trajectory by cubic Hermite interpolation between
/// snapshots, with `substeps` RK4 steps per snapshot interval.
/// Throws ValidationError if the snapshot spacing is too coarse.
ReplayResult frozen_coefficient_replay(const Trajectory& nls, const LatticeKernel& H0,
                                       const PotentialSchedule& Vbar, const NonlinearSpec& N,
                                       int substeps = 1);

/// <u_t, A(t) u_t> for a diagonal observable schedule.
std::vector<double> heisenberg_expectation(
    const Trajectory& trajectory, const std::function<std::vector<double>(double)>& diagonal);
/// Operator-valued schedule. Throws ValidationError if A(t) is not Hermitian.
std::vector<double> heisenberg_expectation(
    const Trajectory& trajectory, const std::function<SparseKernel(double)>& observable);

}  // namespace lcone
