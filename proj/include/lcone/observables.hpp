#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "lcone/cutoffs.hpp"
#include "lcone/dynamics.hpp"
#include "lcone/fit.hpp"

namespace lcone {

/// Tail values below this are "at floor": they pass upper-bound verdicts and
/// are left out of slope fits.
inline constexpr double kTailFloor = 1e-14;

inline bool at_floor(double value) { return value < kTailFloor; }

/// P(N) = sum over sites with |x| > N of |u(x)|^2.
double outside_probability(const WaveState& state, double N);
/// Same with |x| replaced by a distance field (dist_X).
double outside_probability(const WaveState& state, double N, const DistanceField& dist);

/// P_r(N) = sum over |x| > N of |x|^r |u(x)|^2.
double moment(const WaveState& state, double r, double N);
double moment(const WaveState& state, double r, double N, const DistanceField& dist);

/// || |x| u ||
double position_spread(const WaveState& state);

struct TailSeries {
  std::vector<double> times;
  std::vector<double> thresholds;
  std::vector<double> values;
  std::vector<bool> floor;
};

/// P(N(t), t) at every snapshot.
TailSeries tail_series(const Trajectory& trajectory, const std::function<double(double)>& threshold);

struct RadinSimonReport {
  double kappa = 0.0;
  /// max_t || |x| u_t || - || |x| u_0 || - kappa t
  double max_violation = 0.0;
  /// smallest C with || |x| u_t || - || |x| u_0 || <= C t at every snapshot t > 0
  double empirical_constant = 0.0;
  std::vector<double> times;
  std::vector<double> spread;
};

RadinSimonReport radin_simon_check(const Trajectory& trajectory, double kappa);

struct FrontDiagnostic {
  std::vector<double> times;
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<bool> holds;
  bool all_hold() const;
};

/// lhs = || i[H0, phi] W_t(phi) u_t ||, rhs = (v alpha - delta) t^{alpha-1} || W_t(phi) u_t ||
/// with phi = dist_{B_R} and W_t the window field of w for inner speed
/// v - delta / (2 alpha). Snapshots at t = 0 are skipped.
FrontDiagnostic front_condition(const Trajectory& trajectory, const LatticeKernel& H0, double R,
                                double v, double delta, double alpha, const BumpFunction& w);

struct MonotonicityReport {
  std::vector<double> times;
  std::vector<double> residual;  // <A(t, chi)>_t - <A(0, chi)>_0
  double initial = 0.0;          // <A(0, chi)>_0
  std::optional<LinearFit> tail_fit;  // log residual vs log t over positive residuals
  /// max residual over snapshots with t >= t_min
  double max_residual_after(double t_min) const;
};

/// params.R fixes phi = dist_{B_R}; the t = 0 field uses params.reference_time.
MonotonicityReport astlo_monotonicity(const Trajectory& trajectory, const SmoothedStep& chi,
                                      const AstloParams& params);

struct LightconeOptions {
  double v = 3.0;
  double alpha = 1.0;
  double R = 0.0;
  int n = 1;
  double kappa = 0.0;       // for the v > kappa gate of the alpha = 1 verdict
  double fit_from = 3.0;    // decay-exponent fit window
  double fit_to = 12.0;
  double check_from = 5.0;  // window for the max_tail check
  double check_to = 15.0;
  double max_tail = 1e-6;
  double min_exponent = 0.0;  // 0 disables the exponent requirement
};

struct LightconeReport {
  TailSeries tail;
  double initial_tail = 0.0;  // P(R, 0)
  double gamma = 0.0;
  double beta = 0.0;
  /// smallest C >= 0 with P(vt^a + R, t) <= (1 + C t^-gamma) P(R,0) + C t^-beta
  double fitted_C = 0.0;
  std::optional<LinearFit> decay_fit;  // log P vs log t; decay exponent = -slope
  bool below_floor = false;            // every fit-window value at floor
  double max_tail_in_window = 0.0;
  bool diagnostic_only = false;  // alpha = 1 with v <= kappa, or alpha < 1
  bool pass = false;
  double decay_exponent() const {
    return decay_fit ? -decay_fit->slope : std::numeric_limits<double>::infinity();
  }
};

LightconeReport lightcone_report(const Trajectory& trajectory, const LightconeOptions& options);

struct TransportEstimate {
  double alpha = 0.0;
  double S_plus = 0.0;  // +inf when every value is at floor
  std::optional<LinearFit> fit;
};

struct TransportReport {
  std::vector<TransportEstimate> estimates;
  double alpha_u_plus = 0.0;
  double cap = 2.0;
  double window_from = 0.0;
  double window_to = 0.0;
  std::string caveat;
};

/// S+(alpha) = -slope of log P(t^alpha - 1, t) vs log t over [from, to];
/// alpha_u+ = largest grid alpha with S+ <= cap, 0 if there is none.
TransportReport transport_exponents(const Trajectory& trajectory, std::span<const double> alphas,
                                    double from, double to, double cap = 2.0);

struct DyadicReport {
  double r = 0.0;
  double r0 = 0.0;
  double v = 0.0;
  double B = 0.0;  // P_{r0}(0, 0)
  std::vector<double> times;
  std::vector<double> moment;                // P_r(2vt, t)
  std::vector<std::vector<double>> shells;   // shells[i][k-1] = Q_k(t_i), k >= 1
  double partition_defect = 0.0;  // max_t |sum_k Q_k - P_r(2vt, t)|
  double C_short = 0.0;           // sup over t in [t_min, t_short]
  double C_long = 0.0;            // sup over t in [t_min, t_long]
  bool stable = false;            // C_long <= 2 C_short (or both at floor)
};

/// Shells are the half-open annuli 2^k vt < |x| <= 2^{k+1} vt, k >= 1.
DyadicReport dyadic_moment_bound(const Trajectory& trajectory, double r, double r0, double v,
                                 double t_min, double t_short, double t_long);

void to_json(nlohmann::json& j, const LinearFit& f);

}  // namespace lcone
