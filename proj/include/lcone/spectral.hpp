#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "lcone/cutoffs.hpp"
#include "lcone/fit.hpp"
#include "lcone/kernel.hpp"

namespace lcone {

/// Largest box handled by dense factorisations in this module.
inline constexpr std::size_t kSpectralDenseCap = 4096;

/// H = H0 + diag(V) with V time-independent.
struct StaticHamiltonian {
  LatticeKernel kernel;
  std::vector<double> potential;  // empty means V = 0

  explicit StaticHamiltonian(LatticeKernel k, std::vector<double> v = {});
  SparseKernel matrix() const;
  const BoxGeometry& geometry() const { return kernel.geometry(); }
  std::size_t size() const { return kernel.size(); }
  /// All eigenvalues, ascending (dense; cached by the caller if needed).
  Eigen::VectorXd spectrum() const;
  double norm() const;
};

/// dist(z, sigma(H)); exact from the dense spectrum.
double spectral_distance(const StaticHamiltonian& H, cplx z);

/// Sparse LU of (z - H) for repeated solves at one z.
class Resolvent {
 public:
  /// Throws NumericalError if z is numerically on the spectrum.
  Resolvent(const StaticHamiltonian& H, cplx z);
  ~Resolvent();
  Resolvent(const Resolvent&) = delete;
  Resolvent& operator=(const Resolvent&) = delete;

  cplx z() const noexcept { return z_; }
  /// R(z) b with the residual ||(z - H) w - b|| checked against 1e-10 ||b||.
  CVector apply(const CVector& b) const;
  /// R(z) delta_x.
  CVector column(std::size_t x) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  cplx z_;
};

/// <R(z) delta_x, delta_y> = R(z)(y, x).
cplx resolvent_element(const StaticHamiltonian& H, cplx z, std::size_t x, std::size_t y);

struct ContourSpec {
  double half_height = 1.0;
  double half_width = 0.0;  // 0 selects ||H|| + 1
  int nodes_per_side = 512;
};

void to_json(nlohmann::json& j, const ContourSpec& c);

struct DunfordResult {
  /// values(i, y) = <e^{-i t_i H} delta_x, delta_y>
  CMatrix values;
  /// |I_m - I_{m/2}| / 15 per entry, the Richardson estimate for the
  /// end-corrected trapezoid rule.
  Eigen::MatrixXd error_estimate;
  double half_width = 0.0;
  double half_height = 0.0;
  int nodes_per_side = 0;
};

/// (1/2 pi i) closed-contour integral of e^{-itz} R(z)(y, x) dz on the
/// rectangle |Im z| <= half_height, |Re z| <= half_width, by the trapezoid
/// rule with Euler-Maclaurin end corrections on each side.
DunfordResult dunford_propagator(const StaticHamiltonian& H, std::span<const double> times,
                                 std::size_t x, const ContourSpec& contour = {});
cplx dunford_propagator(const StaticHamiltonian& H, double t, std::size_t x, std::size_t y,
                        const ContourSpec& contour = {});

/// <e^{-itH} delta_x, delta_y> for every y, by dense eigendecomposition.
CVector dense_propagator_column(const StaticHamiltonian& H, double t, std::size_t x);

enum class DecayModel { exponential, logarithmic };

struct DecayFit {
  DecayModel model = DecayModel::exponential;
  std::vector<double> separations;
  std::vector<double> log_values;  // log |R(z)(x + r e_1, x)|
  double rate = 0.0;               // 1 / v_fit = -slope of log|R| vs delta(r)
  double v_fit = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  /// |R| <= 2 exp(-delta(r) / v_fit) at every separation
  bool bound_holds = false;
  /// smallest v for which |R| <= 2 exp(-delta(r) / v) holds at every separation
  double v_certified = 0.0;
  bool degenerate = false;  // all values at the numerical floor
};

double decay_profile(DecayModel model, double r);

/// Resolvent decay along the first axis from site x, separations 1..max_sep.
DecayFit combes_thomas_fit(const StaticHamiltonian& H, cplx z, std::size_t x, int max_separation,
                           DecayModel model);

struct PropagatorBoundReport {
  double v = 0.0;         // max certified v over sampled contour points
  double prefactor = 0.0; // perimeter / pi
  double max_ratio = 0.0; // max |U_t(x+r, x)| / (prefactor e^{t - r/v}) over the grid
  bool pass = false;
};

/// Checks |<e^{-itH} delta_x, delta_y>| <= C e^{t - |x-y|/v} over t in `times`
/// and separations 1..max_separation, with v from Combes-Thomas fits along the
/// default contour and C = perimeter / pi.
PropagatorBoundReport propagator_decay_check(const StaticHamiltonian& H, std::size_t x,
                                             std::span<const double> times, int max_separation,
                                             DecayModel model, int contour_samples = 16);

/// || i[H0, A(chi)] - sum_{k=1}^n sigma^{-k}/k! A(chi^{(k)}) B_k ||,
/// A(f) = f((phi - shift)/sigma), B_k = i ad^k_phi(H0).
double expansion_residual(const LatticeKernel& H0, const SmoothedStep& chi,
                          std::span<const double> phi, double sigma, int n, double shift);

struct GapReport {
  double norm = 0.0;
  double largest_eigenvalue = 0.0;
};

/// i[H0, A(chi)] - sigma^{-1} c A(w) i[H0, phi] A(w) with chi' = c w^2.
GapReport symmetrized_leading_gap(const LatticeKernel& H0, const SmoothedStep& chi,
                                  std::span<const double> phi, double sigma, double shift);

struct ScalingSweep {
  std::vector<double> sigmas;
  std::vector<double> values;
  LinearFit fit;  // log value vs log sigma
};

ScalingSweep fit_scaling(std::span<const double> sigmas, std::span<const double> values);

}  // namespace lcone
