#include "lcone/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SparseLU>

#include "lcone/error.hpp"
#include "lcone/linalg.hpp"

namespace lcone {

namespace {

using ColSparse = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;
constexpr cplx kI{0.0, 1.0};

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

StaticHamiltonian::StaticHamiltonian(LatticeKernel k, std::vector<double> v)
    : kernel(std::move(k)), potential(std::move(v)) {
  if (!potential.empty() && potential.size() != kernel.size())
    throw ValidationError("potential.values", "expected one value per site");
  if (!kernel.hermitian()) throw ValidationError("kernel", "static Hamiltonian must be Hermitian");
}

SparseKernel StaticHamiltonian::matrix() const {
  SparseKernel m = kernel.matrix();
  if (!potential.empty()) {
    SparseKernel diag(m.rows(), m.cols());
    std::vector<Eigen::Triplet<cplx>> t;
    for (std::size_t i = 0; i < potential.size(); ++i)
      if (potential[i] != 0.0)
        t.emplace_back(static_cast<int>(i), static_cast<int>(i), cplx(potential[i], 0.0));
    diag.setFromTriplets(t.begin(), t.end());
    m += diag;
  }
  return m;
}

Eigen::VectorXd StaticHamiltonian::spectrum() const {
  if (size() > kSpectralDenseCap)
    throw ValidationError("geometry", "box exceeds the dense spectral cap of " +
                                          std::to_string(kSpectralDenseCap) + " sites");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(CMatrix(matrix()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double StaticHamiltonian::norm() const { return operator_norm(matrix(), true); }

double spectral_distance(const StaticHamiltonian& H, cplx z) {
  if (H.size() > kSpectralDenseCap) {
    // Lower bound: distance to the spectral interval.
    const auto b = hermitian_extremes(H.matrix());
    const double dx = z.real() < b.lowest ? b.lowest - z.real()
                      : z.real() > b.highest ? z.real() - b.highest
                                             : 0.0;
    return std::hypot(dx, z.imag());
  }
  const Eigen::VectorXd ev = H.spectrum();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) best = std::min(best, std::abs(z - ev[i]));
  return best;
}

// ---------------------------------------------------------------------------

struct Resolvent::Impl {
  ColSparse shifted;
  Eigen::SparseLU<ColSparse> lu;
};

Resolvent::Resolvent(const StaticHamiltonian& H, cplx z) : impl_(std::make_unique<Impl>()), z_(z) {
  const auto n = static_cast<Eigen::Index>(H.size());
  ColSparse id(n, n);
  id.setIdentity();
  impl_->shifted = z * id - ColSparse(H.matrix());
  impl_->shifted.makeCompressed();
  impl_->lu.compute(impl_->shifted);
  if (impl_->lu.info() != Eigen::Success)
    throw NumericalError("z - H is numerically singular at z = (" + std::to_string(z.real()) +
                         ", " + std::to_string(z.imag()) + ")");
}

Resolvent::~Resolvent() = default;

CVector Resolvent::apply(const CVector& b) const {
  CVector w = impl_->lu.solve(b);
  const double res = (impl_->shifted * w - b).norm();
  if (!(res <= 1e-10 * std::max(1.0, b.norm())))
    throw NumericalError("resolvent solve residual " + std::to_string(res) +
                         " exceeds 1e-10; z is too close to the spectrum");
  return w;
}

CVector Resolvent::column(std::size_t x) const {
  CVector b = CVector::Zero(impl_->shifted.rows());
  b[static_cast<Eigen::Index>(x)] = 1.0;
  return apply(b);
}

cplx resolvent_element(const StaticHamiltonian& H, cplx z, std::size_t x, std::size_t y) {
  if (x >= H.size() || y >= H.size()) throw ValidationError("site", "site index outside the box");
  const double dist = spectral_distance(H, z);
  if (!(dist > 1e-10 * (1.0 + std::abs(z))))
    throw NumericalError("z lies on the spectrum (distance " + std::to_string(dist) + ")");
  return Resolvent(H, z).column(x)[static_cast<Eigen::Index>(y)];
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const ContourSpec& c) {
  j = nlohmann::json{{"half_height", c.half_height},
                     {"half_width", c.half_width},
                     {"nodes_per_side", c.nodes_per_side}};
}

DunfordResult dunford_propagator(const StaticHamiltonian& H, std::span<const double> times,
                                 std::size_t x, const ContourSpec& contour) {
  const int m = contour.nodes_per_side;
  if (m < 16 || m % 2 != 0)
    throw ValidationError("contour.nodes_per_side", "need an even node count of at least 16");
  if (!(contour.half_height > 0.0))
    throw ValidationError("contour.half_height", "must be positive");
  if (x >= H.size()) throw ValidationError("site", "site index outside the box");
  const Eigen::VectorXd ev = H.spectrum();
  const double radius = std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
  const double a = contour.half_width > 0.0 ? contour.half_width : radius + 1.0;
  const double b = contour.half_height;
  if (!(a > radius))
    throw ValidationError("contour.half_width", "contour must enclose the spectrum");

  const auto nt = static_cast<Eigen::Index>(times.size());
  const auto n = static_cast<Eigen::Index>(H.size());
  CMatrix fine = CMatrix::Zero(nt, n), coarse = CMatrix::Zero(nt, n);

  const std::array<cplx, 5> corners{cplx(-a, -b), cplx(a, -b), cplx(a, b), cplx(-a, b), cplx(-a, -b)};
  const double h = 1.0 / m;
  for (int side = 0; side < 4; ++side) {
    const cplx z0 = corners[static_cast<std::size_t>(side)];
    const cplx dz = corners[static_cast<std::size_t>(side) + 1] - z0;
    for (int j = 0; j <= m; ++j) {
      const cplx z = z0 + (static_cast<double>(j) * h) * dz;
      Resolvent R(H, z);
      const CVector col = R.column(x);
      const bool end = j == 0 || j == m;
      const double wf = end ? 0.5 * h : h;
      const double wc = j % 2 != 0 ? 0.0 : (end ? h : 2.0 * h);
      CVector col2;
      if (end) col2 = R.apply(col);  // R(z)^2 delta_x, for F'(s)
      // Euler-Maclaurin: subtract (h^2/12)(F'(1) - F'(0)).
      const double sign = j == 0 ? -1.0 : 1.0;
      for (Eigen::Index i = 0; i < nt; ++i) {
        const double t = times[static_cast<std::size_t>(i)];
        const cplx e = std::exp(-kI * t * z);
        fine.row(i) += (wf * e * dz) * col.transpose();
        if (wc != 0.0) coarse.row(i) += (wc * e * dz) * col.transpose();
        if (end) {
          const CVector dF = e * dz * dz * (-kI * t * col - col2);
          fine.row(i) -= (sign * h * h / 12.0) * dF.transpose();
          coarse.row(i) -= (sign * 4.0 * h * h / 12.0) * dF.transpose();
        }
      }
    }
  }
  const cplx norm = 1.0 / (2.0 * std::numbers::pi * kI);
  DunfordResult out;
  out.values = norm * fine;
  out.error_estimate = ((fine - coarse).cwiseAbs() / (15.0 * 2.0 * std::numbers::pi));
  out.half_width = a;
  out.half_height = b;
  out.nodes_per_side = m;
  return out;
}

cplx dunford_propagator(const StaticHamiltonian& H, double t, std::size_t x, std::size_t y,
                        const ContourSpec& contour) {
  if (y >= H.size()) throw ValidationError("site", "site index outside the box");
  const double ts[1] = {t};
  return dunford_propagator(H, ts, x, contour).values(0, static_cast<Eigen::Index>(y));
}

CVector dense_propagator_column(const StaticHamiltonian& H, double t, std::size_t x) {
  if (H.size() > kSpectralDenseCap)
    throw ValidationError("geometry", "box exceeds the dense spectral cap");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(CMatrix(H.matrix()));
  const CMatrix& V = es.eigenvectors();
  CVector coeff = V.row(static_cast<Eigen::Index>(x)).adjoint();
  for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff[k] *= std::exp(-kI * t * es.eigenvalues()[k]);
  return V * coeff;
}

// ---------------------------------------------------------------------------

double decay_profile(DecayModel model, double r) {
  return model == DecayModel::exponential ? r : std::log1p(r);
}

DecayFit combes_thomas_fit(const StaticHamiltonian& H, cplx z, std::size_t x, int max_separation,
                           DecayModel model) {
  if (max_separation < 2) throw ValidationError("max_separation", "need at least 2 separations");
  const BoxGeometry& g = H.geometry();
  const Coord origin = g.coord(x);
  std::vector<std::size_t> targets;
  for (int r = 1; r <= max_separation; ++r) {
    Coord y = origin;
    y[0] += r;
    const auto idx = g.index(y);
    if (!idx) throw ValidationError("max_separation", "separation " + std::to_string(r) + " leaves the box");
    targets.push_back(*idx);
  }
  const CVector col = Resolvent(H, z).column(x);

  DecayFit fit;
  fit.model = model;
  std::vector<double> xs;
  for (int r = 1; r <= max_separation; ++r) {
    const double v = std::abs(col[static_cast<Eigen::Index>(targets[static_cast<std::size_t>(r - 1)])]);
    if (!(v > 1e-300)) continue;
    fit.separations.push_back(r);
    fit.log_values.push_back(std::log(v));
    xs.push_back(decay_profile(model, r));
  }
  if (xs.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  const LinearFit lf = least_squares(xs, fit.log_values);
  fit.rate = -lf.slope;
  fit.v_fit = fit.rate > 0.0 ? 1.0 / fit.rate : std::numeric_limits<double>::infinity();
  fit.intercept = lf.intercept;
  fit.r_squared = lf.r_squared;
  fit.bound_holds = true;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lv = fit.log_values[i];
    if (lv > std::log(2.0) - xs[i] / fit.v_fit) fit.bound_holds = false;
    fit.v_certified = std::max(fit.v_certified, xs[i] / (std::log(2.0) - lv));
  }
  return fit;
}

PropagatorBoundReport propagator_decay_check(const StaticHamiltonian& H, std::size_t x,
                                             std::span<const double> times, int max_separation,
                                             DecayModel model, int contour_samples) {
  const Eigen::VectorXd ev = H.spectrum();
  const double a = std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1])) + 1.0;
  const double b = 1.0;
  PropagatorBoundReport rep;
  const std::array<cplx, 5> corners{cplx(-a, -b), cplx(a, -b), cplx(a, b), cplx(-a, b), cplx(-a, -b)};
  for (int side = 0; side < 4; ++side)
    for (int j = 0; j < contour_samples; ++j) {
      const cplx z0 = corners[static_cast<std::size_t>(side)];
      const cplx z = z0 + (static_cast<double>(j) / contour_samples) *
                              (corners[static_cast<std::size_t>(side) + 1] - z0);
      const DecayFit f = combes_thomas_fit(H, z, x, max_separation, model);
      if (!f.degenerate) rep.v = std::max(rep.v, f.v_certified);
    }
  rep.prefactor = 4.0 * (a + b) / std::numbers::pi;
  const BoxGeometry& g = H.geometry();
  for (double t : times) {
    const CVector col = dense_propagator_column(H, t, x);
    for (int r = 1; r <= max_separation; ++r) {
      Coord y = g.coord(x);
      y[0] += r;
      const auto idx = g.index(y);
      if (!idx) continue;
      const double bound =
          rep.prefactor * std::exp(t * b - (rep.v > 0.0 ? decay_profile(model, r) / rep.v : 0.0));
      rep.max_ratio = std::max(rep.max_ratio, std::abs(col[static_cast<Eigen::Index>(*idx)]) / bound);
    }
  }
  rep.pass = rep.max_ratio <= 1.0;
  return rep;
}

// ---------------------------------------------------------------------------

double expansion_residual(const LatticeKernel& H0, const SmoothedStep& chi,
                          std::span<const double> phi, double sigma, int n, double shift) {
  if (n < 1) throw ValidationError("n", "expansion order must be at least 1");
  if (n > chi.max_order())
    throw ValidationError("n", "derivative order " + std::to_string(n) + " unavailable (max " +
                                   std::to_string(chi.max_order()) + ")");
  if (!(sigma > 0.0)) throw ValidationError("sigma", "must be positive");
  if (phi.size() != H0.size()) throw ValidationError("phi", "distance field does not match the box");
  const std::size_t N = phi.size();
  // derivs[x][k] = chi^{(k)}((phi(x) - shift) / sigma), k = 0..n
  std::vector<std::vector<double>> derivs(N, std::vector<double>(static_cast<std::size_t>(n) + 1));
  for (std::size_t x = 0; x < N; ++x) {
    const double xi = (phi[x] - shift) / sigma;
    for (int k = 0; k <= n; ++k) derivs[x][static_cast<std::size_t>(k)] = chi.derivative(k, xi);
  }
  const SparseKernel& h = H0.matrix();
  std::vector<Eigen::Triplet<cplx>> t;
  for (Eigen::Index r = 0; r < h.outerSize(); ++r)
    for (SparseKernel::InnerIterator it(h, r); it; ++it) {
      const auto x = static_cast<std::size_t>(r), y = static_cast<std::size_t>(it.col());
      if (x == y) continue;
      const double d = phi[y] - phi[x];
      double taylor = 0.0, p = 1.0;
      for (int k = 1; k <= n; ++k) {
        p *= d / sigma;
        taylor += p / factorial(k) * derivs[x][static_cast<std::size_t>(k)];
      }
      const double rem = (derivs[y][0] - derivs[x][0]) - taylor;
      if (rem != 0.0) t.emplace_back(static_cast<int>(x), static_cast<int>(y), kI * it.value() * rem);
    }
  SparseKernel res(h.rows(), h.cols());
  res.setFromTriplets(t.begin(), t.end());
  return operator_norm(res, false);
}

GapReport symmetrized_leading_gap(const LatticeKernel& H0, const SmoothedStep& chi,
                                  std::span<const double> phi, double sigma, double shift) {
  if (!(sigma > 0.0)) throw ValidationError("sigma", "must be positive");
  if (phi.size() != H0.size()) throw ValidationError("phi", "distance field does not match the box");
  if (!H0.hermitian()) throw ValidationError("kernel", "leading gap needs a Hermitian kernel");
  const std::size_t N = phi.size();
  std::vector<double> c(N), w(N);
  for (std::size_t x = 0; x < N; ++x) {
    const double xi = (phi[x] - shift) / sigma;
    c[x] = chi(xi);
    w[x] = chi.bump()(xi);
  }
  const double scale = chi.scale();
  const SparseKernel& h = H0.matrix();
  std::vector<Eigen::Triplet<cplx>> t;
  for (Eigen::Index r = 0; r < h.outerSize(); ++r)
    for (SparseKernel::InnerIterator it(h, r); it; ++it) {
      const auto x = static_cast<std::size_t>(r), y = static_cast<std::size_t>(it.col());
      if (x == y) continue;
      const double gap = (c[y] - c[x]) - scale / sigma * w[x] * w[y] * (phi[y] - phi[x]);
      if (gap != 0.0) t.emplace_back(static_cast<int>(x), static_cast<int>(y), kI * it.value() * gap);
    }
  SparseKernel op(h.rows(), h.cols());
  op.setFromTriplets(t.begin(), t.end());
  const SparseKernel compact = compress_support(op);
  GapReport rep;
  if (compact.nonZeros() == 0) return rep;
  const auto b = hermitian_extremes(compact);
  rep.norm = std::max(std::abs(b.lowest), std::abs(b.highest));
  rep.largest_eigenvalue = b.highest;
  return rep;
}

ScalingSweep fit_scaling(std::span<const double> sigmas, std::span<const double> values) {
  ScalingSweep s;
  s.sigmas.assign(sigmas.begin(), sigmas.end());
  s.values.assign(values.begin(), values.end());
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(values[i] > 0.0)) throw ValidationError("values", "scaling fit needs positive values");
    lx.push_back(std::log(sigmas[i]));
    ly.push_back(std::log(values[i]));
  }
  s.fit = least_squares(lx, ly);
  return s;
}

}  // namespace lcone
