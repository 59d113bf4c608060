#pragma once
// Independent reference computations for the tests. Nothing here calls into
// the library beyond geometry and kernel storage; every quantity is formed by
// brute force from dense matrices or by general-purpose quadrature.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lcone/geometry.hpp"
#include "lcone/kernel.hpp"

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using lcone::BoxGeometry;

inline Mat dense(const lcone::LatticeKernel& k) { return Mat(k.matrix()); }

inline Mat diag(const std::vector<double>& v) {
  Mat d = Mat::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = v[i];
  return d;
}

/// exp(-i t H) u for Hermitian H, by full eigendecomposition.
inline Vec propagate(const Mat& H, double t, const Vec& u) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  const Vec c = es.eigenvectors().adjoint() * u;
  Vec phase(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) phase[i] = std::exp(cplx(0.0, -t * es.eigenvalues()[i])) * c[i];
  return es.eigenvectors() * phase;
}

/// Dense (z - H)^{-1}.
inline Mat resolvent(const Mat& H, cplx z) {
  const Mat a = z * Mat::Identity(H.rows(), H.cols()) - H;
  return a.partialPivLu().inverse();
}

inline double spectral_norm(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

/// ad^k_phi(A) = [... [A, Phi], ..., Phi] as matrix products.
inline Mat nested_commutator(const Mat& A, const std::vector<double>& phi, int k) {
  Vec p(static_cast<Eigen::Index>(phi.size()));
  for (std::size_t i = 0; i < phi.size(); ++i) p[static_cast<Eigen::Index>(i)] = phi[i];
  Mat out = A;
  for (int j = 0; j < k; ++j) {
    const Mat next = out * p.asDiagonal() - p.asDiagonal() * out;
    out = next;
  }
  return out;
}

/// max_x sum_y |H(x,y)| |x - y|^k over the dense matrix.
inline double moment_sum(const Mat& H, const BoxGeometry& g, int k) {
  double best = 0.0;
  for (Eigen::Index x = 0; x < H.rows(); ++x) {
    double s = 0.0;
    for (Eigen::Index y = 0; y < H.cols(); ++y)
      if (x != y)
        s += std::abs(H(x, y)) *
             std::pow(g.distance(static_cast<std::size_t>(x), static_cast<std::size_t>(y)), k);
    best = std::max(best, s);
  }
  return best;
}

/// Distance to the ball of radius R about the origin, by exhaustive search.
inline std::vector<double> ball_distance(const BoxGeometry& g, double R) {
  std::vector<std::size_t> ball;
  for (std::size_t i = 0; i < g.site_count(); ++i)
    if (g.radius(i) <= R) ball.push_back(i);
  std::vector<double> phi(g.site_count(), 0.0);
  for (std::size_t i = 0; i < g.site_count(); ++i) {
    double d = INFINITY;
    for (std::size_t j : ball) d = std::min(d, g.distance(i, j));
    phi[i] = d;
  }
  return phi;
}

/// sum over |x| > N of |u(x)|^2.
inline double outside(const BoxGeometry& g, const Vec& u, double N) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.site_count(); ++i)
    if (g.radius(i) > N) s += std::norm(u[static_cast<Eigen::Index>(i)]);
  return s;
}

// Bump with supp in (0, eps), unit plateau on [eps/4, 3eps/4], written out
// from the transition f(t) / (f(t) + f(1 - t)), f(t) = exp(-1/t).
inline double transition(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

inline double bump(double eps, double y) {
  const double q = eps / 4.0;
  if (y <= 0.0 || y >= eps) return 0.0;
  if (y < q) return transition(y / q);
  if (y > 3.0 * q) return transition((eps - y) / q);
  return 1.0;
}

/// Derivatives 0..5 of the bump at y by forward-mode automatic differentiation
/// of the closed form above.
inline std::vector<double> bump_derivatives(double eps, double y) {
  using namespace boost::math::differentiation;
  const double q = eps / 4.0;
  std::vector<double> out(6, 0.0);
  if (y <= 0.0 || y >= eps) return out;
  if (y >= q && y <= 3.0 * q) {
    out[0] = 1.0;
    return out;
  }
  const auto x = make_fvar<double, 5>(y);
  const auto t = y < q ? x / q : (eps - x) / q;
  const auto a = exp(-1.0 / t);
  const auto b = exp(-1.0 / (1.0 - t));
  const auto f = a / (a + b);
  for (int k = 0; k <= 5; ++k) out[static_cast<std::size_t>(k)] = f.derivative(static_cast<std::size_t>(k));
  return out;
}

/// int_0^x bump(y)^2 dy by tanh-sinh, panel by panel so the kinks at the
/// plateau ends sit on panel boundaries.
inline double bump_square_integral(double eps, double x) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double q = eps / 4.0;
  const double cuts[] = {0.0, q, 3.0 * q, eps};
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double a = cuts[i];
    const double b = std::min(cuts[i + 1], x);
    if (b <= a) break;
    s += ts.integrate([&](double y) { return bump(eps, y) * bump(eps, y); }, a, b);
  }
  return s;
}

/// Random Hermitian kernel with entries up to `range` (sup distance) apart.
inline lcone::LatticeKernel random_kernel(const BoxGeometry& g, int range, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<lcone::LatticeKernel::Entry> e;
  for (std::size_t i = 0; i < g.site_count(); ++i)
    for (std::size_t j = i + 1; j < g.site_count(); ++j) {
      const lcone::Coord a = g.coord(i), b = g.coord(j);
      int sup = 0;
      for (int c = 0; c < g.dimension(); ++c) sup = std::max(sup, std::abs(a[c] - b[c]));
      if (sup > range) continue;
      const cplx h(U(rng), U(rng));
      e.push_back({i, j, h});
      e.push_back({j, i, std::conj(h)});
    }
  return lcone::LatticeKernel::from_entries(g, e, true);
}

}  // namespace oracle
