#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lcone/error.hpp"
#include "lcone/spectral.hpp"
#include "oracles.hpp"

using namespace lcone;

namespace {

StaticHamiltonian sample_hamiltonian(int L) {
  const BoxGeometry g(1, L);
  std::vector<double> v(g.site_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.7 * static_cast<double>(i));
  return StaticHamiltonian(build_laplacian(g), v);
}

std::vector<double> field_at(const SmoothedStep& chi, int k, const std::vector<double>& phi, double shift,
                             double sigma) {
  std::vector<double> out;
  for (double p : phi) out.push_back(k == 0 ? chi((p - shift) / sigma) : chi.derivative(k, (p - shift) / sigma));
  return out;
}

}  // namespace

TEST_CASE("spectrum, norm and spectral distance agree with a dense solve") {
  const StaticHamiltonian H = sample_hamiltonian(15);
  const oracle::Mat D(H.matrix());
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(D);
  const Eigen::VectorXd ev = es.eigenvalues();
  CHECK((H.spectrum() - ev).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(H.norm() == doctest::Approx(std::max(-ev.minCoeff(), ev.maxCoeff())).epsilon(1e-12));
  const cplx z(0.3, 0.8);
  double d = INFINITY;
  for (Eigen::Index i = 0; i < ev.size(); ++i) d = std::min(d, std::abs(z - ev[i]));
  CHECK(spectral_distance(H, z) == doctest::Approx(d).epsilon(1e-12));
}

TEST_CASE("resolvent elements match a dense inverse") {
  const StaticHamiltonian H = sample_hamiltonian(20);
  const oracle::Mat R = oracle::resolvent(oracle::Mat(H.matrix()), cplx(0.4, 0.6));
  const std::size_t x = H.geometry().origin();
  const Resolvent res(H, cplx(0.4, 0.6));
  const CVector col = res.column(x);
  for (std::size_t y = 0; y < H.size(); ++y) {
    const cplx ref = R(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
    CHECK(std::abs(col[static_cast<Eigen::Index>(y)] - ref) <= 1e-12);
    if (y % 7 == 0) CHECK(std::abs(resolvent_element(H, cplx(0.4, 0.6), x, y) - ref) <= 1e-12);
  }
}

TEST_CASE("a point on the spectrum is refused") {
  const StaticHamiltonian H(build_laplacian(BoxGeometry(1, 2)));
  // eigenvalues of the 5-site chain are 2 cos(k pi / 6); 0 is one of them
  CHECK_THROWS_AS(Resolvent(H, cplx(0.0, 0.0)), NumericalError);
}

TEST_CASE("Dunford propagator matches the dense exponential") {
  const StaticHamiltonian H = sample_hamiltonian(16);
  const std::size_t x = H.geometry().origin();
  const std::vector<double> times{0.5, 2.0, 4.0};
  ContourSpec c;
  c.nodes_per_side = 256;
  const DunfordResult r = dunford_propagator(H, times, x, c);
  REQUIRE(r.values.rows() == 3);
  oracle::Vec e = oracle::Vec::Zero(static_cast<Eigen::Index>(H.size()));
  e[static_cast<Eigen::Index>(x)] = 1.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const oracle::Vec ref = oracle::propagate(oracle::Mat(H.matrix()), times[i], e);
    const CVector dense = dense_propagator_column(H, times[i], x);
    CHECK((dense - ref).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((r.values.row(static_cast<Eigen::Index>(i)).transpose() - ref).cwiseAbs().maxCoeff() <= 1e-6);
  }
  CHECK(std::abs(dunford_propagator(H, 1.0, x, x + 3, c) -
                 oracle::propagate(oracle::Mat(H.matrix()), 1.0, e)[static_cast<Eigen::Index>(x + 3)]) <= 1e-6);
}

TEST_CASE("Combes-Thomas fits tell exponential from polynomial hopping") {
  const BoxGeometry g(1, 64);
  const StaticHamiltonian E(build_exponential_kernel(g, 1.0, 1.0));
  const StaticHamiltonian P(build_powerlaw_kernel(g, 4.0, 1.0));
  const std::size_t x = g.origin();
  const cplx zE(E.norm() + 1.5, 0.0), zP(P.norm() + 1.5, 0.0);
  const DecayFit ee = combes_thomas_fit(E, zE, x, 40, DecayModel::exponential);
  const DecayFit el = combes_thomas_fit(E, zE, x, 40, DecayModel::logarithmic);
  const DecayFit pl = combes_thomas_fit(P, zP, x, 40, DecayModel::logarithmic);
  const DecayFit pe = combes_thomas_fit(P, zP, x, 40, DecayModel::exponential);
  CHECK(ee.r_squared >= 0.99);
  CHECK(ee.r_squared > el.r_squared);
  CHECK(pl.r_squared >= 0.95);
  CHECK(pl.r_squared - pe.r_squared >= 0.03);
  CHECK(ee.separations.size() == 40);
  // the fitted log values are the resolvent itself
  const oracle::Mat R = oracle::resolvent(oracle::Mat(E.matrix()), zE);
  CHECK(ee.log_values[4] == doctest::Approx(std::log(std::abs(R(static_cast<Eigen::Index>(x + 5), static_cast<Eigen::Index>(x))))).epsilon(1e-10));
  CHECK(decay_profile(DecayModel::logarithmic, std::numbers::e - 1.0) == doctest::Approx(1.0));
}

TEST_CASE("propagator bound holds for the exponential kernel") {
  const BoxGeometry g(1, 40);
  std::vector<double> v(g.site_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * std::cos(1.3 * static_cast<double>(i));
  const StaticHamiltonian H(build_exponential_kernel(g, 1.0, 1.0), v);
  const std::vector<double> times{0.0, 1.0, 3.0};
  const PropagatorBoundReport r = propagator_decay_check(H, g.origin(), times, 30, DecayModel::exponential, 8);
  CHECK(r.pass);
  CHECK(r.max_ratio <= 1.0);
  CHECK(r.v > 0.0);
}

TEST_CASE("expansion residual equals the dense remainder") {
  const BoxGeometry g(1, 30);
  const LatticeKernel H0 = build_laplacian(g);
  const DistanceField phi = distance_field(g, BallSource{0.0});
  const SmoothedStep chi = make_step(make_bump(4.0, 4), true);
  const oracle::Mat H = oracle::dense(H0);
  const cplx I(0.0, 1.0);
  for (double sigma : {1.0, 2.5})
    for (int n = 1; n <= 3; ++n) {
      const double shift = 3.37;
      const oracle::Mat A = oracle::diag(field_at(chi, 0, phi.values, shift, sigma));
      oracle::Mat rem = I * (H * A - A * H);
      double fact = 1.0;
      for (int k = 1; k <= n; ++k) {
        fact *= k;
        const oracle::Mat Ak = oracle::diag(field_at(chi, k, phi.values, shift, sigma));
        rem -= std::pow(sigma, -k) / fact * Ak * (I * oracle::nested_commutator(H, phi.values, k));
      }
      const double ref = oracle::spectral_norm(rem);
      CHECK(expansion_residual(H0, chi, phi.values, sigma, n, shift) == doctest::Approx(ref).epsilon(1e-9));
    }
  CHECK_THROWS_AS(expansion_residual(H0, chi, phi.values, 1.0, 9, 0.0), ValidationError);
}

TEST_CASE("symmetrised leading gap equals the dense operator") {
  const BoxGeometry g(1, 30);
  const LatticeKernel H0 = build_laplacian(g);
  const DistanceField phi = distance_field(g, BallSource{0.0});
  const SmoothedStep chi = make_step(make_bump(4.0, 3), true);
  const oracle::Mat H = oracle::dense(H0);
  const cplx I(0.0, 1.0);
  const double sigma = 2.0, shift = 3.37;
  const oracle::Mat A = oracle::diag(field_at(chi, 0, phi.values, shift, sigma));
  std::vector<double> wv;
  for (double p : phi.values) wv.push_back(chi.bump()((p - shift) / sigma));
  const oracle::Mat W = oracle::diag(wv);
  const oracle::Mat P = oracle::diag(phi.values);
  const oracle::Mat gap = I * (H * A - A * H) - chi.scale() / sigma * W * (I * (H * P - P * H)) * W;
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(gap);
  const GapReport r = symmetrized_leading_gap(H0, chi, phi.values, sigma, shift);
  CHECK(r.largest_eigenvalue == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-9));
  CHECK(r.norm == doctest::Approx(es.eigenvalues().cwiseAbs().maxCoeff()).epsilon(1e-9));
}

TEST_CASE("scaling fit recovers a power law") {
  const std::vector<double> s{4, 8, 16, 32, 64};
  std::vector<double> v;
  for (double x : s) v.push_back(3.0 * std::pow(x, -2.5));
  const ScalingSweep f = fit_scaling(s, v);
  CHECK(f.fit.slope == doctest::Approx(-2.5));
  CHECK(f.fit.r_squared == doctest::Approx(1.0));
}
