#include <doctest.h>

#include <cmath>

#include "lcone/error.hpp"
#include "lcone/fit.hpp"
#include "lcone/observables.hpp"
#include "oracles.hpp"

using namespace lcone;

namespace {

std::vector<double> grid(double T, double dt) {
  std::vector<double> t;
  for (int i = 0; i * dt <= T + 1e-12; ++i) t.push_back(i * dt);
  return t;
}

const Trajectory& free_run() {
  static const Trajectory tr = [] {
    const BoxGeometry g(1, 100);
    return evolve(build_laplacian(g), PotentialSchedule::zero(), delta_state(g), 15.0, grid(15.0, 0.25));
  }();
  return tr;
}

}  // namespace

TEST_CASE("least squares recovers an exact line and rejects degenerate input") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(0.5 - 2.0 * v);
  const LinearFit f = least_squares(x, y);
  CHECK(f.slope == doctest::Approx(-2.0));
  CHECK(f.intercept == doctest::Approx(0.5));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.points == 5);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(least_squares(one, one), ValidationError);
  const std::vector<double> flat{2, 2, 2};
  const std::vector<double> ys{1, 2, 3};
  CHECK_THROWS_AS(least_squares(flat, ys), ValidationError);
}

TEST_CASE("outside probability and moments are brute-force sums") {
  const BoxGeometry g(2, 7);
  const WaveState u = gaussian_state(g, 2.0, 0.3);
  const DistanceField d = distance_field(g, BallSource{1.5});
  for (double N : {0.0, 1.0, 2.5, 4.0}) {
    CHECK(outside_probability(u, N) == doctest::Approx(oracle::outside(g, u.amplitudes, N)).epsilon(1e-14));
    double m = 0.0, md = 0.0, pd = 0.0;
    for (std::size_t i = 0; i < g.site_count(); ++i) {
      const double p = std::norm(u.amplitudes[static_cast<Eigen::Index>(i)]);
      if (g.radius(i) > N) m += std::pow(g.radius(i), 2.0) * p;
      if (d[i] > N) {
        md += std::pow(d[i], 2.0) * p;
        pd += p;
      }
    }
    CHECK(moment(u, 2.0, N) == doctest::Approx(m).epsilon(1e-14));
    CHECK(moment(u, 2.0, N, d) == doctest::Approx(md).epsilon(1e-14));
    CHECK(outside_probability(u, N, d) == doctest::Approx(pd).epsilon(1e-14));
  }
}

TEST_CASE("Radin-Simon: the free walk spreads at sqrt(2) < kappa") {
  const RadinSimonReport r = radin_simon_check(free_run(), 2.0);
  CHECK(r.max_violation <= 1e-9);
  CHECK(r.empirical_constant == doctest::Approx(std::sqrt(2.0)).epsilon(1e-7));
}

TEST_CASE("light-cone report on the free walk") {
  LightconeOptions o;
  o.v = 3.0;
  o.kappa = 2.0;
  o.min_exponent = 4.0;
  o.max_tail = 1.0;  // loose: only the mechanics are under test here
  const LightconeReport r = lightcone_report(free_run(), o);
  CHECK_FALSE(r.diagnostic_only);
  CHECK(r.pass);
  REQUIRE(r.decay_fit.has_value());
  CHECK(r.decay_exponent() > 4.0);
  CHECK(r.tail.values.size() == free_run().size());
  // fitted_C is the smallest constant making the bound hold at every snapshot
  for (std::size_t i = 0; i < r.tail.times.size(); ++i) {
    const double t = r.tail.times[i];
    if (t <= 0.0) continue;
    CHECK(r.tail.values[i] <= r.fitted_C * std::pow(t, -r.beta) * (1.0 + 1e-12) + 1e-300);
  }

  o.v = 1.5;  // below kappa: nothing is claimed
  CHECK(lightcone_report(free_run(), o).diagnostic_only);
  o.v = 3.0;
  o.alpha = 0.5;
  CHECK_THROWS_AS(lightcone_report(free_run(), o), ValidationError);
}

TEST_CASE("monotonicity residual on the free walk stays below the tolerance") {
  const SmoothedStep chi = make_step(make_bump(1.0, 4), true);
  AstloParams p;
  p.v = 4.0;
  p.v_bar = 3.0;
  p.reference_time = 0.25;
  const MonotonicityReport m = astlo_monotonicity(free_run(), chi, p);
  CHECK(m.times.size() == free_run().size());
  CHECK(m.max_residual_after(5.0) <= 1e-6);
}

TEST_CASE("dyadic shells partition the moment exactly") {
  const BoxGeometry g(1, 150);
  const Trajectory tr =
      evolve(build_laplacian(g), PotentialSchedule::zero(), power_tail_state(g, 3.0, 60.0), 10.0, grid(10.0, 0.5));
  const DyadicReport d = dyadic_moment_bound(tr, 2.0, 3.0, 3.0, 1.0, 6.0, 10.0);
  CHECK(d.partition_defect <= 1e-12);
  CHECK(d.C_long >= d.C_short);
  for (std::size_t i = 0; i < d.times.size(); ++i) {
    const WaveState s = tr.snapshot(tr.index_of(d.times[i]));
    CHECK(d.moment[i] == doctest::Approx(moment(s, 2.0, 6.0 * d.times[i])).epsilon(1e-13));
  }
}

TEST_CASE("transport exponents: ballistic spreading keeps every S+ below the cap") {
  const std::vector<double> alphas{0.6, 0.8, 1.0};
  const TransportReport r = transport_exponents(free_run(), alphas, 3.0, 12.0, 2.0);
  REQUIRE(r.estimates.size() == 3);
  // the front moves at speed 2, so P(t^a - 1, t) stays of order one
  for (const auto& e : r.estimates) CHECK(e.S_plus <= 2.0);
  CHECK(r.alpha_u_plus == 1.0);
  CHECK(r.caveat.size() > 0);
}

TEST_CASE("front condition diagnostic skips t = 0") {
  const BoxGeometry g(1, 100);
  const FrontDiagnostic f =
      front_condition(free_run(), build_laplacian(g), 0.0, 3.0, 0.5, 1.0, make_bump(1.0, 2));
  CHECK(f.times.size() == free_run().size() - 1);
  CHECK(f.lhs.size() == f.rhs.size());
}
