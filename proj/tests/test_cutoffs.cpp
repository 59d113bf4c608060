#include <doctest.h>

#include <cmath>

#include "lcone/cutoffs.hpp"
#include "lcone/error.hpp"
#include "oracles.hpp"

using namespace lcone;

TEST_CASE("bump values match the closed form") {
  for (double eps : {1.0, 4.0, 16.0}) {
    const BumpFunction w = make_bump(eps, 6);
    for (int i = -10; i <= 210; ++i) {
      const double y = eps * i / 200.0;
      CHECK(w(y) == doctest::Approx(oracle::bump(eps, y)).epsilon(1e-14));
    }
    CHECK(w(0.3 * eps) == 1.0);
    CHECK(w(-1e-9) == 0.0);
    CHECK(w(eps) == 0.0);
  }
}

TEST_CASE("bump derivatives match automatic differentiation of the closed form") {
  const double eps = 2.0;
  const BumpFunction w = make_bump(eps, 5);
  for (double y : {0.05, 0.2, 0.37, 0.45, 1.55, 1.8, 1.93}) {
    const std::vector<double> ref = oracle::bump_derivatives(eps, y);
    for (int k = 1; k <= 5; ++k) {
      const double r = ref[static_cast<std::size_t>(k)];
      CHECK(std::abs(w.derivative(k, y) - r) <= 1e-12 * std::max(1.0, std::abs(r)));
    }
    const auto all = w.derivatives(y, 5);
    REQUIRE(all.size() == 6);
    for (int k = 0; k <= 5; ++k) CHECK(all[static_cast<std::size_t>(k)] == doctest::Approx(w.derivative(k, y)).epsilon(1e-14));
  }
  CHECK(w.derivative(3, 1.0) == 0.0);  // plateau
}

TEST_CASE("smoothed step is c times the integral of w squared") {
  for (double eps : {1.0, 16.0}) {
    const BumpFunction w = make_bump(eps, 4);
    const SmoothedStep raw = make_step(w, false);
    const SmoothedStep unit = make_step(w, true);
    const double total = oracle::bump_square_integral(eps, eps);
    CHECK(raw.sup_norm() == doctest::Approx(total).epsilon(1e-13));
    CHECK(unit.sup_norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(unit.scale() * total == doctest::Approx(1.0).epsilon(1e-13));
    for (int i = 0; i <= 40; ++i) {
      const double x = eps * i / 40.0 + 1e-3 * eps;
      CHECK(raw(x) == doctest::Approx(oracle::bump_square_integral(eps, x)).epsilon(1e-12));
      CHECK(unit.derivative(1, x) == doctest::Approx(unit.scale() * w(x) * w(x)).epsilon(1e-13));
    }
    CHECK(raw(-1.0) == 0.0);
    CHECK(unit(2.0 * eps) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("higher step derivatives are derivatives of c w^2") {
  const BumpFunction w = make_bump(1.0, 4);
  const SmoothedStep chi = make_step(w, true);
  CHECK(chi.max_order() == 5);
  for (double x : {0.1, 0.2, 0.8, 0.9}) {
    const double d2 = 2.0 * chi.scale() * w(x) * w.derivative(1, x);
    CHECK(chi.derivative(2, x) == doctest::Approx(d2).epsilon(1e-12));
    const double d3 = 2.0 * chi.scale() * (w.derivative(1, x) * w.derivative(1, x) + w(x) * w.derivative(2, x));
    CHECK(chi.derivative(3, x) == doctest::Approx(d3).epsilon(1e-12));
  }
}

TEST_CASE("ASTLO parameters are validated with field names") {
  AstloParams p;
  p.v = 3.0;
  p.v_bar = 3.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("v"), ValidationError);
  p.v_bar = 2.0;
  p.alpha = 1.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.alpha = 1.0;
  CHECK_NOTHROW(p.validate());
  CHECK(p.lambda() == doctest::Approx(1.0));
  CHECK(p.s(2.0) == doctest::Approx(2.0));
}

TEST_CASE("ASTLO argument is (phi - v_bar t^alpha) / s^alpha") {
  const BoxGeometry g(1, 10);
  const auto phi = distance_field(g, BallSource{0.0});
  AstloParams p;
  p.v = 4.0;
  p.v_bar = 3.0;
  p.alpha = 0.75;
  p.epsilon = 2.0;
  const double t = 2.5;
  const auto arg = astlo_argument(phi.values, p, t);
  const double s = std::pow((p.v - p.v_bar) / p.epsilon, 1.0 / p.alpha) * t;
  for (std::size_t i = 0; i < g.site_count(); ++i)
    CHECK(arg[i] == doctest::Approx((phi[i] - p.v_bar * std::pow(t, p.alpha)) / std::pow(s, p.alpha)));
}

TEST_CASE("sandwich and window inequalities hold on a small grid") {
  const BoxGeometry g(2, 12);
  const auto phi = distance_field(g, BallSource{1.0});
  const BumpFunction w = make_bump(1.0, 3);
  const SmoothedStep chi = make_step(w, true);
  for (double alpha : {0.75, 1.0})
    for (double t : {0.0, 0.5, 2.0, 4.0}) {
      AstloParams p;
      p.v = 3.5;
      p.v_bar = 2.5;
      p.alpha = alpha;
      p.reference_time = 0.25;
      CHECK(sandwich_check(chi, phi.values, p, t).max_violation <= 1e-12);
      if (t > 0.0) {
        const WindowReport r = window_check(w, phi.values, p, t);
        CHECK(r.support_violation <= 1e-12);
        CHECK(r.plateau_violation <= 1e-12);
      }
    }
}
