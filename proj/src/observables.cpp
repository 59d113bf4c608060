#include "lcone/observables.hpp"

#include <algorithm>
#include <cmath>

#include "lcone/error.hpp"

namespace lcone {

namespace {

std::vector<double> radii(const BoxGeometry& g) {
  std::vector<double> r(g.site_count());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = g.radius(i);
  return r;
}

double tail_sum(const CVector& u, std::span<const double> dist, double r, double N) {
  if (static_cast<std::size_t>(u.size()) != dist.size())
    throw ValidationError("state", "distance field does not match the state");
  double s = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] > N) {
      const double m = std::norm(u[static_cast<Eigen::Index>(i)]);
      s += r == 0.0 ? m : std::pow(dist[i], r) * m;
    }
  return s;
}

double weighted(const CVector& u, std::span<const double> field) {
  double s = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i)
    s += field[i] * std::norm(u[static_cast<Eigen::Index>(i)]);
  return s;
}

// Fit log y vs log t over [from, to], skipping t <= 0 and floor values.
std::optional<LinearFit> log_log_fit(std::span<const double> t, std::span<const double> y,
                                     double from, double to) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > 0.0 && t[i] >= from && t[i] <= to && !at_floor(y[i])) {
      lx.push_back(std::log(t[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::nullopt;
  return least_squares(lx, ly);
}

}  // namespace

double outside_probability(const WaveState& state, double N) {
  const auto r = radii(state.geometry);
  return tail_sum(state.amplitudes, r, 0.0, N);
}

double outside_probability(const WaveState& state, double N, const DistanceField& dist) {
  return tail_sum(state.amplitudes, dist.values, 0.0, N);
}

double moment(const WaveState& state, double r, double N) {
  if (!(r >= 0.0)) throw ValidationError("r", "moment order must be nonnegative");
  const auto d = radii(state.geometry);
  return tail_sum(state.amplitudes, d, r, N);
}

double moment(const WaveState& state, double r, double N, const DistanceField& dist) {
  if (!(r >= 0.0)) throw ValidationError("r", "moment order must be nonnegative");
  return tail_sum(state.amplitudes, dist.values, r, N);
}

double position_spread(const WaveState& state) {
  const auto d = radii(state.geometry);
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    s += d[i] * d[i] * std::norm(state.amplitudes[static_cast<Eigen::Index>(i)]);
  return std::sqrt(s);
}

TailSeries tail_series(const Trajectory& tr, const std::function<double(double)>& threshold) {
  const auto d = radii(tr.geometry);
  TailSeries s;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double N = threshold(tr.times[i]);
    const double p = tail_sum(tr.states[i], d, 0.0, N);
    s.times.push_back(tr.times[i]);
    s.thresholds.push_back(N);
    s.values.push_back(p);
    s.floor.push_back(at_floor(p));
  }
  return s;
}

// ---------------------------------------------------------------------------

RadinSimonReport radin_simon_check(const Trajectory& tr, double kappa) {
  if (tr.size() == 0 || tr.times.front() != 0.0)
    throw ValidationError("trajectory", "needs a snapshot at t = 0");
  RadinSimonReport rep;
  rep.kappa = kappa;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  const double m0 = position_spread(tr.snapshot(0));
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    const double m = position_spread(tr.snapshot(i));
    rep.times.push_back(t);
    rep.spread.push_back(m);
    rep.max_violation = std::max(rep.max_violation, m - m0 - kappa * t);
    if (t > 0.0) rep.empirical_constant = std::max(rep.empirical_constant, (m - m0) / t);
  }
  return rep;
}

// ---------------------------------------------------------------------------

bool FrontDiagnostic::all_hold() const {
  return std::all_of(holds.begin(), holds.end(), [](bool b) { return b; });
}

FrontDiagnostic front_condition(const Trajectory& tr, const LatticeKernel& H0, double R, double v,
                                double delta, double alpha, const BumpFunction& w) {
  if (!(alpha > 0.5 && alpha <= 1.0)) throw ValidationError("alpha", "must lie in (1/2, 1]");
  if (!(delta > 0.0)) throw ValidationError("delta", "must be positive");
  if (!(v > delta / alpha)) throw ValidationError("v", "need v > delta / alpha");
  if (!(tr.geometry == H0.geometry()))
    throw ValidationError("trajectory", "trajectory and kernel live on different boxes");
  const DistanceField phi = distance_field(H0.geometry(), BallSource{R});
  // i[H0, phi] = i ad_phi(H0); the diagonal V(t) commutes with phi.
  const LatticeKernel comm = multi_commutator(H0, phi, 1);
  AstloParams params;
  params.v = v;
  params.v_bar = v - delta / (2.0 * alpha);
  params.alpha = alpha;
  params.epsilon = w.epsilon();
  params.R = R;

  FrontDiagnostic d;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    if (t <= 0.0) continue;
    const auto W = astlo_field([&](double a) { return w(a); }, phi.values, params, t);
    CVector Wu = tr.states[i];
    for (Eigen::Index x = 0; x < Wu.size(); ++x) Wu[x] *= W[static_cast<std::size_t>(x)];
    const double lhs = (comm.matrix() * Wu).norm();
    const double rhs = (v * alpha - delta) * std::pow(t, alpha - 1.0) * Wu.norm();
    d.times.push_back(t);
    d.lhs.push_back(lhs);
    d.rhs.push_back(rhs);
    d.holds.push_back(lhs <= rhs);
  }
  return d;
}

// ---------------------------------------------------------------------------

double MonotonicityReport::max_residual_after(double t_min) const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] >= t_min) m = std::max(m, residual[i]);
  return m;
}

MonotonicityReport astlo_monotonicity(const Trajectory& tr, const SmoothedStep& chi,
                                      const AstloParams& params) {
  if (params.schedule != AdiabaticSchedule::linear)
    throw ValidationError("astlo.schedule", "monotonicity needs the linear schedule");
  if (tr.size() == 0 || tr.times.front() != 0.0)
    throw ValidationError("trajectory", "needs a snapshot at t = 0");
  const DistanceField phi = distance_field(tr.geometry, BallSource{params.R});
  const auto f = [&](double a) { return chi(a); };
  MonotonicityReport rep;
  rep.initial = weighted(tr.states[0], astlo_field(f, phi.values, params, 0.0));
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    const double a = t == 0.0 ? rep.initial : weighted(tr.states[i], astlo_field(f, phi.values, params, t));
    rep.times.push_back(t);
    rep.residual.push_back(a - rep.initial);
  }
  rep.tail_fit = log_log_fit(rep.times, rep.residual, 1.0, std::numeric_limits<double>::infinity());
  return rep;
}

// ---------------------------------------------------------------------------

LightconeReport lightcone_report(const Trajectory& tr, const LightconeOptions& o) {
  if (!(o.alpha > 0.5 && o.alpha <= 1.0)) throw ValidationError("alpha", "must lie in (1/2, 1]");
  if (o.n < 1) throw ValidationError("n", "must be at least 1");
  if (tr.size() == 0 || tr.times.front() != 0.0)
    throw ValidationError("trajectory", "needs a snapshot at t = 0");
  LightconeReport rep;
  rep.tail = tail_series(tr, [&](double t) { return o.v * std::pow(t, o.alpha) + o.R; });
  rep.initial_tail = outside_probability(tr.snapshot(0), o.R);
  rep.gamma = 2.0 * o.alpha - 1.0;
  rep.beta = std::min((o.n + 1) * rep.gamma, (o.n + 1) * o.alpha - 1.0);

  const double P0 = rep.initial_tail;
  for (std::size_t i = 0; i < rep.tail.times.size(); ++i) {
    const double t = rep.tail.times[i];
    if (t <= 0.0) continue;
    const double denom = std::pow(t, -rep.gamma) * P0 + std::pow(t, -rep.beta);
    rep.fitted_C = std::max(rep.fitted_C, (rep.tail.values[i] - P0) / denom);
  }

  bool any_in_fit = false, all_floor = true;
  for (std::size_t i = 0; i < rep.tail.times.size(); ++i) {
    const double t = rep.tail.times[i];
    if (t >= o.fit_from && t <= o.fit_to) {
      any_in_fit = true;
      all_floor = all_floor && rep.tail.floor[i];
    }
    if (t >= o.check_from && t <= o.check_to && !rep.tail.floor[i])
      rep.max_tail_in_window = std::max(rep.max_tail_in_window, rep.tail.values[i]);
  }
  rep.below_floor = any_in_fit && all_floor;
  rep.decay_fit = log_log_fit(rep.tail.times, rep.tail.values, o.fit_from, o.fit_to);

  rep.diagnostic_only = o.alpha < 1.0 || !(o.v > o.kappa);
  const bool tail_ok = rep.max_tail_in_window <= o.max_tail;
  const bool exponent_ok = o.min_exponent <= 0.0 || rep.below_floor ||
                           (rep.decay_fit && rep.decay_exponent() >= o.min_exponent);
  rep.pass = !rep.diagnostic_only && tail_ok && exponent_ok;
  return rep;
}

// ---------------------------------------------------------------------------

TransportReport transport_exponents(const Trajectory& tr, std::span<const double> alphas,
                                    double from, double to, double cap) {
  if (alphas.empty()) throw ValidationError("alphas", "alpha grid is empty");
  if (!(to > from && from > 0.0)) throw ValidationError("window", "need 0 < from < to");
  std::size_t in_window = 0;
  for (double t : tr.times) in_window += (t >= from && t <= to) ? 1 : 0;
  if (in_window < 2) throw ValidationError("window", "degenerate window: fewer than two snapshots");

  TransportReport rep;
  rep.cap = cap;
  rep.window_from = from;
  rep.window_to = to;
  rep.caveat = "finite-time estimate over t in [" + std::to_string(from) + ", " +
               std::to_string(to) + "]; limsup replaced by a least-squares slope";
  for (double a : alphas) {
    const TailSeries s = tail_series(tr, [a](double t) { return std::pow(t, a) - 1.0; });
    TransportEstimate e;
    e.alpha = a;
    e.fit = log_log_fit(s.times, s.values, from, to);
    e.S_plus = e.fit ? -e.fit->slope : std::numeric_limits<double>::infinity();
    if (e.S_plus <= cap) rep.alpha_u_plus = std::max(rep.alpha_u_plus, a);
    rep.estimates.push_back(e);
  }
  return rep;
}

// ---------------------------------------------------------------------------

DyadicReport dyadic_moment_bound(const Trajectory& tr, double r, double r0, double v,
                                 double t_min, double t_short, double t_long) {
  if (!(r >= 0.0)) throw ValidationError("r", "must be nonnegative");
  if (!(r < r0)) throw ValidationError("r0", "need r < r0");
  if (!(v > 0.0)) throw ValidationError("v", "must be positive");
  if (tr.size() == 0 || tr.times.front() != 0.0)
    throw ValidationError("trajectory", "needs a snapshot at t = 0");
  const auto d = radii(tr.geometry);
  const double rmax = *std::max_element(d.begin(), d.end());

  DyadicReport rep;
  rep.r = r;
  rep.r0 = r0;
  rep.v = v;
  rep.B = tail_sum(tr.states[0], d, r0, 0.0);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    if (t <= 0.0) continue;
    const double base = v * t;
    int K = 1;
    while (std::ldexp(base, K + 1) < rmax) ++K;
    std::vector<double> Q(static_cast<std::size_t>(K), 0.0);
    double direct = 0.0;
    for (std::size_t x = 0; x < d.size(); ++x) {
      if (!(d[x] > 2.0 * base)) continue;
      const double m = std::pow(d[x], r) * std::norm(tr.states[i][static_cast<Eigen::Index>(x)]);
      direct += m;
      int k = 1;
      while (d[x] > std::ldexp(base, k + 1)) ++k;
      Q[static_cast<std::size_t>(k - 1)] += m;
    }
    double total = 0.0;
    for (double q : Q) total += q;
    rep.partition_defect = std::max(rep.partition_defect, std::abs(total - direct));
    rep.times.push_back(t);
    rep.moment.push_back(direct);
    rep.shells.push_back(std::move(Q));
    if (t >= t_min && t <= t_short) rep.C_short = std::max(rep.C_short, direct);
    if (t >= t_min && t <= t_long) rep.C_long = std::max(rep.C_long, direct);
  }
  rep.stable = (at_floor(rep.C_short) && at_floor(rep.C_long)) || rep.C_long <= 2.0 * rep.C_short;
  return rep;
}

void to_json(nlohmann::json& j, const LinearFit& f) {
  j = nlohmann::json{{"slope", f.slope},     {"intercept", f.intercept}, {"r_squared", f.r_squared},
                     {"points", f.points},   {"x_min", f.x_min},         {"x_max", f.x_max}};
}

}  // namespace lcone
