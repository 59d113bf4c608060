#include "lcone/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <thread>

#include "lcone/cutoffs.hpp"
#include "lcone/error.hpp"
#include "lcone/observables.hpp"
#include "lcone/spectral.hpp"
#include "lcone/trajectory_io.hpp"

namespace lcone {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxAutoSites = 4'000'000;
constexpr double kMaxAutoEntries = 6e7;  // stored kernel entries, about 1.5 GB

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string sci(double x) { return fmt("%.3e", x); }

Series from_tail(std::string name, const TailSeries& s) {
  Series out;
  out.name = std::move(name);
  out.x = s.times;
  out.threshold = s.thresholds;
  out.value = s.values;
  out.floor = s.floor;
  return out;
}

Series plain_series(std::string name, std::string x_label, std::vector<double> x,
                    std::vector<double> value, std::vector<double> threshold = {}) {
  Series s;
  s.name = std::move(name);
  s.x_label = std::move(x_label);
  s.x = std::move(x);
  s.value = std::move(value);
  s.threshold = threshold.empty() ? std::vector<double>(s.x.size(), 0.0) : std::move(threshold);
  s.floor.resize(s.x.size());
  for (std::size_t i = 0; i < s.x.size(); ++i) s.floor[i] = at_floor(std::abs(s.value[i]));
  return s;
}

Verdict verdict_of(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

json fit_json(const std::optional<LinearFit>& f) {
  if (!f) return nullptr;
  return json(*f);
}

/// Numerical breakdowns inside one check become a failing verdict; config
/// problems (ValidationError) still abort the run before anything is written.
template <class F>
CheckResult guarded(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    CheckResult c;
    c.name = name;
    c.verdict = Verdict::fail;
    c.summary = std::string("numerical error: ") + e.what();
    c.details["error"] = e.what();
    return c;
  }
}

// ---------------------------------------------------------------------------
// Trajectory checks

CheckResult check_unitarity(const Trajectory& tr, const UnitarityCheck& u) {
  CheckResult c;
  c.name = "unitarity";
  const double drift = tr.max_norm_drift();
  c.verdict = verdict_of(drift <= u.tolerance);
  c.metrics["max_norm_drift"] = drift;
  c.metrics["accepted_steps"] = static_cast<double>(tr.accepted_steps);
  c.metrics["rejected_steps"] = static_cast<double>(tr.rejected_steps);
  c.details["tolerance"] = u.tolerance;
  c.summary = "max | ||u_t|| - 1 | = " + sci(drift) + " (limit " + sci(u.tolerance) + ")";
  c.series.push_back(plain_series("norm drift", "t", tr.times, tr.norm_drift));
  return c;
}

CheckResult check_lightcone(const Trajectory& tr, LightconeOptions o, double kappa) {
  CheckResult c;
  c.name = "lightcone";
  o.kappa = kappa;
  const LightconeReport r = lightcone_report(tr, o);
  if (r.diagnostic_only) c.verdict = Verdict::diagnostic_only;
  else if (!r.pass) c.verdict = Verdict::fail;
  else c.verdict = r.below_floor ? Verdict::below_floor : Verdict::pass;

  c.metrics["fitted_C"] = r.fitted_C;
  c.metrics["max_tail"] = r.max_tail_in_window;
  c.metrics["decay_exponent"] = r.decay_exponent();
  c.metrics["decay_r_squared"] = r.decay_fit ? r.decay_fit->r_squared : 0.0;
  c.metrics["initial_tail"] = r.initial_tail;
  c.metrics["gamma"] = r.gamma;
  c.metrics["beta"] = r.beta;
  c.metrics["kappa"] = kappa;
  c.details = {{"v", o.v},
               {"alpha", o.alpha},
               {"R", o.R},
               {"n", o.n},
               {"fit_window", {o.fit_from, o.fit_to}},
               {"check_window", {o.check_from, o.check_to}},
               {"max_tail_limit", o.max_tail},
               {"min_exponent", o.min_exponent},
               {"decay_fit", fit_json(r.decay_fit)},
               {"below_floor", r.below_floor}};
  c.summary = "max P(vt^a + R, t) on [" + fmt("%g", o.check_from) + ", " + fmt("%g", o.check_to) +
              "] = " + sci(r.max_tail_in_window) + " (limit " + sci(o.max_tail) +
              "); decay exponent " + fmt("%.2f", r.decay_exponent()) + "; C = " + sci(r.fitted_C);
  if (r.diagnostic_only) c.summary += "; diagnostic only (alpha < 1 or v <= kappa)";
  c.series.push_back(from_tail("P(vt^a + R, t)", r.tail));
  return c;
}

CheckResult check_radin_simon(const Trajectory& tr, const RadinSimonCheck& q, double kappa) {
  CheckResult c;
  c.name = "radin_simon";
  const RadinSimonReport r = radin_simon_check(tr, kappa);
  c.verdict = verdict_of(r.max_violation <= q.tolerance);
  c.metrics["max_violation"] = r.max_violation;
  c.metrics["empirical_constant"] = r.empirical_constant;
  c.metrics["kappa"] = kappa;
  c.details["tolerance"] = q.tolerance;
  c.summary = "max (|| |x| u_t || - || |x| u_0 || - kappa t) = " + sci(r.max_violation) +
              "; smallest constant " + fmt("%.4f", r.empirical_constant) + " vs kappa " + fmt("%g", kappa);
  std::vector<double> bound;
  for (double t : r.times) bound.push_back(r.spread.front() + kappa * t);
  c.series.push_back(plain_series("|| |x| u_t ||", "t", r.times, r.spread, bound));
  return c;
}

CheckResult check_monotonicity(const Trajectory& tr, const MonotonicityCheck& m) {
  CheckResult c;
  c.name = "monotonicity";
  const SmoothedStep chi = make_step(make_bump(m.epsilon, 4), true);
  AstloParams p;
  p.v = m.v;
  p.v_bar = m.v_bar;
  p.alpha = 1.0;
  p.epsilon = m.epsilon;
  p.R = m.R;
  p.reference_time = m.reference_time;
  p.validate();
  const MonotonicityReport r = astlo_monotonicity(tr, chi, p);
  const double worst = r.max_residual_after(m.t_min);
  c.verdict = verdict_of(worst <= m.tolerance);
  c.metrics["max_residual"] = worst;
  c.metrics["initial"] = r.initial;
  if (r.tail_fit) c.metrics["residual_slope"] = r.tail_fit->slope;
  c.details = {{"astlo", p}, {"t_min", m.t_min}, {"tolerance", m.tolerance}, {"tail_fit", fit_json(r.tail_fit)}};
  c.summary = "max_{t >= " + fmt("%g", m.t_min) + "} <A(t)>_t - <A(0)>_0 = " + sci(worst) +
              " (limit " + sci(m.tolerance) + ")";
  c.series.push_back(plain_series("<A(t)>_t - <A(0)>_0", "t", r.times, r.residual));
  return c;
}

CheckResult check_front(const Trajectory& tr, const LatticeKernel& H0, const FrontCheck& f) {
  CheckResult c;
  c.name = "front";
  const FrontDiagnostic d = front_condition(tr, H0, f.R, f.v, f.delta, f.alpha, make_bump(f.epsilon, 2));
  std::size_t holding = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < d.times.size(); ++i) {
    holding += d.holds[i] ? 1 : 0;
    if (d.rhs[i] > 0.0) worst = std::max(worst, d.lhs[i] / d.rhs[i]);
  }
  c.verdict = Verdict::diagnostic_only;
  c.metrics["fraction_holding"] = d.times.empty() ? 1.0 : static_cast<double>(holding) / d.times.size();
  c.metrics["max_ratio"] = worst;
  c.details = {{"R", f.R}, {"v", f.v}, {"delta", f.delta}, {"alpha", f.alpha}, {"epsilon", f.epsilon},
               {"all_hold", d.all_hold()}};
  c.summary = "front condition holds at " + std::to_string(holding) + " of " +
              std::to_string(d.times.size()) + " snapshots; max lhs/rhs " + fmt("%.3g", worst);
  c.series.push_back(plain_series("|| i[H0, phi] W u ||", "t", d.times, d.lhs));
  c.series.push_back(plain_series("(v a - delta) t^(a-1) || W u ||", "t", d.times, d.rhs));
  return c;
}

CheckResult check_transport(const Trajectory& tr, const TransportCheck& q) {
  CheckResult c;
  c.name = "transport";
  const TransportReport r = transport_exponents(tr, q.alphas, q.from, q.to, q.cap);
  c.verdict = Verdict::diagnostic_only;
  json table = json::array();
  for (const auto& e : r.estimates) {
    c.metrics["S_plus@" + fmt("%g", e.alpha)] = e.S_plus;
    table.push_back({{"alpha", e.alpha},
                     {"S_plus", std::isfinite(e.S_plus) ? json(e.S_plus) : json("inf")},
                     {"fit", fit_json(e.fit)}});
    const double a = e.alpha;
    c.series.push_back(from_tail("alpha = " + fmt("%g", a),
                                 tail_series(tr, [a](double t) { return std::pow(t, a) - 1.0; })));
  }
  c.metrics["alpha_u_plus"] = r.alpha_u_plus;
  c.details = {{"table", table}, {"window", {r.window_from, r.window_to}}, {"cap", r.cap}, {"caveat", r.caveat}};
  c.summary = "alpha_u+ = " + fmt("%g", r.alpha_u_plus) + " (largest alpha with S+ <= " + fmt("%g", r.cap) +
              "; " + r.caveat + ")";
  return c;
}

CheckResult check_dyadic(const Trajectory& tr, const DyadicCheck& q) {
  CheckResult c;
  c.name = "dyadic";
  const DyadicReport r = dyadic_moment_bound(tr, q.r, q.r0, q.v, q.t_min, q.t_short, q.t_long);
  const bool partition_ok = r.partition_defect <= q.partition_tolerance;
  c.verdict = verdict_of(partition_ok && r.stable);
  c.metrics["C_fit"] = r.C_short;
  c.metrics["C_extended"] = r.C_long;
  c.metrics["C_ratio"] = r.C_short > 0.0 ? r.C_long / r.C_short : 1.0;
  c.metrics["B"] = r.B;
  c.metrics["partition_defect"] = r.partition_defect;
  c.details = {{"r", q.r}, {"r0", q.r0}, {"v", q.v}, {"fit_window", {q.t_min, q.t_short}},
               {"extended_window", {q.t_min, q.t_long}}, {"stable", r.stable},
               {"partition_tolerance", q.partition_tolerance}};
  c.summary = "sup P_r(2vt, t) = " + sci(r.C_short) + " on [" + fmt("%g", q.t_min) + ", " +
              fmt("%g", q.t_short) + "], " + sci(r.C_long) + " up to " + fmt("%g", q.t_long) +
              "; shell partition defect " + sci(r.partition_defect);
  std::vector<double> thr;
  for (double t : r.times) thr.push_back(2.0 * q.v * t);
  c.series.push_back(plain_series("P_r(2vt, t)", "t", r.times, r.moment, thr));
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> t, v;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      if (k >= r.shells[i].size()) continue;
      t.push_back(r.times[i]);
      v.push_back(r.shells[i][k]);
    }
    c.series.push_back(plain_series("shell k=" + std::to_string(k + 1), "t", t, v));
  }
  return c;
}

CheckResult check_replay(const Trajectory& tr, const LatticeKernel& H0, const Scenario& sc,
                         const NlsReplayCheck& q) {
  CheckResult c;
  c.name = "nls_replay";
  const ReplayResult r = frozen_coefficient_replay(tr, H0, sc.potential, sc.nonlinearity, q.substeps);
  c.verdict = verdict_of(r.max_deviation <= q.tolerance);
  c.metrics["max_deviation"] = r.max_deviation;
  c.metrics["max_gap"] = r.max_gap;
  c.metrics["max_amplitude"] = tr.max_amplitude;
  c.details = {{"substeps", q.substeps},
               {"tolerance", q.tolerance},
               {"hypothesis_violation", tr.hypothesis_violation},
               {"nonlinearity", sc.nonlinearity}};
  c.summary = "frozen-coefficient replay deviation " + sci(r.max_deviation) + " (limit " +
              sci(q.tolerance) + ") over " + std::to_string(tr.size()) + " grid points";
  if (tr.hypothesis_violation) c.summary += "; |q| exceeded C2";
  c.series.push_back(plain_series("|| u_t - q_t ||", "t", tr.times, r.deviations));
  return c;
}

// ---------------------------------------------------------------------------
// Static-Hamiltonian checks

StaticHamiltonian static_hamiltonian(const Scenario& sc, const LatticeKernel& H0) {
  std::vector<double> v;
  if (!sc.potential.is_zero()) v = sc.potential.evaluate(H0.geometry(), 0.0);
  return StaticHamiltonian(H0, std::move(v));
}

const char* model_label(DecayModel m) {
  return m == DecayModel::exponential ? "exponential" : "logarithmic";
}

CheckResult check_combes_thomas(const StaticHamiltonian& H, const CombesThomasCheck& q) {
  CheckResult c;
  c.name = "combes_thomas";
  const std::size_t x = H.geometry().origin();
  const cplx z(H.norm() + q.offset, 0.0);
  const DecayModel other =
      q.expect == DecayModel::exponential ? DecayModel::logarithmic : DecayModel::exponential;
  const DecayFit fe = combes_thomas_fit(H, z, x, q.max_separation, q.expect);
  const DecayFit fo = combes_thomas_fit(H, z, x, q.max_separation, other);
  const double gap = fe.r_squared - fo.r_squared;
  if (fe.degenerate) {
    c.verdict = Verdict::below_floor;
  } else {
    // the exponential envelope only makes sense when exponential decay is expected
    const bool envelope = q.expect != DecayModel::exponential || fe.bound_holds;
    c.verdict = verdict_of(fe.r_squared >= q.min_r_squared && gap >= q.min_gap && envelope);
  }
  c.metrics["r_squared"] = fe.r_squared;
  c.metrics["r_squared_other"] = fo.r_squared;
  c.metrics["r_squared_gap"] = gap;
  c.metrics["v_fit"] = fe.v_fit;
  c.metrics["v_certified"] = fe.v_certified;
  c.metrics["spectral_distance"] = spectral_distance(H, z);
  c.details = {{"z", {z.real(), z.imag()}},
               {"expected_model", model_label(q.expect)},
               {"other_model", model_label(other)},
               {"min_r_squared", q.min_r_squared},
               {"min_gap", q.min_gap},
               {"bound_holds", fe.bound_holds},
               {"degenerate", fe.degenerate}};
  c.summary = std::string(model_label(q.expect)) + " model R^2 " + fmt("%.4f", fe.r_squared) + " vs " +
              model_label(other) + " " + fmt("%.4f", fo.r_squared) + "; v_fit " + fmt("%.3f", fe.v_fit);
  std::vector<double> mag;
  for (double l : fe.log_values) mag.push_back(std::exp(l));
  c.series.push_back(plain_series("|R(z)(x + r, x)|", "separation", fe.separations, mag));
  return c;
}

CheckResult check_propagator_bound(const StaticHamiltonian& H, const PropagatorBoundCheck& q) {
  CheckResult c;
  c.name = "propagator_bound";
  const PropagatorBoundReport r =
      propagator_decay_check(H, H.geometry().origin(), q.times, q.max_separation, q.model);
  c.verdict = verdict_of(r.pass);
  c.metrics["v"] = r.v;
  c.metrics["prefactor"] = r.prefactor;
  c.metrics["max_ratio"] = r.max_ratio;
  c.details = {{"times", q.times}, {"max_separation", q.max_separation}, {"model", model_label(q.model)}};
  c.summary = "max |U_t(x+r, x)| / (C e^{t - r/v}) = " + sci(r.max_ratio) + " with C = " +
              fmt("%.3f", r.prefactor) + ", v = " + fmt("%.3f", r.v);
  return c;
}

CheckResult check_dunford(const StaticHamiltonian& H, const DunfordCheck& q) {
  CheckResult c;
  c.name = "dunford";
  const BoxGeometry& g = H.geometry();
  const std::size_t x = g.origin();
  ContourSpec full, half;
  full.nodes_per_side = q.nodes_per_side;
  half.nodes_per_side = q.nodes_per_side / 2;
  const DunfordResult rf = dunford_propagator(H, q.times, x, full);
  const DunfordResult rh = dunford_propagator(H, q.times, x, half);

  std::vector<double> err_full, err_half;
  double est = 0.0;
  for (std::size_t i = 0; i < q.times.size(); ++i) {
    const CVector exact = dense_propagator_column(H, q.times[i], x);
    double ef = 0.0, eh = 0.0;
    for (std::size_t y = 0; y < g.site_count(); ++y) {
      if (g.radius(y) > q.max_separation) continue;
      const auto iy = static_cast<Eigen::Index>(y);
      const auto it = static_cast<Eigen::Index>(i);
      ef = std::max(ef, std::abs(rf.values(it, iy) - exact[iy]));
      eh = std::max(eh, std::abs(rh.values(it, iy) - exact[iy]));
      est = std::max(est, rf.error_estimate(it, iy));
    }
    err_full.push_back(ef);
    err_half.push_back(eh);
  }
  const double ef = *std::max_element(err_full.begin(), err_full.end());
  const double eh = *std::max_element(err_half.begin(), err_half.end());
  const double reduction = ef > 0.0 ? eh / ef : std::numeric_limits<double>::infinity();
  const bool accurate = ef <= q.tolerance;
  // Once the coarse rule is already at rounding level the ratio is noise.
  const bool resolved = eh < 1e-12;
  if (accurate && resolved) c.verdict = Verdict::below_floor;
  else c.verdict = verdict_of(accurate && reduction >= q.min_reduction);

  c.metrics["max_error"] = ef;
  c.metrics["max_error_half_nodes"] = eh;
  c.metrics["reduction"] = reduction;
  c.metrics["error_estimate"] = est;
  c.details = {{"contour", {{"half_width", rf.half_width}, {"half_height", rf.half_height},
                            {"nodes_per_side", rf.nodes_per_side}}},
               {"times", q.times},
               {"tolerance", q.tolerance},
               {"min_reduction", q.min_reduction},
               {"max_separation", q.max_separation}};
  c.summary = "max error " + sci(ef) + " at " + std::to_string(q.nodes_per_side) + " nodes/side, " +
              sci(eh) + " at " + std::to_string(q.nodes_per_side / 2) + " (reduction " +
              fmt("%.1f", reduction) + "x)";
  c.series.push_back(plain_series("error, " + std::to_string(q.nodes_per_side) + " nodes", "t", q.times, err_full));
  c.series.push_back(plain_series("error, " + std::to_string(q.nodes_per_side / 2) + " nodes", "t", q.times, err_half));
  return c;
}

// ---------------------------------------------------------------------------
// Commutator expansion

std::vector<CheckResult> check_expansion(const Scenario& sc, const ExpansionCheck& q) {
  const BoxGeometry g(sc.dimension, q.box_half_width(), sc.norm);
  if (g.site_count() > 20000)
    throw ValidationError("checks.expansion.half_width", "box too large for the expansion sweep");
  const LatticeKernel H0 = build_kernel(g, sc.kernel);
  const DistanceField phi = distance_field(g, BallSource{0.0});
  const SmoothedStep chi = make_step(make_bump(q.epsilon, 4), false);

  std::vector<CheckResult> out;
  out.push_back(guarded("expansion", [&] {
    CheckResult c;
    c.name = "expansion";
    bool ok = true;
    json orders = json::array();
    for (int n : q.orders) {
      std::vector<double> res;
      for (double s : q.sigmas) res.push_back(expansion_residual(H0, chi, phi.values, s, n, q.shift(s)));
      const ScalingSweep fit = fit_scaling(q.sigmas, res);
      const double target = -(n + 1.0);
      const bool good = std::abs(fit.fit.slope - target) <= q.slope_tolerance;
      ok = ok && good;
      c.metrics["slope_n" + std::to_string(n)] = fit.fit.slope;
      c.metrics["r_squared_n" + std::to_string(n)] = fit.fit.r_squared;
      orders.push_back({{"n", n}, {"slope", fit.fit.slope}, {"target", target}, {"pass", good},
                        {"residuals", res}});
      c.series.push_back(plain_series("n = " + std::to_string(n), "sigma", q.sigmas, res));
    }
    c.verdict = verdict_of(ok);
    c.details = {{"epsilon", q.epsilon}, {"half_width", g.half_width()}, {"sigmas", q.sigmas},
                 {"slope_tolerance", q.slope_tolerance}, {"orders", orders}};
    c.summary = "residual slopes";
    for (int n : q.orders)
      c.summary += " n=" + std::to_string(n) + ": " + fmt("%.3f", c.metrics["slope_n" + std::to_string(n)]);
    c.summary += " (target -(n+1) +- " + fmt("%g", q.slope_tolerance) + ")";
    return c;
  }));

  if (q.leading_gap) {
    out.push_back(guarded("expansion_leading_gap", [&] {
      CheckResult c;
      c.name = "expansion_leading_gap";
      std::vector<double> norms, tops;
      for (double s : q.sigmas) {
        const GapReport r = symmetrized_leading_gap(H0, chi, phi.values, s, q.shift(s));
        norms.push_back(r.norm);
        tops.push_back(r.largest_eigenvalue);
      }
      const ScalingSweep fit = fit_scaling(q.sigmas, norms);
      const bool slope_ok = std::abs(fit.fit.slope - q.gap_slope) <= q.gap_slope_tolerance;
      // One-sided bound: C from the two smallest sigmas, then checked on the rest.
      double C = 0.0;
      for (std::size_t i = 0; i < std::min<std::size_t>(2, q.sigmas.size()); ++i)
        C = std::max(C, q.sigmas[i] * q.sigmas[i] * tops[i]);
      bool upper_ok = true;
      for (std::size_t i = 0; i < q.sigmas.size(); ++i)
        upper_ok = upper_ok && tops[i] <= C / (q.sigmas[i] * q.sigmas[i]) * (1.0 + 1e-9) + 1e-15;
      c.verdict = verdict_of(slope_ok && upper_ok);
      c.metrics["slope"] = fit.fit.slope;
      c.metrics["r_squared"] = fit.fit.r_squared;
      c.metrics["upper_constant"] = C;
      c.details = {{"epsilon", q.epsilon},
                   {"half_width", g.half_width()},
                   {"sigmas", q.sigmas},
                   {"norms", norms},
                   {"largest_eigenvalues", tops},
                   {"target_slope", q.gap_slope},
                   {"slope_tolerance", q.gap_slope_tolerance},
                   {"slope_ok", slope_ok},
                   {"upper_bound_ok", upper_ok}};
      c.summary = "gap slope " + fmt("%.3f", fit.fit.slope) + " (target " + fmt("%g", q.gap_slope) + " +- " +
                  fmt("%g", q.gap_slope_tolerance) + "); largest eigenvalue <= C sigma^-2: " +
                  (upper_ok ? "yes" : "no");
      c.series.push_back(plain_series("gap norm", "sigma", q.sigmas, norms));
      c.series.push_back(plain_series("largest eigenvalue", "sigma", q.sigmas, tops));
      return c;
    }));
  }
  return out;
}

BoxGeometry make_box(const Scenario& sc, int half_width) {
  return BoxGeometry(sc.dimension, half_width, sc.norm);
}

int initial_guess(const Scenario& sc) {
  const auto& s = sc.initial;
  double r = 0.0;
  for (int i = 0; i < sc.dimension; ++i) r = std::max(r, std::abs(static_cast<double>(s.site[i])));
  switch (s.kind) {
    case InitialKind::delta: return static_cast<int>(r) + 2;
    case InitialKind::gaussian: return static_cast<int>(std::ceil(r + 8.0 * s.width)) + 2;
    case InitialKind::power_tail: return static_cast<int>(std::ceil(s.radius)) + 2;
    case InitialKind::explicit_amplitudes: return sc.half_width;
  }
  return 8;
}

}  // namespace

fs::path output_root_from_env(const fs::path& fallback) {
  const char* v = std::getenv(kOutputRootVariable);
  return (v && *v) ? fs::path(v) : fallback;
}

int choose_half_width(const Scenario& sc) {
  int L = std::max(2, initial_guess(sc));
  for (int iter = 0; iter < 32; ++iter) {
    const BoxGeometry g = make_box(sc, L);
    if (g.site_count() > kMaxAutoSites)
      throw PreflightError("automatic box would exceed " + std::to_string(kMaxAutoSites) + " sites", L);
    const double row = std::pow(std::min<double>(2.0 * std::floor(kernel_reach(sc.kernel)) + 1.0, g.side()),
                                sc.dimension);
    if (static_cast<double>(g.site_count()) * row > kMaxAutoEntries)
      throw PreflightError("automatic box would store more than 6e7 kernel entries", L);
    const LatticeKernel H0 = build_kernel(g, sc.kernel);
    const PreflightReport pf = preflight(H0, sc.initial.build(g), sc.horizon, sc.integrator);
    if (pf.passed) return L;
    L = std::max(pf.required_half_width, L + 1);
  }
  throw PreflightError("automatic box size did not settle", L);
}

RunResult run_scenario(const Scenario& sc, const RunOptions& opt) {
  if (sc.sweep && !sc.sweep->axes.empty())
    throw ValidationError("sweep", "config defines a sweep grid; run it with the sweep command");
  const Checks& ck = sc.checks;
  const bool want_trajectory =
      opt.mode == RunMode::simulate || (opt.mode == RunMode::all && ck.needs_trajectory());
  const bool want_spectral =
      (opt.mode == RunMode::all || opt.mode == RunMode::spectral) && ck.needs_static_hamiltonian();
  const bool want_expansion =
      (opt.mode == RunMode::all || opt.mode == RunMode::expansion) && ck.expansion.has_value();
  if (want_spectral && sc.half_width == 0)
    throw ValidationError("geometry.half_width", "spectral checks need a fixed box");

  RunResult out;
  BoundReport& rep = out.report;
  rep.scenario_id = sc.id;
  rep.scenario_hash = scenario_hash(sc);
  rep.environment = environment_fingerprint();
  rep.run["mode"] = opt.mode == RunMode::all        ? "all"
                    : opt.mode == RunMode::simulate ? "simulate"
                    : opt.mode == RunMode::expansion ? "expansion"
                                                     : "spectral";

  if (want_trajectory || want_spectral) {
    const int L = sc.half_width > 0 ? sc.half_width : choose_half_width(sc);
    const BoxGeometry g = make_box(sc, L);
    sc.potential.validate(g);
    const LatticeKernel H0 = build_kernel(g, sc.kernel);
    const StructuralConstants k = structural_constants(H0, 1);
    validate_against_kernel(sc, k);
    rep.run["geometry"] = {{"dimension", g.dimension()}, {"half_width", L}, {"norm", to_string(g.norm())},
                           {"sites", g.site_count()}, {"automatic", sc.half_width == 0}};
    rep.run["kappa"] = k.kappa;
    rep.run["M"] = k.M;

    if (want_trajectory) {
      if (ck.nls_replay && !sc.integrator.record_steps)
        throw ValidationError("integrator.record_steps", "nls_replay runs on the step grid; set it to true");
      const WaveState u0 = sc.initial.build(g);
      rep.run["preflight"] = preflight(H0, u0, sc.horizon, sc.integrator);
      Trajectory tr = sc.nonlinearity.active()
                          ? evolve_nls(H0, sc.potential, sc.nonlinearity, u0, sc.horizon, sc.output_times(),
                                       sc.integrator)
                          : evolve(H0, sc.potential, u0, sc.horizon, sc.output_times(), sc.integrator);
      tr.metadata["scenario"] = sc.id;
      tr.metadata["scenario_hash"] = rep.scenario_hash;
      tr.metadata["potential"] = sc.potential;
      tr.metadata["kernel"] = sc.kernel;
      rep.run["integrator"] = {{"settings", sc.integrator},
                               {"accepted_steps", tr.accepted_steps},
                               {"rejected_steps", tr.rejected_steps},
                               {"smallest_step", tr.smallest_step},
                               {"largest_step", tr.largest_step},
                               {"max_local_error", tr.max_local_error},
                               {"snapshots", tr.size()}};

      if (ck.unitarity || opt.mode == RunMode::simulate)
        rep.checks.push_back(check_unitarity(tr, ck.unitarity.value_or(UnitarityCheck{})));
      if (opt.mode == RunMode::all) {
        if (ck.lightcone)
          rep.checks.push_back(guarded("lightcone", [&] { return check_lightcone(tr, ck.lightcone->options, k.kappa); }));
        if (ck.radin_simon)
          rep.checks.push_back(guarded("radin_simon", [&] { return check_radin_simon(tr, *ck.radin_simon, k.kappa); }));
        if (ck.monotonicity)
          rep.checks.push_back(guarded("monotonicity", [&] { return check_monotonicity(tr, *ck.monotonicity); }));
        if (ck.front) rep.checks.push_back(guarded("front", [&] { return check_front(tr, H0, *ck.front); }));
        if (ck.transport)
          rep.checks.push_back(guarded("transport", [&] { return check_transport(tr, *ck.transport); }));
        if (ck.dyadic) rep.checks.push_back(guarded("dyadic", [&] { return check_dyadic(tr, *ck.dyadic); }));
        if (ck.nls_replay)
          rep.checks.push_back(guarded("nls_replay", [&] { return check_replay(tr, H0, sc, *ck.nls_replay); }));
      }
      out.trajectory = std::move(tr);
    }

    if (want_spectral) {
      if (g.site_count() > kSpectralDenseCap)
        throw ValidationError("geometry.half_width", "spectral checks are limited to " +
                                                         std::to_string(kSpectralDenseCap) + " sites");
      const StaticHamiltonian H = static_hamiltonian(sc, H0);
      rep.run["norm_H"] = H.norm();
      if (ck.combes_thomas)
        rep.checks.push_back(guarded("combes_thomas", [&] { return check_combes_thomas(H, *ck.combes_thomas); }));
      if (ck.propagator_bound)
        rep.checks.push_back(guarded("propagator_bound", [&] { return check_propagator_bound(H, *ck.propagator_bound); }));
      if (ck.dunford) rep.checks.push_back(guarded("dunford", [&] { return check_dunford(H, *ck.dunford); }));
    }
  }

  if (want_expansion)
    for (auto& c : check_expansion(sc, *ck.expansion)) rep.checks.push_back(std::move(c));

  out.directory = opt.output_root / sc.output_directory;
  if (opt.write) {
    std::vector<fs::path> extra;
    if (out.trajectory && (sc.write_trajectory || opt.mode == RunMode::simulate)) {
      const fs::path manifest_path = write_trajectory(*out.trajectory, out.directory, "trajectory");
      extra.push_back(out.directory / "trajectory.bin");
      extra.push_back(manifest_path);
    }
    out.files = write_report(rep, out.directory, opt.emit, extra);
  }
  return out;
}

RunResult run_scenario(const fs::path& config, const RunOptions& opt) {
  return run_scenario(load_scenario(config), opt);
}

int exit_code(const BoundReport& r) { return r.any_failed() ? 2 : 0; }

bool SweepResult::any_failed() const {
  for (const auto& p : points)
    if (!p.error.empty() || (p.report && p.report->any_failed())) return true;
  return false;
}

json aggregate_reports(const std::vector<SweepPoint>& points) {
  struct Acc {
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, std::map<std::string, std::size_t>> verdicts;
  std::map<std::string, std::map<std::string, Acc>> metrics;
  std::size_t ok = 0, errors = 0;
  for (const auto& p : points) {
    if (!p.report) {
      ++errors;
      continue;
    }
    ++ok;
    for (const auto& c : p.report->checks) {
      ++verdicts[c.name][to_string(c.verdict)];
      for (const auto& [k, v] : c.metrics) {
        if (!std::isfinite(v)) continue;
        Acc& a = metrics[c.name][k];
        a.min = std::min(a.min, v);
        a.max = std::max(a.max, v);
        a.sum += v;
        ++a.n;
      }
    }
  }
  json checks = json::object();
  for (const auto& [name, counts] : verdicts) {
    json m = json::object();
    for (const auto& [k, a] : metrics[name])
      m[k] = {{"min", a.min}, {"max", a.max}, {"mean", a.sum / static_cast<double>(a.n)}, {"count", a.n}};
    checks[name] = {{"verdicts", counts}, {"metrics", m}};
  }
  return json{{"points", points.size()}, {"completed", ok}, {"errors", errors}, {"checks", checks}};
}

SweepResult sweep(const Scenario& sc, const RunOptions& opt, unsigned jobs) {
  SweepResult res;
  res.id = sc.id;
  res.directory = opt.output_root / sc.output_directory;
  const std::vector<json> configs = expand_sweep(sc);
  res.points.resize(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    res.points[i].config = configs[i];
    res.points[i].id = configs[i].value("id", std::string());
  }

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(1, configs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      SweepPoint& p = res.points[i];
      try {
        const Scenario point = parse_scenario(configs[i]);
        p.report = run_scenario(point, opt).report;
      } catch (const ValidationError& e) {
        p.error = e.what();
        p.error_kind = "validation";
      } catch (const PreflightError& e) {
        p.error = e.what();
        p.error_kind = "preflight";
      } catch (const std::exception& e) {
        p.error = e.what();
        p.error_kind = "numerical";
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  res.aggregate = aggregate_reports(res.points);
  if (opt.write) {
    json doc;
    doc["format"] = "lcone-sweep-1";
    doc["scenario"] = sc.id;
    doc["scenario_hash"] = scenario_hash(sc);
    doc["aggregate"] = res.aggregate;
    json pts = json::array();
    std::string csv = "point,check,verdict,metric,value\n";
    for (const auto& p : res.points) {
      json e = {{"id", p.id}};
      if (p.report) {
        e["verdict"] = p.report->any_failed() ? "fail" : "pass";
        e["report"] = (fs::path(sc.output_directory) / p.id / "report.json").generic_string();
        for (const auto& c : p.report->checks)
          for (const auto& [k, v] : c.metrics)
            csv += p.id + "," + c.name + "," + to_string(c.verdict) + "," + k + "," + format_double(v) + "\n";
      } else {
        e["verdict"] = "error";
        e["error"] = p.error;
        e["error_kind"] = p.error_kind;
      }
      pts.push_back(e);
    }
    doc["points"] = pts;
    doc["environment"] = environment_fingerprint();
    std::vector<fs::path> files;
    if (opt.emit.json) {
      write_atomic(res.directory / "sweep.json", doc.dump(2) + "\n");
      files.push_back(res.directory / "sweep.json");
    }
    if (opt.emit.csv) {
      write_atomic(res.directory / "sweep.csv", csv);
      files.push_back(res.directory / "sweep.csv");
    }
    write_atomic(res.directory / "manifest.json",
                 manifest(sc.id, scenario_hash(sc), res.directory, files).dump(2) + "\n");
  }
  return res;
}

}  // namespace lcone
