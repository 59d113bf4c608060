#include "lcone/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcone/error.hpp"

namespace lcone {

namespace {

constexpr cplx kMinusI{0.0, -1.0};

WaveState normalised(const BoxGeometry& g, CVector a) {
  const double n = a.norm();
  if (!(n > 0.0)) throw ValidationError("initial_state", "state vanishes on the box");
  a /= n;
  return {g, std::move(a), 0.0};
}

// Right-hand side of a first-order system du/dt = f(t, u). begin_segment is
// called before stepping across [a, b]; no potential jump lies inside.
class System {
 public:
  virtual ~System() = default;
  virtual void begin_segment(double a, double b) = 0;
  virtual void rhs(double t, const CVector& u, CVector& du) = 0;
};

// H0 + V(t) with V sampled per stage, or once per segment for
// piecewise-constant schedules.
class LinearSystem : public System {
 public:
  LinearSystem(const LatticeKernel& H0, const PotentialSource& V) : H0_(H0), V_(V) {}

  void begin_segment(double a, double b) override {
    frozen_ = V_.piecewise_constant();
    if (frozen_) V_.evaluate(0.5 * (a + b), v_);
    cached_t_ = std::numeric_limits<double>::quiet_NaN();
  }

  void rhs(double t, const CVector& u, CVector& du) override {
    potential_at(t);
    du.noalias() = H0_.matrix() * u;
    for (Eigen::Index i = 0; i < u.size(); ++i) du[i] += v_[static_cast<std::size_t>(i)] * u[i];
    du *= kMinusI;
  }

 protected:
  void potential_at(double t) {
    if (frozen_ || t == cached_t_) return;
    V_.evaluate(t, v_);
    cached_t_ = t;
  }

  const LatticeKernel& H0_;
  const PotentialSource& V_;
  std::vector<double> v_;
  bool frozen_ = false;
  double cached_t_ = std::numeric_limits<double>::quiet_NaN();
};

class NlsSystem final : public LinearSystem {
 public:
  NlsSystem(const LatticeKernel& H0, const PotentialSource& V, const NonlinearSpec& N)
      : LinearSystem(H0, V), N_(N) {}

  void rhs(double t, const CVector& u, CVector& du) override {
    potential_at(t);
    du.noalias() = H0_.matrix() * u;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      du[i] += (v_[static_cast<std::size_t>(i)] + N_.modulus(std::abs(u[i]))) * u[i];
    du *= kMinusI;
  }

 private:
  const NonlinearSpec& N_;
};

struct StepWork {
  CVector k1, k2, k3, k4, tmp;
  explicit StepWork(Eigen::Index n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}
};

// Classical RK4 step with k1 = f(t, u) already in w.k1.
CVector rk4_step(System& sys, double t, const CVector& u, double h, StepWork& w) {
  w.tmp = u + (0.5 * h) * w.k1;
  sys.rhs(t + 0.5 * h, w.tmp, w.k2);
  w.tmp = u + (0.5 * h) * w.k2;
  sys.rhs(t + 0.5 * h, w.tmp, w.k3);
  w.tmp = u + h * w.k3;
  sys.rhs(t + h, w.tmp, w.k4);
  return u + (h / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
}

std::vector<double> prepare_outputs(std::vector<double> outputs, double T) {
  if (!(T >= 0.0)) throw ValidationError("T", "final time must be nonnegative");
  for (double t : outputs)
    if (!(t >= 0.0 && t <= T)) throw ValidationError("output_times", "times must lie in [0, T]");
  outputs.push_back(T);
  std::sort(outputs.begin(), outputs.end());
  outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
  return outputs;
}

void record(Trajectory& tr, double t, const CVector& u) {
  if (!tr.times.empty() && tr.times.back() == t) return;
  tr.times.push_back(t);
  tr.states.push_back(u);
  tr.norm_drift.push_back(std::abs(u.norm() - 1.0));
}

// Steps the system through every stop. In fixed mode each segment gets
// max(fixed_substeps, ceil(len / fixed_step)) equal steps.
Trajectory drive(System& sys, const BoxGeometry& g, const CVector& u0,
                 const std::vector<double>& outputs, const std::vector<double>& jumps,
                 const IntegratorSettings& s, int fixed_substeps = 0) {
  std::vector<double> stops = outputs;
  stops.insert(stops.end(), jumps.begin(), jumps.end());
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  Trajectory tr;
  tr.geometry = g;
  tr.smallest_step = std::numeric_limits<double>::infinity();
  CVector u = u0;
  double t = 0.0;
  if (std::binary_search(outputs.begin(), outputs.end(), 0.0)) record(tr, 0.0, u);

  StepWork w(u.size());
  CVector k1(u.size());
  double h = std::min(s.initial_step, s.max_step);

  for (double stop : stops) {
    if (stop <= t) continue;
    sys.begin_segment(t, stop);
    if (!s.adaptive) {
      const double len = stop - t;
      int n = std::max(fixed_substeps, static_cast<int>(std::ceil(len / s.fixed_step - 1e-9)));
      n = std::max(n, 1);
      const double hh = len / n;
      const double t0 = t;
      for (int i = 0; i < n; ++i) {
        const double ti = t0 + i * hh;
        sys.rhs(ti, u, w.k1);
        u = rk4_step(sys, ti, u, hh, w);
        ++tr.accepted_steps;
        if (s.record_steps && i + 1 < n) record(tr, t0 + (i + 1) * hh, u);
      }
      tr.smallest_step = std::min(tr.smallest_step, hh);
      tr.largest_step = std::max(tr.largest_step, hh);
      t = stop;
    } else {
      while (t < stop) {
        const double remaining = stop - t;
        double hh = std::min({h, s.max_step, remaining});
        // don't leave a sliver before the stop
        if (remaining - hh < 0.01 * hh) hh = remaining;
        const bool last = hh >= remaining;
        sys.rhs(t, u, k1);
        w.k1 = k1;
        const CVector full = rk4_step(sys, t, u, hh, w);
        w.k1 = k1;
        const CVector half = rk4_step(sys, t, u, 0.5 * hh, w);
        sys.rhs(t + 0.5 * hh, half, w.k1);
        const CVector two = rk4_step(sys, t + 0.5 * hh, half, 0.5 * hh, w);
        // Richardson estimate of the local error of the two-half-step result.
        const double err = (two - full).norm() / 15.0;
        // below a few ulps of |u| the estimate is roundoff, not truncation error
        const double target = std::max(s.tolerance * hh, 16.0 * std::numeric_limits<double>::epsilon() * u.norm());
        double factor = err == 0.0 ? 2.0 : 0.9 * std::pow(target / err, 0.25);
        factor = std::clamp(factor, 0.2, 2.0);
        if (err <= target) {
          u = two;
          t = last ? stop : t + hh;
          ++tr.accepted_steps;
          tr.smallest_step = std::min(tr.smallest_step, hh);
          tr.largest_step = std::max(tr.largest_step, hh);
          tr.max_local_error = std::max(tr.max_local_error, err);
          if (s.record_steps && !last) record(tr, t, u);
          // A step shortened to land on a stop says little about the scale.
          if (!(last && hh < h)) h = hh * factor;
        } else {
          ++tr.rejected_steps;
          h = hh * factor;
          if (h < s.min_step)
            throw NumericalError("step-size underflow at t = " + std::to_string(t) +
                                 " (h = " + std::to_string(h) + ")");
        }
      }
    }
    if (std::binary_search(outputs.begin(), outputs.end(), stop) || s.record_steps)
      record(tr, stop, u);
  }
  if (!std::isfinite(tr.smallest_step)) tr.smallest_step = 0.0;
  return tr;
}

void check_initial(const LatticeKernel& H0, const WaveState& u0) {
  if (!(u0.geometry == H0.geometry()))
    throw ValidationError("initial_state", "state and kernel live on different boxes");
  if (std::abs(u0.norm() - 1.0) > 1e-12)
    throw ValidationError("initial_state", "state must be normalised to 1e-12");
}

void run_preflight(const LatticeKernel& H0, const WaveState& u0, double T,
                   const IntegratorSettings& s) {
  if (!s.preflight) return;
  const PreflightReport r = preflight(H0, u0, T, s);
  if (!r.passed)
    throw PreflightError("box half-width " + std::to_string(H0.geometry().half_width()) +
                             " too small for T = " + std::to_string(T) + "; need at least " +
                             std::to_string(r.required_half_width),
                         r.required_half_width);
}

}  // namespace

// ---------------------------------------------------------------------------

WaveState delta_state(const BoxGeometry& g, const Coord& site) {
  const auto idx = g.index(site);
  if (!idx) throw ValidationError("initial_state.site", "site outside the box");
  CVector a = CVector::Zero(static_cast<Eigen::Index>(g.site_count()));
  a[static_cast<Eigen::Index>(*idx)] = 1.0;
  return {g, std::move(a), 0.0};
}

WaveState gaussian_state(const BoxGeometry& g, double width, double momentum, const Coord& center) {
  if (!(width > 0.0)) throw ValidationError("initial_state.width", "must be positive");
  CVector a(static_cast<Eigen::Index>(g.site_count()));
  for (std::size_t i = 0; i < g.site_count(); ++i) {
    const Coord x = g.coord(i);
    const double r = g.distance(x, center);
    a[static_cast<Eigen::Index>(i)] =
        std::exp(-r * r / (2.0 * width * width)) * std::polar(1.0, momentum * x[0]);
  }
  return normalised(g, std::move(a));
}

WaveState power_tail_state(const BoxGeometry& g, double exponent, double radius) {
  if (!(exponent > 0.0)) throw ValidationError("initial_state.exponent", "must be positive");
  if (!(radius >= 0.0)) throw ValidationError("initial_state.radius", "must be nonnegative");
  CVector a = CVector::Zero(static_cast<Eigen::Index>(g.site_count()));
  for (std::size_t i = 0; i < g.site_count(); ++i) {
    const double r = g.radius(i);
    if (r <= radius) a[static_cast<Eigen::Index>(i)] = std::pow(1.0 + r, -exponent);
  }
  return normalised(g, std::move(a));
}

WaveState explicit_state(const BoxGeometry& g, CVector amplitudes) {
  if (amplitudes.size() != static_cast<Eigen::Index>(g.site_count()))
    throw ValidationError("initial_state.amplitudes", "expected one amplitude per site");
  return normalised(g, std::move(amplitudes));
}

std::vector<double> ReversedSource::breakpoints(double a, double b) const {
  std::vector<double> inner = inner_.breakpoints(horizon_ - b, horizon_ - a);
  for (double& x : inner) x = horizon_ - x;
  std::sort(inner.begin(), inner.end());
  return inner;
}

// ---------------------------------------------------------------------------

void NonlinearSpec::validate() const {
  if (!(p > 1.0)) throw ValidationError("nonlinearity.p", "power must exceed 1");
  if (!(C1 > 0.0)) throw ValidationError("nonlinearity.C1", "must be positive");
  if (!(C2 > 0.0)) throw ValidationError("nonlinearity.C2", "must be positive");
}

double NonlinearSpec::bound_violation(int samples) const {
  double worst = -C1;
  for (int i = 0; i <= samples; ++i)
    worst = std::max(worst, modulus(C2 * i / samples) - C1);
  return worst;
}

void to_json(nlohmann::json& j, const NonlinearSpec& n) {
  j = nlohmann::json{{"g", n.g}, {"p", n.p}, {"C1", n.C1}, {"C2", n.C2}};
}

void from_json(const nlohmann::json& j, NonlinearSpec& n) {
  n.g = j.value("g", 0.0);
  n.p = j.value("p", 3.0);
  n.C2 = j.value("C2", 1.0);
  n.C1 = j.value("C1", std::abs(n.g) * std::pow(n.C2, n.p - 1.0));
  n.validate();
}

void to_json(nlohmann::json& j, const IntegratorSettings& s) {
  j = nlohmann::json{{"method", "rk4-step-doubling"},
                     {"tolerance", s.tolerance},
                     {"initial_step", s.initial_step},
                     {"max_step", s.max_step},
                     {"min_step", s.min_step},
                     {"adaptive", s.adaptive},
                     {"fixed_step", s.fixed_step},
                     {"record_steps", s.record_steps},
                     {"preflight", s.preflight},
                     {"preflight_tail", s.preflight_tail}};
}

void from_json(const nlohmann::json& j, IntegratorSettings& s) {
  s.tolerance = j.value("tolerance", s.tolerance);
  s.initial_step = j.value("initial_step", s.initial_step);
  s.max_step = j.value("max_step", s.max_step);
  s.min_step = j.value("min_step", s.min_step);
  s.adaptive = j.value("adaptive", s.adaptive);
  s.fixed_step = j.value("fixed_step", s.fixed_step);
  s.record_steps = j.value("record_steps", s.record_steps);
  s.preflight = j.value("preflight", s.preflight);
  s.preflight_tail = j.value("preflight_tail", s.preflight_tail);
  if (!(s.tolerance > 0.0)) throw ValidationError("integrator.tolerance", "must be positive");
  if (!(s.max_step > 0.0)) throw ValidationError("integrator.max_step", "must be positive");
  if (!(s.initial_step > 0.0)) throw ValidationError("integrator.initial_step", "must be positive");
  if (!(s.fixed_step > 0.0)) throw ValidationError("integrator.fixed_step", "must be positive");
  if (!(s.preflight_tail > 0.0 && s.preflight_tail < 1.0))
    throw ValidationError("integrator.preflight_tail", "must lie in (0, 1)");
}

double Trajectory::max_norm_drift() const {
  double m = 0.0;
  for (double d : norm_drift) m = std::max(m, d);
  return m;
}

std::size_t Trajectory::index_of(double t) const {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
  throw ValidationError("t", "no snapshot at t = " + std::to_string(t));
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const PreflightReport& r) {
  j = nlohmann::json{{"required_half_width", r.required_half_width},
                     {"support_radius", r.support_radius},
                     {"kappa", r.kappa},
                     {"taylor_order", r.taylor_order},
                     {"long_range", r.long_range},
                     {"passed", r.passed}};
}

PreflightReport preflight(const LatticeKernel& H0, const WaveState& u0, double T,
                          const IntegratorSettings& settings) {
  constexpr double kAmplitude = 5e-7;
  const BoxGeometry& g = H0.geometry();
  PreflightReport rep;

  // Effective support: smallest site radius R with outside mass <= kAmplitude^2.
  std::vector<std::pair<double, double>> mass;  // (radius, |u|^2)
  double first_moment_sq = 0.0;
  for (std::size_t i = 0; i < g.site_count(); ++i) {
    const double r = g.radius(i);
    const double m = std::norm(u0.amplitudes[static_cast<Eigen::Index>(i)]);
    mass.emplace_back(r, m);
    first_moment_sq += r * r * m;
  }
  std::sort(mass.begin(), mass.end());
  double outside = 0.0;
  rep.support_radius = 0.0;
  for (std::size_t i = mass.size(); i-- > 0;) {
    if (outside + mass[i].second > kAmplitude * kAmplitude) {
      rep.support_radius = mass[i].first;
      break;
    }
    outside += mass[i].second;
  }

  rep.kappa = moment_norm(H0, 1.0);
  const double range = H0.range();
  const double reach = rep.support_radius + 1.5 * rep.kappa * T;
  double required = reach;
  rep.long_range = range > g.half_width();
  if (rep.long_range) {
    // Radin-Simon growth of || |x| u_t || plus Markov's inequality.
    const double moment = std::sqrt(first_moment_sq) + rep.kappa * T;
    required = std::max(required, moment / std::sqrt(settings.preflight_tail));
  } else if (range > 0.0) {
    // Terms of order > K in the Dyson series in H0 carry amplitude at most
    // sum_{k>K} (rho T)^k / k!, whatever V is; lower orders move <= K*range.
    const double x = H0.max_row_sum() * T;
    int K = 0;
    for (;; ++K) {
      double tail = 0.0;
      for (int k = K + 1; k < K + 400; ++k) {
        const double term = std::exp(k * std::log(x) - std::lgamma(k + 1.0));
        tail += term;
        if (k > x && term < 1e-20 * std::max(tail, 1e-300)) break;
      }
      if (x == 0.0 || tail <= kAmplitude) break;
    }
    rep.taylor_order = K;
    required = std::max(required, rep.support_radius + K * range);
  }
  rep.required_half_width = static_cast<int>(std::ceil(required - 1e-9)) + 1;
  rep.passed = g.half_width() >= rep.required_half_width;
  return rep;
}

// ---------------------------------------------------------------------------

Trajectory evolve(const LatticeKernel& H0, const PotentialSource& V, const WaveState& u0,
                  double T, std::vector<double> output_times, const IntegratorSettings& s) {
  check_initial(H0, u0);
  const auto outputs = prepare_outputs(std::move(output_times), T);
  run_preflight(H0, u0, T, s);
  LinearSystem sys(H0, V);
  Trajectory tr = drive(sys, H0.geometry(), u0.amplitudes, outputs, V.breakpoints(0.0, T), s);
  tr.metadata["equation"] = "linear";
  tr.metadata["integrator"] = s;
  return tr;
}

Trajectory evolve(const LatticeKernel& H0, const PotentialSchedule& V, const WaveState& u0,
                  double T, std::vector<double> output_times, const IntegratorSettings& s) {
  V.validate(H0.geometry());
  ScheduleSource src(V, H0.geometry());
  Trajectory tr = evolve(H0, src, u0, T, std::move(output_times), s);
  tr.metadata["potential"] = V;
  return tr;
}

Trajectory evolve_nls(const LatticeKernel& H0, const PotentialSchedule& Vbar,
                      const NonlinearSpec& N, const WaveState& u0, double T,
                      std::vector<double> output_times, const IntegratorSettings& s) {
  N.validate();
  Vbar.validate(H0.geometry());
  check_initial(H0, u0);
  const auto outputs = prepare_outputs(std::move(output_times), T);
  run_preflight(H0, u0, T, s);
  ScheduleSource src(Vbar, H0.geometry());
  NlsSystem sys(H0, src, N);
  Trajectory tr = drive(sys, H0.geometry(), u0.amplitudes, outputs, Vbar.breakpoints(0.0, T), s);
  for (const auto& q : tr.states) tr.max_amplitude = std::max(tr.max_amplitude, q.cwiseAbs().maxCoeff());
  tr.hypothesis_violation = tr.max_amplitude > N.C2;
  tr.metadata["equation"] = "nls";
  tr.metadata["integrator"] = s;
  tr.metadata["potential"] = Vbar;
  tr.metadata["nonlinearity"] = N;
  return tr;
}

// ---------------------------------------------------------------------------

namespace {

// Linear system whose potential is Vbar(t) + |N(q(t))| with q interpolated
// from the snapshots of a nonlinear trajectory.
class FrozenSystem final : public System {
 public:
  FrozenSystem(const Trajectory& nls, const LatticeKernel& H0, const PotentialSource& Vbar,
               const NonlinearSpec& N)
      : nls_(nls), H0_(H0), Vbar_(Vbar), N_(N) {
    // q'(t_i) from the nonlinear right-hand side, one-sided per interval so
    // a jump of Vbar at a snapshot is handled on the correct side.
    NlsSystem sys(H0, Vbar, N);
    const std::size_t m = nls.size();
    left_.resize(m);
    right_.resize(m);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      sys.begin_segment(nls.times[i], nls.times[i + 1]);
      right_[i].resize(nls.states[i].size());
      left_[i + 1].resize(nls.states[i].size());
      sys.rhs(nls.times[i], nls.states[i], right_[i]);
      sys.rhs(nls.times[i + 1], nls.states[i + 1], left_[i + 1]);
    }
  }

  void begin_segment(double a, double b) override {
    auto it = std::upper_bound(nls_.times.begin(), nls_.times.end(), 0.5 * (a + b));
    interval_ = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - nls_.times.begin() - 1));
    if (Vbar_.piecewise_constant()) Vbar_.evaluate(0.5 * (a + b), vbar_);
  }

  void rhs(double t, const CVector& u, CVector& du) override {
    const std::size_t i = interval_;
    const double t0 = nls_.times[i], t1 = nls_.times[i + 1];
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    if (!Vbar_.piecewise_constant()) Vbar_.evaluate(t, vbar_);
    du.noalias() = H0_.matrix() * u;
    for (Eigen::Index x = 0; x < u.size(); ++x) {
      const cplx q = h00 * nls_.states[i][x] + h10 * h * right_[i][x] +
                     h01 * nls_.states[i + 1][x] + h11 * h * left_[i + 1][x];
      du[x] += (vbar_[static_cast<std::size_t>(x)] + N_.modulus(std::abs(q))) * u[x];
    }
    du *= kMinusI;
  }

 private:
  const Trajectory& nls_;
  const LatticeKernel& H0_;
  const PotentialSource& Vbar_;
  const NonlinearSpec& N_;
  std::vector<CVector> left_, right_;
  std::vector<double> vbar_;
  std::size_t interval_ = 0;
};

}  // namespace

ReplayResult frozen_coefficient_replay(const Trajectory& nls, const LatticeKernel& H0,
                                       const PotentialSchedule& Vbar, const NonlinearSpec& N,
                                       int substeps) {
  if (nls.size() < 2 || nls.times.front() != 0.0)
    throw ValidationError("trajectory", "replay needs snapshots starting at t = 0");
  if (substeps < 1) throw ValidationError("substeps", "must be at least 1");
  ReplayResult res;
  double peak = 0.0;
  for (const auto& q : nls.states) peak = std::max(peak, q.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i + 1 < nls.size(); ++i)
    res.max_gap = std::max(res.max_gap, nls.times[i + 1] - nls.times[i]);
  // Hermite interpolation resolves the state only on gaps well below the
  // fastest time scale of the generator.
  const double rate = H0.max_row_sum() + Vbar.bound() + N.modulus(peak);
  if (res.max_gap * rate > 1.0)
    throw ValidationError("trajectory", "snapshot gap " + std::to_string(res.max_gap) +
                                            " too coarse for interpolation (rate " +
                                            std::to_string(rate) + ")");
  const double T = nls.times.back();
  for (double bp : Vbar.breakpoints(0.0, T))
    if (!std::binary_search(nls.times.begin(), nls.times.end(), bp))
      throw ValidationError("trajectory", "snapshots must include every potential jump");

  ScheduleSource src(Vbar, H0.geometry());
  FrozenSystem sys(nls, H0, src, N);
  IntegratorSettings s;
  s.adaptive = false;
  s.fixed_step = std::numeric_limits<double>::infinity();
  const Trajectory lin = drive(sys, H0.geometry(), nls.states.front(), nls.times, {}, s, substeps);
  for (std::size_t i = 0; i < nls.size(); ++i) {
    const double d = (lin.states[i] - nls.states[i]).norm();
    res.deviations.push_back(d);
    res.max_deviation = std::max(res.max_deviation, d);
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {
double checked_real(cplx value, double scale) {
  if (std::abs(value.imag()) > 1e-12 * std::max(1.0, scale))
    throw NumericalError("expectation has imaginary part " + std::to_string(value.imag()));
  return value.real();
}
}  // namespace

std::vector<double> heisenberg_expectation(
    const Trajectory& tr, const std::function<std::vector<double>(double)>& diagonal) {
  std::vector<double> out;
  out.reserve(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto a = diagonal(tr.times[i]);
    if (a.size() != static_cast<std::size_t>(tr.states[i].size()))
      throw ValidationError("observable", "diagonal size does not match the box");
    double sum = 0.0;
    for (std::size_t x = 0; x < a.size(); ++x)
      sum += a[x] * std::norm(tr.states[i][static_cast<Eigen::Index>(x)]);
    out.push_back(sum);
  }
  return out;
}

std::vector<double> heisenberg_expectation(const Trajectory& tr,
                                           const std::function<SparseKernel(double)>& observable) {
  std::vector<double> out;
  out.reserve(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const SparseKernel A = observable(tr.times[i]);
    if (A.rows() != tr.states[i].size() || A.cols() != tr.states[i].size())
      throw ValidationError("observable", "operator size does not match the box");
    const SparseKernel adj = A.adjoint();
    SparseKernel diff = A - adj;
    diff.makeCompressed();
    const double defect = diff.nonZeros() == 0 ? 0.0 : diff.coeffs().cwiseAbs().maxCoeff();
    double scale = 0.0;
    for (Eigen::Index r = 0; r < A.outerSize(); ++r)
      for (SparseKernel::InnerIterator it(A, r); it; ++it) scale = std::max(scale, std::abs(it.value()));
    if (defect > 1e-12 * std::max(1.0, scale))
      throw ValidationError("observable", "A(t) is not Hermitian at t = " + std::to_string(tr.times[i]));
    const CVector Au = A * tr.states[i];
    out.push_back(checked_real(tr.states[i].dot(Au), scale));
  }
  return out;
}

}  // namespace lcone
