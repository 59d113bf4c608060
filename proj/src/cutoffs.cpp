#include "lcone/cutoffs.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "lcone/error.hpp"

namespace lcone {

namespace {

// Truncated Taylor series: c[k] = f^{(k)}(t0) / k!.
using Jet = std::vector<double>;

Jet multiply(const Jet& a, const Jet& b) {
  Jet out(a.size(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t j = 0; j <= k; ++j) out[k] += a[j] * b[k - j];
  return out;
}

Jet reciprocal(const Jet& a) {
  Jet r(a.size(), 0.0);
  r[0] = 1.0 / a[0];
  for (std::size_t k = 1; k < a.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += a[j] * r[k - j];
    r[k] = -s * r[0];
  }
  return r;
}

Jet exponential(const Jet& u) {
  Jet e(u.size(), 0.0);
  e[0] = std::exp(u[0]);
  for (std::size_t k = 1; k < u.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * u[j] * e[k - j];
    e[k] = s / static_cast<double>(k);
  }
  return e;
}

// exp(-1/t) underflows to zero below this.
constexpr double kUnderflow = 1.0 / 745.0;

// Jet of exp(-1/(a + sign*h)) in h at h = 0, for a > kUnderflow.
Jet flat_factor(double a, double sign, std::size_t len) {
  Jet u(len, 0.0);
  // -1/(a + sign h) = -sum_k (-sign)^k h^k / a^{k+1}
  double p = 1.0 / a;
  for (std::size_t k = 0; k < len; ++k) {
    u[k] = -p;
    p *= -sign / a;
  }
  return exponential(u);
}

// Transition g(t) = f(t)/(f(t) + f(1-t)), rising from 0 at t = 0 to 1 at t = 1.
Jet transition(double t, std::size_t len) {
  Jet g(len, 0.0);
  if (t <= kUnderflow) return g;
  if (t >= 1.0 - kUnderflow) {
    g[0] = 1.0;
    return g;
  }
  const Jet a = flat_factor(t, 1.0, len);
  const Jet b = flat_factor(1.0 - t, -1.0, len);
  Jet denom(len);
  for (std::size_t k = 0; k < len; ++k) denom[k] = a[k] + b[k];
  return multiply(a, reciprocal(denom));
}

double transition_value(double t) { return transition(t, 1)[0]; }

// Jet of w at y in the variable y.
Jet bump_jet(double eps, double y, std::size_t len) {
  Jet out(len, 0.0);
  if (y <= 0.0 || y >= eps) return out;
  const double q = eps / 4.0;
  double scale;
  Jet g;
  if (y < q) {
    g = transition(y / q, len);
    scale = 1.0 / q;
  } else if (y > 3.0 * q) {
    g = transition((eps - y) / q, len);
    scale = -1.0 / q;
  } else {
    out[0] = 1.0;
    return out;
  }
  double f = 1.0;
  for (std::size_t k = 0; k < len; ++k) {
    out[k] = g[k] * f;
    f *= scale;
  }
  return out;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

constexpr int kPanels = 512;

double panel_integral(double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss<double, 20>::integrate(
      [](double s) {
        const double g = transition_value(s);
        return g * g;
      },
      a, b);
}

}  // namespace

// ---------------------------------------------------------------------------

BumpFunction::BumpFunction(double epsilon, int max_order) : epsilon_(epsilon), max_order_(max_order) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon", "must be positive");
  if (max_order < 2) throw ValidationError("n_max", "derivative order must be at least 2");
}

double BumpFunction::operator()(double y) const { return bump_jet(epsilon_, y, 1)[0]; }

double BumpFunction::derivative(int k, double y) const {
  if (k < 0 || k > max_order_)
    throw ValidationError("k", "derivative order " + std::to_string(k) + " not available");
  return bump_jet(epsilon_, y, static_cast<std::size_t>(k) + 1)[static_cast<std::size_t>(k)] *
         factorial(k);
}

std::vector<double> BumpFunction::derivatives(double y, int order) const {
  if (order > max_order_) throw ValidationError("k", "derivative order not available");
  Jet j = bump_jet(epsilon_, y, static_cast<std::size_t>(order) + 1);
  for (int k = 0; k <= order; ++k) j[static_cast<std::size_t>(k)] *= factorial(k);
  return j;
}

BumpFunction make_bump(double epsilon, int max_order) { return BumpFunction(epsilon, max_order); }

// ---------------------------------------------------------------------------

SmoothedStep::SmoothedStep(BumpFunction w, bool normalize) : w_(w) {
  table_.assign(kPanels + 1, 0.0);
  for (int j = 0; j < kPanels; ++j)
    table_[static_cast<std::size_t>(j) + 1] =
        table_[static_cast<std::size_t>(j)] +
        panel_integral(static_cast<double>(j) / kPanels, static_cast<double>(j + 1) / kPanels);
  edge_total_ = table_.back();
  const double eps = w_.epsilon();
  total_ = eps / 2.0 + (eps / 2.0) * edge_total_;
  scale_ = normalize ? 1.0 / total_ : 1.0;
}

double SmoothedStep::edge_integral(double tau) const {
  if (tau <= 0.0) return 0.0;
  if (tau >= 1.0) return edge_total_;
  const int j = std::min(static_cast<int>(tau * kPanels), kPanels - 1);
  const double left = static_cast<double>(j) / kPanels;
  return table_[static_cast<std::size_t>(j)] + panel_integral(left, tau);
}

double SmoothedStep::operator()(double x) const {
  const double eps = w_.epsilon();
  const double q = eps / 4.0;
  double integral;
  if (x <= 0.0) {
    integral = 0.0;
  } else if (x < q) {
    integral = q * edge_integral(x / q);
  } else if (x <= 3.0 * q) {
    integral = q * edge_total_ + (x - q);
  } else if (x < eps) {
    integral = q * edge_total_ + 2.0 * q + q * (edge_total_ - edge_integral((eps - x) / q));
  } else {
    integral = total_;
  }
  return scale_ * integral;
}

double SmoothedStep::derivative(int k, double x) const {
  if (k == 0) return (*this)(x);
  if (k < 0 || k > max_order())
    throw ValidationError("k", "derivative order " + std::to_string(k) + " not available");
  const auto len = static_cast<std::size_t>(k);  // need (w^2)^{(k-1)}
  const Jet w = bump_jet(w_.epsilon(), x, len);
  const Jet sq = multiply(w, w);
  return scale_ * sq[len - 1] * factorial(k - 1);
}

SmoothedStep make_step(const BumpFunction& w, bool normalize) { return SmoothedStep(w, normalize); }

void to_json(nlohmann::json& j, const SmoothedStep& chi) {
  j = nlohmann::json{{"epsilon", chi.epsilon()},
                     {"scale", chi.scale()},
                     {"sup_norm", chi.sup_norm()},
                     {"n_max", chi.bump().max_order()},
                     {"panels", kPanels}};
}

// ---------------------------------------------------------------------------

double AstloParams::lambda() const { return std::pow((v - v_bar) / epsilon, 1.0 / alpha); }

double AstloParams::s(double t) const {
  return schedule == AdiabaticSchedule::linear ? lambda() * t : s_fixed;
}

void AstloParams::validate() const {
  if (!(v_bar > 0.0)) throw ValidationError("astlo.v_bar", "must be positive");
  if (!(v > v_bar)) throw ValidationError("astlo.v", "outer speed must exceed v_bar");
  if (!(alpha > 0.5 && alpha <= 1.0)) throw ValidationError("astlo.alpha", "must lie in (1/2, 1]");
  if (!(epsilon > 0.0)) throw ValidationError("astlo.epsilon", "must be positive");
  if (!(R >= 0.0)) throw ValidationError("astlo.R", "must be nonnegative");
  if (schedule == AdiabaticSchedule::fixed && !(s_fixed > 0.0))
    throw ValidationError("astlo.s", "adiabatic parameter must be positive");
}

void to_json(nlohmann::json& j, const AstloParams& p) {
  j = nlohmann::json{{"v_bar", p.v_bar},
                     {"v", p.v},
                     {"alpha", p.alpha},
                     {"epsilon", p.epsilon},
                     {"R", p.R},
                     {"schedule", p.schedule == AdiabaticSchedule::linear ? "linear" : "fixed"},
                     {"lambda", p.lambda()},
                     {"reference_time", p.reference_time}};
  if (p.schedule == AdiabaticSchedule::fixed) j["s"] = p.s_fixed;
}

std::vector<double> astlo_argument(std::span<const double> phi, const AstloParams& params,
                                   double t) {
  params.validate();
  if (t < 0.0) throw ValidationError("t", "time must be nonnegative");
  std::vector<double> arg(phi.size());
  const double ta = std::pow(t, params.alpha);
  if (params.schedule == AdiabaticSchedule::linear && t > 0.0) {
    // s(t)^alpha = ((v - v_bar)/eps) t^alpha
    const double denom = (params.v - params.v_bar) * ta;
    for (std::size_t i = 0; i < phi.size(); ++i)
      arg[i] = params.epsilon * (phi[i] - params.v_bar * ta) / denom;
    return arg;
  }
  double s = params.s(t);
  if (params.schedule == AdiabaticSchedule::linear) {
    if (!(params.reference_time > 0.0))
      throw ValidationError("astlo.reference_time",
                            "linear schedule gives s(0) = 0; set a positive reference time");
    s = params.lambda() * params.reference_time;
  }
  if (!(s > 0.0)) throw ValidationError("astlo.s", "adiabatic parameter s = 0");
  const double sa = std::pow(s, params.alpha);
  for (std::size_t i = 0; i < phi.size(); ++i) arg[i] = (phi[i] - params.v_bar * ta) / sa;
  return arg;
}

std::vector<double> astlo_field(const std::function<double(double)>& f,
                                std::span<const double> phi, const AstloParams& params,
                                double t) {
  std::vector<double> field = astlo_argument(phi, params, t);
  for (auto& a : field) a = f(a);
  return field;
}

namespace {
void require_linear(const AstloParams& params, double eps) {
  if (params.schedule != AdiabaticSchedule::linear)
    throw ValidationError("astlo.schedule", "geometric checks need the linear schedule");
  if (std::abs(params.epsilon - eps) > 1e-12 * std::max(1.0, eps))
    throw ValidationError("astlo.epsilon", "does not match the cutoff's epsilon");
}
}  // namespace

SandwichReport sandwich_check(const SmoothedStep& chi, std::span<const double> phi,
                              const AstloParams& params, double t) {
  require_linear(params, chi.epsilon());
  const auto field = astlo_field([&](double a) { return chi(a); }, phi, params, t);
  const double sup = chi.sup_norm();
  SandwichReport rep{t, -std::numeric_limits<double>::infinity(), phi.size()};
  const double front = params.v * std::pow(t, params.alpha);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double normalized = field[i] / sup;
    double violation;
    if (t == 0.0)
      violation = normalized - (phi[i] > 0.0 ? 1.0 : 0.0);
    else
      violation = (phi[i] > front ? 1.0 : 0.0) - normalized;
    rep.max_violation = std::max(rep.max_violation, violation);
  }
  return rep;
}

WindowReport window_check(const BumpFunction& w, std::span<const double> phi,
                          const AstloParams& params, double t) {
  require_linear(params, w.epsilon());
  if (!(t > 0.0)) throw ValidationError("t", "window check needs t > 0");
  const auto field = astlo_field([&](double a) { return w(a); }, phi, params, t);
  const double ta = std::pow(t, params.alpha);
  const double lo = params.v_bar * ta, hi = params.v * ta;
  const double plo = (0.25 * params.v + 0.75 * params.v_bar) * ta;
  const double phi_hi = (0.75 * params.v + 0.25 * params.v_bar) * ta;
  WindowReport rep;
  rep.t = t;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] < lo || phi[i] > hi) {
      rep.support_violation = std::max(rep.support_violation, std::abs(field[i]));
      ++rep.support_sites;
    }
    if (phi[i] >= plo && phi[i] <= phi_hi) {
      rep.plateau_violation = std::max(rep.plateau_violation, std::abs(field[i] - 1.0));
      ++rep.plateau_sites;
    }
  }
  return rep;
}

}  // namespace lcone
