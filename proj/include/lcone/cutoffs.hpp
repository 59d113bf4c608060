#pragma once

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "lcone/kernel.hpp"

namespace lcone {

/// Smooth bump w with supp w in (0, eps) and w = 1 on [eps/4, 3eps/4].
///
/// The rising edge is the standard transition g(t) = f(t) / (f(t) + f(1-t)),
/// f(t) = exp(-1/t), stretched onto (0, eps/4); the falling edge mirrors it
/// onto (3eps/4, eps). Derivatives are exact Taylor-mode propagations of
/// the closed form, accurate to a few ulps of the largest term.
class BumpFunction {
 public:
  BumpFunction(double epsilon, int max_order);

  double epsilon() const noexcept { return epsilon_; }
  int max_order() const noexcept { return max_order_; }

  double operator()(double y) const;
  /// k-th derivative, 0 <= k <= max_order().
  double derivative(int k, double y) const;
  /// w(y), w'(y), ..., w^{(order)}(y).
  std::vector<double> derivatives(double y, int order) const;

 private:
  double epsilon_;
  int max_order_;
};

BumpFunction make_bump(double epsilon, int max_order);

/// chi(x) = c * int_0^x w(y)^2 dy, a smoothed Heaviside step with transition
/// in (0, eps). Values come from a cumulative Gauss-Legendre table on the edge
/// profile plus one short panel per evaluation.
class SmoothedStep {
 public:
  SmoothedStep(BumpFunction w, bool normalize);

  const BumpFunction& bump() const noexcept { return w_; }
  double epsilon() const noexcept { return w_.epsilon(); }
  double scale() const noexcept { return scale_; }
  double sup_norm() const noexcept { return scale_ * total_; }
  /// Highest derivative available: one more than the bump's.
  int max_order() const noexcept { return w_.max_order() + 1; }

  double operator()(double x) const;
  /// chi^{(k)}(x) for 0 <= k <= max_order(); chi^{(k)} = c (w^2)^{(k-1)}.
  double derivative(int k, double x) const;

 private:
  double edge_integral(double tau) const;  // int_0^tau g(s)^2 ds, tau in [0,1]

  BumpFunction w_;
  std::vector<double> table_;
  double edge_total_ = 0.0;  // edge_integral(1)
  double total_ = 0.0;       // int_0^eps w^2
  double scale_ = 1.0;
};

SmoothedStep make_step(const BumpFunction& w, bool normalize);

void to_json(nlohmann::json& j, const SmoothedStep& chi);

// ---------------------------------------------------------------------------
// Adiabatic spacetime localisation observables

enum class AdiabaticSchedule { linear, fixed };

struct AstloParams {
  double v_bar = 1.0;
  double v = 2.0;
  double alpha = 1.0;
  double epsilon = 1.0;
  double R = 0.0;
  AdiabaticSchedule schedule = AdiabaticSchedule::linear;
  double s_fixed = 1.0;
  /// With the linear schedule s(0) = 0; the t = 0 field is evaluated with
  /// s = lambda * reference_time instead.
  double reference_time = 0.0;

  /// ((v - v_bar)/eps)^{1/alpha}
  double lambda() const;
  double s(double t) const;
  /// Throws ValidationError naming the offending field.
  void validate() const;
};

void to_json(nlohmann::json& j, const AstloParams& p);

/// Per-site argument (phi(x) - v_bar t^alpha) / s^alpha.
std::vector<double> astlo_argument(std::span<const double> phi, const AstloParams& params,
                                   double t);
/// Per-site values f((phi(x) - v_bar t^alpha) / s^alpha).
std::vector<double> astlo_field(const std::function<double(double)>& f,
                                std::span<const double> phi, const AstloParams& params,
                                double t);

struct SandwichReport {
  double t = 0.0;
  double max_violation = 0.0;  // <= 0 when the inequality holds everywhere
  std::size_t sites = 0;
};

/// At t = 0: chi-field / sup <= 1{phi > 0}; at t > 0: 1{phi > v t^alpha} <= chi-field / sup.
SandwichReport sandwich_check(const SmoothedStep& chi, std::span<const double> phi,
                              const AstloParams& params, double t);

struct WindowReport {
  double t = 0.0;
  double support_violation = 0.0;  // max |w-field| outside [v_bar t^a, v t^a]
  double plateau_violation = 0.0;  // max |w-field - 1| on the inner quarter window
  std::size_t support_sites = 0;
  std::size_t plateau_sites = 0;
};

WindowReport window_check(const BumpFunction& w, std::span<const double> phi,
                          const AstloParams& params, double t);

}  // namespace lcone
