#include "lcone/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lcone/error.hpp"

namespace lcone {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

const char* kind_name(PotentialKind k) {
  switch (k) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::fixed: return "static";
    case PotentialKind::piecewise_random: return "piecewise_random";
    case PotentialKind::quasiperiodic: return "quasiperiodic";
    case PotentialKind::tabulated: return "tabulated";
  }
  return "zero";
}

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t site, std::uint64_t refresh) {
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ site) ^ refresh);
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

PotentialSchedule PotentialSchedule::zero() { return PotentialSchedule{}; }

PotentialSchedule PotentialSchedule::fixed(std::vector<double> values) {
  PotentialSchedule p;
  p.kind_ = PotentialKind::fixed;
  p.bound_ = sup_abs(values);
  p.values_ = std::move(values);
  return p;
}

PotentialSchedule PotentialSchedule::piecewise_random(double amplitude, double interval,
                                                      std::uint64_t seed) {
  if (!(amplitude >= 0.0)) throw ValidationError("potential.amplitude", "must be nonnegative");
  if (!(interval > 0.0)) throw ValidationError("potential.interval", "must be positive");
  PotentialSchedule p;
  p.kind_ = PotentialKind::piecewise_random;
  p.amplitude_ = amplitude;
  p.bound_ = amplitude;
  p.interval_ = interval;
  p.seed_ = seed;
  return p;
}

PotentialSchedule PotentialSchedule::quasiperiodic(double amplitude, std::vector<DriveMode> modes) {
  if (modes.empty()) throw ValidationError("potential.modes", "need at least one drive mode");
  PotentialSchedule p;
  p.kind_ = PotentialKind::quasiperiodic;
  p.amplitude_ = amplitude;
  p.bound_ = std::abs(amplitude);
  p.modes_ = std::move(modes);
  return p;
}

PotentialSchedule PotentialSchedule::tabulated(std::vector<double> times,
                                               std::vector<std::vector<double>> rows) {
  if (times.empty() || times.size() != rows.size())
    throw ValidationError("potential.times", "need one row per tabulated time");
  if (times.front() != 0.0) throw ValidationError("potential.times", "first time must be 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw ValidationError("potential.times", "times must be strictly increasing");
  PotentialSchedule p;
  p.kind_ = PotentialKind::tabulated;
  for (const auto& r : rows) p.bound_ = std::max(p.bound_, sup_abs(r));
  p.times_ = std::move(times);
  p.rows_ = std::move(rows);
  return p;
}

void PotentialSchedule::validate(const BoxGeometry& g) const {
  const std::size_t n = g.site_count();
  if (kind_ == PotentialKind::fixed && values_.size() != n)
    throw ValidationError("potential.values", "expected " + std::to_string(n) + " site values");
  if (kind_ == PotentialKind::tabulated)
    for (const auto& r : rows_)
      if (r.size() != n)
        throw ValidationError("potential.rows", "expected " + std::to_string(n) + " site values");
}

void PotentialSchedule::evaluate(const BoxGeometry& g, double t, std::vector<double>& out) const {
  const std::size_t n = g.site_count();
  out.resize(n);
  switch (kind_) {
    case PotentialKind::zero:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case PotentialKind::fixed:
      std::copy(values_.begin(), values_.end(), out.begin());
      return;
    case PotentialKind::piecewise_random: {
      const auto refresh = static_cast<std::uint64_t>(std::max(0.0, std::floor(t / interval_)));
      for (std::size_t i = 0; i < n; ++i) out[i] = amplitude_ * counter_uniform(seed_, i, refresh);
      return;
    }
    case PotentialKind::quasiperiodic: {
      const double scale = amplitude_ / static_cast<double>(modes_.size());
      for (std::size_t i = 0; i < n; ++i) {
        const Coord x = g.coord(i);
        int s = 0;
        for (int a = 0; a < g.dimension(); ++a) s += x[a];
        double v = 0.0;
        for (const auto& m : modes_)
          v += std::cos(2.0 * std::numbers::pi * m.wavenumber * s + m.omega * t + m.phase);
        out[i] = scale * v;
      }
      return;
    }
    case PotentialKind::tabulated: {
      const auto it = std::upper_bound(times_.begin(), times_.end(), t);
      const auto row = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - times_.begin() - 1));
      std::copy(rows_[row].begin(), rows_[row].end(), out.begin());
      return;
    }
  }
}

std::vector<double> PotentialSchedule::evaluate(const BoxGeometry& g, double t) const {
  std::vector<double> out;
  evaluate(g, t, out);
  return out;
}

std::vector<double> PotentialSchedule::breakpoints(double a, double b) const {
  std::vector<double> out;
  if (kind_ == PotentialKind::piecewise_random) {
    // Jump times are integer multiples of the interval.
    for (auto k = static_cast<long long>(std::floor(a / interval_)) + 1;; ++k) {
      const double tk = static_cast<double>(k) * interval_;
      if (tk >= b) break;
      if (tk > a) out.push_back(tk);
    }
  } else if (kind_ == PotentialKind::tabulated) {
    for (double tk : times_)
      if (tk > a && tk < b) out.push_back(tk);
  }
  return out;
}

double PotentialSchedule::bound_violation(const BoxGeometry& g, double T, int samples) const {
  double worst = -bound_;
  std::vector<double> v;
  for (int s = 0; s <= samples; ++s) {
    const double t = samples == 0 ? 0.0 : T * s / samples;
    evaluate(g, t, v);
    worst = std::max(worst, sup_abs(v) - bound_);
  }
  return worst;
}

void to_json(nlohmann::json& j, const PotentialSchedule& p) {
  j = nlohmann::json{{"kind", kind_name(p.kind_)}, {"bound", p.bound_}};
  switch (p.kind_) {
    case PotentialKind::zero: break;
    case PotentialKind::fixed: j["values"] = p.values_; break;
    case PotentialKind::piecewise_random:
      j["amplitude"] = p.amplitude_;
      j["interval"] = p.interval_;
      j["seed"] = p.seed_;
      break;
    case PotentialKind::quasiperiodic: {
      j["amplitude"] = p.amplitude_;
      auto modes = nlohmann::json::array();
      for (const auto& m : p.modes_)
        modes.push_back({{"wavenumber", m.wavenumber}, {"omega", m.omega}, {"phase", m.phase}});
      j["modes"] = modes;
      break;
    }
    case PotentialKind::tabulated:
      j["times"] = p.times_;
      j["rows"] = p.rows_;
      break;
  }
}

void from_json(const nlohmann::json& j, PotentialSchedule& p) {
  const std::string kind = j.value("kind", std::string("zero"));
  if (kind == "zero") {
    p = PotentialSchedule::zero();
  } else if (kind == "static") {
    p = PotentialSchedule::fixed(j.at("values").get<std::vector<double>>());
  } else if (kind == "piecewise_random") {
    p = PotentialSchedule::piecewise_random(j.at("amplitude").get<double>(),
                                            j.value("interval", 0.1),
                                            j.value("seed", std::uint64_t{0}));
  } else if (kind == "quasiperiodic") {
    std::vector<DriveMode> modes;
    for (const auto& m : j.at("modes"))
      modes.push_back({m.at("wavenumber").get<double>(), m.value("omega", 0.0), m.value("phase", 0.0)});
    p = PotentialSchedule::quasiperiodic(j.at("amplitude").get<double>(), std::move(modes));
  } else if (kind == "tabulated") {
    p = PotentialSchedule::tabulated(j.at("times").get<std::vector<double>>(),
                                     j.at("rows").get<std::vector<std::vector<double>>>());
  } else {
    throw ValidationError("potential.kind", "unknown potential kind '" + kind + "'");
  }
}

}  // namespace lcone
