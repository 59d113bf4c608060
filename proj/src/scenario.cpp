#include "lcone/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "lcone/error.hpp"

namespace lcone {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Strict reader for one JSON object: typed lookups with field paths and a
/// final check that every key was consumed.
class Section {
 public:
  Section(json j, std::string path) : j_(std::move(j)), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return join(path_, key); }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) throw ValidationError(at(key), "required field missing");
      return *fallback;
    }
    const json& v = raw(key);
    if (!v.is_number()) throw ValidationError(at(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(at(key), "must be finite");
    return x;
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ValidationError(at(key), "must be positive");
    return x;
  }

  long integer(const std::string& key, std::optional<long> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) throw ValidationError(at(key), "required field missing");
      return *fallback;
    }
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ValidationError(at(key), "expected an integer");
    return v.get<long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ValidationError(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) throw ValidationError(at(key), "required field missing");
      return *fallback;
    }
    const json& v = raw(key);
    if (!v.is_string()) throw ValidationError(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array()) throw ValidationError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
        throw ValidationError(at(key) + "[" + std::to_string(i) + "]", "expected a finite number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ValidationError(at(item.key()), "unknown field");
  }

 private:
  json j_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Runs a library from_json and maps its exceptions onto the section path.
template <class T>
T delegate(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const ValidationError&) {
    throw;
  } catch (const json::exception& e) {
    throw ValidationError(path, e.what());
  } catch (const Error& e) {
    throw ValidationError(path, e.what());
  }
}

void require_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw ValidationError(join(path, item.key()), "unknown field");
}

DecayModel parse_model(const std::string& name, const std::string& path) {
  if (name == "exponential") return DecayModel::exponential;
  if (name == "logarithmic") return DecayModel::logarithmic;
  throw ValidationError(path, "expected 'exponential' or 'logarithmic'");
}

const char* model_name(DecayModel m) {
  return m == DecayModel::exponential ? "exponential" : "logarithmic";
}

Coord parse_coord(const json& v, int dim, const std::string& path) {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(dim))
    throw ValidationError(path, "expected " + std::to_string(dim) + " integer coordinates");
  Coord c{};
  for (int i = 0; i < dim; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number_integer())
      throw ValidationError(path, "coordinates must be integers");
    c[i] = v[static_cast<std::size_t>(i)].get<int>();
  }
  return c;
}

json coord_json(const Coord& c, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(c[i]);
  return a;
}

InitialStateSpec parse_initial(const json& j, int dim, const std::string& path) {
  Section s(j, path);
  InitialStateSpec spec;
  const std::string kind = s.text("kind", "delta");
  if (kind == "delta") {
    spec.kind = InitialKind::delta;
    if (s.has("site")) spec.site = parse_coord(s.raw("site"), dim, s.at("site"));
  } else if (kind == "gaussian") {
    spec.kind = InitialKind::gaussian;
    spec.width = s.positive("width");
    spec.momentum = s.number("momentum", 0.0);
    if (s.has("center")) spec.site = parse_coord(s.raw("center"), dim, s.at("center"));
  } else if (kind == "power_tail") {
    spec.kind = InitialKind::power_tail;
    spec.exponent = s.positive("exponent");
    spec.radius = s.number("radius");
    if (spec.radius < 0.0) throw ValidationError(s.at("radius"), "must be nonnegative");
  } else if (kind == "explicit") {
    spec.kind = InitialKind::explicit_amplitudes;
    const auto re = s.numbers("re", {});
    const auto im = s.numbers("im", std::vector<double>(re.size(), 0.0));
    if (re.empty()) throw ValidationError(s.at("re"), "required and nonempty");
    if (im.size() != re.size()) throw ValidationError(s.at("im"), "length must match re");
    for (std::size_t i = 0; i < re.size(); ++i) spec.amplitudes.emplace_back(re[i], im[i]);
  } else {
    throw ValidationError(s.at("kind"), "unknown initial state '" + kind + "'");
  }
  s.finish();
  return spec;
}

json initial_json(const InitialStateSpec& s, int dim) {
  switch (s.kind) {
    case InitialKind::delta:
      return {{"kind", "delta"}, {"site", coord_json(s.site, dim)}};
    case InitialKind::gaussian:
      return {{"kind", "gaussian"}, {"width", s.width}, {"momentum", s.momentum},
              {"center", coord_json(s.site, dim)}};
    case InitialKind::power_tail:
      return {{"kind", "power_tail"}, {"exponent", s.exponent}, {"radius", s.radius}};
    case InitialKind::explicit_amplitudes: {
      std::vector<double> re, im;
      for (const auto& a : s.amplitudes) {
        re.push_back(a.real());
        im.push_back(a.imag());
      }
      return {{"kind", "explicit"}, {"re", re}, {"im", im}};
    }
  }
  return {};
}

// A check entry is either absent/false (not requested), true (defaults) or an
// object of overrides.
std::optional<json> check_entry(Section& s, const std::string& key) {
  if (!s.has(key)) return std::nullopt;
  const json& v = s.raw(key);
  if (v.is_boolean()) return v.get<bool>() ? std::optional<json>(json::object()) : std::nullopt;
  if (!v.is_object()) throw ValidationError(s.at(key), "expected true, false or an object");
  return v;
}

Checks parse_checks(const json& j) {
  Section s(j, "checks");
  Checks c;
  if (auto e = check_entry(s, "lightcone")) {
    Section q(*e, "checks.lightcone");
    LightconeCheck lc;
    auto& o = lc.options;
    o.v = q.positive("v", o.v);
    o.alpha = q.positive("alpha", o.alpha);
    if (!(o.alpha > 0.5 && o.alpha <= 1.0)) throw ValidationError(q.at("alpha"), "must lie in (1/2, 1]");
    o.R = q.number("R", o.R);
    if (o.R < 0.0) throw ValidationError(q.at("R"), "must be nonnegative");
    o.n = static_cast<int>(q.integer("n", o.n));
    if (o.n < 1) throw ValidationError(q.at("n"), "must be at least 1");
    o.fit_from = q.positive("fit_from", o.fit_from);
    o.fit_to = q.positive("fit_to", o.fit_to);
    if (!(o.fit_to > o.fit_from)) throw ValidationError(q.at("fit_to"), "must exceed fit_from");
    o.check_from = q.number("check_from", o.check_from);
    o.check_to = q.number("check_to", o.check_to);
    if (!(o.check_to >= o.check_from)) throw ValidationError(q.at("check_to"), "must be >= check_from");
    o.max_tail = q.positive("max_tail", o.max_tail);
    o.min_exponent = q.number("min_exponent", o.min_exponent);
    q.finish();
    c.lightcone = lc;
  }
  if (auto e = check_entry(s, "radin_simon")) {
    Section q(*e, "checks.radin_simon");
    RadinSimonCheck r;
    r.tolerance = q.positive("tolerance", r.tolerance);
    q.finish();
    c.radin_simon = r;
  }
  if (auto e = check_entry(s, "monotonicity")) {
    Section q(*e, "checks.monotonicity");
    MonotonicityCheck m;
    m.v = q.positive("v", m.v);
    m.v_bar = q.positive("v_bar", m.v_bar);
    if (!(m.v > m.v_bar)) throw ValidationError(q.at("v"), "must exceed v_bar");
    m.epsilon = q.positive("epsilon", m.epsilon);
    m.R = q.number("R", m.R);
    m.reference_time = q.positive("reference_time", m.reference_time);
    m.t_min = q.number("t_min", m.t_min);
    m.tolerance = q.positive("tolerance", m.tolerance);
    q.finish();
    c.monotonicity = m;
  }
  if (auto e = check_entry(s, "front")) {
    Section q(*e, "checks.front");
    FrontCheck f;
    f.R = q.number("R", f.R);
    f.v = q.positive("v", f.v);
    f.delta = q.positive("delta", f.delta);
    f.alpha = q.positive("alpha", f.alpha);
    if (!(f.alpha > 0.5 && f.alpha <= 1.0)) throw ValidationError(q.at("alpha"), "must lie in (1/2, 1]");
    f.epsilon = q.positive("epsilon", f.epsilon);
    if (!(f.v * f.alpha > f.delta)) throw ValidationError(q.at("delta"), "need delta < v alpha");
    q.finish();
    c.front = f;
  }
  if (auto e = check_entry(s, "transport")) {
    Section q(*e, "checks.transport");
    TransportCheck t;
    t.alphas = q.numbers("alphas", t.alphas);
    for (std::size_t i = 0; i < t.alphas.size(); ++i)
      if (!(t.alphas[i] > 0.0))
        throw ValidationError(q.at("alphas") + "[" + std::to_string(i) + "]", "must be positive");
    t.from = q.positive("from", t.from);
    t.to = q.positive("to", t.to);
    if (!(t.to > t.from)) throw ValidationError(q.at("to"), "must exceed from");
    t.cap = q.positive("cap", t.cap);
    q.finish();
    c.transport = t;
  }
  if (auto e = check_entry(s, "dyadic")) {
    Section q(*e, "checks.dyadic");
    DyadicCheck d;
    d.r = q.number("r", d.r);
    if (d.r < 0.0) throw ValidationError(q.at("r"), "must be nonnegative");
    d.r0 = q.number("r0", d.r0);
    if (!(d.r0 > d.r)) throw ValidationError(q.at("r0"), "must exceed r");
    d.v = q.positive("v", d.v);
    d.t_min = q.number("t_min", d.t_min);
    d.t_short = q.positive("t_short", d.t_short);
    d.t_long = q.positive("t_long", d.t_long);
    if (!(d.t_long >= d.t_short)) throw ValidationError(q.at("t_long"), "must be >= t_short");
    d.partition_tolerance = q.positive("partition_tolerance", d.partition_tolerance);
    q.finish();
    c.dyadic = d;
  }
  if (auto e = check_entry(s, "nls_replay")) {
    Section q(*e, "checks.nls_replay");
    NlsReplayCheck n;
    n.substeps = static_cast<int>(q.integer("substeps", n.substeps));
    if (n.substeps < 1) throw ValidationError(q.at("substeps"), "must be at least 1");
    n.tolerance = q.positive("tolerance", n.tolerance);
    q.finish();
    c.nls_replay = n;
  }
  if (auto e = check_entry(s, "combes_thomas")) {
    Section q(*e, "checks.combes_thomas");
    CombesThomasCheck ct;
    ct.offset = q.number("offset", ct.offset);
    if (!(ct.offset >= 1.0)) throw ValidationError(q.at("offset"), "spectral distance must be >= 1");
    ct.max_separation = static_cast<int>(q.integer("max_separation", ct.max_separation));
    if (ct.max_separation < 2) throw ValidationError(q.at("max_separation"), "must be at least 2");
    ct.expect = parse_model(q.text("expect", "exponential"), q.at("expect"));
    ct.min_r_squared = q.number("min_r_squared", ct.min_r_squared);
    ct.min_gap = q.number("min_gap", ct.min_gap);
    q.finish();
    c.combes_thomas = ct;
  }
  if (auto e = check_entry(s, "propagator_bound")) {
    Section q(*e, "checks.propagator_bound");
    PropagatorBoundCheck p;
    p.times = q.numbers("times", p.times);
    p.max_separation = static_cast<int>(q.integer("max_separation", p.max_separation));
    if (p.max_separation < 2) throw ValidationError(q.at("max_separation"), "must be at least 2");
    p.model = parse_model(q.text("model", "exponential"), q.at("model"));
    q.finish();
    c.propagator_bound = p;
  }
  if (auto e = check_entry(s, "dunford")) {
    Section q(*e, "checks.dunford");
    DunfordCheck d;
    d.times = q.numbers("times", d.times);
    if (d.times.empty()) throw ValidationError(q.at("times"), "must be nonempty");
    d.nodes_per_side = static_cast<int>(q.integer("nodes_per_side", d.nodes_per_side));
    if (d.nodes_per_side < 32 || d.nodes_per_side % 4 != 0)
      throw ValidationError(q.at("nodes_per_side"), "must be a multiple of 4 and >= 32");
    d.tolerance = q.positive("tolerance", d.tolerance);
    d.min_reduction = q.positive("min_reduction", d.min_reduction);
    d.max_separation = static_cast<int>(q.integer("max_separation", d.max_separation));
    if (d.max_separation < 0) throw ValidationError(q.at("max_separation"), "must be nonnegative");
    q.finish();
    c.dunford = d;
  }
  if (auto e = check_entry(s, "expansion")) {
    Section q(*e, "checks.expansion");
    ExpansionCheck x;
    x.epsilon = q.positive("epsilon", x.epsilon);
    x.half_width = static_cast<int>(q.integer("half_width", x.half_width));
    if (x.half_width < 0) throw ValidationError(q.at("half_width"), "must be nonnegative");
    x.sigmas = q.numbers("sigmas", x.sigmas);
    if (x.sigmas.size() < 2) throw ValidationError(q.at("sigmas"), "need at least two values");
    for (double sg : x.sigmas)
      if (!(sg > 0.0)) throw ValidationError(q.at("sigmas"), "values must be positive");
    if (q.has("orders")) {
      const json& v = q.raw("orders");
      if (!v.is_array() || v.empty()) throw ValidationError(q.at("orders"), "expected integers");
      x.orders.clear();
      for (const auto& o : v) {
        if (!o.is_number_integer() || o.get<int>() < 1 || o.get<int>() > 4)
          throw ValidationError(q.at("orders"), "orders must be integers in 1..4");
        x.orders.push_back(o.get<int>());
      }
    }
    x.slope_tolerance = q.positive("slope_tolerance", x.slope_tolerance);
    x.leading_gap = q.boolean("leading_gap", x.leading_gap);
    x.gap_slope = q.number("gap_slope", x.gap_slope);
    x.gap_slope_tolerance = q.positive("gap_slope_tolerance", x.gap_slope_tolerance);
    x.shift_offset = q.number("shift_offset", x.shift_offset);
    q.finish();
    c.expansion = x;
  }
  if (auto e = check_entry(s, "unitarity")) {
    Section q(*e, "checks.unitarity");
    UnitarityCheck u;
    u.tolerance = q.positive("tolerance", u.tolerance);
    q.finish();
    c.unitarity = u;
  } else if (!s.has("unitarity") && c.needs_trajectory()) {
    c.unitarity = UnitarityCheck{};
  }
  s.finish();
  return c;
}

json checks_json(const Checks& c) {
  json j = json::object();
  j["unitarity"] = c.unitarity ? json{{"tolerance", c.unitarity->tolerance}} : json(false);
  if (c.lightcone) {
    const auto& o = c.lightcone->options;
    j["lightcone"] = {{"v", o.v},           {"alpha", o.alpha},           {"R", o.R},
                      {"n", o.n},           {"fit_from", o.fit_from},     {"fit_to", o.fit_to},
                      {"check_from", o.check_from}, {"check_to", o.check_to},
                      {"max_tail", o.max_tail},     {"min_exponent", o.min_exponent}};
  }
  if (c.radin_simon) j["radin_simon"] = {{"tolerance", c.radin_simon->tolerance}};
  if (c.monotonicity) {
    const auto& m = *c.monotonicity;
    j["monotonicity"] = {{"v", m.v},           {"v_bar", m.v_bar},
                         {"epsilon", m.epsilon}, {"R", m.R},
                         {"reference_time", m.reference_time},
                         {"t_min", m.t_min},   {"tolerance", m.tolerance}};
  }
  if (c.front) {
    const auto& f = *c.front;
    j["front"] = {{"R", f.R}, {"v", f.v}, {"delta", f.delta}, {"alpha", f.alpha}, {"epsilon", f.epsilon}};
  }
  if (c.transport) {
    const auto& t = *c.transport;
    j["transport"] = {{"alphas", t.alphas}, {"from", t.from}, {"to", t.to}, {"cap", t.cap}};
  }
  if (c.dyadic) {
    const auto& d = *c.dyadic;
    j["dyadic"] = {{"r", d.r},           {"r0", d.r0},           {"v", d.v},
                   {"t_min", d.t_min},   {"t_short", d.t_short}, {"t_long", d.t_long},
                   {"partition_tolerance", d.partition_tolerance}};
  }
  if (c.nls_replay)
    j["nls_replay"] = {{"substeps", c.nls_replay->substeps}, {"tolerance", c.nls_replay->tolerance}};
  if (c.combes_thomas) {
    const auto& ct = *c.combes_thomas;
    j["combes_thomas"] = {{"offset", ct.offset},
                          {"max_separation", ct.max_separation},
                          {"expect", model_name(ct.expect)},
                          {"min_r_squared", ct.min_r_squared},
                          {"min_gap", ct.min_gap}};
  }
  if (c.propagator_bound) {
    const auto& p = *c.propagator_bound;
    j["propagator_bound"] = {{"times", p.times}, {"max_separation", p.max_separation},
                             {"model", model_name(p.model)}};
  }
  if (c.dunford) {
    const auto& d = *c.dunford;
    j["dunford"] = {{"times", d.times},         {"nodes_per_side", d.nodes_per_side},
                    {"tolerance", d.tolerance}, {"min_reduction", d.min_reduction},
                    {"max_separation", d.max_separation}};
  }
  if (c.expansion) {
    const auto& x = *c.expansion;
    j["expansion"] = {{"epsilon", x.epsilon},
                      {"half_width", x.half_width},
                      {"sigmas", x.sigmas},
                      {"orders", x.orders},
                      {"slope_tolerance", x.slope_tolerance},
                      {"leading_gap", x.leading_gap},
                      {"gap_slope", x.gap_slope},
                      {"gap_slope_tolerance", x.gap_slope_tolerance},
                      {"shift_offset", x.shift_offset}};
  }
  return j;
}

SweepSpec parse_sweep(const json& j) {
  Section s(j, "sweep");
  SweepSpec spec;
  spec.max_points = static_cast<std::size_t>(s.integer("max_points", 256));
  if (spec.max_points < 1) throw ValidationError(s.at("max_points"), "must be at least 1");
  const json& grid = s.has("grid") ? s.raw("grid") : json::array();
  if (!grid.is_array()) throw ValidationError(s.at("grid"), "expected an array of axes");
  std::size_t points = 1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Section a(grid[i], s.at("grid") + "[" + std::to_string(i) + "]");
    SweepAxis axis;
    axis.path = a.text("path");
    if (axis.path.empty() || axis.path.front() != '/')
      throw ValidationError(a.at("path"), "expected a JSON pointer such as /potential/seed");
    try {
      (void)json::json_pointer(axis.path);
    } catch (const json::exception& e) {
      throw ValidationError(a.at("path"), e.what());
    }
    if (axis.path == "/sweep" || axis.path.rfind("/sweep/", 0) == 0)
      throw ValidationError(a.at("path"), "cannot sweep the sweep block");
    const json& values = a.raw("values");
    if (!values.is_array()) throw ValidationError(a.at("values"), "expected an array");
    axis.values.assign(values.begin(), values.end());
    a.finish();
    points *= axis.values.size();
    spec.axes.push_back(std::move(axis));
  }
  if (!spec.axes.empty() && points > spec.max_points)
    throw ValidationError(s.at("grid"), "grid has " + std::to_string(points) +
                                            " points, above max_points = " +
                                            std::to_string(spec.max_points));
  s.finish();
  return spec;
}

}  // namespace

WaveState InitialStateSpec::build(const BoxGeometry& g) const {
  switch (kind) {
    case InitialKind::delta: return delta_state(g, site);
    case InitialKind::gaussian: return gaussian_state(g, width, momentum, site);
    case InitialKind::power_tail: return power_tail_state(g, exponent, radius);
    case InitialKind::explicit_amplitudes: {
      CVector a(static_cast<Eigen::Index>(amplitudes.size()));
      for (std::size_t i = 0; i < amplitudes.size(); ++i) a[static_cast<Eigen::Index>(i)] = amplitudes[i];
      return explicit_state(g, std::move(a));
    }
  }
  throw ValidationError("initial_state.kind", "unknown kind");
}

int ExpansionCheck::box_half_width() const {
  return half_width > 0 ? half_width : static_cast<int>(64.0 * epsilon) + 20;
}

double ExpansionCheck::shift(double sigma) const {
  return (box_half_width() - sigma * epsilon) / 2.0 + shift_offset;
}

bool Checks::needs_trajectory() const {
  return unitarity || lightcone || radin_simon || monotonicity || front || transport || dyadic || nls_replay;
}

bool Checks::needs_static_hamiltonian() const {
  return combes_thomas || propagator_bound || dunford;
}

std::vector<double> Scenario::output_times() const {
  const long n = std::lround(horizon / output_step);
  std::vector<double> t;
  for (long i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) * output_step;
    if (x > horizon * (1.0 + 1e-12)) break;
    t.push_back(x);
  }
  if (horizon - t.back() > 1e-9 * horizon) t.push_back(horizon);
  return t;
}

Scenario parse_scenario(const json& document) {
  Section s(document, "");
  Scenario sc;
  sc.source = document;
  sc.id = s.text("id");
  if (sc.id.empty()) throw ValidationError("id", "must be nonempty");
  for (char ch : sc.id)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.'))
      throw ValidationError("id", "use letters, digits, '-', '_' or '.' only");

  {
    Section g(s.has("geometry") ? s.raw("geometry") : json::object(), "geometry");
    sc.dimension = static_cast<int>(g.integer("dimension", 1));
    if (sc.dimension < 1 || sc.dimension > kMaxDimension)
      throw ValidationError(g.at("dimension"), "must lie in 1.." + std::to_string(kMaxDimension));
    if (g.has("half_width")) {
      const json& hw = g.raw("half_width");
      if (hw.is_string() && hw.get<std::string>() == "auto") {
        sc.half_width = 0;
      } else if (hw.is_number_integer() && hw.get<int>() >= 1) {
        sc.half_width = hw.get<int>();
      } else {
        throw ValidationError(g.at("half_width"), "expected a positive integer or \"auto\"");
      }
    }
    try {
      sc.norm = parse_norm(g.text("norm", "euclidean"));
    } catch (const Error& e) {
      throw ValidationError(g.at("norm"), e.what());
    }
    g.finish();
  }

  if (!s.has("kernel")) throw ValidationError("kernel", "required field missing");
  {
    const json& k = s.raw("kernel");
    require_keys(k, "kernel", {"family", "exponent", "coupling", "rate", "prefactor", "floor"});
    sc.kernel = delegate<KernelDescriptor>(k, "kernel");
  }
  if (s.has("potential")) {
    const json& p = s.raw("potential");
    require_keys(p, "potential",
                 {"kind", "bound", "values", "amplitude", "interval", "seed", "modes", "times", "rows"});
    sc.potential = delegate<PotentialSchedule>(p, "potential");
    if (p.contains("bound")) {
      if (!p["bound"].is_number()) throw ValidationError("potential.bound", "expected a number");
      if (p["bound"].get<double>() < sc.potential.bound() * (1.0 - 1e-12))
        throw ValidationError("potential.bound", "declared bound is below the schedule's sup norm");
    }
  }
  if (s.has("nonlinearity")) {
    const json& n = s.raw("nonlinearity");
    require_keys(n, "nonlinearity", {"g", "p", "C1", "C2"});
    sc.nonlinearity = delegate<NonlinearSpec>(n, "nonlinearity");
    if (sc.nonlinearity.bound_violation() > 1e-12)
      throw ValidationError("nonlinearity.C1", "|N(q)| exceeds C1 somewhere on |q| <= C2");
  }
  sc.initial = parse_initial(s.has("initial_state") ? s.raw("initial_state") : json::object(),
                             sc.dimension, "initial_state");
  if (sc.initial.kind == InitialKind::explicit_amplitudes && sc.half_width == 0)
    throw ValidationError("geometry.half_width", "explicit initial states need a fixed box");

  {
    Section t(s.has("time") ? s.raw("time") : json::object(), "time");
    sc.horizon = t.positive("horizon", sc.horizon);
    sc.output_step = t.positive("output_step", sc.output_step);
    if (sc.output_step > sc.horizon) throw ValidationError(t.at("output_step"), "exceeds the horizon");
    if (sc.horizon / sc.output_step > 1e6) throw ValidationError(t.at("output_step"), "too many snapshots");
    t.finish();
  }
  if (s.has("integrator")) {
    const json& i = s.raw("integrator");
    require_keys(i, "integrator",
                 {"method", "tolerance", "initial_step", "max_step", "min_step", "adaptive",
                  "fixed_step", "record_steps", "preflight", "preflight_tail"});
    if (i.contains("method") && i["method"] != "rk4-step-doubling")
      throw ValidationError("integrator.method", "only rk4-step-doubling is available");
    sc.integrator = delegate<IntegratorSettings>(i, "integrator");
  }

  sc.checks = parse_checks(s.has("checks") ? s.raw("checks") : json::object());
  if (sc.checks.nls_replay && !sc.nonlinearity.active())
    throw ValidationError("checks.nls_replay", "needs a nonlinearity with g != 0");
  if (sc.checks.needs_static_hamiltonian() && sc.half_width == 0)
    throw ValidationError("geometry.half_width", "spectral checks need a fixed box");
  if (sc.checks.needs_static_hamiltonian() && !sc.potential.is_static())
    throw ValidationError("potential.kind", "spectral checks need a static potential");
  if (sc.checks.needs_static_hamiltonian() && sc.nonlinearity.active())
    throw ValidationError("nonlinearity", "spectral checks need a linear equation");
  if (sc.checks.dyadic && sc.checks.dyadic->t_long > sc.horizon * (1.0 + 1e-12))
    throw ValidationError("checks.dyadic.t_long", "exceeds time.horizon");
  if (sc.checks.lightcone && sc.checks.lightcone->options.check_to > sc.horizon * (1.0 + 1e-12))
    throw ValidationError("checks.lightcone.check_to", "exceeds time.horizon");

  {
    Section o(s.has("outputs") ? s.raw("outputs") : json::object(), "outputs");
    sc.output_directory = o.text("directory", sc.id);
    if (sc.output_directory.empty() || std::filesystem::path(sc.output_directory).is_absolute() ||
        sc.output_directory.find("..") != std::string::npos)
      throw ValidationError(o.at("directory"), "must be a relative path without '..'");
    sc.write_trajectory = o.boolean("trajectory", false);
    o.finish();
  }
  if (s.has("sweep")) sc.sweep = parse_sweep(s.raw("sweep"));
  s.finish();
  return sc;
}

Scenario parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("config is not valid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("", "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

json canonical(const Scenario& sc) {
  json j;
  j["id"] = sc.id;
  j["geometry"] = {{"dimension", sc.dimension},
                   {"half_width", sc.half_width == 0 ? json("auto") : json(sc.half_width)},
                   {"norm", to_string(sc.norm)}};
  j["kernel"] = sc.kernel;
  j["potential"] = sc.potential;
  if (sc.nonlinearity.active()) j["nonlinearity"] = sc.nonlinearity;
  j["initial_state"] = initial_json(sc.initial, sc.dimension);
  j["time"] = {{"horizon", sc.horizon}, {"output_step", sc.output_step}};
  j["integrator"] = sc.integrator;
  j["checks"] = checks_json(sc.checks);
  j["outputs"] = {{"directory", sc.output_directory}, {"trajectory", sc.write_trajectory}};
  if (sc.sweep) {
    json grid = json::array();
    for (const auto& a : sc.sweep->axes) grid.push_back({{"path", a.path}, {"values", a.values}});
    j["sweep"] = {{"max_points", sc.sweep->max_points}, {"grid", grid}};
  }
  return j;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string scenario_hash(const Scenario& sc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical(sc).dump())));
  return buf;
}

void validate_against_kernel(const Scenario& sc, const StructuralConstants& k) {
  char kappa[64];
  std::snprintf(kappa, sizeof kappa, "%.6g", k.kappa);
  if (sc.checks.lightcone) {
    const auto& o = sc.checks.lightcone->options;
    if (o.alpha == 1.0 && !(o.v > k.kappa))
      throw ValidationError("checks.lightcone.v",
                            std::string("the light-cone speed must exceed kappa = ") + kappa +
                                " (the ballistic bound holds only for v > kappa)");
  }
  if (sc.checks.monotonicity && !(sc.checks.monotonicity->v_bar > k.kappa))
    throw ValidationError("checks.monotonicity.v_bar",
                          std::string("must exceed kappa = ") + kappa);
}

std::vector<json> expand_sweep(const Scenario& sc) {
  std::vector<json> points;
  if (!sc.sweep) return points;
  const auto& axes = sc.sweep->axes;
  if (axes.empty()) return points;
  for (const auto& a : axes)
    if (a.values.empty()) return points;

  json base = sc.source;
  base.erase("sweep");
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t n = 0;; ++n) {
    json p = base;
    for (std::size_t a = 0; a < axes.size(); ++a) p[json::json_pointer(axes[a].path)] = axes[a].values[idx[a]];
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-p%03zu", n);
    p["id"] = sc.id + suffix;
    json outputs = p.value("outputs", json::object());
    outputs["directory"] = sc.output_directory + "/" + sc.id + suffix;
    p["outputs"] = outputs;
    points.push_back(std::move(p));

    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return points;
    }
  }
}

}  // namespace lcone
