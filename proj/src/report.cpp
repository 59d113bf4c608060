#include "lcone/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "lcone/error.hpp"
#include "lcone/scenario.hpp"
#include "lcone/trajectory_io.hpp"

namespace lcone {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::below_floor: return "below-floor";
    case Verdict::diagnostic_only: return "diagnostic-only";
  }
  return "fail";
}

Verdict parse_verdict(const std::string& name) {
  if (name == "pass") return Verdict::pass;
  if (name == "fail") return Verdict::fail;
  if (name == "below-floor") return Verdict::below_floor;
  if (name == "diagnostic-only") return Verdict::diagnostic_only;
  throw ValidationError("verdict", "unknown verdict '" + name + "'");
}

bool BoundReport::any_failed() const {
  return std::any_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.verdict == Verdict::fail; });
}

const CheckResult* BoundReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

// Non-finite doubles are not JSON; they travel as strings.
namespace {

json number_json(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

json numbers_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_json(x));
  return a;
}

std::vector<double> numbers_from(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number_from(x));
  return v;
}

}  // namespace

void to_json(json& j, const Series& s) {
  j = json{{"name", s.name},
           {"x_label", s.x_label},
           {"x", numbers_json(s.x)},
           {"threshold", numbers_json(s.threshold)},
           {"value", numbers_json(s.value)},
           {"floor", s.floor}};
}

void from_json(const json& j, Series& s) {
  s.name = j.at("name").get<std::string>();
  s.x_label = j.value("x_label", std::string("t"));
  s.x = numbers_from(j.at("x"));
  s.threshold = numbers_from(j.at("threshold"));
  s.value = numbers_from(j.at("value"));
  s.floor = j.at("floor").get<std::vector<bool>>();
}

void to_json(json& j, const CheckResult& c) {
  json metrics = json::object();
  for (const auto& [k, v] : c.metrics) metrics[k] = number_json(v);
  j = json{{"name", c.name},       {"verdict", to_string(c.verdict)}, {"summary", c.summary},
           {"metrics", metrics},   {"details", c.details},            {"series", c.series}};
}

void from_json(const json& j, CheckResult& c) {
  c.name = j.at("name").get<std::string>();
  c.verdict = parse_verdict(j.at("verdict").get<std::string>());
  c.summary = j.value("summary", std::string());
  c.metrics.clear();
  for (const auto& [k, v] : j.at("metrics").items()) c.metrics[k] = number_from(v);
  c.details = j.value("details", json::object());
  c.series = j.value("series", std::vector<Series>{});
}

void to_json(json& j, const BoundReport& r) {
  j = json{{"format", "lcone-report-1"},
           {"scenario", r.scenario_id},
           {"scenario_hash", r.scenario_hash},
           {"verdict", r.any_failed() ? "fail" : "pass"},
           {"checks", r.checks},
           {"run", r.run},
           {"environment", r.environment}};
}

void from_json(const json& j, BoundReport& r) {
  if (j.value("format", std::string()) != "lcone-report-1")
    throw ValidationError("format", "not an lcone report");
  r.scenario_id = j.at("scenario").get<std::string>();
  r.scenario_hash = j.at("scenario_hash").get<std::string>();
  r.checks = j.at("checks").get<std::vector<CheckResult>>();
  r.run = j.value("run", json::object());
  r.environment = j.value("environment", json::object());
}

json environment_fingerprint() {
  json e;
#if defined(__clang__)
  e["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  e["compiler"] = std::string("gcc ") + __VERSION__;
#else
  e["compiler"] = "unknown";
#endif
  e["cxx_standard"] = static_cast<long>(__cplusplus);
  e["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  e["boost"] = std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
               "." + std::to_string(BOOST_VERSION % 100);
  e["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#ifdef NDEBUG
  e["assertions"] = false;
#else
  e["assertions"] = true;
#endif
  e["pointer_bits"] = static_cast<int>(8 * sizeof(void*));
  e["library"] = "lcone 1.0.0";
  return e;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string series_csv(const BoundReport& r) {
  std::string out = "scenario,check,series,x_label,x,threshold,value,floor\n";
  for (const auto& c : r.checks)
    for (const auto& s : c.series)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out += r.scenario_id;
        out += ',' + c.name + ',' + s.name + ',' + s.x_label + ',';
        out += format_double(s.x[i]) + ',' + format_double(s.threshold[i]) + ',';
        out += format_double(s.value[i]) + ',';
        out += s.floor[i] ? "1\n" : "0\n";
      }
  return out;
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

}  // namespace

std::string render_svg(const CheckResult& check, const std::string& title) {
  constexpr double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : check.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0 && s.value[i] > 0.0) || s.floor[i]) continue;
      xmin = std::min(xmin, std::log10(s.x[i]));
      xmax = std::max(xmax, std::log10(s.x[i]));
      ymin = std::min(ymin, std::log10(s.value[i]));
      ymax = std::max(ymax, std::log10(s.value[i]));
    }

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape_xml(title) << "</text>\n";
  if (!(xmax >= xmin)) {
    o << "<text x=\"" << W / 2 << "\" y=\"" << H / 2
      << "\" text-anchor=\"middle\">no points above the numerical floor</text>\n</svg>\n";
    return o.str();
  }
  xmin = std::floor(xmin);
  xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin);
  ymax = std::max(std::ceil(ymax), ymin + 1);
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double lx) { return left + (lx - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * ph; };

  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int ystep = std::max(1, static_cast<int>((ymax - ymin) / 8));
  for (int e = static_cast<int>(xmin); e <= static_cast<int>(xmax); ++e)
    o << "<line x1=\"" << px(e) << "\" y1=\"" << top << "\" x2=\"" << px(e) << "\" y2=\"" << top + ph
      << "\" stroke=\"#ddd\"/><text x=\"" << px(e) << "\" y=\"" << top + ph + 16
      << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
  for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); e += ystep)
    o << "<line x1=\"" << left << "\" y1=\"" << py(e) << "\" x2=\"" << left + pw << "\" y2=\"" << py(e)
      << "\" stroke=\"#ddd\"/><text x=\"" << left - 6 << "\" y=\"" << py(e) + 4
      << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  const std::string xl = check.series.empty() ? "t" : check.series.front().x_label;
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << escape_xml(xl) << "</text>\n";

  for (std::size_t k = 0; k < check.series.size(); ++k) {
    const auto& s = check.series[k];
    const char* color = colors[k % 8];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0 && s.value[i] > 0.0) || s.floor[i]) continue;
      o << px(std::log10(s.x[i])) << ',' << py(std::log10(s.value[i])) << ' ';
    }
    o << "\"/>\n";
    const double ly = top + 16 + 18 * static_cast<double>(k);
    o << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30
      << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
      << "<text x=\"" << left + pw + 34 << "\" y=\"" << ly << "\">" << escape_xml(s.name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

EmitSet parse_emit(const std::vector<std::string>& names) {
  if (names.empty()) return {};
  EmitSet e{false, false, false};
  for (const auto& entry : names) {
    std::stringstream ss(entry);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "csv") e.csv = true;
      else if (item == "json") e.json = true;
      else if (item == "svg") e.svg = true;
      else throw ValidationError("emit", "expected svg, csv or json, got '" + item + "'");
    }
  }
  return e;
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

json manifest(const std::string& id, const std::string& hash, const fs::path& dir,
              const std::vector<fs::path>& files) {
  json entries = json::array();
  for (const auto& f : files) {
    const std::string bytes = read_file(f);
    char sum[17];
    std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    entries.push_back({{"path", fs::relative(f, dir).generic_string()},
                       {"bytes", bytes.size()},
                       {"fnv1a", sum},
                       {"scenario_hash", hash}});
  }
  return json{{"format", "lcone-manifest-1"}, {"scenario", id}, {"scenario_hash", hash}, {"files", entries}};
}

std::vector<fs::path> write_report(const BoundReport& r, const fs::path& dir, const EmitSet& emit,
                                   const std::vector<fs::path>& extra) {
  std::vector<fs::path> written = extra;
  if (emit.json) {
    const fs::path p = dir / "report.json";
    write_atomic(p, json(r).dump(2) + "\n");
    written.push_back(p);
  }
  if (emit.csv) {
    const fs::path p = dir / "tails.csv";
    write_atomic(p, series_csv(r));
    written.push_back(p);
  }
  if (emit.svg) {
    for (const auto& c : r.checks) {
      if (c.series.empty()) continue;
      const fs::path p = dir / (c.name + ".svg");
      write_atomic(p, render_svg(c, r.scenario_id + ": " + c.name + " (" + to_string(c.verdict) + ")"));
      written.push_back(p);
    }
  }
  const fs::path m = dir / "manifest.json";
  write_atomic(m, manifest(r.scenario_id, r.scenario_hash, dir, written).dump(2) + "\n");
  written.push_back(m);
  return written;
}

}  // namespace lcone
