#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace lcone {

enum class Verdict { pass, fail, below_floor, diagnostic_only };

std::string to_string(Verdict v);
Verdict parse_verdict(const std::string& name);

/// A sampled curve: value against t (or separation, or sigma) with the
/// threshold it was measured at.
struct Series {
  std::string name;
  std::string x_label = "t";
  std::vector<double> x;
  std::vector<double> threshold;
  std::vector<double> value;
  std::vector<bool> floor;
};

struct CheckResult {
  std::string name;
  Verdict verdict = Verdict::fail;
  std::string summary;
  /// Scalar results (fitted constants, exponents, R^2); aggregated by sweeps.
  std::map<std::string, double> metrics;
  nlohmann::json details = nlohmann::json::object();
  std::vector<Series> series;
};

struct BoundReport {
  std::string scenario_id;
  std::string scenario_hash;
  std::vector<CheckResult> checks;
  nlohmann::json environment = nlohmann::json::object();
  nlohmann::json run = nlohmann::json::object();  // geometry, preflight, integrator stats

  bool any_failed() const;
  const CheckResult* find(const std::string& name) const;
};

void to_json(nlohmann::json& j, const Series& s);
void from_json(const nlohmann::json& j, Series& s);
void to_json(nlohmann::json& j, const CheckResult& c);
void from_json(const nlohmann::json& j, CheckResult& c);
void to_json(nlohmann::json& j, const BoundReport& r);
void from_json(const nlohmann::json& j, BoundReport& r);

/// Compiler, library versions and build flags.
nlohmann::json environment_fingerprint();

/// printf("%.17g") so every double round-trips.
std::string format_double(double x);

/// Long format: scenario,check,series,x_label,x,threshold,value,floor.
std::string series_csv(const BoundReport& report);

/// Log-log plot of every positive, non-floor point of the check's series.
std::string render_svg(const CheckResult& check, const std::string& title);

struct EmitSet {
  bool csv = true;
  bool json = true;
  bool svg = true;
};

/// Parses "svg", "csv", "json" or a comma-separated list of them.
EmitSet parse_emit(const std::vector<std::string>& names);

/// Writes report.json, tails.csv and one SVG per plotted check (as selected),
/// then manifest.json listing every file in `extra_files` and the written
/// artifacts with sizes, checksums and the scenario hash. All writes are
/// atomic. Returns the paths written, manifest last.
std::vector<std::filesystem::path> write_report(const BoundReport& report,
                                                const std::filesystem::path& directory,
                                                const EmitSet& emit,
                                                const std::vector<std::filesystem::path>& extra_files = {});

/// Manifest entry list for arbitrary files; used by sweeps.
nlohmann::json manifest(const std::string& scenario_id, const std::string& scenario_hash,
                        const std::filesystem::path& directory,
                        const std::vector<std::filesystem::path>& files);

}  // namespace lcone
