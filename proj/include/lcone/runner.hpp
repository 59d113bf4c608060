#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcone/dynamics.hpp"
#include "lcone/report.hpp"
#include "lcone/scenario.hpp"

namespace lcone {

/// Environment variable naming the directory all outputs go under.
inline constexpr const char* kOutputRootVariable = "LCONE_OUTPUT_ROOT";

/// $LCONE_OUTPUT_ROOT if set and nonempty, else `fallback`.
std::filesystem::path output_root_from_env(const std::filesystem::path& fallback = "lcone-out");

enum class RunMode {
  all,        // every requested check
  simulate,   // trajectory, unitarity and tails only; trajectory always written
  expansion,  // commutator expansion checks only
  spectral,   // resolvent, Dunford and propagator-bound checks only
};

struct RunOptions {
  std::filesystem::path output_root = "lcone-out";
  EmitSet emit;
  RunMode mode = RunMode::all;
  bool write = true;
};

struct RunResult {
  BoundReport report;
  std::filesystem::path directory;
  std::vector<std::filesystem::path> files;
  std::optional<Trajectory> trajectory;
};

/// Builds the box (running the preflight when the half width is "auto"),
/// evolves, runs the requested checks and writes the artifacts. Throws
/// ValidationError or PreflightError before any file is written; numerical
/// failures inside a check become a "fail" verdict with the message attached.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options);
RunResult run_scenario(const std::filesystem::path& config, const RunOptions& options);

/// Smallest box that passes the preflight for this scenario's kernel, initial
/// state and horizon.
int choose_half_width(const Scenario& scenario);

struct SweepPoint {
  std::string id;
  nlohmann::json config;
  std::optional<BoundReport> report;
  std::string error;       // empty on success
  std::string error_kind;  // "validation", "preflight" or "numerical"
};

struct SweepResult {
  std::string id;
  std::vector<SweepPoint> points;
  nlohmann::json aggregate;
  std::filesystem::path directory;
  bool any_failed() const;
};

/// Runs every grid point on a pool of `jobs` workers (0: hardware threads);
/// each point is isolated, aggregation is a single-threaded reduce in grid
/// order. Writes sweep.json, sweep.csv and a manifest under the scenario's
/// output directory.
SweepResult sweep(const Scenario& scenario, const RunOptions& options, unsigned jobs = 0);

/// Per check: verdict counts and min / max / mean of every metric.
nlohmann::json aggregate_reports(const std::vector<SweepPoint>& points);

/// 0 all pass, 2 any fail.
int exit_code(const BoundReport& report);

}  // namespace lcone
