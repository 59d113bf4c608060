// Command-line front end: simulate, bounds, expansion, spectral, sweep, report.
//
// Exit codes: 0 all checks pass, 2 a bound check failed, 3 validation error,
// 4 preflight error (box too small), 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcone/error.hpp"
#include "lcone/report.hpp"
#include "lcone/runner.hpp"
#include "lcone/scenario.hpp"

namespace fs = std::filesystem;
using namespace lcone;

namespace {

constexpr int kExitValidation = 3;
constexpr int kExitPreflight = 4;

void print_report(const BoundReport& r, bool quiet) {
  if (quiet) return;
  std::printf("scenario %s (hash %s)\n", r.scenario_id.c_str(), r.scenario_hash.c_str());
  for (const auto& c : r.checks)
    std::printf("  [%s] %s: %s\n", to_string(c.verdict).c_str(), c.name.c_str(), c.summary.c_str());
  if (r.checks.empty()) std::printf("  no checks requested\n");
}

int run_one(const std::string& config, RunMode mode, const RunOptions& base, bool quiet) {
  RunOptions opt = base;
  opt.mode = mode;
  const RunResult res = run_scenario(load_scenario(config), opt);
  print_report(res.report, quiet);
  if (!quiet) std::printf("outputs in %s\n", res.directory.string().c_str());
  return exit_code(res.report);
}

int run_sweep(const std::string& config, const RunOptions& opt, unsigned jobs, bool quiet) {
  const Scenario sc = load_scenario(config);
  if (!sc.sweep) throw ValidationError("sweep", "config has no sweep block");
  const SweepResult res = sweep(sc, opt, jobs);
  if (res.points.empty()) {
    std::fprintf(stderr, "warning: sweep grid is empty; nothing to run\n");
    return 0;
  }
  if (!quiet) {
    for (const auto& p : res.points) {
      if (p.report) {
        std::printf("%s: %s\n", p.id.c_str(), p.report->any_failed() ? "fail" : "pass");
      } else {
        std::printf("%s: %s error: %s\n", p.id.c_str(), p.error_kind.c_str(), p.error.c_str());
      }
    }
    std::printf("aggregate:\n%s\n", res.aggregate.dump(2).c_str());
    std::printf("outputs in %s\n", res.directory.string().c_str());
  }
  return res.any_failed() ? 2 : 0;
}

int run_report(const std::string& dir, const RunOptions& opt, bool emit_given, bool quiet) {
  const fs::path d(dir);
  if (fs::exists(d / "report.json")) {
    std::ifstream in(d / "report.json");
    const BoundReport r = nlohmann::json::parse(in).get<BoundReport>();
    print_report(r, quiet);
    if (emit_given) write_report(r, d, opt.emit);
    return exit_code(r);
  }
  if (fs::exists(d / "sweep.json")) {
    std::ifstream in(d / "sweep.json");
    const nlohmann::json s = nlohmann::json::parse(in);
    if (!quiet) std::printf("%s\n", s.at("aggregate").dump(2).c_str());
    bool failed = false;
    for (const auto& p : s.at("points")) failed = failed || p.value("verdict", "") != "pass";
    return failed ? 2 : 0;
  }
  throw ValidationError("report", "no report.json or sweep.json in " + dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-cone and propagation-bound experiments on lattice Schroedinger dynamics"};
  app.require_subcommand(1);

  std::string out_dir;
  std::vector<std::string> emit;
  bool quiet = false;
  app.add_option("--out", out_dir, std::string("Output root (default $") + kOutputRootVariable +
                                       " or ./lcone-out)");
  app.add_option("--emit", emit, "Artifacts to write: svg, csv, json (repeatable or comma-separated)")
      ->take_all();
  app.add_flag("-q,--quiet", quiet, "Only set the exit code");

  std::string config;
  unsigned jobs = 0;
  auto* simulate = app.add_subcommand("simulate", "Evolve and write the trajectory");
  auto* bounds = app.add_subcommand("bounds", "Run every requested check");
  auto* expansion = app.add_subcommand("expansion", "Commutator expansion scaling checks only");
  auto* spectral = app.add_subcommand("spectral", "Resolvent, Dunford and propagator checks only");
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter grid");
  auto* report = app.add_subcommand("report", "Summarise or re-render an output directory");
  for (auto* sub : {simulate, bounds, expansion, spectral, sweep_cmd})
    sub->add_option("config", config, "Scenario config (JSON, comments allowed)")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("-j,--jobs", jobs, "Worker threads (0: all cores)");
  std::string report_dir;
  report->add_option("directory", report_dir, "Directory holding report.json or sweep.json")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    RunOptions opt;
    opt.output_root = out_dir.empty() ? output_root_from_env() : fs::path(out_dir);
    opt.emit = parse_emit(emit);
    if (*simulate) return run_one(config, RunMode::simulate, opt, quiet);
    if (*bounds) return run_one(config, RunMode::all, opt, quiet);
    if (*expansion) return run_one(config, RunMode::expansion, opt, quiet);
    if (*spectral) return run_one(config, RunMode::spectral, opt, quiet);
    if (*sweep_cmd) return run_sweep(config, opt, jobs, quiet);
    if (*report) return run_report(report_dir, opt, !emit.empty(), quiet);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const PreflightError& e) {
    std::fprintf(stderr, "preflight error: %s; suggested geometry.half_width >= %d\n", e.what(),
                 e.suggested_half_width());
    return kExitPreflight;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
