#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lcone/error.hpp"
#include "lcone/report.hpp"
#include "lcone/runner.hpp"
#include "lcone/scenario.hpp"

using namespace lcone;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kSmall = R"({
  // comments are allowed
  "id": "small",
  "geometry": {"dimension": 1, "half_width": "auto"},
  "kernel": {"family": "laplacian"},
  "potential": {"kind": "piecewise_random", "amplitude": 2, "interval": 0.25, "seed": 4},
  "initial_state": {"kind": "delta"},
  "time": {"horizon": 4, "output_step": 0.25},
  "checks": {
    "lightcone": {"v": 3, "fit_from": 1, "fit_to": 4, "check_from": 2, "check_to": 4, "max_tail": 1},
    "radin_simon": {}
  }
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("lcone-test-" + name);
  fs::remove_all(d);
  return d;
}

std::string error_path(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<no error>";
}

std::string patched(const std::string& pointer, const json& value) {
  json j = json::parse(kSmall, nullptr, true, true);
  j[json::json_pointer(pointer)] = value;
  return j.dump();
}

}  // namespace

TEST_CASE("scenario defaults and canonical form") {
  const Scenario sc = parse_scenario_text(kSmall);
  CHECK(sc.id == "small");
  CHECK(sc.half_width == 0);
  CHECK(sc.horizon == 4.0);
  CHECK(sc.output_times().size() == 17);
  CHECK(sc.output_directory == "small");
  CHECK(sc.checks.unitarity.has_value());  // on whenever a trajectory is evolved
  CHECK(sc.checks.lightcone->options.v == 3.0);
  CHECK(sc.checks.needs_trajectory());
  CHECK_FALSE(sc.checks.needs_static_hamiltonian());

  const Scenario again = parse_scenario(canonical(sc));
  CHECK(canonical(again) == canonical(sc));
}

TEST_CASE("scenario hash is stable under re-serialisation and sensitive to content") {
  const Scenario sc = parse_scenario_text(kSmall);
  const std::string h = scenario_hash(sc);
  CHECK(h.size() == 16);
  CHECK(scenario_hash(parse_scenario_text(canonical(sc).dump(4))) == h);
  json reordered = json::parse(kSmall, nullptr, true, true);
  CHECK(scenario_hash(parse_scenario_text(reordered.dump())) == h);
  CHECK(scenario_hash(parse_scenario_text(patched("/potential/seed", 5))) != h);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("validation errors name the offending field") {
  CHECK(error_path(patched("/geometry/dimension", 9)) == "geometry.dimension");
  CHECK(error_path(patched("/geometry/half_width", -3)) == "geometry.half_width");
  CHECK(error_path(patched("/geometry/colour", "red")) == "geometry.colour");
  CHECK(error_path(patched("/kernel/family", "yukawa")) == "kernel.family");
  CHECK(error_path(patched("/time/horizon", -1)) == "time.horizon");
  CHECK(error_path(patched("/checks/lightcone/alpha", 0.4)) == "checks.lightcone.alpha");
  CHECK(error_path(patched("/checks/lightcone/check_to", 40)) == "checks.lightcone.check_to");
  CHECK(error_path(patched("/checks/bogus", true)) == "checks.bogus");
  CHECK(error_path(patched("/checks/monotonicity", json{{"v", 3}, {"v_bar", 3}})) == "checks.monotonicity.v");
  CHECK(error_path(patched("/checks/dunford", json::object())) == "geometry.half_width");
  CHECK(error_path(patched("/outputs", json{{"directory", "../escape"}})) == "outputs.directory");
  CHECK(error_path(patched("/integrator", json{{"method", "euler"}})) == "integrator.method");
  CHECK(error_path(patched("/potential/bound", 1.0)) == "potential.bound");
  CHECK(error_path("{ not json") == "");
  CHECK(error_path(patched("/id", "has space")) == "id");
}

TEST_CASE("a light-cone speed at or below kappa is rejected with kappa in the message") {
  const Scenario sc = parse_scenario_text(patched("/checks/lightcone/v", 1.8));
  StructuralConstants k;
  k.kappa = 2.0;
  k.M = 2.0;
  k.moment_norms = {2.0, 2.0};
  try {
    validate_against_kernel(sc, k);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.path() == "checks.lightcone.v");
    CHECK(std::string(e.what()).find("kappa = 2") != std::string::npos);
  }
  RunOptions opt;
  opt.write = false;
  CHECK_THROWS_AS(run_scenario(sc, opt), ValidationError);
}

TEST_CASE("sweep expansion is a cartesian product with stable ids") {
  json j = json::parse(kSmall, nullptr, true, true);
  j["sweep"] = {{"grid", json::array({{{"path", "/potential/seed"}, {"values", {1, 2, 3}}},
                                      {{"path", "/potential/amplitude"}, {"values", {1.0, 4.0}}}})}};
  const Scenario sc = parse_scenario(j);
  const auto points = expand_sweep(sc);
  REQUIRE(points.size() == 6);
  CHECK(points[0]["id"] == "small-p000");
  CHECK(points[5]["id"] == "small-p005");
  CHECK_FALSE(points[0].contains("sweep"));
  CHECK(points[1]["potential"]["amplitude"] == 4.0);
  CHECK(points[2]["potential"]["seed"] == 2);
  j["sweep"]["max_points"] = 4;
  CHECK_THROWS_AS(parse_scenario(j), ValidationError);
  j["sweep"]["max_points"] = 10;
  j["sweep"]["grid"][0]["path"] = "potential.seed";
  CHECK_THROWS_AS(parse_scenario(j), ValidationError);
}

TEST_CASE("report JSON round trip, CSV layout and number formatting") {
  BoundReport r;
  r.scenario_id = "x";
  r.scenario_hash = "0123456789abcdef";
  CheckResult c;
  c.name = "lightcone";
  c.verdict = Verdict::below_floor;
  c.summary = "s";
  c.metrics["decay_exponent"] = INFINITY;
  c.metrics["C"] = 0.1;
  Series s;
  s.name = "P";
  s.x = {1.0, 2.0};
  s.threshold = {3.0, 6.0};
  s.value = {1e-3, 1e-20};
  s.floor = {false, true};
  c.series.push_back(s);
  r.checks.push_back(c);
  const BoundReport back = json(r).get<BoundReport>();
  REQUIRE(back.checks.size() == 1);
  CHECK(back.checks[0].verdict == Verdict::below_floor);
  CHECK(std::isinf(back.checks[0].metrics.at("decay_exponent")));
  CHECK(back.checks[0].series[0].floor[1]);
  CHECK_FALSE(r.any_failed());
  CHECK(r.find("lightcone") != nullptr);
  CHECK(r.find("dyadic") == nullptr);

  const std::string csv = series_csv(r);
  CHECK(csv.rfind("scenario,check,series,x_label,x,threshold,value,floor\n", 0) == 0);
  CHECK(csv.find("x,lightcone,P,t,1,3,0.001,0\n") != std::string::npos);

  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300})
    CHECK(std::stod(format_double(v)) == v);
  CHECK(parse_verdict("diagnostic-only") == Verdict::diagnostic_only);
  CHECK_THROWS_AS(parse_verdict("maybe"), ValidationError);
  const EmitSet e = parse_emit({"csv,json"});
  CHECK(e.csv);
  CHECK(e.json);
  CHECK_FALSE(e.svg);
  CHECK_THROWS_AS(parse_emit({"pdf"}), ValidationError);
  CHECK(render_svg(c, "t").find("<svg") != std::string::npos);
}

TEST_CASE("runs write a manifest whose checksums match the files") {
  RunOptions opt;
  opt.output_root = scratch("manifest");
  const RunResult res = run_scenario(parse_scenario_text(kSmall), opt);
  CHECK(exit_code(res.report) == 0);
  REQUIRE(fs::exists(res.directory / "manifest.json"));
  const json m = json::parse(slurp(res.directory / "manifest.json"));
  CHECK(m.at("scenario_hash") == res.report.scenario_hash);
  std::size_t files = 0;
  for (const auto& f : m.at("files")) {
    const std::string body = slurp(res.directory / f.at("path").get<std::string>());
    CHECK(f.at("bytes").get<std::size_t>() == body.size());
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    CHECK(f.at("fnv1a").get<std::string>() == hex);
    ++files;
  }
  CHECK(files >= 3);  // report.json, tails.csv and at least one plot
  fs::remove_all(opt.output_root);
}

TEST_CASE("identical configs give byte-identical CSV") {
  RunOptions a, b;
  a.output_root = scratch("det-a");
  b.output_root = scratch("det-b");
  const RunResult ra = run_scenario(parse_scenario_text(kSmall), a);
  const RunResult rb = run_scenario(parse_scenario_text(kSmall), b);
  CHECK(slurp(ra.directory / "tails.csv") == slurp(rb.directory / "tails.csv"));
  CHECK(slurp(ra.directory / "tails.csv").size() > 100);
  fs::remove_all(a.output_root);
  fs::remove_all(b.output_root);
}

TEST_CASE("sweeps are independent of the worker count") {
  json j = json::parse(kSmall, nullptr, true, true);
  j["sweep"] = {{"grid", json::array({{{"path", "/potential/seed"}, {"values", {0, 1, 2, 3, 4}}}})}};
  const Scenario sc = parse_scenario(j);
  RunOptions one, many;
  one.output_root = scratch("sweep-1");
  many.output_root = scratch("sweep-4");
  const SweepResult r1 = sweep(sc, one, 1);
  const SweepResult r4 = sweep(sc, many, 4);
  REQUIRE(r1.points.size() == 5);
  CHECK_FALSE(r1.any_failed());
  CHECK(slurp(r1.directory / "sweep.csv") == slurp(r4.directory / "sweep.csv"));
  CHECK(r1.aggregate == r4.aggregate);
  const json& C = r1.aggregate.at("checks").at("lightcone").at("metrics").at("fitted_C");
  CHECK(C.at("count") == 5);
  CHECK(C.at("min").get<double>() <= C.at("mean").get<double>());
  CHECK(C.at("mean").get<double>() <= C.at("max").get<double>());
  fs::remove_all(one.output_root);
  fs::remove_all(many.output_root);
}

TEST_CASE("a sweep point that fails validation is recorded, not fatal") {
  json j = json::parse(kSmall, nullptr, true, true);
  j["sweep"] = {{"grid", json::array({{{"path", "/checks/lightcone/v"}, {"values", {3, 1.5}}}})}};
  RunOptions opt;
  opt.output_root = scratch("sweep-bad");
  const SweepResult r = sweep(parse_scenario(j), opt, 2);
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].report.has_value());
  CHECK_FALSE(r.points[1].report.has_value());
  CHECK(r.points[1].error_kind == "validation");
  CHECK(r.any_failed());
  fs::remove_all(opt.output_root);
}

TEST_CASE("output root comes from the environment") {
  ::setenv(kOutputRootVariable, "/tmp/lcone-env-root", 1);
  CHECK(output_root_from_env() == fs::path("/tmp/lcone-env-root"));
  ::setenv(kOutputRootVariable, "", 1);
  CHECK(output_root_from_env("fallback") == fs::path("fallback"));
  ::unsetenv(kOutputRootVariable);
}
