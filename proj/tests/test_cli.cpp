#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "lcone-cli-test";

fs::path config(const std::string& name, const std::string& body) {
  fs::create_directories(kRoot);
  const fs::path p = kRoot / (name + ".json");
  std::ofstream(p) << body;
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(LCONE_CLI) + " -q --out " + (kRoot / "out").string() + " " + args +
                          " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string base(const std::string& checks, const std::string& geometry = R"("half_width": "auto")") {
  return R"({"id": "cli", "geometry": {"dimension": 1, )" + geometry +
         R"(}, "kernel": {"family": "laplacian"}, "time": {"horizon": 3, "output_step": 0.5}, "checks": {)" +
         checks + "}}";
}

}  // namespace

TEST_CASE("exit codes") {
  fs::remove_all(kRoot);
  CHECK(run("bounds " + config("pass", base(R"("radin_simon": {})")).string()) == 0);
  CHECK(run("bounds " + config("fail", base(R"("unitarity": {"tolerance": 1e-300})")).string()) == 2);
  CHECK(run("bounds " + config("invalid", base(R"("lightcone": {"v": 1.5, "fit_from": 1, "fit_to": 3, "check_from": 1, "check_to": 3})")).string()) == 3);
  CHECK(run("bounds " + config("syntax", "{ nope").string()) == 3);
  CHECK(run("simulate " + config("small-box", base("", R"("half_width": 4)")).string()) == 4);
  CHECK(run("sweep " + config("no-sweep", base("")).string()) == 3);
}

TEST_CASE("simulate writes the trajectory; report re-reads the verdicts") {
  fs::remove_all(kRoot);
  const fs::path cfg = config("sim", base(R"("radin_simon": {})"));
  REQUIRE(run("simulate " + cfg.string()) == 0);
  CHECK(fs::exists(kRoot / "out" / "cli" / "trajectory.bin"));
  CHECK(fs::exists(kRoot / "out" / "cli" / "trajectory.json"));
  CHECK(run("report " + (kRoot / "out" / "cli").string()) == 0);

  fs::remove_all(kRoot / "out");
  REQUIRE(run("--emit csv bounds " + cfg.string()) == 0);
  CHECK(fs::exists(kRoot / "out" / "cli" / "tails.csv"));
  CHECK_FALSE(fs::exists(kRoot / "out" / "cli" / "report.json"));
  fs::remove_all(kRoot);
}

TEST_CASE("spectral and expansion subcommands run only their checks") {
  fs::remove_all(kRoot);
  const std::string body = R"({"id": "cli", "geometry": {"dimension": 1, "half_width": 24},
    "kernel": {"family": "exponential", "rate": 1},
    "checks": {"combes_thomas": {"max_separation": 20}}})";
  CHECK(run("spectral " + config("ct", body).string()) == 0);
  CHECK(fs::exists(kRoot / "out" / "cli" / "report.json"));
  fs::remove_all(kRoot);
}
