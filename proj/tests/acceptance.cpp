// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
//
// Scenario-driven criteria read the configs under scenarios/; the rest build
// their inputs here and compare against the dense oracles.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lcone/cutoffs.hpp"
#include "lcone/error.hpp"
#include "lcone/linalg.hpp"
#include "lcone/observables.hpp"
#include "lcone/runner.hpp"
#include "lcone/scenario.hpp"
#include "oracles.hpp"

using namespace lcone;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string f(const char* fmt, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kScenarios = LCONE_SCENARIO_DIR;

struct CorpusRun {
  BoundReport report;
  double drift = 0.0;
  double rs_violation = 0.0;
  double horizon = 0.0;
  bool has_trajectory = false;
};

// Every config and every sweep point, run once with all checks.
std::map<std::string, CorpusRun> run_corpus() {
  std::vector<Scenario> all;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(kScenarios))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    const Scenario sc = load_scenario(p);
    if (sc.sweep && !sc.sweep->axes.empty()) {
      for (const auto& pt : expand_sweep(sc)) all.push_back(parse_scenario(pt));
    } else {
      all.push_back(sc);
    }
  }
  std::map<std::string, CorpusRun> out;
  RunOptions opt;
  opt.write = false;
  for (const auto& sc : all) {
    CorpusRun c;
    RunResult r = run_scenario(sc, opt);
    c.report = r.report;
    c.horizon = sc.horizon;
    if (r.trajectory) {
      c.has_trajectory = true;
      c.drift = r.trajectory->max_norm_drift();
      c.rs_violation = radin_simon_check(*r.trajectory, r.report.run.at("kappa").get<double>()).max_violation;
    }
    out.emplace(sc.id, std::move(c));
  }
  return out;
}

bool check_passes(const CorpusRun& r, const std::string& name) {
  const CheckResult* c = r.report.find(name);
  return c && c->verdict == Verdict::pass;
}

double metric(const CorpusRun& r, const std::string& check, const std::string& key) {
  const CheckResult* c = r.report.find(check);
  if (!c || !c->metrics.count(key)) return NAN;
  return c->metrics.at(key);
}

void criterion_1() {
  const BoxGeometry g(1, 128);
  const LatticeKernel H0 = build_laplacian(g);
  const WaveState u0 = delta_state(g);
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(0.5 * i);
  const auto t0 = std::chrono::steady_clock::now();
  const Trajectory tr = evolve(H0, PotentialSchedule::zero(), u0, 10.0, times);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const oracle::Mat H = oracle::dense(H0);
  double err = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i)
    err = std::max(err, (tr.states[i] - oracle::propagate(H, tr.times[i], u0.amplitudes)).cwiseAbs().maxCoeff());
  verdict(1, "free-propagator oracle", err <= 1e-8 && secs <= 60.0,
          "max abs error " + f("%.2e", err) + " (limit 1e-8), evolve " + f("%.2f", secs) + " s");
}

void criterion_2(const std::map<std::string, CorpusRun>& corpus) {
  double worst = 0.0;
  std::string where;
  int runs = 0;
  bool horizons = true;
  for (const auto& [id, r] : corpus) {
    if (!r.has_trajectory) continue;
    ++runs;
    horizons = horizons && r.horizon <= 20.0;
    if (r.drift >= worst) {
      worst = r.drift;
      where = id;
    }
  }
  verdict(2, "unitarity", worst <= 1e-9 && horizons && runs > 0,
          "max | ||u_t|| - 1 | = " + f("%.2e", worst) + " over " + std::to_string(runs) + " runs (" + where + ")");
}

void criterion_3() {
  bool ok = true;
  std::string detail;
  for (int d = 1; d <= 3; ++d) {
    const BoxGeometry g(d, 4);
    const LatticeKernel H = build_laplacian(g);
    const StructuralConstants c = structural_constants(H, 3);
    const oracle::Mat D = oracle::dense(H);
    ok = ok && c.kappa == 2.0 * d;
    for (int k = 1; k <= 4; ++k) ok = ok && c.moment(k) == 2.0 * d && oracle::moment_sum(D, g, k) == 2.0 * d;
    detail += "d=" + std::to_string(d) + ": kappa " + f("%g", c.kappa) + ", M_4 " + f("%g", c.moment(4)) + "; ";
  }
  verdict(3, "structural constants", ok, detail);
}

void criterion_4() {
  double worst = 0.0;
  int cases = 0;
  for (int d = 1; d <= 3; ++d) {
    const BoxGeometry g(d, 5);  // 11^d sites
    Coord a, b;
    a[0] = 2;
    b[d - 1] = -3;
    const std::vector<DistanceField> fields{distance_field(g, BallSource{0.0}), distance_field(g, BallSource{1.5}),
                                            distance_field(g, SiteSetSource{{a, b}})};
    const std::vector<LatticeKernel> kernels{build_laplacian(g), build_powerlaw_kernel(g, 4.0, 1.0),
                                             build_exponential_kernel(g, 1.0, 1.0)};
    for (const auto& H : kernels) {
      const oracle::Mat D = oracle::dense(H);
      for (const auto& phi : fields)
        for (int k = 1; k <= 4; ++k) {
          const oracle::Mat ref = oracle::nested_commutator(D, phi.values, k);
          worst = std::max(worst, (ref - oracle::dense(multi_commutator(H, phi, k))).cwiseAbs().maxCoeff());
          ++cases;
        }
    }
  }
  verdict(4, "commutator kernel", worst <= 1e-12,
          "max entrywise difference " + f("%.2e", worst) + " over " + std::to_string(cases) + " cases");
}

void criterion_5() {
  int instances = 0, violations = 0;
  double worst = -INFINITY;
  auto test = [&](const LatticeKernel& H, const DistanceField& phi) {
    const StructuralConstants c = structural_constants(H, 3);
    for (int k = 1; k <= 4; ++k) {
      const LatticeKernel A = multi_commutator(H, phi, k);
      const double n = std::max(operator_norm(A), oracle::spectral_norm(oracle::dense(A)));
      const double excess = n - c.moment(k);
      worst = std::max(worst, excess);
      if (excess > 1e-10) ++violations;
      if (k == 4 && n - c.M > 1e-10) ++violations;
    }
    ++instances;
  };
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int d = 1 + static_cast<int>(seed % 2);
    const BoxGeometry g(d, d == 1 ? 12 : 4);
    const LatticeKernel H = oracle::random_kernel(g, 1 + static_cast<int>(seed % 3), 1000 + seed);
    test(H, distance_field(g, BallSource{0.5 * static_cast<double>(seed % 5)}));
  }
  for (int d = 1; d <= 2; ++d) {
    const BoxGeometry g(d, d == 1 ? 12 : 4);
    for (const auto& H : {build_laplacian(g), build_powerlaw_kernel(g, 4.0, 1.0), build_exponential_kernel(g, 1.0, 1.0)})
      for (double R : {0.0, 2.0}) test(H, distance_field(g, BallSource{R}));
  }
  verdict(5, "commutator norm bound", violations == 0,
          std::to_string(violations) + " violations over " + std::to_string(instances) +
              " kernels, k <= 4; max(||ad^k|| - M_k) = " + f("%.2e", worst));
}

void criterion_6(const std::map<std::string, CorpusRun>& corpus) {
  const CorpusRun& r = corpus.at("expansion-laplacian");
  const CheckResult* e = r.report.find("expansion");
  const CheckResult* gap = r.report.find("expansion_leading_gap");
  const bool ok = e && gap && e->verdict == Verdict::pass && gap->verdict == Verdict::pass;
  verdict(6, "expansion residual order", ok,
          (e ? e->summary : std::string("missing")) + "; " + (gap ? gap->summary : std::string("missing")));
}

void criterion_7(const std::map<std::string, CorpusRun>& corpus) {
  const double C_free = metric(corpus.at("free-lightcone"), "lightcone", "fitted_C");
  double worst_tail = 0.0, min_exp = INFINITY, max_C = 0.0;
  int seeds = 0;
  for (const auto& [id, r] : corpus) {
    if (id.rfind("random-lightcone-p", 0) != 0) continue;
    ++seeds;
    worst_tail = std::max(worst_tail, metric(r, "lightcone", "max_tail"));
    min_exp = std::min(min_exp, metric(r, "lightcone", "decay_exponent"));
    max_C = std::max(max_C, metric(r, "lightcone", "fitted_C"));
  }
  const bool ok = seeds == 10 && worst_tail <= 1e-6 && min_exp >= 4.0 && max_C <= 3.0 * C_free;
  verdict(7, "light cone, random V", ok,
          "max P(3t, t) on [5, 15] = " + f("%.2e", worst_tail) + " (limit 1e-6); min exponent " + f("%.2f", min_exp) +
              "; max C / free C = " + f("%.3f", max_C / C_free) + " over " + std::to_string(seeds) + " seeds");
}

void criterion_8(const std::map<std::string, CorpusRun>& corpus) {
  double worst = -INFINITY;
  int runs = 0;
  for (const auto& [id, r] : corpus) {
    if (!r.has_trajectory) continue;
    ++runs;
    worst = std::max(worst, r.rs_violation);
  }
  verdict(8, "Radin-Simon", worst <= 1e-6,
          "max (|| |x| u_t || - || |x| u_0 || - kappa t) = " + f("%.2e", worst) + " over " + std::to_string(runs) + " runs");
}

void criterion_9() {
  const BumpFunction w = make_bump(1.0, 3);
  const SmoothedStep chi = make_step(w, true);
  double sandwich = -INFINITY, support = 0.0, plateau = 0.0;
  int evaluations = 0;
  for (int d = 1; d <= 2; ++d)
    for (double R : {0.0, 2.0}) {
      const BoxGeometry g(d, d == 1 ? 200 : 40);
      const DistanceField phi = distance_field(g, BallSource{R});
      for (double alpha : {0.75, 1.0})
        for (double v_bar : {1.5, 2.5, 3.0})
          for (double v : {2.0, 3.0, 4.0, 6.0}) {
            if (v <= v_bar) continue;
            for (double t : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
              AstloParams p;
              p.v = v;
              p.v_bar = v_bar;
              p.alpha = alpha;
              p.reference_time = 0.25;
              sandwich = std::max(sandwich, sandwich_check(chi, phi.values, p, t).max_violation);
              if (t > 0.0) {
                const WindowReport r = window_check(w, phi.values, p, t);
                support = std::max(support, r.support_violation);
                plateau = std::max(plateau, r.plateau_violation);
              }
              ++evaluations;
            }
          }
    }
  verdict(9, "ASTLO sandwich and window", sandwich <= 1e-12 && support <= 1e-12 && plateau <= 1e-12,
          "max sandwich violation " + f("%.2e", sandwich) + ", window support " + f("%.2e", support) + ", plateau " +
              f("%.2e", plateau) + " over " + std::to_string(evaluations) + " fields");
}

void criterion_10(const std::map<std::string, CorpusRun>& corpus) {
  double worst = -INFINITY;
  int runs = 0;
  bool ok = true;
  for (const auto& [id, r] : corpus) {
    if (id != "free-lightcone" && id.rfind("random-lightcone-p", 0) != 0) continue;
    ++runs;
    ok = ok && check_passes(r, "monotonicity");
    worst = std::max(worst, metric(r, "monotonicity", "max_residual"));
  }
  verdict(10, "ASTLO monotonicity", ok && runs == 11,
          "max_{t >= 5} <A(t)>_t - <A(0)>_0 = " + f("%.2e", worst) + " over " + std::to_string(runs) + " runs");
}

void criterion_11(const std::map<std::string, CorpusRun>& corpus) {
  const CorpusRun& r = corpus.at("nls-cubic");
  const bool ok = check_passes(r, "lightcone") && check_passes(r, "nls_replay");
  verdict(11, "NLS light cone and replay", ok,
          "max P(3t, t) on [5, 15] = " + f("%.2e", metric(r, "lightcone", "max_tail")) +
              " (limit 1e-6); replay deviation " + f("%.2e", metric(r, "nls_replay", "max_deviation")) + " (limit 1e-8)");
}

void criterion_12(const std::map<std::string, CorpusRun>& corpus) {
  const CorpusRun& r = corpus.at("heavy-tail");
  const CheckResult* c = r.report.find("dyadic");
  verdict(12, "dyadic moment bound", check_passes(r, "dyadic"), c ? c->summary : "missing");
}

void criterion_13(const std::map<std::string, CorpusRun>& corpus) {
  const CorpusRun& r = corpus.at("dunford-laplacian");
  const CheckResult* c = r.report.find("dunford");
  verdict(13, "Dunford reconstruction", check_passes(r, "dunford"), c ? c->summary : "missing");
}

void criterion_14(const std::map<std::string, CorpusRun>& corpus) {
  const CorpusRun& e = corpus.at("spectral-exponential");
  const CorpusRun& p = corpus.at("spectral-powerlaw");
  const bool ok = check_passes(e, "combes_thomas") && check_passes(p, "combes_thomas");
  verdict(14, "Combes-Thomas", ok,
          "exponential kernel R^2 " + f("%.4f", metric(e, "combes_thomas", "r_squared")) + "; power law log R^2 " +
              f("%.4f", metric(p, "combes_thomas", "r_squared")) + ", gap " +
              f("%.4f", metric(p, "combes_thomas", "r_squared_gap")));
}

void criterion_15() {
  const fs::path root = fs::temp_directory_path() / "lcone-acceptance";
  fs::remove_all(root);
  RunOptions a, b;
  a.output_root = root / "a";
  b.output_root = root / "b";
  const Scenario single = load_scenario(kScenarios / "free_lightcone.json");
  const RunResult ra = run_scenario(single, a);
  const RunResult rb = run_scenario(single, b);
  const bool tails = slurp(ra.directory / "tails.csv") == slurp(rb.directory / "tails.csv");
  const Scenario grid = load_scenario(kScenarios / "random_lightcone_sweep.json");
  const SweepResult sa = sweep(grid, a, 1);
  const SweepResult sb = sweep(grid, b, 4);
  bool sweeps = slurp(sa.directory / "sweep.csv") == slurp(sb.directory / "sweep.csv");
  for (const auto& pt : sa.points) {
    const fs::path rel = fs::relative(sa.directory / pt.id / "tails.csv", a.output_root);
    sweeps = sweeps && slurp(a.output_root / rel) == slurp(b.output_root / rel);
  }
  fs::remove_all(root);
  verdict(15, "determinism", tails && sweeps,
          std::string("tails.csv ") + (tails ? "identical" : "differs") + "; sweep CSVs at 1 and 4 workers " +
              (sweeps ? "identical" : "differ"));
}

}  // namespace

int main() {
  try {
    criterion_1();
    const auto corpus = run_corpus();
    criterion_2(corpus);
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6(corpus);
    criterion_7(corpus);
    criterion_8(corpus);
    criterion_9();
    criterion_10(corpus);
    criterion_11(corpus);
    criterion_12(corpus);
    criterion_13(corpus);
    criterion_14(corpus);
    criterion_15();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 15 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
