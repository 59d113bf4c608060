#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcone/dynamics.hpp"
#include "lcone/kernel.hpp"
#include "lcone/observables.hpp"
#include "lcone/potential.hpp"
#include "lcone/spectral.hpp"

namespace lcone {

enum class InitialKind { delta, gaussian, power_tail, explicit_amplitudes };

struct InitialStateSpec {
  InitialKind kind = InitialKind::delta;
  Coord site{};            // delta site, gaussian center
  double width = 1.0;      // gaussian
  double momentum = 0.0;   // gaussian
  double exponent = 3.0;   // power_tail
  double radius = 0.0;     // power_tail
  std::vector<cplx> amplitudes;  // explicit, one per site

  WaveState build(const BoxGeometry& g) const;
};

struct UnitarityCheck {
  double tolerance = 1e-9;
};

struct LightconeCheck {
  LightconeOptions options;  // kappa is filled in from the kernel at run time
};

struct RadinSimonCheck {
  double tolerance = 1e-6;
};

struct MonotonicityCheck {
  double v = 4.0;
  double v_bar = 3.0;
  double epsilon = 1.0;
  double R = 0.0;
  double reference_time = 0.25;
  double t_min = 5.0;
  double tolerance = 1e-6;
};

struct FrontCheck {
  double R = 0.0;
  double v = 3.0;
  double delta = 0.5;
  double alpha = 1.0;
  double epsilon = 1.0;
};

struct TransportCheck {
  std::vector<double> alphas{0.6, 0.75, 0.9, 1.0};
  double from = 3.0;
  double to = 12.0;
  double cap = 2.0;
};

struct DyadicCheck {
  double r = 2.0;
  double r0 = 3.0;
  double v = 3.0;
  double t_min = 1.0;
  double t_short = 15.0;
  double t_long = 20.0;
  double partition_tolerance = 1e-12;
};

struct NlsReplayCheck {
  int substeps = 1;
  double tolerance = 1e-8;
};

struct CombesThomasCheck {
  double offset = 1.5;  // z = ||H|| + offset on the real axis
  int max_separation = 40;
  DecayModel expect = DecayModel::exponential;
  double min_r_squared = 0.99;
  double min_gap = 0.0;  // R^2(expected) - R^2(other model)
};

struct PropagatorBoundCheck {
  std::vector<double> times{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  int max_separation = 40;
  DecayModel model = DecayModel::exponential;
};

struct DunfordCheck {
  std::vector<double> times{0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
  int nodes_per_side = 512;
  double tolerance = 1e-6;
  double min_reduction = 4.0;  // error(m/2) / error(m)
  int max_separation = 30;     // compared over |y| <= this
};

struct ExpansionCheck {
  double epsilon = 16.0;
  int half_width = 0;  // 0: 64 eps + 20
  std::vector<double> sigmas{4, 8, 16, 32, 64};
  std::vector<int> orders{1, 2, 3};
  double slope_tolerance = 0.15;
  bool leading_gap = true;
  double gap_slope = -2.0;
  double gap_slope_tolerance = 0.2;
  /// Keeps sites off the grid points where the cutoff switches on.
  double shift_offset = 0.37;

  int box_half_width() const;
  /// Centres the transition region phi in shift + sigma (0, eps) in the box.
  double shift(double sigma) const;
};

struct Checks {
  std::optional<UnitarityCheck> unitarity;
  std::optional<LightconeCheck> lightcone;
  std::optional<RadinSimonCheck> radin_simon;
  std::optional<MonotonicityCheck> monotonicity;
  std::optional<FrontCheck> front;
  std::optional<TransportCheck> transport;
  std::optional<DyadicCheck> dyadic;
  std::optional<NlsReplayCheck> nls_replay;
  std::optional<CombesThomasCheck> combes_thomas;
  std::optional<PropagatorBoundCheck> propagator_bound;
  std::optional<DunfordCheck> dunford;
  std::optional<ExpansionCheck> expansion;

  bool needs_trajectory() const;
  bool needs_static_hamiltonian() const;
};

/// One axis of a sweep grid: a JSON pointer into the config and its values.
struct SweepAxis {
  std::string path;
  std::vector<nlohmann::json> values;
};

struct SweepSpec {
  std::vector<SweepAxis> axes;
  std::size_t max_points = 256;
};

struct Scenario {
  std::string id;
  int dimension = 1;
  int half_width = 0;  // 0: chosen by preflight
  Norm norm = Norm::euclidean;
  KernelDescriptor kernel;
  PotentialSchedule potential;
  NonlinearSpec nonlinearity;
  InitialStateSpec initial;
  double horizon = 10.0;
  double output_step = 0.25;
  IntegratorSettings integrator;
  Checks checks;
  std::string output_directory;  // relative to the output root; defaults to id
  bool write_trajectory = false;
  std::optional<SweepSpec> sweep;

  /// Source document after comment stripping, kept for sweeps.
  nlohmann::json source;

  std::vector<double> output_times() const;
};

/// Parses and validates a config document (comments allowed). Throws
/// ValidationError naming the offending field.
Scenario parse_scenario(const nlohmann::json& document);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Fully defaulted canonical form; parse_scenario(canonical(s)) == s.
nlohmann::json canonical(const Scenario& scenario);

/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a(std::string_view bytes);
/// FNV-1a of the canonical dump, as 16 hex digits.
std::string scenario_hash(const Scenario& scenario);

/// Checks that depend on structural constants of the built kernel, e.g. the
/// light-cone speed against kappa. Throws ValidationError.
void validate_against_kernel(const Scenario& scenario, const StructuralConstants& constants);

/// Grid points of a sweep, each a patched copy of the source document.
std::vector<nlohmann::json> expand_sweep(const Scenario& scenario);

}  // namespace lcone
