#include "lcone/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcone/error.hpp"

namespace lcone {

LatticeKernel::LatticeKernel(BoxGeometry geometry, SparseKernel matrix, bool hermitian)
    : geometry_(geometry), matrix_(std::move(matrix)), hermitian_(hermitian) {
  const auto n = static_cast<Eigen::Index>(geometry_.site_count());
  if (matrix_.rows() != n || matrix_.cols() != n)
    throw ValidationError("kernel", "matrix shape does not match the box");
  matrix_.makeCompressed();
}

LatticeKernel LatticeKernel::from_entries(BoxGeometry geometry, std::span<const Entry> entries,
                                          bool hermitian, double floor) {
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(entries.size());
  for (const auto& e : entries) {
    if (std::abs(e.value) < floor) continue;
    triplets.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
  }
  const auto n = static_cast<Eigen::Index>(geometry.site_count());
  SparseKernel m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return LatticeKernel(geometry, std::move(m), hermitian);
}

LatticeKernel LatticeKernel::zero(BoxGeometry geometry) {
  const auto n = static_cast<Eigen::Index>(geometry.site_count());
  return LatticeKernel(geometry, SparseKernel(n, n), true);
}

cplx LatticeKernel::entry(std::size_t row, std::size_t col) const {
  return matrix_.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
}

double LatticeKernel::hermiticity_defect() const {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r)
    for (SparseKernel::InnerIterator it(matrix_, r); it; ++it)
      worst = std::max(worst, std::abs(it.value() - std::conj(matrix_.coeff(it.col(), it.row()))));
  return worst;
}

double LatticeKernel::range() const {
  double r = 0.0;
  for (Eigen::Index row = 0; row < matrix_.outerSize(); ++row)
    for (SparseKernel::InnerIterator it(matrix_, row); it; ++it)
      if (it.col() != row)
        r = std::max(r, geometry_.distance(static_cast<std::size_t>(row),
                                           static_cast<std::size_t>(it.col())));
  return r;
}

double LatticeKernel::max_row_sum() const {
  double best = 0.0;
  for (Eigen::Index row = 0; row < matrix_.outerSize(); ++row) {
    double s = 0.0;
    for (SparseKernel::InnerIterator it(matrix_, row); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

const char* family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::laplacian: return "laplacian";
    case KernelFamily::powerlaw: return "powerlaw";
    case KernelFamily::exponential: return "exponential";
  }
  return "laplacian";
}

// Amplitudes decrease with distance, so only offsets within `reach` (in every
// coordinate) can clear the floor.
template <class Amplitude>
LatticeKernel build_all_pairs(const BoxGeometry& g, Amplitude amplitude, double reach, double floor) {
  const int d = g.dimension();
  const int k = static_cast<int>(std::min<double>(std::floor(reach), g.side() - 1));
  std::vector<std::pair<Coord, double>> offsets;
  Coord o;
  for (int i = 0; i < d; ++i) o[i] = -k;
  for (;;) {
    const double a = amplitude(g.length(o));
    if (!(o == Coord{}) && std::abs(a) >= floor) offsets.emplace_back(o, a);
    int i = 0;
    while (i < d && o[i] == k) o[i++] = -k;
    if (i == d) break;
    ++o[i];
  }
  const std::size_t n = g.site_count();
  std::vector<LatticeKernel::Entry> entries;
  entries.reserve(n * offsets.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Coord xi = g.coord(i);
    for (const auto& [off, a] : offsets) {
      Coord y = xi;
      for (int c = 0; c < d; ++c) y[c] += off[c];
      if (const auto j = g.index(y)) entries.push_back({i, *j, cplx(a, 0.0)});
    }
  }
  return LatticeKernel::from_entries(g, entries, true, floor);
}

}  // namespace

void to_json(nlohmann::json& j, const KernelDescriptor& d) {
  j = nlohmann::json{{"family", family_name(d.family)}, {"floor", d.floor}};
  if (d.family == KernelFamily::powerlaw) {
    j["exponent"] = d.exponent;
    j["coupling"] = d.coupling;
  } else if (d.family == KernelFamily::exponential) {
    j["rate"] = d.rate;
    j["prefactor"] = d.prefactor;
  }
}

void from_json(const nlohmann::json& j, KernelDescriptor& d) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "laplacian") {
    d.family = KernelFamily::laplacian;
  } else if (family == "powerlaw") {
    d.family = KernelFamily::powerlaw;
    d.exponent = j.at("exponent").get<double>();
    d.coupling = j.value("coupling", 1.0);
  } else if (family == "exponential") {
    d.family = KernelFamily::exponential;
    d.rate = j.at("rate").get<double>();
    d.prefactor = j.value("prefactor", 1.0);
  } else {
    throw ValidationError("kernel.family", "unknown kernel family '" + family + "'");
  }
  d.floor = j.value("floor", kKernelFloor);
}

LatticeKernel build_laplacian(const BoxGeometry& g) {
  const std::size_t n = g.site_count();
  std::vector<LatticeKernel::Entry> entries;
  entries.reserve(n * 2 * static_cast<std::size_t>(g.dimension()));
  for (std::size_t i = 0; i < n; ++i) {
    const Coord x = g.coord(i);
    for (int axis = 0; axis < g.dimension(); ++axis) {
      for (int step : {-1, 1}) {
        Coord y = x;
        y[axis] += step;
        if (auto j = g.index(y)) entries.push_back({i, *j, cplx(1.0, 0.0)});
      }
    }
  }
  return LatticeKernel::from_entries(g, entries, true);
}

LatticeKernel build_powerlaw_kernel(const BoxGeometry& g, double exponent, double coupling,
                                    double floor) {
  if (!(exponent > g.dimension()))
    throw ValidationError("kernel.exponent",
                          "power-law kernel is not summable: need p > d = " +
                              std::to_string(g.dimension()));
  return build_all_pairs(
      g, [=](double r) { return coupling * std::pow(r, -exponent); },
      std::pow(std::abs(coupling) / floor, 1.0 / exponent), floor);
}

LatticeKernel build_exponential_kernel(const BoxGeometry& g, double rate, double prefactor,
                                       double floor) {
  if (!(rate > 0.0)) throw ValidationError("kernel.rate", "decay rate must be positive");
  return build_all_pairs(
      g, [=](double r) { return prefactor * std::exp(-rate * r); },
      std::max(0.0, std::log(std::abs(prefactor) / floor) / rate), floor);
}

double kernel_reach(const KernelDescriptor& d) {
  switch (d.family) {
    case KernelFamily::laplacian: return 1.0;
    case KernelFamily::powerlaw: return std::pow(std::abs(d.coupling) / d.floor, 1.0 / d.exponent);
    case KernelFamily::exponential: return std::max(0.0, std::log(std::abs(d.prefactor) / d.floor) / d.rate);
  }
  return 1.0;
}

LatticeKernel build_kernel(const BoxGeometry& g, const KernelDescriptor& d) {
  switch (d.family) {
    case KernelFamily::laplacian: return build_laplacian(g);
    case KernelFamily::powerlaw: return build_powerlaw_kernel(g, d.exponent, d.coupling, d.floor);
    case KernelFamily::exponential:
      return build_exponential_kernel(g, d.rate, d.prefactor, d.floor);
  }
  return build_laplacian(g);
}

// ---------------------------------------------------------------------------

DistanceField distance_field(const BoxGeometry& g, const DistanceSource& source) {
  std::vector<Coord> sites;
  if (const auto* ball = std::get_if<BallSource>(&source)) {
    if (!(ball->radius >= 0.0)) throw ValidationError("source.radius", "must be nonnegative");
    for (std::size_t i = 0; i < g.site_count(); ++i) {
      const Coord y = g.coord(i);
      if (g.length(y) <= ball->radius) sites.push_back(y);
    }
  } else {
    sites = std::get<SiteSetSource>(source).sites;
    for (const auto& y : sites)
      if (!g.contains(y)) throw ValidationError("source.sites", "source site outside the box");
  }
  if (sites.empty()) throw ValidationError("source", "distance source set is empty");

  DistanceField field{g, std::vector<double>(g.site_count()), source};
  for (std::size_t i = 0; i < g.site_count(); ++i) {
    const Coord x = g.coord(i);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : sites) best = std::min(best, g.distance(x, y));
    field.values[i] = best;
  }
  return field;
}

LatticeKernel multi_commutator(const LatticeKernel& kernel, std::span<const double> phi, int k) {
  if (k < 1) throw ValidationError("k", "commutator order must be at least 1");
  if (phi.size() != kernel.size())
    throw ValidationError("phi", "distance field does not match the kernel's box");
  SparseKernel m = kernel.matrix();
  for (Eigen::Index row = 0; row < m.outerSize(); ++row)
    for (SparseKernel::InnerIterator it(m, row); it; ++it) {
      const double diff =
          phi[static_cast<std::size_t>(it.col())] - phi[static_cast<std::size_t>(row)];
      it.valueRef() *= std::pow(diff, k);
    }
  m.prune(cplx(0.0, 0.0));
  // (phi(y)-phi(x))^k is symmetric for even k, antisymmetric for odd k.
  return LatticeKernel(kernel.geometry(), std::move(m), kernel.hermitian() && k % 2 == 0);
}

double moment_norm(const LatticeKernel& kernel, double k) {
  const auto& g = kernel.geometry();
  const auto& m = kernel.matrix();
  double best = 0.0;
  for (Eigen::Index row = 0; row < m.outerSize(); ++row) {
    const Coord x = g.coord(static_cast<std::size_t>(row));
    double s = 0.0;
    for (SparseKernel::InnerIterator it(m, row); it; ++it) {
      if (it.col() == row) continue;
      s += std::abs(it.value()) * std::pow(g.distance(x, g.coord(static_cast<std::size_t>(it.col()))), k);
    }
    best = std::max(best, s);
  }
  return best;
}

StructuralConstants structural_constants(const LatticeKernel& kernel, int order) {
  if (order < 1) throw ValidationError("order", "must be at least 1");
  StructuralConstants c;
  c.order = order;
  for (int k = 1; k <= order + 1; ++k) c.moment_norms.push_back(moment_norm(kernel, k));
  c.kappa = c.moment_norms.front();
  c.M = c.moment_norms.back();
  return c;
}

}  // namespace lcone
