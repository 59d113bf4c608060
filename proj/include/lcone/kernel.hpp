#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "lcone/geometry.hpp"

namespace lcone {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using SparseKernel = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Entries with modulus below this are dropped when a kernel is built.
inline constexpr double kKernelFloor = 1e-14;

/// Hopping amplitudes H(x, y) restricted (hard-truncated) to a finite box.
///
/// Stored row-major so that row sums and matrix-vector products stream.
/// Kernels produced by the builders are Hermitian; commutators with a
/// distance field generally are not, and carry `hermitian() == false`.
class LatticeKernel {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    cplx value;
  };

  LatticeKernel(BoxGeometry geometry, SparseKernel matrix, bool hermitian);
  static LatticeKernel from_entries(BoxGeometry geometry, std::span<const Entry> entries,
                                    bool hermitian, double floor = kKernelFloor);
  static LatticeKernel zero(BoxGeometry geometry);

  const BoxGeometry& geometry() const noexcept { return geometry_; }
  const SparseKernel& matrix() const noexcept { return matrix_; }
  std::size_t size() const noexcept { return geometry_.site_count(); }
  std::size_t nonzeros() const { return static_cast<std::size_t>(matrix_.nonZeros()); }
  bool hermitian() const noexcept { return hermitian_; }

  cplx entry(std::size_t row, std::size_t col) const;
  CVector apply(const CVector& u) const { return matrix_ * u; }
  CMatrix dense() const { return CMatrix(matrix_); }

  /// Largest |H(x,y) - conj(H(y,x))| over stored pairs.
  double hermiticity_defect() const;
  /// Largest |x - y| over stored off-diagonal entries; 0 for diagonal kernels.
  double range() const;
  /// max_x sum_y |H(x,y)|, the Schur bound on the operator norm.
  double max_row_sum() const;

 private:
  BoxGeometry geometry_;
  SparseKernel matrix_;
  bool hermitian_;
};

enum class KernelFamily { laplacian, powerlaw, exponential };

/// Reproducible description of a kernel: family, parameters, truncation floor.
struct KernelDescriptor {
  KernelFamily family = KernelFamily::laplacian;
  double exponent = 0.0;   // powerlaw p
  double coupling = 1.0;   // powerlaw J
  double rate = 1.0;       // exponential m
  double prefactor = 1.0;  // exponential B
  double floor = kKernelFloor;
};

void to_json(nlohmann::json& j, const KernelDescriptor& d);
void from_json(const nlohmann::json& j, KernelDescriptor& d);

LatticeKernel build_laplacian(const BoxGeometry& geometry);
/// J |x-y|^{-p} off the diagonal. Throws ValidationError unless p > d.
LatticeKernel build_powerlaw_kernel(const BoxGeometry& geometry, double exponent, double coupling,
                                    double floor = kKernelFloor);
/// B exp(-m |x-y|) off the diagonal. Throws ValidationError unless m > 0.
LatticeKernel build_exponential_kernel(const BoxGeometry& geometry, double rate, double prefactor,
                                       double floor = kKernelFloor);
LatticeKernel build_kernel(const BoxGeometry& geometry, const KernelDescriptor& descriptor);

/// Largest separation whose hopping amplitude clears the descriptor's floor.
double kernel_reach(const KernelDescriptor& descriptor);

// ---------------------------------------------------------------------------
// Distance fields

struct BallSource {
  double radius = 0.0;
};
struct SiteSetSource {
  std::vector<Coord> sites;
};
using DistanceSource = std::variant<BallSource, SiteSetSource>;

/// phi(x) = min over source sites y of |x - y|, evaluated exactly by
/// exhaustive minimisation. The lattice ball B_a is {x : |x| <= a}.
struct DistanceField {
  BoxGeometry geometry;
  std::vector<double> values;
  DistanceSource source;

  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

/// Norm used for the distance is the geometry's norm. Throws ValidationError
/// for an empty source set or source sites outside the box.
DistanceField distance_field(const BoxGeometry& geometry, const DistanceSource& source);

/// Kernel of ad^k_phi(H0): (phi(y) - phi(x))^k H0(x, y).
LatticeKernel multi_commutator(const LatticeKernel& kernel, std::span<const double> phi, int k);
inline LatticeKernel multi_commutator(const LatticeKernel& kernel, const DistanceField& phi, int k) {
  return multi_commutator(kernel, std::span<const double>(phi.values), k);
}

// ---------------------------------------------------------------------------
// Structural constants

struct StructuralConstants {
  double kappa = 0.0;
  double M = 0.0;
  /// moment_norms[k-1] = M_k = max_x sum_y |H0(x,y)| |x-y|^k, k = 1..n+1.
  std::vector<double> moment_norms;
  int order = 1;

  double moment(int k) const { return moment_norms.at(static_cast<std::size_t>(k - 1)); }
};

double moment_norm(const LatticeKernel& kernel, double k);
StructuralConstants structural_constants(const LatticeKernel& kernel, int order);

}  // namespace lcone
