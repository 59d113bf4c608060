#pragma once

#include <cstddef>
#include <functional>

#include "lcone/kernel.hpp"

namespace lcone {

/// Largest system solved with dense factorisations; above this the
/// iterative (Lanczos / Krylov) paths take over.
inline constexpr std::size_t kDenseLimit = 1024;

struct EigenEstimate {
  double value = 0.0;
  double residual = 0.0;  // ||A x - value x|| for the returned Ritz pair
  int iterations = 0;
};

using LinearMap = std::function<CVector(const CVector&)>;

/// Eigenvalue of largest modulus of a Hermitian map, by restarted Lanczos with
/// full reorthogonalisation. Throws NumericalError if the Ritz residual does
/// not drop below `rel_tol * |value|`.
EigenEstimate lanczos_extreme(const LinearMap& apply, std::size_t n, double rel_tol = 1e-9,
                              int krylov_dim = 160, int max_restarts = 60);

/// Largest and smallest eigenvalues of a Hermitian matrix.
struct SpectrumBounds {
  double lowest = 0.0;
  double highest = 0.0;
};
SpectrumBounds hermitian_extremes(const CMatrix& a);
SpectrumBounds hermitian_extremes(const SparseKernel& a);

/// Spectral norm. Dense eigensolve up to kDenseLimit sites, Lanczos beyond.
double operator_norm(const CMatrix& a, bool hermitian);
double operator_norm(const SparseKernel& a, bool hermitian);
double operator_norm(const LatticeKernel& kernel);

/// Drop rows and columns that carry no entries; the norm is unchanged.
SparseKernel compress_support(const SparseKernel& a);

}  // namespace lcone
