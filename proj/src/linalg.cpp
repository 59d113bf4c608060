#include "lcone/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lcone/error.hpp"

namespace lcone {

EigenEstimate lanczos_extreme(const LinearMap& apply, std::size_t n, double rel_tol,
                              int krylov_dim, int max_restarts) {
  const auto dim = static_cast<Eigen::Index>(n);
  const int m = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(krylov_dim)));

  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  CVector start(dim);
  for (Eigen::Index i = 0; i < dim; ++i) start[i] = cplx(normal(rng), normal(rng));
  start.normalize();

  EigenEstimate best;
  for (int restart = 0; restart <= max_restarts; ++restart) {
    CMatrix basis(dim, m + 1);
    std::vector<double> alpha, beta;
    basis.col(0) = start;
    int steps = 0;
    bool invariant = false;
    for (int j = 0; j < m; ++j) {
      CVector w = apply(basis.col(j));
      alpha.push_back(basis.col(j).dot(w).real());
      // Two passes of classical Gram-Schmidt against the whole basis.
      for (int pass = 0; pass < 2; ++pass) {
        const auto active = basis.leftCols(j + 1);
        w -= active * (active.adjoint() * w);
      }
      const double b = w.norm();
      ++steps;
      if (b <= 1e-14 * std::max(1.0, std::abs(alpha.back()))) {
        invariant = true;
        beta.push_back(0.0);
        break;
      }
      beta.push_back(b);
      basis.col(j + 1) = w / b;
    }

    Eigen::VectorXd diag(steps), off(std::max(steps - 1, 0));
    for (int j = 0; j < steps; ++j) diag[j] = alpha[static_cast<std::size_t>(j)];
    for (int j = 0; j + 1 < steps; ++j) off[j] = beta[static_cast<std::size_t>(j)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    Eigen::Index pick = 0;
    tri.eigenvalues().cwiseAbs().maxCoeff(&pick);
    const double theta = tri.eigenvalues()[pick];
    const Eigen::VectorXd s = tri.eigenvectors().col(pick);
    const double residual = invariant ? 0.0 : beta.back() * std::abs(s[steps - 1]);

    best.value = theta;
    best.residual = residual;
    best.iterations += steps;
    if (residual <= rel_tol * std::abs(theta) || invariant || steps == static_cast<int>(n))
      return best;
    start = basis.leftCols(steps) * s.cast<cplx>();
    start.normalize();
  }
  throw NumericalError("Lanczos did not converge: Ritz residual " + std::to_string(best.residual) +
                       " at eigenvalue " + std::to_string(best.value));
}

SpectrumBounds hermitian_extremes(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

SpectrumBounds hermitian_extremes(const SparseKernel& a) {
  const auto n = static_cast<std::size_t>(a.rows());
  if (n <= kDenseLimit) return hermitian_extremes(CMatrix(a));
  // Shift so the wanted end dominates in modulus.
  const LinearMap plain = [&](const CVector& x) { return CVector(a * x); };
  const double top = std::abs(lanczos_extreme(plain, n).value);
  const LinearMap up = [&](const CVector& x) { return CVector(a * x + top * x); };
  const LinearMap down = [&](const CVector& x) { return CVector(a * x - top * x); };
  return {lanczos_extreme(down, n).value + top, lanczos_extreme(up, n).value - top};
}

double operator_norm(const CMatrix& a, bool hermitian) {
  if (a.size() == 0) return 0.0;
  if (hermitian) {
    const auto b = hermitian_extremes(a);
    return std::max(std::abs(b.lowest), std::abs(b.highest));
  }
  const CMatrix gram = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

SparseKernel compress_support(const SparseKernel& a) {
  std::vector<Eigen::Index> row_map(static_cast<std::size_t>(a.rows()), -1);
  std::vector<Eigen::Index> col_map(static_cast<std::size_t>(a.cols()), -1);
  for (Eigen::Index r = 0; r < a.outerSize(); ++r)
    for (SparseKernel::InnerIterator it(a, r); it; ++it) {
      row_map[static_cast<std::size_t>(r)] = 0;
      col_map[static_cast<std::size_t>(it.col())] = 0;
    }
  // Keep a square layout on the union so Hermitian structure survives.
  Eigen::Index next = 0;
  std::vector<Eigen::Index> map(row_map.size(), -1);
  for (std::size_t i = 0; i < map.size(); ++i)
    if (row_map[i] == 0 || col_map[i] == 0) map[i] = next++;
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros()));
  for (Eigen::Index r = 0; r < a.outerSize(); ++r)
    for (SparseKernel::InnerIterator it(a, r); it; ++it)
      t.emplace_back(map[static_cast<std::size_t>(r)], map[static_cast<std::size_t>(it.col())],
                     it.value());
  SparseKernel out(next, next);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

double operator_norm(const SparseKernel& a_full, bool hermitian) {
  const SparseKernel a = compress_support(a_full);
  const auto n = static_cast<std::size_t>(a.rows());
  if (n == 0 || a.nonZeros() == 0) return 0.0;
  if (n <= kDenseLimit) return operator_norm(CMatrix(a), hermitian);
  if (hermitian) {
    const LinearMap op = [&](const CVector& x) { return CVector(a * x); };
    return std::abs(lanczos_extreme(op, n).value);
  }
  const SparseKernel adj = a.adjoint();
  const LinearMap gram = [&](const CVector& x) { return CVector(adj * (a * x)); };
  return std::sqrt(std::max(0.0, lanczos_extreme(gram, n).value));
}

double operator_norm(const LatticeKernel& kernel) {
  return operator_norm(kernel.matrix(), kernel.hermitian());
}

}  // namespace lcone
