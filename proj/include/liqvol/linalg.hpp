#pragma once

#include "liqvol/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace liqvol {

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order and each eigenvector's largest-magnitude entry made
/// positive. Ties keep the solver's relative order.
template <typename Scalar>
struct SortedEigen {
  VectorX<Scalar> values;
  MatrixX<Scalar> vectors;
};

template <typename Derived>
SortedEigen<typename Derived::Scalar> sorted_eigen(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = m.rows();
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(m.derived().eval());
  if (solver.info() != Eigen::Success) {
    throw DegenerateError("symmetric eigensolver failed to converge");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto& vals = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return vals(a) > vals(b); });

  SortedEigen<Scalar> out{VectorX<Scalar>(n), MatrixX<Scalar>(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = vals(src);
    auto col = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    Scalar best = Scalar(-1);
    for (Eigen::Index i = 0; i < n; ++i) {
      // strict comparison keeps the first index among equal magnitudes
      if (std::abs(col(i)) > best + Scalar(1e-12) * std::abs(best)) {
        best = std::abs(col(i));
        arg = i;
      }
    }
    out.vectors.col(k) = col(arg) < Scalar(0) ? (-col).eval() : col.eval();
  }
  return out;
}

template <typename Derived>
typename Derived::Scalar max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? typename Derived::Scalar(0) : m.cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar tol) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) return false;
  const Scalar scale = std::max(Scalar(1), max_abs(m));
  return max_abs(m - m.transpose()) <= tol * scale;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) / typename Derived::Scalar(2);
}

/// Eigenvalue floor shared by the conditional SVD and the Bayesian inverses:
/// max(1e-12, 1e-10 * trace / n).
template <typename Derived>
typename Derived::Scalar eigen_floor(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Scalar n = static_cast<Scalar>(std::max<Eigen::Index>(m.rows(), 1));
  return std::max(Scalar(1e-12), Scalar(1e-10) * m.trace() / n);
}

/// Inverse of a symmetric PSD matrix through its eigen-decomposition,
/// raising eigenvalues below the floor to the floor. `name` identifies the
/// matrix in error messages.
template <typename Derived>
MatrixX<typename Derived::Scalar> spd_inverse(const Eigen::MatrixBase<Derived>& m,
                                              const std::string& name) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw std::invalid_argument(name + ": matrix is not square");
  if (!is_symmetric(m, Scalar(1e-8))) throw std::invalid_argument(name + ": matrix is not symmetric");
  const auto eig = sorted_eigen(symmetrize(m));
  const Scalar scale = std::max(Scalar(1), std::abs(eig.values(0)));
  if (eig.values.size() == 0 || eig.values(0) <= Scalar(1e-12)) {
    throw DegenerateError(name + ": matrix is singular (no eigenvalue above the floor)");
  }
  if (eig.values(eig.values.size() - 1) < Scalar(-1e-10) * scale) {
    throw DegenerateError(name + ": matrix is not positive semidefinite");
  }
  const Scalar floor = eigen_floor(m);
  VectorX<Scalar> inv = eig.values.unaryExpr([floor](Scalar v) { return Scalar(1) / std::max(v, floor); });
  return symmetrize(eig.vectors * inv.asDiagonal() * eig.vectors.transpose());
}

/// Projects a symmetric matrix onto the PSD cone by clipping negative
/// eigenvalues to zero. Returns true through `clipped` when any were negative.
template <typename Derived>
MatrixX<typename Derived::Scalar> clip_psd(const Eigen::MatrixBase<Derived>& m, bool* clipped = nullptr) {
  using Scalar = typename Derived::Scalar;
  const auto eig = sorted_eigen(symmetrize(m));
  const bool any = eig.values.size() > 0 && eig.values(eig.values.size() - 1) < Scalar(0);
  if (clipped) *clipped = any;
  if (!any) return symmetrize(m);
  VectorX<Scalar> vals = eig.values.cwiseMax(Scalar(0));
  return symmetrize(eig.vectors * vals.asDiagonal() * eig.vectors.transpose());
}

}  // namespace liqvol
