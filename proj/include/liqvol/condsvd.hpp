#pragma once

// Reduced conditional SVD: for symmetric PSD A and B find H with A = H B H^T.
//
// With A = U_A S_A U_A^T and B = U_B S_B U_B^T (both spectra sorted in
// descending order), R = (S_A S_B^{-1})^{1/2} is diagonal and
// H = U_A R U_B^T reproduces A exactly whenever no eigenvalue of B is floored.

#include "liqvol/linalg.hpp"

#include <optional>
#include <type_traits>

namespace liqvol {

template <typename Scalar>
struct CondSvdResult {
  MatrixX<Scalar> H;
  Scalar residual = 0;   ///< ||H B H^T - A||_F / ||A||_F (absolute when A = 0)
  bool regularized = false;
  Scalar floor_used = 0;
};

template <typename Derived>
typename Derived::Scalar reconstruction_residual(const Eigen::MatrixBase<Derived>& A,
                                                 const Eigen::MatrixBase<Derived>& B,
                                                 const Eigen::MatrixBase<Derived>& H) {
  using Scalar = typename Derived::Scalar;
  const Scalar err = (H * B * H.transpose() - A).norm();
  const Scalar ref = A.norm();
  return ref > Scalar(0) ? err / ref : err;
}

/// Solves A = H B H^T. `floor` overrides the default eigenvalue floor for B
/// (max(1e-12, 1e-10 * trace(B) / n)).
template <typename DerivedA, typename DerivedB>
CondSvdResult<typename DerivedA::Scalar> conditional_svd(
    const Eigen::MatrixBase<DerivedA>& A, const Eigen::MatrixBase<DerivedB>& B,
    std::optional<typename DerivedA::Scalar> floor = std::nullopt) {
  using Scalar = typename DerivedA::Scalar;
  static_assert(std::is_same_v<Scalar, typename DerivedB::Scalar>, "scalar types must match");

  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows()) {
    throw std::invalid_argument("conditional_svd: A and B must be square and of equal dimension");
  }
  if (!is_symmetric(A, Scalar(1e-10))) throw std::invalid_argument("conditional_svd: A is not symmetric");
  if (!is_symmetric(B, Scalar(1e-10))) throw std::invalid_argument("conditional_svd: B is not symmetric");

  const MatrixX<Scalar> a = symmetrize(A);
  const MatrixX<Scalar> b = symmetrize(B);
  const auto ea = sorted_eigen(a);
  const auto eb = sorted_eigen(b);
  const Eigen::Index n = a.rows();

  const Scalar tol_a = Scalar(1e-10) * std::max(Scalar(1), ea.values.size() ? std::abs(ea.values(0)) : Scalar(0));
  const Scalar tol_b = Scalar(1e-10) * std::max(Scalar(1), eb.values.size() ? std::abs(eb.values(0)) : Scalar(0));
  if (n > 0 && ea.values(n - 1) < -tol_a) throw std::invalid_argument("conditional_svd: A is not positive semidefinite");
  if (n > 0 && eb.values(n - 1) < -tol_b) throw std::invalid_argument("conditional_svd: B is not positive semidefinite");

  CondSvdResult<Scalar> out;
  out.floor_used = floor ? *floor : eigen_floor(b);

  VectorX<Scalar> r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar sa = std::max(ea.values(i), Scalar(0));
    Scalar sb = eb.values(i);
    if (sb < out.floor_used) {
      sb = out.floor_used;
      out.regularized = true;
    }
    r(i) = std::sqrt(sa / sb);
  }
  out.H = ea.vectors * r.asDiagonal() * eb.vectors.transpose();
  out.residual = reconstruction_residual<MatrixX<Scalar>>(a, b, out.H);
  return out;
}

}  // namespace liqvol
