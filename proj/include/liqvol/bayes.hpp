#pragma once

// Bayesian shrinkage of the intraday covariance toward a conditional
// covariance forecast:
//
//   posterior = prior + [ (tau * prior)^{-1} + omega^{-1} ]^{-1}
//
// and its liquidity-linked form, which expresses the liquidity-adjusted
// posterior through regular-pipeline inputs and the liquidity matrices.

#include "liqvol/linalg.hpp"

namespace liqvol {

inline constexpr double kDefaultTau = 1.0;
inline constexpr double kMinTau = 0.01;
inline constexpr double kMaxTau = 10.0;

enum class Pipeline { regular, liquidity_adjusted };

struct PosteriorRecord {
  Date date{};
  Matrix sigma_post;
  double tau = kDefaultTau;
  double det_post = 0.0;
  Pipeline pipeline = Pipeline::regular;
};

template <typename DerivedS, typename DerivedO>
MatrixX<typename DerivedS::Scalar> posterior_covariance(const Eigen::MatrixBase<DerivedS>& prior,
                                                        const Eigen::MatrixBase<DerivedO>& omega,
                                                        typename DerivedS::Scalar tau) {
  using Scalar = typename DerivedS::Scalar;
  if (!(tau > Scalar(0))) throw std::invalid_argument("posterior_covariance: tau must be positive");
  if (prior.rows() != omega.rows() || prior.cols() != omega.cols()) {
    throw std::invalid_argument("posterior_covariance: dimension mismatch");
  }
  const MatrixX<Scalar> scaled = tau * prior;
  const MatrixX<Scalar> precision =
      spd_inverse(scaled, "prior covariance") + spd_inverse(omega, "conditional covariance");
  return symmetrize(prior + spd_inverse(precision, "posterior precision"));
}

/// Liquidity-linked posterior
///   B_sigma^{-1} [ S + [ (tau S)^{-1} + (B_t W B_t^T)^{-1} ]^{-1} ] B_sigma^{-T},
/// with B_t = B_sigma * diag(jump)^{-1/2}. `jump` holds the diagonal of the
/// jump matrix B_r.
template <typename DerivedS, typename DerivedO, typename DerivedB, typename DerivedJ>
MatrixX<typename DerivedS::Scalar> linked_posterior(const Eigen::MatrixBase<DerivedS>& sigma_regular,
                                                    const Eigen::MatrixBase<DerivedO>& omega_regular,
                                                    const Eigen::MatrixBase<DerivedB>& b_sigma,
                                                    const Eigen::MatrixBase<DerivedJ>& jump,
                                                    typename DerivedS::Scalar tau) {
  using Scalar = typename DerivedS::Scalar;
  const Eigen::Index n = sigma_regular.rows();
  if (b_sigma.rows() != n || b_sigma.cols() != n || jump.size() != n) {
    throw std::invalid_argument("linked_posterior: dimension mismatch");
  }
  if ((jump.array() <= Scalar(0)).any()) throw std::invalid_argument("linked_posterior: jump betas must be positive");

  Eigen::FullPivLU<MatrixX<Scalar>> lu(b_sigma);
  if (!lu.isInvertible()) throw DegenerateError("linked_posterior: diffusion matrix is singular");
  const MatrixX<Scalar> b_inv = lu.inverse();
  const MatrixX<Scalar> composite = b_sigma * jump.cwiseSqrt().cwiseInverse().asDiagonal();
  const MatrixX<Scalar> scaled_omega = symmetrize(composite * omega_regular * composite.transpose());
  const MatrixX<Scalar> inner = posterior_covariance(sigma_regular, scaled_omega, tau);
  return symmetrize(b_inv * inner * b_inv.transpose());
}

}  // namespace liqvol
