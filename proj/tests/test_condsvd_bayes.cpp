#include "liqvol/bayes.hpp"
#include "liqvol/condsvd.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace liqvol;
using namespace liqvol::testing;

TEST(CondSvd, EqualInputsGiveIdentity) {
  std::mt19937_64 rng(1);
  for (int n = 2; n <= 8; ++n) {
    const Matrix a = random_spd(rng, n);
    const auto r = conditional_svd(a, a);
    EXPECT_LT((r.H - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_FALSE(r.regularized);
  }
}

TEST(CondSvd, DiagonalAnalytic) {
  Matrix a = Matrix::Zero(3, 3);
  Matrix b = Matrix::Zero(3, 3);
  a.diagonal() << 9.0, 4.0, 1.0;
  b.diagonal() << 3.0, 2.0, 0.5;
  const auto r = conditional_svd(a, b);
  EXPECT_NEAR(r.H(0, 0), std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(r.H(1, 1), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(r.H(2, 2), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR((r.H - Matrix(r.H.diagonal().asDiagonal())).norm(), 0.0, 1e-14);
}

TEST(CondSvd, RandomPairsReconstruct) {
  std::mt19937_64 rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 7;
    const Matrix a = trial % 5 == 0 ? random_psd_rank(rng, n, n - 1) : random_spd(rng, n);
    const Matrix b = random_spd(rng, n);
    const auto r = conditional_svd(a, b);
    EXPECT_LT(r.residual, 1e-8);
    EXPECT_LT(reconstruction_residual<Matrix>(a, b, r.H), 1e-8);
    EXPECT_TRUE(r.H.allFinite());
  }
}

TEST(CondSvd, ScalingByConstant) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_spd(rng, 4);
    const Matrix b = random_spd(rng, 4);
    const double c = uniform(rng, 0.1, 10.0);
    const Matrix h1 = conditional_svd(a, b).H;
    const Matrix h2 = conditional_svd(Matrix(c * a), b).H;
    EXPECT_LT(rel_frobenius(h2, std::sqrt(c) * h1), 1e-8);
  }
}

TEST(CondSvd, SingularBIsRegularized) {
  std::mt19937_64 rng(9);
  const Matrix a = random_spd(rng, 3);
  const Matrix b = random_psd_rank(rng, 3, 2);
  const auto r = conditional_svd(a, b);
  EXPECT_TRUE(r.regularized);
  EXPECT_TRUE(r.H.allFinite());
  EXPECT_GE(r.floor_used, 1e-12);
}

TEST(CondSvd, Deterministic) {
  std::mt19937_64 rng(10);
  const Matrix a = random_spd(rng, 6);
  const Matrix b = random_spd(rng, 6);
  const Matrix h1 = conditional_svd(a, b).H;
  const Matrix h2 = conditional_svd(a, b).H;
  EXPECT_EQ((h1 - h2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(CondSvd, InputValidation) {
  Matrix a = Matrix::Identity(2, 2);
  Matrix ns = a;
  ns(0, 1) = 0.5;
  EXPECT_THROW(conditional_svd(ns, a), std::invalid_argument);
  EXPECT_THROW(conditional_svd(a, Matrix(Matrix::Identity(3, 3))), std::invalid_argument);
  Matrix neg = -a;
  EXPECT_THROW(conditional_svd(neg, a), std::invalid_argument);
}

TEST(CondSvd, WorksInLongDouble) {
  using M = MatrixX<long double>;
  std::mt19937_64 rng(12);
  const Matrix a = random_spd(rng, 3);
  const Matrix b = random_spd(rng, 3);
  const M al = a.cast<long double>();
  const M bl = b.cast<long double>();
  const auto r = conditional_svd(al, bl);
  EXPECT_LT(static_cast<double>(r.residual), 1e-14);
}

TEST(Posterior, ScalarCase) {
  const Matrix one = Matrix::Identity(1, 1);
  EXPECT_EQ(posterior_covariance(one, one, 1.0)(0, 0), 1.5);
}

TEST(Posterior, LargeTauLimit) {
  std::mt19937_64 rng(3);
  const Matrix s = random_spd(rng, 3);
  const Matrix o = random_spd(rng, 3);
  EXPECT_LT(rel_frobenius(posterior_covariance(s, o, 1e12), s + o), 1e-6);
}

TEST(Posterior, MatchesDenseInverseOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix s = random_spd(rng, 4, 0.5);
    const Matrix o = random_spd(rng, 4, 0.5);
    const double tau = trial % 2 ? 1.0 : uniform(rng, 0.01, 10.0);
    const Matrix oracle = s + ((tau * s).inverse() + o.inverse()).inverse();
    EXPECT_LT(rel_frobenius(posterior_covariance(s, o, tau), oracle), 1e-10);
  }
}

TEST(Posterior, AddedTermIsPsdAndDeterminantGrows) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 5;
    const Matrix s = random_spd(rng, n, 0.05);
    const Matrix o = random_spd(rng, n, 0.05);
    const Matrix p = posterior_covariance(s, o, uniform(rng, 0.01, 10.0));
    EXPECT_EQ((p - p.transpose()).cwiseAbs().maxCoeff(), 0.0);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(p - s).eigenvalues().minCoeff();
    EXPECT_GE(min_eig, -1e-10 * p.norm());
    EXPECT_GE(p.determinant(), s.determinant() * (1 - 1e-12));
  }
}

TEST(Posterior, MonotoneInTauForScalars) {
  const Matrix s = Matrix::Constant(1, 1, 0.7);
  const Matrix o = Matrix::Constant(1, 1, 1.3);
  double prev = -1.0;
  for (double tau = 0.01; tau <= 10.0; tau *= 1.3) {
    const double v = posterior_covariance(s, o, tau)(0, 0);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Posterior, SingularInputNamed) {
  const Matrix z = Matrix::Zero(2, 2);
  try {
    posterior_covariance(z, Matrix(Matrix::Identity(2, 2)), 1.0);
    FAIL();
  } catch (const DegenerateError& e) {
    EXPECT_NE(std::string(e.what()).find("prior"), std::string::npos);
  }
  EXPECT_THROW(posterior_covariance(Matrix(Matrix::Identity(2, 2)), Matrix(Matrix::Identity(2, 2)), 0.0),
               std::invalid_argument);
}

TEST(LinkedPosterior, IdentityLiquidityReduces) {
  std::mt19937_64 rng(6);
  const Matrix s = random_spd(rng, 3);
  const Matrix o = random_spd(rng, 3);
  const Matrix I = Matrix::Identity(3, 3);
  EXPECT_LT(rel_frobenius(linked_posterior(s, o, I, Vector::Ones(3), 1.0), posterior_covariance(s, o, 1.0)), 1e-14);
}

TEST(LinkedPosterior, ScalarCase) {
  // B_sigma = 2, beta_r = 1: adjusted inputs are S/4 and W, so 1/4 + (4 + 1)^{-1}
  const Matrix one = Matrix::Identity(1, 1);
  const Matrix two = Matrix::Constant(1, 1, 2.0);
  EXPECT_NEAR(linked_posterior(one, one, two, Vector::Ones(1), 1.0)(0, 0), 0.45, 1e-15);
  EXPECT_NEAR(posterior_covariance(Matrix::Constant(1, 1, 0.25), one, 1.0)(0, 0), 0.45, 1e-15);
}

TEST(LinkedPosterior, EqualsTwoStepEvaluation) {
  std::mt19937_64 rng(200);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 4;
    const Matrix s = random_spd(rng, n, 0.3);
    const Matrix o = random_spd(rng, n, 0.3);
    const Matrix bs = conditional_svd(random_spd(rng, n, 0.3), random_spd(rng, n, 0.3)).H;
    Vector beta(n);
    for (int i = 0; i < n; ++i) beta(i) = uniform(rng, 0.3, 3.0);
    const double tau = uniform(rng, 0.1, 5.0);
    const Matrix bi = bs.inverse();
    const Matrix s_adj = bi * s * bi.transpose();
    const Matrix o_adj = beta.cwiseSqrt().cwiseInverse().asDiagonal() * o * beta.cwiseSqrt().cwiseInverse().asDiagonal();
    const Matrix two_step = posterior_covariance(symmetrize(s_adj), symmetrize(o_adj), tau);
    EXPECT_LT(rel_frobenius(linked_posterior(s, o, bs, beta, tau), two_step), 1e-8);
  }
}
