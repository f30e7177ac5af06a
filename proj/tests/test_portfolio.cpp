#include "liqvol/portfolio.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace liqvol;
using namespace liqvol::testing;

namespace {

struct GridBest {
  double objective = -1e300;
  double w1 = 0.0;
  double w2 = 0.0;
};

// Exhaustive search over the 0.001 lattice of the feasible triangle.
GridBest grid_search(const Vector& mu, const Matrix& s, double lambda, double cap) {
  GridBest best;
  const int steps = 1000;
  for (int i = 0; i <= steps; ++i) {
    const double w1 = i / static_cast<double>(steps);
    if (w1 > cap + 1e-15) break;
    for (int j = 0; i + j <= steps; ++j) {
      const double w2 = j / static_cast<double>(steps);
      if (w2 > cap + 1e-15) break;
      const double obj = mu(0) * w1 + mu(1) * w2 -
                         0.5 * lambda * (s(0, 0) * w1 * w1 + 2.0 * s(0, 1) * w1 * w2 + s(1, 1) * w2 * w2);
      if (obj > best.objective) best = {obj, w1, w2};
    }
  }
  return best;
}

BacktestInput make_input(const Matrix& returns) {
  BacktestInput in;
  for (Eigen::Index t = 0; t < returns.rows(); ++t) in.dates.push_back(parse_date("2021-01-01") + std::chrono::days(t));
  in.returns = returns;
  in.adjusted_returns = returns;
  const auto D = static_cast<std::size_t>(returns.rows());
  in.intraday.assign(D, Matrix());
  in.intraday_adjusted.assign(D, Matrix());
  in.posterior.assign(D, Matrix());
  in.posterior_adjusted.assign(D, Matrix());
  return in;
}

}  // namespace

TEST(RiskAversion, RatioAndFloor) {
  EXPECT_DOUBLE_EQ(risk_aversion(0.001, 0.0004), 2.5);
  EXPECT_EQ(risk_aversion(-0.01, 0.0004), kLambdaFloor);
  EXPECT_EQ(risk_aversion(0.0, 0.0004), kLambdaFloor);
  EXPECT_THROW(risk_aversion(0.01, 0.0), DegenerateError);
}

TEST(RiskAversion, WindowUsesEqualWeightBasket) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix w = 0.01 * random_matrix(rng, 30, 4);
    double mean = 0.0;
    std::vector<double> m(30);
    for (int t = 0; t < 30; ++t) {
      m[t] = (w(t, 0) + w(t, 1) + w(t, 2) + w(t, 3)) / 4.0;
      mean += m[t] / 30.0;
    }
    double var = 0.0;
    for (double v : m) var += (v - mean) * (v - mean) / 29.0;
    const double expect = m[29] <= 0.0 ? kLambdaFloor : m[29] / var;
    EXPECT_NEAR(risk_aversion(w), expect, 1e-9 * std::abs(expect));
  }
  EXPECT_THROW(risk_aversion(Matrix(Matrix::Constant(10, 2, 0.01))), DegenerateError);
}

TEST(SolveMv, SymmetricTwoAssetSplitsEvenly) {
  MvProblem p;
  p.mu = Vector::Constant(2, 0.01);
  p.sigma = 0.01 * Matrix::Identity(2, 2);
  p.lambda = 2.0;
  const auto s = solve_mv(p);
  EXPECT_NEAR(s.weights(0), 0.5, 1e-12);
  EXPECT_NEAR(s.weights(1), 0.5, 1e-12);
  EXPECT_NEAR(s.cash, 0.0, 1e-12);
}

TEST(SolveMv, NonPositiveMeansStayInCash) {
  MvProblem p;
  p.mu = Vector::Constant(3, -0.001);
  p.mu(1) = 0.0;
  p.sigma = 0.01 * Matrix::Identity(3, 3);
  p.lambda = 1.0;
  const auto s = solve_mv(p);
  EXPECT_EQ(s.weights.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.cash, 1.0);
}

TEST(SolveMv, InteriorOptimumBelowBudget) {
  // unconstrained optimum mu / (lambda sigma) = (0.2, 0.1)
  MvProblem p;
  p.mu = Vector(2);
  p.mu << 0.002, 0.001;
  p.sigma = 0.01 * Matrix::Identity(2, 2);
  p.lambda = 1.0;
  const auto s = solve_mv(p);
  EXPECT_NEAR(s.weights(0), 0.2, 1e-12);
  EXPECT_NEAR(s.weights(1), 0.1, 1e-12);
  EXPECT_NEAR(s.cash, 0.7, 1e-12);
}

TEST(SolveMv, CapBinds) {
  MvProblem p;
  p.mu = Vector::Zero(6);
  p.mu(0) = 0.05;
  p.sigma = 1e-4 * Matrix::Identity(6, 6);
  p.lambda = 1.0;
  const auto s = solve_mv(p);
  EXPECT_NEAR(s.weights(0), 0.5, 1e-12);
  EXPECT_LE(s.weights(0), 0.5 + 1e-12);
  EXPECT_NEAR(s.cash, 0.5, 1e-12);
}

TEST(SolveMv, MatchesGridSearchOnTwoAssetProblems) {
  std::mt19937_64 rng(500);
  for (int trial = 0; trial < 500; ++trial) {
    MvProblem p;
    p.mu = Vector(2);
    p.mu << uniform(rng, -0.002, 0.004), uniform(rng, -0.002, 0.004);
    const double v1 = uniform(rng, 1e-4, 1e-3);
    const double v2 = uniform(rng, 1e-4, 1e-3);
    const double rho = uniform(rng, -0.9, 0.9);
    p.sigma = Matrix(2, 2);
    p.sigma << v1, rho * std::sqrt(v1 * v2), rho * std::sqrt(v1 * v2), v2;
    p.lambda = uniform(rng, 0.1, 10.0);
    const auto s = solve_mv(p);
    const GridBest g = grid_search(p.mu, p.sigma, p.lambda, 1.5);
    // the lattice never beats the continuous optimum and sits within its resolution
    EXPECT_GE(s.objective, g.objective - 1e-12);
    EXPECT_LE(s.objective - g.objective, 1e-6);
    EXPECT_NEAR(s.weights.sum() + s.cash, 1.0, 1e-10);
    EXPECT_GE(s.weights.minCoeff(), 0.0);
  }
}

TEST(SolveMv, FeasibilityAndOptimalityInvariants) {
  std::mt19937_64 rng(501);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 9;
    MvProblem p;
    p.mu = 0.002 * random_vector(rng, n);
    p.sigma = 1e-4 * random_spd(rng, n, 0.01);
    p.lambda = uniform(rng, 0.1, 20.0);
    const auto s = solve_mv(p);
    const double cap = 3.0 / n;
    EXPECT_NEAR(s.weights.sum() + s.cash, 1.0, 1e-10);
    EXPECT_GE(s.weights.minCoeff(), 0.0);
    EXPECT_LE(s.weights.maxCoeff(), cap + 1e-12);
    EXPECT_GE(s.cash, 0.0);
    // dominates simple feasible candidates
    const Vector eq = Vector::Constant(n, std::min(cap, 1.0 / n));
    EXPECT_GE(s.objective, mv_objective(p.mu, p.sigma, p.lambda, eq) - 1e-12);
    EXPECT_GE(s.objective, -1e-15);
    // and random feasible points
    for (int k = 0; k < 20; ++k) {
      Vector w(n);
      for (int i = 0; i < n; ++i) w(i) = uniform(rng, 0.0, cap);
      if (w.sum() > 1.0) w /= w.sum();
      EXPECT_GE(s.objective, mv_objective(p.mu, p.sigma, p.lambda, w) - 1e-12);
    }
  }
}

TEST(SolveMv, RejectsBadInput) {
  MvProblem p;
  p.mu = Vector::Constant(2, 0.01);
  p.sigma = Matrix(2, 2);
  p.sigma << 1.0, 2.0, 2.0, 1.0;
  p.lambda = 1.0;
  EXPECT_THROW(solve_mv(p), DegenerateError);
  p.sigma = Matrix::Identity(2, 2);
  p.lambda = 0.0;
  EXPECT_THROW(solve_mv(p), std::invalid_argument);
  p.lambda = 1.0;
  p.sigma = Matrix::Identity(3, 3);
  EXPECT_THROW(solve_mv(p), std::invalid_argument);
}

TEST(Variants, IdMapping) {
  EXPECT_EQ(portfolio_variant(1).covariance, CovSource::rolling_window);
  EXPECT_FALSE(portfolio_variant(1).liquidity_adjusted());
  EXPECT_TRUE(portfolio_variant(2).liquidity_adjusted());
  EXPECT_EQ(portfolio_variant(3).covariance, CovSource::intraday);
  EXPECT_EQ(portfolio_variant(4).covariance, CovSource::intraday);
  EXPECT_EQ(portfolio_variant(5).covariance, CovSource::posterior);
  EXPECT_TRUE(portfolio_variant(6).liquidity_adjusted());
  EXPECT_THROW(portfolio_variant(0), std::invalid_argument);
  EXPECT_THROW(portfolio_variant(7), std::invalid_argument);
}

TEST(Sharpe, AnnualizedExample) {
  // mean 0.001 and std 0.02 annualize to 0.001 * sqrt(252) / 0.02
  Vector r(2);
  r << 0.001 + 0.02 / std::sqrt(2.0), 0.001 - 0.02 / std::sqrt(2.0);
  const auto s = sharpe_annualized(r, 252);
  EXPECT_NEAR(s.value, 0.001 * std::sqrt(252.0) / 0.02, 1e-12);
  EXPECT_NEAR(s.value, 0.794, 1e-3);
  EXPECT_FALSE(s.degenerate);
}

TEST(Sharpe, FormulaOracle) {
  std::mt19937_64 rng(3);
  const Vector r = 0.01 * random_vector(rng, 250);
  double mean = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) mean += r(i);
  mean /= 250.0;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) ss += (r(i) - mean) * (r(i) - mean);
  const double sd = std::sqrt(ss / 249.0);
  EXPECT_NEAR(sharpe_annualized(r, 365).value, mean * 365.0 / (sd * std::sqrt(365.0)), 1e-10);
}

TEST(Sharpe, Degenerate) {
  const auto up = sharpe_annualized(Vector::Constant(10, 0.001), 365);
  EXPECT_TRUE(up.degenerate);
  EXPECT_TRUE(std::isinf(up.value) && up.value > 0);
  const auto down = sharpe_annualized(Vector::Constant(10, -0.001), 365);
  EXPECT_TRUE(std::isinf(down.value) && down.value < 0);
  EXPECT_TRUE(std::isnan(sharpe_annualized(Vector::Zero(10), 365).value));
  EXPECT_THROW(sharpe_annualized(Vector::Zero(1), 365), std::invalid_argument);
}

TEST(SampleCovariance, DivisorNMinusOne) {
  Matrix x(3, 1);
  x << 1.0, 2.0, 3.0;
  EXPECT_DOUBLE_EQ(sample_covariance(x)(0, 0), 1.0);
}

TEST(Backtest, WeightsFeasibleAndRealizedWithRegularReturns) {
  std::mt19937_64 rng(4);
  const Matrix r = (0.0005 + 0.01 * random_matrix(rng, 120, 4).array()).matrix();
  BacktestInput in = make_input(r);
  in.adjusted_returns = 1.3 * r + 0.002 * random_matrix(rng, 120, 4);
  BacktestOptions opt;
  opt.window_days = 60;
  for (int id : {1, 2}) {
    const auto res = run_variant(in, portfolio_variant(id), opt);
    ASSERT_EQ(res.realized.size(), 60);
    EXPECT_TRUE(res.failures.empty());
    for (Eigen::Index k = 0; k < 60; ++k) {
      const Vector w = res.weights.row(k).head(4).transpose();
      EXPECT_NEAR(res.weights.row(k).sum(), 1.0, 1e-10);
      EXPECT_GE(w.minCoeff(), 0.0);
      EXPECT_LE(w.maxCoeff(), 0.75 + 1e-12);
      EXPECT_NEAR(res.realized(k), w.dot(r.row(60 + k).transpose()), 1e-15);
      EXPECT_EQ(res.dates[static_cast<std::size_t>(k)], in.dates[static_cast<std::size_t>(60 + k)]);
    }
  }
}

TEST(Backtest, IntradayEqualToRollingGivesSameWeights) {
  std::mt19937_64 rng(5);
  const Matrix r = (0.0005 + 0.01 * random_matrix(rng, 100, 3).array()).matrix();
  BacktestInput in = make_input(r);
  BacktestOptions opt;
  opt.window_days = 60;
  for (Eigen::Index t = 59; t < 100; ++t) {
    in.intraday[static_cast<std::size_t>(t)] = sample_covariance(r.middleRows(t - 59, 60));
  }
  const auto a = run_variant(in, portfolio_variant(1), opt);
  const auto b = run_variant(in, portfolio_variant(3), opt);
  EXPECT_EQ((a.weights - b.weights).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backtest, FailedDayKeepsPreviousWeights) {
  std::mt19937_64 rng(6);
  const Matrix r = (0.001 + 0.01 * random_matrix(rng, 80, 3).array()).matrix();
  BacktestInput in = make_input(r);
  BacktestOptions opt;
  opt.window_days = 60;
  for (Eigen::Index t = 59; t < 80; ++t) in.intraday[static_cast<std::size_t>(t)] = 1e-4 * Matrix::Identity(3, 3);
  in.intraday[65] = Matrix();
  in.intraday[59] = Matrix();
  const auto res = run_variant(in, portfolio_variant(3), opt);
  ASSERT_EQ(res.failures.size(), 2u);
  // first decision fails: all cash
  EXPECT_EQ(res.weights(0, 3), 1.0);
  EXPECT_EQ(res.realized(0), 0.0);
  EXPECT_EQ((res.weights.row(6) - res.weights.row(5)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backtest, FlatSingleAssetIsFullyInvested) {
  // zero market variance falls back to the lambda floor, the budget binds
  const Matrix r = Matrix::Constant(30, 1, 0.001);
  BacktestInput in = make_input(r);
  BacktestOptions opt;
  opt.window_days = 10;
  const auto res = run_variant(in, portfolio_variant(1), opt);
  EXPECT_TRUE(res.failures.empty());
  for (Eigen::Index k = 0; k < res.realized.size(); ++k) {
    EXPECT_NEAR(res.weights(k, 0), 1.0, 1e-12);
    EXPECT_NEAR(res.realized(k), 0.001, 1e-15);
  }
  EXPECT_TRUE(res.sharpe.degenerate);
  EXPECT_TRUE(std::isinf(res.sharpe.value) && res.sharpe.value > 0);
}

TEST(Backtest, WindowTooLongThrows) {
  BacktestInput in = make_input(Matrix::Zero(10, 2));
  BacktestOptions opt;
  opt.window_days = 10;
  EXPECT_THROW(run_variant(in, portfolio_variant(1), opt), std::invalid_argument);
}
