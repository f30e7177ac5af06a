#pragma once

#include "liqvol/types.hpp"

#include <string>
#include <vector>

namespace liqvol {

inline constexpr double kLambdaFloor = 0.1;

/// lambda = r_mkt / var_mkt, floored at 0.1 when r_mkt <= 0.
double risk_aversion(double market_return, double market_variance);

/// Market portfolio = equal-weighted basket of the window's columns. Uses the
/// last row as the day's market return and the sample variance of the basket
/// over the whole window.
double risk_aversion(const Matrix& window_returns);

struct MvProblem {
  Vector mu;
  Matrix sigma;
  double lambda = 1.0;
  double cap = 0.0;  ///< per-asset upper bound; 0 means 3/N
};

struct MvSolution {
  Vector weights;  ///< N risky weights
  double cash = 1.0;
  double objective = 0.0;
  int iterations = 0;
};

/// mu' w - lambda/2 w' Sigma w
double mv_objective(const Vector& mu, const Matrix& sigma, double lambda, const Vector& w);

/// Maximizes the mean-variance objective over 0 <= w_i <= cap, sum w <= 1
/// (cash = 1 - sum w) with a primal active-set method started from all cash.
MvSolution solve_mv(const MvProblem& problem);

enum class ReturnSource { regular_mean, liq_adjusted_mean };
enum class CovSource { rolling_window, intraday, posterior };

struct PortfolioVariant {
  int id = 1;
  ReturnSource returns = ReturnSource::regular_mean;
  CovSource covariance = CovSource::rolling_window;
  bool liquidity_adjusted() const { return returns == ReturnSource::liq_adjusted_mean; }
};

/// 1/2 rolling, 3/4 intraday, 5/6 posterior; odd ids regular, even ids adjusted.
PortfolioVariant portfolio_variant(int id);
std::string to_string(ReturnSource s);
std::string to_string(CovSource s);

struct SharpeResult {
  double value = 0.0;
  double mean = 0.0;   ///< daily
  double std = 0.0;    ///< daily, sample
  bool degenerate = false;
};

SharpeResult sharpe_annualized(const Vector& daily_returns, int periods_per_year);

/// Everything the backtest reads, aligned on `dates` (D days).
struct BacktestInput {
  std::vector<Date> dates;
  Matrix returns;           ///< D x N regular daily returns
  Matrix adjusted_returns;  ///< D x N liquidity-adjusted daily returns
  std::vector<Matrix> intraday;            ///< per day; empty matrix when unavailable
  std::vector<Matrix> intraday_adjusted;
  std::vector<Matrix> posterior;           ///< forecast for day t+1 made at the close of t
  std::vector<Matrix> posterior_adjusted;
};

struct BacktestOptions {
  int window_days = 365;
  int periods_per_year = 365;
  std::vector<int> variants{1, 2, 3, 4, 5, 6};
};

struct BacktestResult {
  PortfolioVariant variant;
  std::vector<Date> dates;  ///< realization days
  Matrix weights;           ///< rows: days; N risky columns then cash
  Vector realized;          ///< realized with regular returns
  SharpeResult sharpe;
  std::vector<std::string> failures;
};

/// Decides at the close of each day t >= window-1 and realizes on day t+1.
BacktestResult run_variant(const BacktestInput& input, const PortfolioVariant& variant, const BacktestOptions& options);

std::vector<BacktestResult> run_backtest(const BacktestInput& input, const BacktestOptions& options);

/// Sample covariance (divisor n - 1) of the rows of `x`.
Matrix sample_covariance(const Matrix& x);

}  // namespace liqvol
