#include "liqvol/portfolio.hpp"

#include "liqvol/linalg.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace liqvol {

double risk_aversion(double market_return, double market_variance) {
  if (!(market_variance > 0.0)) throw DegenerateError("risk_aversion: market variance is zero");
  if (market_return <= 0.0) return kLambdaFloor;
  return market_return / market_variance;
}

double risk_aversion(const Matrix& window_returns) {
  if (window_returns.rows() < 2) throw std::invalid_argument("risk_aversion: window needs at least two days");
  const Vector market = window_returns.rowwise().mean();
  const double mean = market.mean();
  const double var = (market.array() - mean).square().sum() / static_cast<double>(market.size() - 1);
  return risk_aversion(market(market.size() - 1), var);
}

double mv_objective(const Vector& mu, const Matrix& sigma, double lambda, const Vector& w) {
  return mu.dot(w) - 0.5 * lambda * w.dot(sigma * w);
}

namespace {

// Constraint j reads a_j' w >= b_j: j < N lower bounds, N <= j < 2N upper
// bounds, j = 2N the budget.
struct Constraints {
  Eigen::Index n;
  double cap;

  Eigen::Index count() const { return 2 * n + 1; }
  Vector a(Eigen::Index j) const {
    Vector v = Vector::Zero(n);
    if (j < n) {
      v(j) = 1.0;
    } else if (j < 2 * n) {
      v(j - n) = -1.0;
    } else {
      v.setConstant(-1.0);
    }
    return v;
  }
  double b(Eigen::Index j) const { return j < n ? 0.0 : (j < 2 * n ? -cap : -1.0); }
};

Matrix null_space(const Matrix& a, Eigen::Index n) {
  if (a.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Eigen::Index rank = svd.rank();
  return svd.matrixV().rightCols(n - rank);
}

}  // namespace

MvSolution solve_mv(const MvProblem& problem) {
  const Eigen::Index n = problem.mu.size();
  if (n < 1) throw std::invalid_argument("solve_mv: empty problem");
  if (problem.sigma.rows() != n || problem.sigma.cols() != n) throw std::invalid_argument("solve_mv: dimension mismatch");
  if (!(problem.lambda > 0.0)) throw std::invalid_argument("solve_mv: lambda must be positive");
  if (!problem.mu.allFinite() || !problem.sigma.allFinite()) throw std::invalid_argument("solve_mv: non-finite input");
  if (!is_symmetric(problem.sigma, 1e-8)) throw std::invalid_argument("solve_mv: covariance is not symmetric");
  const Matrix sigma = symmetrize(problem.sigma);
  {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
    const double scale = std::max(std::abs(es.eigenvalues().maxCoeff()), std::numeric_limits<double>::min());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
      throw DegenerateError("solve_mv: covariance is not positive semidefinite");
    }
  }
  const double cap = problem.cap > 0.0 ? problem.cap : 3.0 / static_cast<double>(n);
  const Constraints cons{n, cap};
  const Matrix G = problem.lambda * sigma;
  const double gscale = std::max(G.cwiseAbs().maxCoeff(), 1e-300);

  Vector w = Vector::Zero(n);
  std::vector<Eigen::Index> working;
  for (Eigen::Index i = 0; i < n; ++i) working.push_back(i);

  const int max_iter = 100 * static_cast<int>(n + 1) + 100;
  MvSolution sol;
  bool done = false;
  for (int it = 0; it < max_iter; ++it) {
    sol.iterations = it + 1;
    const Vector g = G * w - problem.mu;
    Matrix aw(static_cast<Eigen::Index>(working.size()), n);
    for (std::size_t k = 0; k < working.size(); ++k) aw.row(static_cast<Eigen::Index>(k)) = cons.a(working[k]).transpose();
    const Matrix Z = null_space(aw, n);

    Vector p = Vector::Zero(n);
    bool unbounded = false;
    if (Z.cols() > 0) {
      const Matrix hr = symmetrize(Matrix(Z.transpose() * G * Z));
      const Vector gr = Z.transpose() * g;
      const Eigen::SelfAdjointEigenSolver<Matrix> es(hr);
      const Vector& ev = es.eigenvalues();
      const Matrix& V = es.eigenvectors();
      const double zero_tol = 1e-10 * gscale;
      Vector flat = Vector::Zero(gr.size());
      Vector newton = Vector::Zero(gr.size());
      for (Eigen::Index k = 0; k < ev.size(); ++k) {
        const double c = V.col(k).dot(gr);
        if (ev(k) <= zero_tol) {
          flat += c * V.col(k);
        } else {
          newton += (c / ev(k)) * V.col(k);
        }
      }
      if (flat.norm() > 1e-13 * std::max(1.0, problem.mu.cwiseAbs().maxCoeff())) {
        p = -Z * flat;  // zero curvature, the objective keeps decreasing linearly
        unbounded = true;
      } else {
        p = -Z * newton;
      }
    }

    if (p.norm() <= 1e-13) {
      if (working.empty()) {
        done = true;
        break;
      }
      // multipliers of the working set: g = sum_j lambda_j a_j
      const Vector lam = aw.transpose().colPivHouseholderQr().solve(g);
      Eigen::Index drop = -1;
      double most_negative = -1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff());
      for (Eigen::Index k = 0; k < lam.size(); ++k) {
        if (lam(k) < most_negative) {
          most_negative = lam(k);
          drop = k;
        }
      }
      if (drop < 0) {
        done = true;
        break;
      }
      working.erase(working.begin() + drop);
      continue;
    }

    double alpha = unbounded ? std::numeric_limits<double>::infinity() : 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index j = 0; j < cons.count(); ++j) {
      if (std::find(working.begin(), working.end(), j) != working.end()) continue;
      const Vector aj = cons.a(j);
      const double ap = aj.dot(p);
      if (ap >= -1e-15) continue;
      const double ratio = std::max(0.0, (cons.b(j) - aj.dot(w)) / ap);
      if (ratio < alpha) {
        alpha = ratio;
        blocking = j;
      }
    }
    if (!std::isfinite(alpha)) throw DegenerateError("solve_mv: unbounded direction");
    w += alpha * p;
    if (blocking >= 0) {
      if (blocking < n) {
        w(blocking) = 0.0;
      } else if (blocking < 2 * n) {
        w(blocking - n) = cap;
      }
      working.push_back(blocking);
      std::sort(working.begin(), working.end());
    }
  }
  if (!done) throw DegenerateError("solve_mv: active-set iteration limit reached");

  for (Eigen::Index j : working) {
    if (j < n) w(j) = 0.0;
    else if (j < 2 * n) w(j - n) = cap;
  }
  w = w.cwiseMax(0.0).cwiseMin(cap);
  double total = w.sum();
  if (total > 1.0) {
    w /= total;
    w = w.cwiseMin(cap);
    total = w.sum();
  }
  sol.weights = w;
  sol.cash = std::max(0.0, 1.0 - total);
  sol.objective = mv_objective(problem.mu, sigma, problem.lambda, w);
  return sol;
}

PortfolioVariant portfolio_variant(int id) {
  if (id < 1 || id > 6) throw std::invalid_argument(fmt::format("portfolio variant must be 1..6, got {}", id));
  PortfolioVariant v;
  v.id = id;
  v.returns = id % 2 == 1 ? ReturnSource::regular_mean : ReturnSource::liq_adjusted_mean;
  v.covariance = id <= 2 ? CovSource::rolling_window : (id <= 4 ? CovSource::intraday : CovSource::posterior);
  return v;
}

std::string to_string(ReturnSource s) {
  return s == ReturnSource::regular_mean ? "regular" : "liquidity_adjusted";
}

std::string to_string(CovSource s) {
  switch (s) {
    case CovSource::rolling_window: return "rolling_window";
    case CovSource::intraday: return "intraday";
    case CovSource::posterior: return "posterior";
  }
  return "";
}

SharpeResult sharpe_annualized(const Vector& r, int periods_per_year) {
  if (r.size() < 2) throw std::invalid_argument("sharpe_annualized: need at least two observations");
  if (periods_per_year < 1) throw std::invalid_argument("sharpe_annualized: periods per year must be positive");
  SharpeResult s;
  s.mean = r.mean();
  s.std = std::sqrt((r.array() - s.mean).square().sum() / static_cast<double>(r.size() - 1));
  const double P = static_cast<double>(periods_per_year);
  if (!(s.std > 1e-14 * std::max(1e-300, std::abs(s.mean)))) {
    s.degenerate = true;
    s.value = s.mean > 0.0 ? std::numeric_limits<double>::infinity()
                           : (s.mean < 0.0 ? -std::numeric_limits<double>::infinity()
                                           : std::numeric_limits<double>::quiet_NaN());
    return s;
  }
  s.value = (s.mean * P) / (s.std * std::sqrt(P));
  return s;
}

Matrix sample_covariance(const Matrix& x) {
  if (x.rows() < 2) throw std::invalid_argument("sample_covariance: need at least two rows");
  const Matrix c = x.rowwise() - x.colwise().mean();
  return symmetrize(Matrix(c.transpose() * c / static_cast<double>(x.rows() - 1)));
}

BacktestResult run_variant(const BacktestInput& input, const PortfolioVariant& variant, const BacktestOptions& options) {
  const Eigen::Index D = input.returns.rows();
  const Eigen::Index N = input.returns.cols();
  const Eigen::Index W = options.window_days;
  if (W < 2) throw std::invalid_argument("run_backtest: window must be at least two days");
  if (D < W + 1) {
    throw std::invalid_argument(fmt::format("run_backtest: {} days cannot fill a {}-day window plus one", D, W));
  }
  const Matrix& src = variant.liquidity_adjusted() ? input.adjusted_returns : input.returns;
  const std::vector<Matrix>* cov_series = nullptr;
  if (variant.covariance == CovSource::intraday) {
    cov_series = variant.liquidity_adjusted() ? &input.intraday_adjusted : &input.intraday;
  } else if (variant.covariance == CovSource::posterior) {
    cov_series = variant.liquidity_adjusted() ? &input.posterior_adjusted : &input.posterior;
  }
  if (cov_series != nullptr && static_cast<Eigen::Index>(cov_series->size()) != D) {
    throw std::invalid_argument(fmt::format("run_backtest: variant {} covariance series has {} days, expected {}",
                                            variant.id, cov_series->size(), D));
  }

  BacktestResult res;
  res.variant = variant;
  const Eigen::Index days = D - W;
  res.weights = Matrix::Zero(days, N + 1);
  res.realized = Vector::Zero(days);
  Vector prev = Vector::Zero(N + 1);
  prev(N) = 1.0;
  for (Eigen::Index k = 0; k < days; ++k) {
    const Eigen::Index t = W - 1 + k;
    res.dates.push_back(input.dates[static_cast<std::size_t>(t + 1)]);
    Vector wt = prev;
    try {
      const Matrix window = src.middleRows(t - W + 1, W);
      MvProblem prob;
      prob.mu = window.colwise().mean().transpose();
      try {
        prob.lambda = risk_aversion(window);
      } catch (const DegenerateError&) {
        prob.lambda = kLambdaFloor;  // flat market over the window
      }
      if (cov_series == nullptr) {
        prob.sigma = sample_covariance(window);
      } else {
        const Matrix& c = (*cov_series)[static_cast<std::size_t>(t)];
        if (c.size() == 0) throw DegenerateError("covariance unavailable");
        prob.sigma = c;
      }
      const MvSolution sol = solve_mv(prob);
      wt.head(N) = sol.weights;
      wt(N) = sol.cash;
    } catch (const std::exception& e) {
      res.failures.push_back(fmt::format("{}: {}", format_date(input.dates[static_cast<std::size_t>(t)]), e.what()));
    }
    res.weights.row(k) = wt.transpose();
    res.realized(k) = wt.head(N).dot(input.returns.row(t + 1).transpose());
    prev = wt;
  }
  res.sharpe = sharpe_annualized(res.realized, options.periods_per_year);
  return res;
}

std::vector<BacktestResult> run_backtest(const BacktestInput& input, const BacktestOptions& options) {
  std::vector<BacktestResult> out;
  for (int id : options.variants) out.push_back(run_variant(input, portfolio_variant(id), options));
  return out;
}

}  // namespace liqvol
