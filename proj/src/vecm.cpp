#include "liqvol/vecm.hpp"

#include "liqvol/linalg.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <numbers>

namespace liqvol {

namespace {

// MacKinnon-Haug-Michelis 5% trace values, no deterministic terms, N - r = 1..12
constexpr std::array<double, 12> kTrace95 = {4.1296,   12.3212,  24.2761,  40.1749,  60.0627,  83.9383,
                                             111.7797, 143.6691, 179.5199, 219.4051, 263.2603, 311.1288};

struct OlsResult {
  Matrix coef;  // k x N, y = x * coef
  Matrix resid;
  bool ridge = false;
};

OlsResult ols(const Matrix& x, const Matrix& y) {
  OlsResult r;
  if (x.cols() == 0) {
    r.coef = Matrix::Zero(0, y.cols());
    r.resid = y;
    return r;
  }
  Matrix xtx = x.transpose() * x;
  const Eigen::SelfAdjointEigenSolver<Matrix> es(xtx, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || lmin / lmax < 1e-12) {
    const double k = static_cast<double>(xtx.rows());
    const double trace = xtx.trace();
    xtx.diagonal().array() += 1e-8 * (trace > 0.0 ? trace : 1.0) / k;
    r.ridge = true;
  }
  r.coef = xtx.ldlt().solve(x.transpose() * y);
  r.resid = y - x * r.coef;
  return r;
}

void check_window(const Matrix& window, int lag) {
  if (lag < 1) throw std::invalid_argument("lag must be at least 1");
  if (window.cols() < 1) throw std::invalid_argument("window has no series");
  if (!window.allFinite()) throw std::invalid_argument("window contains non-finite values");
  if (window.rows() <= lag + 1) throw std::invalid_argument("window is too short for the lag order");
}

// Rows t = lag .. L-1 of dQ_t, Q_{t-1} and the lagged differences.
struct EcmDesign {
  Matrix z0;  // dQ_t
  Matrix z1;  // Q_{t-1}
  Matrix z2;  // [dQ_{t-1}, ..., dQ_{t-lag+1}]
};

EcmDesign ecm_design(const Matrix& q, int lag) {
  const Eigen::Index L = q.rows();
  const Eigen::Index N = q.cols();
  const Eigen::Index n = L - lag;
  EcmDesign d{Matrix(n, N), Matrix(n, N), Matrix(n, N * (lag - 1))};
  for (Eigen::Index row = 0; row < n; ++row) {
    const Eigen::Index t = row + lag;
    d.z0.row(row) = q.row(t) - q.row(t - 1);
    d.z1.row(row) = q.row(t - 1);
    for (int i = 1; i < lag; ++i) {
      d.z2.block(row, N * (i - 1), 1, N) = q.row(t - i) - q.row(t - i - 1);
    }
  }
  return d;
}

double gaussian_loglik(const Matrix& cov, Eigen::Index n) {
  const double N = static_cast<double>(cov.rows());
  const double logdet = Eigen::LDLT<Matrix>(cov).vectorD().array().log().sum();
  return -0.5 * static_cast<double>(n) * (N * std::log(2.0 * std::numbers::pi) + logdet + N);
}

}  // namespace

double johansen_critical_value(int dim) {
  if (dim < 1) throw std::invalid_argument("johansen_critical_value: dimension must be positive");
  if (dim <= static_cast<int>(kTrace95.size())) return kTrace95[static_cast<std::size_t>(dim - 1)];
  // beyond the table: quadratic continuation with the last second difference
  const double d2 = (kTrace95[11] - kTrace95[10]) - (kTrace95[10] - kTrace95[9]);
  double prev = kTrace95[10];
  double cur = kTrace95[11];
  for (int k = 13; k <= dim; ++k) {
    const double next = cur + (cur - prev) + d2;
    prev = cur;
    cur = next;
  }
  return cur;
}

JohansenResult johansen_trace(const Matrix& window, int lag) {
  check_window(window, lag);
  const Eigen::Index N = window.cols();
  if (window.rows() < 10 * N) {
    throw std::invalid_argument(
        fmt::format("johansen_trace: need at least {} observations for {} series, got {}", 10 * N, N, window.rows()));
  }
  const EcmDesign d = ecm_design(window, lag);
  const auto n = static_cast<double>(d.z0.rows());
  const Matrix r0 = ols(d.z2, d.z0).resid;
  const Matrix r1 = ols(d.z2, d.z1).resid;
  const Matrix s00 = r0.transpose() * r0 / n;
  const Matrix s01 = r0.transpose() * r1 / n;
  const Matrix s11 = symmetrize(Matrix(r1.transpose() * r1 / n));
  const Matrix lhs = symmetrize(Matrix(s01.transpose() * s00.ldlt().solve(s01)));

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(lhs, s11);
  if (ges.info() != Eigen::Success) throw DegenerateError("johansen_trace: eigenproblem failed (singular levels covariance)");

  JohansenResult res;
  res.eigenvalues.resize(N);
  res.beta.resize(N, N);
  for (Eigen::Index k = 0; k < N; ++k) {  // solver order is ascending
    res.eigenvalues(k) = std::clamp(ges.eigenvalues()(N - 1 - k), 0.0, 1.0 - 1e-15);
    res.beta.col(k) = ges.eigenvectors().col(N - 1 - k);
  }
  res.trace_stats.resize(N);
  res.critical_values.resize(N);
  for (Eigen::Index r = 0; r < N; ++r) {
    double stat = 0.0;
    for (Eigen::Index i = r; i < N; ++i) stat -= n * std::log1p(-res.eigenvalues(i));
    res.trace_stats(r) = stat;
    res.critical_values(r) = johansen_critical_value(static_cast<int>(N - r));
  }
  int rank = 0;
  while (rank < N && res.trace_stats(rank) > res.critical_values(rank)) ++rank;
  res.rank = rank;
  return res;
}

LagSelection select_lag(const Matrix& window) {
  const Eigen::Index L = window.rows();
  const Eigen::Index N = window.cols();
  const Eigen::Index n = L - kMaxLag;
  if (n <= kMaxLag * N) {
    throw std::invalid_argument(
        fmt::format("select_lag: need more than {} observations for {} series, got {}", kMaxLag + kMaxLag * N, N, L));
  }
  LagSelection out;
  double best = std::numeric_limits<double>::infinity();
  const Matrix y = window.bottomRows(n);
  for (int p = 1; p <= kMaxLag; ++p) {
    Matrix x(n, N * p);
    for (int i = 1; i <= p; ++i) x.middleCols(N * (i - 1), N) = window.middleRows(kMaxLag - i, n);
    const OlsResult r = ols(x, y);
    const Matrix cov = r.resid.transpose() * r.resid / static_cast<double>(n);
    const double logdet = Eigen::LDLT<Matrix>(cov).vectorD().array().log().sum();
    const double aic = logdet + 2.0 * static_cast<double>(p * N * N) / static_cast<double>(n);
    out.aic.push_back(aic);
    if (aic < best) {
      best = aic;
      out.lag = p;
    }
  }
  return out;
}

std::vector<Matrix> ecm_to_var(const Matrix& gamma, const std::vector<Matrix>& phi_star) {
  const Eigen::Index N = gamma.rows();
  const std::size_t p = phi_star.size() + 1;
  std::vector<Matrix> phi(p);
  phi[0] = Matrix::Identity(N, N) + gamma;
  if (p > 1) phi[0] += phi_star[0];
  for (std::size_t i = 1; i + 1 < p; ++i) phi[i] = phi_star[i] - phi_star[i - 1];
  if (p > 1) phi[p - 1] = -phi_star[p - 2];
  return phi;
}

VecmFit fit_vecm(const Matrix& window, int lag, int coint_rank) {
  check_window(window, lag);
  const Eigen::Index N = window.cols();
  if (coint_rank < 0 || coint_rank > N) throw std::invalid_argument("fit_vecm: rank out of range");
  const EcmDesign d = ecm_design(window, lag);
  const Eigen::Index n = d.z0.rows();
  if (n <= N * lag) throw std::invalid_argument("fit_vecm: window is too short for the lag order");

  VecmFit fit;
  fit.lag = lag;
  fit.coint_rank = coint_rank;
  Matrix short_run;  // (N*(lag-1)) x N
  if (coint_rank == N) {
    Matrix x(n, N * lag);
    x << d.z1, d.z2;
    const OlsResult r = ols(x, d.z0);
    fit.ridge = r.ridge;
    fit.gamma = r.coef.topRows(N).transpose();
    short_run = r.coef.bottomRows(N * (lag - 1));
    fit.residuals = r.resid;
  } else if (coint_rank == 0) {
    const OlsResult r = ols(d.z2, d.z0);
    fit.ridge = r.ridge;
    fit.gamma = Matrix::Zero(N, N);
    short_run = r.coef;
    fit.residuals = r.resid;
  } else {
    const JohansenResult jo = johansen_trace(window, lag);
    const auto nd = static_cast<double>(n);
    const OlsResult p0 = ols(d.z2, d.z0);
    const OlsResult p1 = ols(d.z2, d.z1);
    const Matrix s01 = p0.resid.transpose() * p1.resid / nd;
    const Matrix beta = jo.beta.leftCols(coint_rank);
    const Matrix alpha = s01 * beta;
    fit.gamma = alpha * beta.transpose();
    const OlsResult r = ols(d.z2, Matrix(d.z0 - d.z1 * fit.gamma.transpose()));
    fit.ridge = p0.ridge || p1.ridge || r.ridge;
    short_run = r.coef;
    fit.residuals = r.resid;
  }
  for (int i = 1; i < lag; ++i) {
    fit.phi_star.push_back(short_run.middleRows(N * (i - 1), N).transpose());
  }
  fit.phi = ecm_to_var(fit.gamma, fit.phi_star);
  fit.residual_cov = fit.residuals.transpose() * fit.residuals / static_cast<double>(n);
  fit.loglik = gaussian_loglik(fit.residual_cov, n);
  const double k = static_cast<double>(N * N * (lag - 1)) +
                   static_cast<double>(coint_rank == N ? N * N : coint_rank * (2 * N - coint_rank));
  fit.aic = -2.0 * fit.loglik / static_cast<double>(n) + 2.0 * k / static_cast<double>(n);
  return fit;
}

VecmModel estimate_vecm(const Matrix& window) {
  VecmModel m;
  m.lags = select_lag(window);
  m.johansen = johansen_trace(window, m.lags.lag);
  m.fit = fit_vecm(window, m.lags.lag, m.johansen.rank);
  return m;
}

Matrix vecm_residuals(const VecmFit& fit, const Matrix& window) {
  check_window(window, fit.lag);
  const Eigen::Index N = fit.gamma.rows();
  if (window.cols() != N) throw std::invalid_argument("vecm_residuals: dimension mismatch");
  const Eigen::Index n = window.rows() - fit.lag;
  Matrix e(n, N);
  for (Eigen::Index row = 0; row < n; ++row) {
    const Eigen::Index t = row + fit.lag;
    Vector r = window.row(t).transpose();
    for (int i = 1; i <= fit.lag; ++i) r -= fit.phi[static_cast<std::size_t>(i - 1)] * window.row(t - i).transpose();
    e.row(row) = r.transpose();
  }
  return e;
}

ReturnForecast forecast_one_step(const VecmFit& fit, const Matrix& history) {
  if (history.rows() < fit.lag) throw std::invalid_argument("forecast_one_step: history shorter than the lag order");
  const Eigen::Index N = fit.gamma.rows();
  if (history.cols() != N) throw std::invalid_argument("forecast_one_step: dimension mismatch");
  ReturnForecast f;
  f.q_hat = Vector::Zero(N);
  const Eigen::Index last = history.rows() - 1;
  for (int i = 1; i <= fit.lag; ++i) {
    f.q_hat += fit.phi[static_cast<std::size_t>(i - 1)] * history.row(last - i + 1).transpose();
  }
  return f;
}

void attach_observation(ReturnForecast& f, const Vector& observed) {
  if (observed.size() != f.q_hat.size()) throw std::invalid_argument("attach_observation: dimension mismatch");
  f.e_hat = f.q_hat - observed;
}

Matrix simulate_var(const std::vector<Matrix>& phi, const Matrix& initial, const Matrix& shocks) {
  const auto p = static_cast<Eigen::Index>(phi.size());
  if (p < 1 || initial.rows() != p) throw std::invalid_argument("simulate_var: need one initial row per lag");
  Matrix out(p + shocks.rows(), initial.cols());
  out.topRows(p) = initial;
  for (Eigen::Index t = p; t < out.rows(); ++t) {
    Vector next = shocks.row(t - p).transpose();
    for (Eigen::Index i = 1; i <= p; ++i) next += phi[static_cast<std::size_t>(i - 1)] * out.row(t - i).transpose();
    out.row(t) = next.transpose();
  }
  return out;
}

Matrix simulate_ecm(const Matrix& gamma, const std::vector<Matrix>& phi_star, const Matrix& initial,
                    const Matrix& shocks) {
  const auto p = static_cast<Eigen::Index>(phi_star.size()) + 1;
  if (initial.rows() != p) throw std::invalid_argument("simulate_ecm: need one initial row per lag");
  Matrix out(p + shocks.rows(), initial.cols());
  out.topRows(p) = initial;
  for (Eigen::Index t = p; t < out.rows(); ++t) {
    Vector dq = gamma * out.row(t - 1).transpose() + shocks.row(t - p).transpose();
    for (Eigen::Index i = 1; i < p; ++i) {
      dq += phi_star[static_cast<std::size_t>(i - 1)] * (out.row(t - i) - out.row(t - i - 1)).transpose();
    }
    out.row(t) = out.row(t - 1) + dq.transpose();
  }
  return out;
}

}  // namespace liqvol
