#pragma once

#include "liqvol/types.hpp"

#include <vector>

namespace liqvol {

inline constexpr int kMaxLag = 5;

/// Rows of a window are observations (time), columns are assets.
struct JohansenResult {
  int rank = 0;
  Vector eigenvalues;       ///< descending
  Vector trace_stats;       ///< trace statistic for H0: rank <= r, r = 0..N-1
  Vector critical_values;   ///< 5% values matched to trace_stats
  Matrix beta;              ///< eigenvectors, normalized so beta' S11 beta = I
};

/// 5% trace critical value, no deterministic terms, for `dim` = N - r.
double johansen_critical_value(int dim);

/// Trace test on a level series with `lag` level-VAR lags (lag - 1 lagged
/// differences in the auxiliary regressions).
JohansenResult johansen_trace(const Matrix& window, int lag);

struct LagSelection {
  int lag = 1;
  std::vector<double> aic;  ///< aic[p - 1] for p = 1..kMaxLag
};

/// AIC over p = 1..5 for the level VAR without intercept, all fits on the
/// common sample that starts after the fifth observation.
LagSelection select_lag(const Matrix& window);

struct VecmFit {
  int lag = 1;
  int coint_rank = 0;
  Matrix gamma;                   ///< loading times cointegrating matrix
  std::vector<Matrix> phi_star;   ///< lag - 1 short-run matrices
  std::vector<Matrix> phi;        ///< equivalent level-VAR matrices, lag of them
  Matrix residuals;               ///< (length - lag) x N
  Matrix residual_cov;            ///< residuals' residuals / n
  double aic = 0.0;
  double loglik = 0.0;
  bool ridge = false;             ///< ridge fallback was used for a singular regressor matrix
};

/// Converts ECM coefficients to level-VAR matrices.
std::vector<Matrix> ecm_to_var(const Matrix& gamma, const std::vector<Matrix>& phi_star);

VecmFit fit_vecm(const Matrix& window, int lag, int coint_rank);

/// Lag selection, trace test and fit in one call.
struct VecmModel {
  VecmFit fit;
  JohansenResult johansen;
  LagSelection lags;
};
VecmModel estimate_vecm(const Matrix& window);

struct ReturnForecast {
  Vector q_hat;
  Vector e_hat;  ///< q_hat - observed, empty until observed
};

/// In-sample residuals Q_t - sum phi_i Q_{t-i} of `window` under fixed
/// coefficients, one row per t = lag..L-1.
Matrix vecm_residuals(const VecmFit& fit, const Matrix& window);

/// `history` holds at least `fit.lag` rows; the last row is the most recent.
ReturnForecast forecast_one_step(const VecmFit& fit, const Matrix& history);

/// e_hat = q_hat - observed.
void attach_observation(ReturnForecast& f, const Vector& observed);

/// Level-VAR recursion Q_t = sum phi_i Q_{t-i} + shock_t. The first rows of
/// the output copy `initial` (phi.size() rows).
Matrix simulate_var(const std::vector<Matrix>& phi, const Matrix& initial, const Matrix& shocks);

/// ECM recursion dQ_t = gamma Q_{t-1} + sum phi_star_i dQ_{t-i} + shock_t from
/// the same initial rows.
Matrix simulate_ecm(const Matrix& gamma, const std::vector<Matrix>& phi_star, const Matrix& initial,
                    const Matrix& shocks);

}  // namespace liqvol
