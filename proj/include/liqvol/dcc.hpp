#pragma once

#include "liqvol/types.hpp"

#include <vector>

namespace liqvol {

struct Garch11Params {
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

/// h_{t+1} = omega + alpha e_t^2 + beta h_t
inline double garch_next_variance(const Garch11Params& p, double e, double h) {
  return p.omega + p.alpha * e * e + p.beta * h;
}

/// Conditional variances h_1..h_{n+1}; h_1 is the sample second moment of e
/// and the last entry is the one-step forecast.
Vector garch_variances(const Garch11Params& p, const Vector& e);

/// Gaussian log-likelihood of e under the recursion.
double garch_loglik(const Garch11Params& p, const Vector& e);

struct GarchFit {
  Garch11Params params;
  double loglik = 0.0;
  bool converged = false;
  bool fallback = false;  ///< variance targeting with (0.05, 0.90)
};

/// Gaussian quasi-MLE. With `constant_variance` the dynamics are fixed at
/// alpha = beta = 0 and omega is the sample second moment.
GarchFit fit_garch11(const Vector& e, bool constant_variance = false);

enum class DccKind { dcc, adcc };
const char* to_string(DccKind k);

struct DccParams {
  double a = 0.0;
  double b = 0.0;
  double g = 0.0;
};

struct CorrelationTargets {
  Matrix o_bar;  ///< correlation of standardized residuals
  Matrix n_bar;  ///< mean of n_t n_t', n_t = 1[xi < 0] o xi
};

CorrelationTargets correlation_targets(const Matrix& xi);

/// Rescales a positive-diagonal matrix to unit diagonal.
Matrix normalize_correlation(const Matrix& o);

struct CorrelationPath {
  double loglik = 0.0;  ///< -1/2 sum (log|P_t| + xi' P_t^{-1} xi - xi' xi)
  Matrix last_o;        ///< O_n
  Matrix next_o;        ///< O_{n+1}
  bool valid = true;    ///< false when some P_t is not positive definite
};

/// O_1 = O_bar; O_{t+1} = (1-a-b) O_bar - g N_bar + a xi xi' + b O_t + g n n'.
CorrelationPath correlation_filter(const DccParams& p, const Matrix& xi, const CorrelationTargets& targets);

/// First-stage output shared by DCC and ADCC fits on one window.
struct UnivariateStage {
  std::vector<GarchFit> garch;
  Matrix variances;  ///< (n+1) x N, last row is the forecast
  Matrix xi;         ///< n x N standardized residuals
  double loglik = 0.0;
};

UnivariateStage fit_univariate(const Matrix& residuals);
/// Re-filters residuals through fixed GARCH parameters.
UnivariateStage filter_univariate(const std::vector<Garch11Params>& params, const Matrix& residuals);

struct DccFit {
  DccKind kind = DccKind::dcc;
  DccParams params;
  Matrix o_bar;
  Matrix n_bar;
  double loglik = 0.0;       ///< univariate plus correlation part
  double corr_loglik = 0.0;
  std::vector<Garch11Params> garch;
  Vector last_xi;
  Matrix last_o;
  Matrix next_o;
  Vector last_h;   ///< variances at the last in-sample day
  Vector next_h;   ///< one-step variance forecasts
  bool converged = false;
  bool fallback = false;     ///< correlation fallback (0.02, 0.95) was used
  int garch_fallbacks = 0;
};

DccFit fit_dcc(const Matrix& residuals, DccKind kind);
/// `nested` (a DCC fit on the same stage) is added as an ADCC candidate with g = 0.
DccFit fit_dcc(const UnivariateStage& stage, DccKind kind, const DccFit* nested = nullptr);

/// Applies the parameters of `fitted` to new residuals without re-estimation.
DccFit filter_dcc(const DccFit& fitted, const Matrix& residuals);

/// Strictly higher log-likelihood wins; ties (within 1e-9 relative) go to DCC.
const DccFit& select_best(const DccFit& dcc, const DccFit& adcc);

/// H P H with H = diag(sqrt(next_h)) and P the normalized next_o. Negative
/// eigenvalues are clipped and reported through `clipped`.
Matrix forecast_covariance(const DccFit& fit, bool* clipped = nullptr);

/// B_r^{-1/2} Omega B_r^{-1/2}
Matrix scale_covariance_by_jump(const Matrix& omega, const Matrix& b_r);

}  // namespace liqvol
