#include "liqvol/dcc.hpp"

#include "liqvol/linalg.hpp"
#include "liqvol/optim.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace liqvol {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// p_i = e^{x_i} / (1 + sum_j e^{x_j}): positive entries with sum below one
Vector to_simplex(const Vector& x) {
  const double m = std::max(0.0, x.maxCoeff());
  const Vector ex = (x.array() - m).exp();
  const double denom = std::exp(-m) + ex.sum();
  return ex / denom;
}

Vector from_simplex(const Vector& p) {
  const double rest = 1.0 - p.sum();
  return (p.array() / rest).log();
}

double second_moment(const Vector& e) { return e.squaredNorm() / static_cast<double>(e.size()); }

}  // namespace

const char* to_string(DccKind k) { return k == DccKind::dcc ? "dcc" : "adcc"; }

Vector garch_variances(const Garch11Params& p, const Vector& e) {
  const Eigen::Index n = e.size();
  Vector h(n + 1);
  h(0) = second_moment(e);
  for (Eigen::Index t = 0; t < n; ++t) h(t + 1) = garch_next_variance(p, e(t), h(t));
  return h;
}

double garch_loglik(const Garch11Params& p, const Vector& e) {
  const Vector h = garch_variances(p, e);
  double ll = 0.0;
  for (Eigen::Index t = 0; t < e.size(); ++t) {
    if (!(h(t) > 0.0)) return kNegInf;
    ll += std::log(2.0 * std::numbers::pi) + std::log(h(t)) + e(t) * e(t) / h(t);
  }
  return -0.5 * ll;
}

GarchFit fit_garch11(const Vector& e, bool constant_variance) {
  if (e.size() < 50) throw std::invalid_argument("fit_garch11: need at least 50 observations");
  if (!e.allFinite()) throw std::invalid_argument("fit_garch11: non-finite residuals");
  const double v = second_moment(e);
  if (!(v > 0.0)) throw DegenerateError("fit_garch11: residual series has zero variance");

  GarchFit out;
  if (constant_variance) {
    out.params = {v, 0.0, 0.0};
    const double n = static_cast<double>(e.size());
    out.loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi) + std::log(v) + 1.0);
    out.converged = true;
    return out;
  }

  const double scale = std::sqrt(v);
  const Vector z = e / scale;
  auto unpack = [](const Vector& x) {
    const Vector ab = to_simplex(x.tail(2));
    return Garch11Params{std::exp(x(0)), ab(0), ab(1)};
  };
  auto objective = [&](const Vector& x) { return -garch_loglik(unpack(x), z) / static_cast<double>(z.size()); };

  constexpr std::array<std::array<double, 2>, 3> starts = {{{0.05, 0.90}, {0.10, 0.80}, {0.20, 0.60}}};
  double best = kNegInf;
  bool any_converged = false;
  Garch11Params best_params;
  for (const auto& s : starts) {
    Vector x0(3);
    x0(0) = std::log(1.0 - s[0] - s[1]);
    x0.tail(2) = from_simplex(Vector{{s[0], s[1]}});
    const BfgsResult r = minimize_bfgs(objective, x0);
    const double ll = -r.value * static_cast<double>(z.size());
    if (std::isfinite(ll) && ll > best) {
      best = ll;
      best_params = unpack(r.x);
    }
    any_converged = any_converged || r.converged;
  }

  const Garch11Params fallback{0.05, 0.05, 0.90};
  const double fallback_ll = garch_loglik(fallback, z);
  if (!std::isfinite(best) || (!any_converged && fallback_ll > best)) {
    out.params = {fallback.omega * v, fallback.alpha, fallback.beta};
    out.fallback = true;
  } else {
    out.params = {best_params.omega * v, best_params.alpha, best_params.beta};
    out.converged = any_converged;
  }
  out.loglik = garch_loglik(out.params, e);
  return out;
}

CorrelationTargets correlation_targets(const Matrix& xi) {
  const auto n = static_cast<double>(xi.rows());
  CorrelationTargets t;
  t.o_bar = normalize_correlation(Matrix(xi.transpose() * xi / n));
  const Matrix neg = xi.cwiseMin(0.0);
  t.n_bar = neg.transpose() * neg / n;
  return t;
}

Matrix normalize_correlation(const Matrix& o) {
  const Vector d = o.diagonal();
  if ((d.array() <= 0.0).any()) throw DegenerateError("normalize_correlation: non-positive diagonal");
  const Vector inv = d.cwiseSqrt().cwiseInverse();
  Matrix p = inv.asDiagonal() * o * inv.asDiagonal();
  p = symmetrize(p);
  p.diagonal().setOnes();
  return p;
}

CorrelationPath correlation_filter(const DccParams& p, const Matrix& xi, const CorrelationTargets& targets) {
  const Eigen::Index n = xi.rows();
  const Matrix intercept = (1.0 - p.a - p.b) * targets.o_bar - p.g * targets.n_bar;
  CorrelationPath path;
  Matrix o = targets.o_bar;
  double ll = 0.0;
  Eigen::LLT<Matrix> llt;
  for (Eigen::Index t = 0; t < n; ++t) {
    const Vector x = xi.row(t).transpose();
    const Vector d = o.diagonal();
    if ((d.array() <= 0.0).any()) {
      path.valid = false;
      break;
    }
    const Vector inv = d.cwiseSqrt().cwiseInverse();
    const Matrix pt = inv.asDiagonal() * o * inv.asDiagonal();
    llt.compute(pt);
    if (llt.info() != Eigen::Success) {
      path.valid = false;
      break;
    }
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const Vector w = llt.matrixL().solve(x);
    ll += logdet + w.squaredNorm() - x.squaredNorm();
    if (t + 1 == n) path.last_o = o;
    Matrix next = intercept + p.a * x * x.transpose() + p.b * o;
    if (p.g != 0.0) {
      const Vector nt = x.cwiseMin(0.0);
      next += p.g * nt * nt.transpose();
    }
    o = next;
  }
  path.next_o = o;
  path.loglik = path.valid ? -0.5 * ll : kNegInf;
  return path;
}

UnivariateStage filter_univariate(const std::vector<Garch11Params>& params, const Matrix& residuals) {
  const Eigen::Index n = residuals.rows();
  const Eigen::Index N = residuals.cols();
  if (static_cast<Eigen::Index>(params.size()) != N) throw std::invalid_argument("filter_univariate: dimension mismatch");
  UnivariateStage s;
  s.variances.resize(n + 1, N);
  s.xi.resize(n, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    const Vector e = residuals.col(j);
    const auto& p = params[static_cast<std::size_t>(j)];
    s.variances.col(j) = garch_variances(p, e);
    s.xi.col(j) = e.array() / s.variances.col(j).head(n).array().sqrt();
    s.loglik += garch_loglik(p, e);
    GarchFit g;
    g.params = p;
    g.converged = true;
    s.garch.push_back(g);
  }
  return s;
}

UnivariateStage fit_univariate(const Matrix& residuals) {
  std::vector<Garch11Params> params;
  std::vector<GarchFit> fits;
  for (Eigen::Index j = 0; j < residuals.cols(); ++j) {
    fits.push_back(fit_garch11(residuals.col(j)));
    params.push_back(fits.back().params);
  }
  UnivariateStage s = filter_univariate(params, residuals);
  s.garch = std::move(fits);
  return s;
}

namespace {

DccFit assemble(const UnivariateStage& stage, DccKind kind, const DccParams& p, const CorrelationTargets& targets) {
  DccFit fit;
  fit.kind = kind;
  fit.params = p;
  fit.o_bar = targets.o_bar;
  fit.n_bar = targets.n_bar;
  const CorrelationPath path = correlation_filter(p, stage.xi, targets);
  fit.corr_loglik = path.loglik;
  fit.loglik = stage.loglik + path.loglik;
  fit.last_o = path.last_o;
  fit.next_o = path.next_o;
  const Eigen::Index n = stage.xi.rows();
  fit.last_xi = stage.xi.row(n - 1).transpose();
  fit.last_h = stage.variances.row(n - 1).transpose();
  fit.next_h = stage.variances.row(n).transpose();
  for (const auto& g : stage.garch) {
    fit.garch.push_back(g.params);
    if (g.fallback) ++fit.garch_fallbacks;
  }
  return fit;
}

}  // namespace

DccFit fit_dcc(const UnivariateStage& stage, DccKind kind, const DccFit* nested) {
  if (stage.xi.rows() < 2) throw std::invalid_argument("fit_dcc: too few observations");
  const CorrelationTargets targets = correlation_targets(stage.xi);
  const Eigen::Index dim = kind == DccKind::dcc ? 2 : 3;
  const auto n = static_cast<double>(stage.xi.rows());

  auto unpack = [&](const Vector& x) {
    const Vector q = to_simplex(x);
    return DccParams{q(0), q(1), dim == 3 ? q(2) : 0.0};
  };
  auto objective = [&](const Vector& x) { return -correlation_filter(unpack(x), stage.xi, targets).loglik / n; };

  std::vector<Vector> starts;
  if (kind == DccKind::dcc) {
    starts = {Vector{{0.02, 0.95}}, Vector{{0.05, 0.90}}, Vector{{0.10, 0.80}}};
  } else {
    starts = {Vector{{0.02, 0.94, 0.01}}, Vector{{0.05, 0.88, 0.03}}, Vector{{0.08, 0.80, 0.05}}};
  }

  DccParams best{0.0, 0.0, 0.0};  // constant correlation
  double best_ll = correlation_filter(best, stage.xi, targets).loglik;
  bool any_converged = false;
  for (const auto& s : starts) {
    const BfgsResult r = minimize_bfgs(objective, from_simplex(s));
    const double ll = -r.value * n;
    any_converged = any_converged || r.converged;
    if (std::isfinite(ll) && ll > best_ll) {
      best_ll = ll;
      best = unpack(r.x);
    }
  }
  if (nested != nullptr && kind == DccKind::adcc) {
    const DccParams p{nested->params.a, nested->params.b, 0.0};
    const double ll = correlation_filter(p, stage.xi, targets).loglik;
    if (ll >= best_ll) {
      best_ll = ll;
      best = p;
    }
  }

  bool used_fallback = false;
  if (!any_converged) {
    const DccParams fb{0.02, 0.95, 0.0};
    const double ll = correlation_filter(fb, stage.xi, targets).loglik;
    if (ll > best_ll) {
      best = fb;
      used_fallback = true;
    }
  }
  DccFit fit = assemble(stage, kind, best, targets);
  fit.converged = any_converged;
  fit.fallback = used_fallback;
  return fit;
}

DccFit fit_dcc(const Matrix& residuals, DccKind kind) {
  const UnivariateStage stage = fit_univariate(residuals);
  if (kind == DccKind::adcc) {
    const DccFit dcc = fit_dcc(stage, DccKind::dcc);
    return fit_dcc(stage, DccKind::adcc, &dcc);
  }
  return fit_dcc(stage, kind);
}

DccFit filter_dcc(const DccFit& fitted, const Matrix& residuals) {
  const UnivariateStage stage = filter_univariate(fitted.garch, residuals);
  const CorrelationTargets targets = correlation_targets(stage.xi);
  DccFit fit = assemble(stage, fitted.kind, fitted.params, targets);
  fit.converged = fitted.converged;
  fit.fallback = fitted.fallback;
  fit.garch_fallbacks = fitted.garch_fallbacks;
  return fit;
}

const DccFit& select_best(const DccFit& dcc, const DccFit& adcc) {
  const double tol = 1e-9 * std::max(1.0, std::abs(dcc.loglik));
  return adcc.loglik > dcc.loglik + tol ? adcc : dcc;
}

Matrix forecast_covariance(const DccFit& fit, bool* clipped) {
  const Vector h = fit.next_h.cwiseSqrt();
  const Matrix p = normalize_correlation(fit.next_o);
  const Matrix omega = h.asDiagonal() * p * h.asDiagonal();
  return clip_psd(omega, clipped);
}

Matrix scale_covariance_by_jump(const Matrix& omega, const Matrix& b_r) {
  if (omega.rows() != b_r.rows() || omega.cols() != b_r.cols()) {
    throw std::invalid_argument("scale_covariance_by_jump: dimension mismatch");
  }
  const Vector d = b_r.diagonal();
  if ((d.array() <= 0.0).any()) throw std::invalid_argument("scale_covariance_by_jump: jump matrix must be positive diagonal");
  const Vector s = d.cwiseSqrt().cwiseInverse();
  return symmetrize(Matrix(s.asDiagonal() * omega * s.asDiagonal()));
}

}  // namespace liqvol
