#include "liqvol/liquidity.hpp"

#include "liqvol/condsvd.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numeric>

namespace liqvol {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_lengths(std::span<const double> returns, std::span<const double> volumes) {
  if (returns.size() != volumes.size()) throw std::invalid_argument("returns and volumes differ in length");
  if (returns.size() < 2) throw std::invalid_argument("a day needs at least two minutes");
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double normalization_factor(std::span<const double> returns, std::span<const double> volumes) {
  check_lengths(returns, volumes);
  double mean_abs_r = 0.0;
  for (double r : returns) mean_abs_r += std::abs(r);
  mean_abs_r /= static_cast<double>(returns.size());
  const double mean_volume = mean(volumes);
  if (!(mean_abs_r > 0.0)) throw DegenerateError("degenerate day: every minute return is zero");
  if (!(mean_volume > 0.0)) throw DegenerateError("degenerate day: no traded volume");

  double sum = 0.0;
  std::size_t traded = 0;
  for (std::size_t k = 0; k < returns.size(); ++k) {
    if (volumes[k] <= 0.0) continue;
    ++traded;
    sum += (std::abs(returns[k]) / mean_abs_r) / (volumes[k] / mean_volume);
  }
  if (!(sum > 0.0)) throw DegenerateError("degenerate day: no traded minute has a nonzero return");
  return static_cast<double>(traded) / sum;
}

Vector liquidity_weights(std::span<const double> returns, std::span<const double> volumes) {
  const double eta = normalization_factor(returns, volumes);
  double mean_abs_r = 0.0;
  for (double r : returns) mean_abs_r += std::abs(r);
  mean_abs_r /= static_cast<double>(returns.size());
  const double mean_volume = mean(volumes);
  Vector w(static_cast<Eigen::Index>(returns.size()));
  for (std::size_t k = 0; k < returns.size(); ++k) {
    w(static_cast<Eigen::Index>(k)) =
        volumes[k] > 0.0 ? eta * (std::abs(returns[k]) / mean_abs_r) / (volumes[k] / mean_volume) : 1.0;
  }
  return w;
}

double minute_variance(std::span<const double> returns) {
  const double m = mean(returns);
  double acc = 0.0;
  for (double r : returns) acc += (r - m) * (r - m);
  return acc / static_cast<double>(returns.size());
}

AdjustedMinutes liquidity_adjusted_minutes(std::span<const double> returns, std::span<const double> volumes) {
  AdjustedMinutes out;
  out.eta = normalization_factor(returns, volumes);
  const Vector w = liquidity_weights(returns, volumes);
  out.returns.resize(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    out.returns(k) = std::sqrt(w(k)) * returns[static_cast<std::size_t>(k)];
  }
  out.minute_variance = minute_variance(std::span<const double>(out.returns.data(), static_cast<std::size_t>(out.returns.size())));
  return out;
}

AssetDay summarize_asset_day(const MinuteGrid& grid) {
  const auto T = static_cast<double>(grid.returns.size());
  const auto adjusted = liquidity_adjusted_minutes(grid.returns, grid.dollar_volume);
  AssetDay day;
  day.symbol = grid.symbol;
  day.date = grid.date;
  day.daily_return = daily_compound_return(grid.returns);
  day.daily_liq_return =
      daily_compound_return(std::span<const double>(adjusted.returns.data(), static_cast<std::size_t>(adjusted.returns.size())));
  day.daily_vol = std::sqrt(T * minute_variance(grid.returns));
  day.daily_liq_vol = std::sqrt(T * adjusted.minute_variance);
  return day;
}

LiquidityBetas liquidity_betas(const AssetDay& day) {
  LiquidityBetas b;
  if (day.daily_liq_return == 0.0 || day.daily_liq_vol == 0.0 || !std::isfinite(day.daily_liq_return) ||
      !std::isfinite(day.daily_liq_vol)) {
    b.jump = kNaN;
    b.diffusion = kNaN;
    b.degenerate = true;
    return b;
  }
  b.jump = std::abs(day.daily_return / day.daily_liq_return);
  b.diffusion = day.daily_vol / day.daily_liq_vol;
  return b;
}

Matrix intraday_covariance(std::span<const MinuteGrid> grids, bool adjusted) {
  if (grids.empty()) throw std::invalid_argument("intraday_covariance: no assets");
  const std::size_t T = grids.front().returns.size();
  const auto n = static_cast<Eigen::Index>(grids.size());
  Matrix x(static_cast<Eigen::Index>(T), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& g = grids[static_cast<std::size_t>(j)];
    if (g.returns.size() != T || g.dollar_volume.size() != T) {
      throw std::invalid_argument("intraday_covariance: grids differ in minutes per day");
    }
    if (g.date != grids.front().date) throw std::invalid_argument("intraday_covariance: grids differ in date");
    if (adjusted) {
      x.col(j) = liquidity_adjusted_minutes(g.returns, g.dollar_volume).returns;
    } else {
      x.col(j) = Eigen::Map<const Vector>(g.returns.data(), static_cast<Eigen::Index>(T));
    }
  }
  const Matrix centered = x.rowwise() - x.colwise().mean();
  // divisor T cancels against the scaling by T
  return symmetrize(centered.transpose() * centered);
}

Matrix jump_matrix(std::span<const LiquidityBetas> betas) {
  const auto n = static_cast<Eigen::Index>(betas.size());
  Matrix b = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double beta = betas[static_cast<std::size_t>(i)].jump;
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw std::invalid_argument(fmt::format("jump_matrix: beta of asset {} is not positive", i));
    }
    b(i, i) = beta;
  }
  return b;
}

Matrix diffusion_matrix(const Matrix& sigma, const Matrix& sigma_adjusted) {
  const auto res = conditional_svd(sigma, sigma_adjusted);
  if (res.regularized && res.residual > 1e-8) {
    const auto eig = sorted_eigen(sigma_adjusted);
    const Eigen::Index last = eig.values.size() - 1;
    Eigen::Index asset = 0;
    eig.vectors.col(last).cwiseAbs().maxCoeff(&asset);
    throw DegenerateError(fmt::format(
        "diffusion_matrix: adjusted covariance is singular (null direction dominated by asset {}, "
        "residual {:.3g})",
        asset, res.residual));
  }
  return res.H;
}

Matrix composite_matrix(const Matrix& b_sigma, const Matrix& b_r) {
  if (b_r.rows() != b_r.cols() || b_sigma.rows() != b_r.rows() || b_sigma.cols() != b_r.cols()) {
    throw std::invalid_argument("composite_matrix: dimension mismatch");
  }
  const Vector d = b_r.diagonal();
  if ((d.array() <= 0.0).any()) throw std::invalid_argument("composite_matrix: jump matrix must be positive diagonal");
  return b_sigma * d.cwiseSqrt().cwiseInverse().asDiagonal();
}

CappedDeterminant capped_determinant(const Matrix& m, double cap) {
  if (m.rows() != m.cols()) throw std::invalid_argument("capped_determinant: matrix is not square");
  CappedDeterminant d;
  d.raw = m.determinant();
  d.reported = std::min(std::abs(d.raw), cap);
  return d;
}

LiquiditySnapshot build_snapshot(std::span<const MinuteGrid> grids) {
  if (grids.empty()) throw std::invalid_argument("build_snapshot: no assets");
  const auto n = static_cast<Eigen::Index>(grids.size());
  LiquiditySnapshot s;
  s.date = grids.front().date;
  s.q.resize(n);
  s.q_adjusted.resize(n);
  s.daily_vol.resize(n);
  s.daily_liq_vol.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& g = grids[static_cast<std::size_t>(i)];
    s.symbols.push_back(g.symbol);
    AssetDay day;
    try {
      day = summarize_asset_day(g);
    } catch (const std::domain_error& e) {
      // an all-flat or untraded asset-day: liquidity adjustment is undefined,
      // the adjusted series falls back to the regular one
      day.symbol = g.symbol;
      day.date = g.date;
      day.daily_return = daily_compound_return(g.returns);
      day.daily_liq_return = day.daily_return;
      day.daily_vol = std::sqrt(static_cast<double>(g.returns.size()) * minute_variance(g.returns));
      day.daily_liq_vol = day.daily_vol;
      s.degenerate = true;
      s.note += fmt::format("{}: {}; ", g.symbol, e.what());
    }
    s.q(i) = day.daily_return;
    s.q_adjusted(i) = day.daily_liq_return;
    s.daily_vol(i) = day.daily_vol;
    s.daily_liq_vol(i) = day.daily_liq_vol;
    LiquidityBetas b = liquidity_betas(day);
    if (!b.degenerate && !(b.jump > 0.0)) {
      b.degenerate = true;
      s.note += fmt::format("{}: zero jump beta; ", g.symbol);
    }
    if (b.degenerate) s.degenerate = true;
    s.betas.push_back(b);
  }

  bool any_adjust_failed = false;
  try {
    s.sigma_tt = intraday_covariance(grids, false);
    s.sigma_tt_adjusted = intraday_covariance(grids, true);
  } catch (const std::domain_error&) {
    any_adjust_failed = true;
  }
  if (any_adjust_failed) {
    // per-asset fallback mirrors the daily series above
    const std::size_t T = grids.front().returns.size();
    Matrix x(static_cast<Eigen::Index>(T), n);
    Matrix xl(static_cast<Eigen::Index>(T), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& g = grids[static_cast<std::size_t>(j)];
      x.col(j) = Eigen::Map<const Vector>(g.returns.data(), static_cast<Eigen::Index>(T));
      try {
        xl.col(j) = liquidity_adjusted_minutes(g.returns, g.dollar_volume).returns;
      } catch (const std::domain_error&) {
        xl.col(j) = x.col(j);
      }
    }
    const Matrix c = x.rowwise() - x.colwise().mean();
    const Matrix cl = xl.rowwise() - xl.colwise().mean();
    s.sigma_tt = symmetrize(c.transpose() * c);
    s.sigma_tt_adjusted = symmetrize(cl.transpose() * cl);
  }

  const double nan = kNaN;
  s.det_jump = {nan, nan};
  s.det_diff = {nan, nan};
  s.det_comp = {nan, nan};
  if (!s.degenerate) {
    s.b_r = jump_matrix(s.betas);
    s.det_jump = capped_determinant(s.b_r);
  }
  try {
    const auto res = conditional_svd(s.sigma_tt, s.sigma_tt_adjusted);
    s.diffusion_residual = res.residual;
    if (res.regularized && res.residual > 1e-8) {
      s.degenerate = true;
      s.note += "adjusted intraday covariance is singular; ";
    } else {
      s.b_sigma = res.H;
      s.det_diff = capped_determinant(s.b_sigma);
      if (s.b_r.size() > 0) {
        s.b_comp = composite_matrix(s.b_sigma, s.b_r);
        s.det_comp = capped_determinant(s.b_comp);
      }
    }
  } catch (const std::exception& e) {
    s.degenerate = true;
    s.note += std::string(e.what()) + "; ";
  }
  return s;
}

}  // namespace liqvol
