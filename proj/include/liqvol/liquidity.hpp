#pragma once

#include "liqvol/marketdata.hpp"
#include "liqvol/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace liqvol {

inline constexpr double kReportCap = 10.0;

/// Day-level summary of one asset.
struct AssetDay {
  std::string symbol;
  Date date{};
  double daily_return = 0.0;      ///< r_t
  double daily_liq_return = 0.0;  ///< r_t^l
  double daily_vol = 0.0;         ///< sigma_t = sqrt(T * minute variance)
  double daily_liq_vol = 0.0;     ///< sigma_t^l
};

struct LiquidityBetas {
  double jump = 0.0;       ///< |r_t / r_t^l|
  double diffusion = 0.0;  ///< sigma_t / sigma_t^l
  bool degenerate = false; ///< zero denominator; values are NaN
};

struct AdjustedMinutes {
  Vector returns;                ///< r_tau^l
  double eta = 0.0;              ///< daily normalization factor
  double minute_variance = 0.0;  ///< (1/T) sum (r^l - mean r^l)^2
};

/// eta_T = T / sum_tau (|r_tau| / mean|r|) / (A_tau / mean A). Minutes with
/// no traded volume are left out of the sum and count once in T_eff, so the
/// traded minutes' weights average exactly one.
double normalization_factor(std::span<const double> returns, std::span<const double> volumes);

/// Per-minute weight eta * (|r|/mean|r|) / (A/mean A); minutes with A = 0 get 1.
Vector liquidity_weights(std::span<const double> returns, std::span<const double> volumes);

AdjustedMinutes liquidity_adjusted_minutes(std::span<const double> returns, std::span<const double> volumes);

/// Population variance (divisor T) of a minute series.
double minute_variance(std::span<const double> returns);

AssetDay summarize_asset_day(const MinuteGrid& grid);

LiquidityBetas liquidity_betas(const AssetDay& day);

/// Covariance (divisor T) of the N minute series, scaled by T. `adjusted`
/// selects the liquidity-adjusted minute returns.
Matrix intraday_covariance(std::span<const MinuteGrid> grids, bool adjusted);

/// Diagonal jump matrix from per-asset jump betas.
Matrix jump_matrix(std::span<const LiquidityBetas> betas);

/// Solves Sigma = B Sigma^l B^T through the conditional SVD. Throws
/// DegenerateError when Sigma^l is singular and the floored solution does not
/// reconstruct Sigma.
Matrix diffusion_matrix(const Matrix& sigma, const Matrix& sigma_adjusted);

/// B_sigma * B_r^{-1/2}.
Matrix composite_matrix(const Matrix& b_sigma, const Matrix& b_r);

struct CappedDeterminant {
  double raw = 0.0;       ///< signed determinant
  double reported = 0.0;  ///< min(|det|, cap)
};

CappedDeterminant capped_determinant(const Matrix& m, double cap = kReportCap);

struct LiquiditySnapshot {
  Date date{};
  std::vector<std::string> symbols;
  Vector q;             ///< regular daily returns
  Vector q_adjusted;    ///< liquidity-adjusted daily returns
  Vector daily_vol;
  Vector daily_liq_vol;
  Matrix sigma_tt;      ///< regular intraday covariance (x T)
  Matrix sigma_tt_adjusted;
  std::vector<LiquidityBetas> betas;
  Matrix b_r;
  Matrix b_sigma;
  Matrix b_comp;
  CappedDeterminant det_jump;
  CappedDeterminant det_diff;
  CappedDeterminant det_comp;
  double diffusion_residual = 0.0;
  bool degenerate = false;  ///< betas or diffusion matrix undefined on this day
  std::string note;
};

/// Builds the portfolio snapshot of one day; `grids` must share the date and
/// be ordered by asset.
LiquiditySnapshot build_snapshot(std::span<const MinuteGrid> grids);

}  // namespace liqvol
