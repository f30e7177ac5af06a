#pragma once

#include "liqvol/marketdata.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace liqvol {

/// Crypto-like minute data: daily GARCH volatility, a common factor, fat
/// tailed minute shocks and traded amounts that follow |r|, except on
/// liquidity-jump days where volume spikes arrive independently of returns.
struct SyntheticSpec {
  int assets = 8;
  int days = 600;
  int minutes_per_day = 48;
  std::uint64_t seed = 7;
  double jump_regime_share = 0.35;  ///< share of days in the decoupled-volume regime
  Date start = Date{std::chrono::year{2021} / 1 / 1};
};

struct SyntheticData {
  std::vector<MinuteGrid> grids;  ///< sorted by (date, symbol), closes filled
  std::vector<bool> jump_regime;  ///< per day
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Generates and writes the dataset as a minute CSV on a crypto calendar with
/// spec.minutes_per_day minutes per session.
void write_synthetic_csv(const std::filesystem::path& path, const SyntheticSpec& spec);

}  // namespace liqvol
