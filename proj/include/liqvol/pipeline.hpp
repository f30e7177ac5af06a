#pragma once

#include "liqvol/marketdata.hpp"
#include "liqvol/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace liqvol {

struct RunConfig {
  std::filesystem::path minute_csv;               ///< data.minutes
  std::filesystem::path tick_csv;                 ///< data.ticks, used when no minute file is given
  std::optional<SyntheticSpec> synthetic;         ///< data.synthetic: generate the input
  CalendarSpec calendar = CalendarSpec::crypto();
  int window_days = 365;
  int refit_stride = 1;
  double tau = 1.0;
  std::vector<int> variants{1, 2, 3, 4, 5, 6};
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 7;
  int threads = 1;
  int periods_per_year = 0;  ///< 0: 365 for crypto, 252 for equity
  std::size_t histogram_bins = 50;
  std::string portfolio_name = "portfolio";

  int annualization() const;
  void validate() const;
};

/// Parses the JSON config; relative data paths resolve against `base_dir`.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the settings a stage depends on (threads and output
/// directory never enter).
std::string stage_fingerprint(const RunConfig& config, const std::string& stage);
std::string fnv1a_hex(const std::string& bytes);

struct StageReport {
  std::string stage;
  bool skipped = false;  ///< outputs already present for the same fingerprint
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

StageReport run_liquidity(const RunConfig& config);
StageReport run_forecast(const RunConfig& config);
StageReport run_backtest(const RunConfig& config);
StageReport run_report(const RunConfig& config);

}  // namespace liqvol
