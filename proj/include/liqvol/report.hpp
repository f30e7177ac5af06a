#pragma once

#include "liqvol/portfolio.hpp"
#include "liqvol/stats.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace liqvol {

/// Descriptive statistics of the three liquidity determinants.
struct LiquidityTable {
  DescriptiveRow jump;
  DescriptiveRow diffusion;
  DescriptiveRow composite;
};

/// Writes <stem>.csv and <stem>.md. Each writer overwrites its files.
void write_table1(const std::filesystem::path& stem, const LiquidityTable& table, const std::string& portfolio);
void write_table2(const std::filesystem::path& stem, const std::vector<DeterminantTestRow>& conditional,
                  const std::vector<DeterminantTestRow>& posterior, const std::string& portfolio);
void write_table3(const std::filesystem::path& stem, const std::vector<CoefficientTestRow>& rows,
                  const std::string& portfolio);
void write_table4(const std::filesystem::path& stem, const std::vector<BacktestResult>& results,
                  const std::string& portfolio);

/// <stem>.csv with bin edges and counts, <stem>.svg bar chart.
void write_histogram(const std::filesystem::path& stem, const Histogram& h, const std::string& title);

std::string portfolio_description(const PortfolioVariant& v);

/// Formats a double with 17 significant digits ("nan" / "inf" spelled out).
std::string format_number(double v);

}  // namespace liqvol
