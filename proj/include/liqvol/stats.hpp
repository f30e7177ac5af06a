#pragma once

#include "liqvol/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace liqvol {

struct DescriptiveRow {
  std::size_t count = 0;
  std::size_t excluded = 0;  ///< non-finite entries (degenerate days) left out
  double mean = 0.0;
  double std = 0.0;          ///< sample standard deviation
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  std::size_t n_at_cap = 0;
  std::size_t n_ge_1 = 0;
  std::size_t n_le_0_10 = 0;
  double pct_at_cap = 0.0;   ///< percent of count
  double pct_ge_1 = 0.0;
  double pct_le_0_10 = 0.0;
};

/// Statistics of an already capped series; `cap` identifies the "= cap" row.
DescriptiveRow descriptive_table(std::span<const double> values, double cap = 10.0);

enum class Sides { two, less, greater };

struct TTestResult {
  double t_value = 0.0;
  double dof = 0.0;
  double p_two_sided = 1.0;
  double p_greater = 0.5;
  double p_less = 0.5;
  Sides sides = Sides::two;
  std::string stars;
  bool degenerate = false;  ///< zero pooled variance

  double p_value() const;
};

/// "***" below 1%, "**" below 5%, "*" below 10%.
std::string significance_stars(double p);

/// Pooled equal-variance two-sample t statistic for mean(x) - mean(y).
TTestResult two_sample_ttest(std::span<const double> x, std::span<const double> y, Sides sides);

/// One-sided direction of the liquidity effect: "↑" when the "less" test
/// (regular - adjusted < 0) is significant at 10%, else "↔".
std::string one_sided_direction(const TTestResult& t);
/// Two-sided direction: significant positive t means adjustment reduces ("↓"),
/// significant negative t means it increases ("↑").
std::string two_sided_direction(const TTestResult& t);

struct DeterminantTestRow {
  std::string model;  ///< dcc, adcc, dcc_best
  TTestResult test;
  std::string direction;
  std::string interpretation;
};

struct DeterminantSeries {
  std::vector<double> regular;
  std::vector<double> adjusted;
};

/// Three one-sided (less) tests on |regular| - |adjusted|, in model order
/// dcc, adcc, dcc_best. `quantity` names the tested covariance in the
/// interpretation text.
std::vector<DeterminantTestRow> determinant_tests(const DeterminantSeries& dcc, const DeterminantSeries& adcc,
                                                  const DeterminantSeries& best, const std::string& quantity);

struct CoefficientSeries {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> g;
};

struct CoefficientTestRow {
  std::string model;        ///< dcc or adcc
  std::string coefficient;  ///< a, b, g, a + b, a + b + g
  TTestResult test;
  std::string direction;
  std::string interpretation;
};

/// Two-sided tests of regular against adjusted coefficients: a, b, a + b for
/// DCC and a, b, g, a + b + g for ADCC.
std::vector<CoefficientTestRow> coefficient_tests(const CoefficientSeries& dcc_regular,
                                                  const CoefficientSeries& dcc_adjusted,
                                                  const CoefficientSeries& adcc_regular,
                                                  const CoefficientSeries& adcc_adjusted);

struct Histogram {
  double lo = 0.0;
  double hi = 10.0;
  std::vector<std::size_t> counts;
  std::size_t excluded = 0;  ///< non-finite values

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
};

/// Uniform bins over [lo, hi]; the last bin is closed on the right and values
/// outside the range are clamped into the end bins.
Histogram histogram(std::span<const double> values, std::size_t bin_count = 50, double lo = 0.0, double hi = 10.0);

}  // namespace liqvol
