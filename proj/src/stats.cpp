#include "liqvol/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace liqvol {

DescriptiveRow descriptive_table(std::span<const double> values, double cap) {
  std::vector<double> v;
  DescriptiveRow row;
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
    else ++row.excluded;
  }
  if (v.empty()) throw std::invalid_argument("descriptive_table: no finite values");
  row.count = v.size();
  const double n = static_cast<double>(v.size());
  row.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - row.mean) * (x - row.mean);
  row.std = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  row.min = sorted.front();
  row.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  row.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  for (double x : v) {
    if (x >= cap) ++row.n_at_cap;
    if (x >= 1.0) ++row.n_ge_1;
    if (x <= 0.10) ++row.n_le_0_10;
  }
  row.pct_at_cap = 100.0 * static_cast<double>(row.n_at_cap) / n;
  row.pct_ge_1 = 100.0 * static_cast<double>(row.n_ge_1) / n;
  row.pct_le_0_10 = 100.0 * static_cast<double>(row.n_le_0_10) / n;
  return row;
}

double TTestResult::p_value() const {
  switch (sides) {
    case Sides::less: return p_less;
    case Sides::greater: return p_greater;
    case Sides::two: break;
  }
  return p_two_sided;
}

std::string significance_stars(double p) {
  if (!(p < 0.10)) return "";
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  return "*";
}

TTestResult two_sample_ttest(std::span<const double> x, std::span<const double> y, Sides sides) {
  if (x.size() < 2 || y.size() < 2) throw std::invalid_argument("two_sample_ttest: each sample needs at least two values");
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  const double m1 = std::accumulate(x.begin(), x.end(), 0.0) / n1;
  const double m2 = std::accumulate(y.begin(), y.end(), 0.0) / n2;
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : x) s1 += (v - m1) * (v - m1);
  for (double v : y) s2 += (v - m2) * (v - m2);
  TTestResult r;
  r.sides = sides;
  r.dof = n1 + n2 - 2.0;
  const double pooled = (s1 + s2) / r.dof;
  const double se = std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
  if (!(se > 0.0)) {
    r.degenerate = true;
    r.t_value = m1 == m2 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m1 - m2);
  } else {
    r.t_value = (m1 - m2) / se;
  }
  if (std::isinf(r.t_value)) {
    r.p_greater = r.t_value > 0 ? 0.0 : 1.0;
    r.p_less = 1.0 - r.p_greater;
  } else {
    const boost::math::students_t dist(r.dof);
    r.p_less = boost::math::cdf(dist, r.t_value);
    r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t_value));
  }
  r.p_two_sided = std::min(1.0, 2.0 * std::min(r.p_less, r.p_greater));
  r.stars = significance_stars(r.p_value());
  return r;
}

std::string one_sided_direction(const TTestResult& t) { return t.p_less < 0.10 ? "↑" : "↔"; }

std::string two_sided_direction(const TTestResult& t) {
  if (!(t.p_two_sided < 0.10)) return "↔";
  return t.t_value > 0.0 ? "↓" : "↑";
}

std::vector<DeterminantTestRow> determinant_tests(const DeterminantSeries& dcc, const DeterminantSeries& adcc,
                                                  const DeterminantSeries& best, const std::string& quantity) {
  std::vector<DeterminantTestRow> rows;
  const std::pair<const char*, const DeterminantSeries*> models[] = {{"dcc", &dcc}, {"adcc", &adcc}, {"dcc_best", &best}};
  for (const auto& [name, s] : models) {
    if (s->regular.size() != s->adjusted.size()) {
      throw std::invalid_argument(std::string("determinant_tests: ") + name + " series differ in length");
    }
    DeterminantTestRow row;
    row.model = name;
    row.test = two_sample_ttest(s->regular, s->adjusted, Sides::less);
    row.direction = one_sided_direction(row.test);
    row.interpretation = row.direction == "↑" ? "liquidity adjustment increases " + quantity
                                             : "no significant evidence that liquidity adjustment increases " + quantity;
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::vector<double> add(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return out;
}

CoefficientTestRow coefficient_row(const std::string& model, const std::string& coef, const std::vector<double>& reg,
                                   const std::vector<double>& adj) {
  CoefficientTestRow row;
  row.model = model;
  row.coefficient = coef;
  row.test = two_sample_ttest(reg, adj, Sides::two);
  row.direction = two_sided_direction(row.test);
  if (row.direction == "↓") row.interpretation = "liquidity adjustment reduces " + coef;
  else if (row.direction == "↑") row.interpretation = "liquidity adjustment increases " + coef;
  else row.interpretation = "liquidity adjustment has no significant impact on " + coef;
  return row;
}

void check_paired(const CoefficientSeries& s, bool with_g) {
  if (s.a.size() != s.b.size() || (with_g && s.g.size() != s.a.size())) {
    throw std::invalid_argument("coefficient_tests: coefficient series differ in length");
  }
}

}  // namespace

std::vector<CoefficientTestRow> coefficient_tests(const CoefficientSeries& dcc_regular,
                                                  const CoefficientSeries& dcc_adjusted,
                                                  const CoefficientSeries& adcc_regular,
                                                  const CoefficientSeries& adcc_adjusted) {
  check_paired(dcc_regular, false);
  check_paired(dcc_adjusted, false);
  check_paired(adcc_regular, true);
  check_paired(adcc_adjusted, true);
  std::vector<CoefficientTestRow> rows;
  rows.push_back(coefficient_row("dcc", "a", dcc_regular.a, dcc_adjusted.a));
  rows.push_back(coefficient_row("dcc", "b", dcc_regular.b, dcc_adjusted.b));
  rows.push_back(coefficient_row("dcc", "a + b", add(dcc_regular.a, dcc_regular.b), add(dcc_adjusted.a, dcc_adjusted.b)));
  rows.push_back(coefficient_row("adcc", "a", adcc_regular.a, adcc_adjusted.a));
  rows.push_back(coefficient_row("adcc", "b", adcc_regular.b, adcc_adjusted.b));
  rows.push_back(coefficient_row("adcc", "g", adcc_regular.g, adcc_adjusted.g));
  rows.push_back(coefficient_row("adcc", "a + b + g", add(add(adcc_regular.a, adcc_regular.b), adcc_regular.g),
                                 add(add(adcc_adjusted.a, adcc_adjusted.b), adcc_adjusted.g)));
  return rows;
}

Histogram histogram(std::span<const double> values, std::size_t bin_count, double lo, double hi) {
  if (bin_count < 1) throw std::invalid_argument("histogram: need at least one bin");
  if (!(hi > lo)) throw std::invalid_argument("histogram: empty range");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bin_count, 0);
  const double width = (hi - lo) / static_cast<double>(bin_count);
  for (double v : values) {
    if (!std::isfinite(v)) {
      ++h.excluded;
      continue;
    }
    const double x = std::clamp(v, lo, hi);
    auto k = static_cast<std::size_t>(std::floor((x - lo) / width));
    if (k >= bin_count) k = bin_count - 1;
    ++h.counts[k];
  }
  return h;
}

}  // namespace liqvol
