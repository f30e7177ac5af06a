#include "liqvol/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace liqvol {

namespace {

std::ofstream open_file(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::filesystem::path with_ext(std::filesystem::path stem, const char* ext) { return stem.replace_extension(ext); }

std::string two(double v) { return std::isfinite(v) ? fmt::format("{:.2f}", v) : format_number(v); }

std::string sides_label(Sides s) {
  switch (s) {
    case Sides::less: return "less";
    case Sides::greater: return "greater";
    case Sides::two: break;
  }
  return "two-sided";
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

void write_table1(const std::filesystem::path& stem, const LiquidityTable& t, const std::string& portfolio) {
  const DescriptiveRow* cols[] = {&t.jump, &t.diffusion, &t.composite};
  struct Line {
    const char* label;
    double (*get)(const DescriptiveRow&);
    bool integer;
    bool percent;
  };
  const Line lines[] = {
      {"count", [](const DescriptiveRow& r) { return static_cast<double>(r.count); }, true, false},
      {"mean", [](const DescriptiveRow& r) { return r.mean; }, false, false},
      {"std", [](const DescriptiveRow& r) { return r.std; }, false, false},
      {"min", [](const DescriptiveRow& r) { return r.min; }, false, false},
      {"median", [](const DescriptiveRow& r) { return r.median; }, false, false},
      {"max", [](const DescriptiveRow& r) { return r.max; }, false, false},
      {"number of days (= 10)", [](const DescriptiveRow& r) { return static_cast<double>(r.n_at_cap); }, true, false},
      {"as % of total number of days", [](const DescriptiveRow& r) { return r.pct_at_cap; }, false, true},
      {"number of days (>= 1)", [](const DescriptiveRow& r) { return static_cast<double>(r.n_ge_1); }, true, false},
      {"as % of total number of days", [](const DescriptiveRow& r) { return r.pct_ge_1; }, false, true},
      {"number of days (<= 0.10)", [](const DescriptiveRow& r) { return static_cast<double>(r.n_le_0_10); }, true, false},
      {"as % of total number of days", [](const DescriptiveRow& r) { return r.pct_le_0_10; }, false, true},
      {"excluded degenerate days", [](const DescriptiveRow& r) { return static_cast<double>(r.excluded); }, true, false},
  };

  auto csv = open_file(with_ext(stem, ".csv"));
  csv << "measure,liquidity_jump,liquidity_diffusion,liquidity_composite\n";
  for (const auto& l : lines) {
    csv << '"' << l.label << '"';
    for (const auto* c : cols) csv << ',' << format_number(l.get(*c));
    csv << '\n';
  }

  auto md = open_file(with_ext(stem, ".md"));
  md << "### Descriptive statistics of portfolio liquidity determinants (" << portfolio << ")\n\n";
  md << "| measures | liquidity jump abs(det B_r) | liquidity diffusion abs(det B_sigma) | liquidity composite abs(det B_t) |\n";
  md << "|---|---:|---:|---:|\n";
  for (const auto& l : lines) {
    md << "| " << l.label;
    for (const auto* c : cols) {
      const double v = l.get(*c);
      if (l.integer) md << " | " << fmt::format("{:.0f}", v);
      else if (l.percent) md << " | " << fmt::format("{:.2f}%", v);
      else md << " | " << two(v);
    }
    md << " |\n";
  }
  md << "\nValues are capped at 10. Degenerate days are excluded from the statistics.\n";
}

void write_table2(const std::filesystem::path& stem, const std::vector<DeterminantTestRow>& conditional,
                  const std::vector<DeterminantTestRow>& posterior, const std::string& portfolio) {
  auto csv = open_file(with_ext(stem, ".csv"));
  csv << "panel,model,alternative,t_value,dof,p_value_greater,p_value_less,sig,interpretation,direction\n";
  auto md = open_file(with_ext(stem, ".md"));
  md << "### One-sided t-tests for conditional and posterior covariance determinants (" << portfolio << ")\n\n";
  const std::pair<const char*, const std::vector<DeterminantTestRow>*> panels[] = {
      {"A: conditional covariance", &conditional}, {"B: posterior covariance", &posterior}};
  for (const auto& [panel, rows] : panels) {
    md << "Panel " << panel << "\n\n";
    md << "| model | alternative | t-value | dof | p-value greater | p-value less | sig | interpretation | direction |\n";
    md << "|---|---|---:|---:|---:|---:|---|---|---|\n";
    for (const auto& r : *rows) {
      const std::string alt = "|regular| - |adjusted| < 0";
      csv << '"' << panel << "\"," << r.model << ",\"" << alt << "\"," << format_number(r.test.t_value) << ','
          << format_number(r.test.dof) << ',' << format_number(r.test.p_greater) << ','
          << format_number(r.test.p_less) << ',' << r.test.stars << ",\"" << r.interpretation << "\","
          << r.direction << '\n';
      md << "| " << r.model << " t-test | " << alt << " | " << two(r.test.t_value) << " | "
         << fmt::format("{:.0f}", r.test.dof) << " | " << two(r.test.p_greater) << " | " << two(r.test.p_less)
         << " | " << r.test.stars << " | " << r.interpretation << " | " << r.direction << " |\n";
    }
    md << '\n';
  }
  md << "*** significant at 1%, ** at 5%, * at 10%.\n";
}

void write_table3(const std::filesystem::path& stem, const std::vector<CoefficientTestRow>& rows,
                  const std::string& portfolio) {
  auto csv = open_file(with_ext(stem, ".csv"));
  csv << "model,coefficient,t_value,dof,p_value_two_sided,p_value_greater,p_value_less,sig,interpretation,direction\n";
  auto md = open_file(with_ext(stem, ".md"));
  md << "### Two-sided t-tests for DCC and ADCC coefficients (" << portfolio << ")\n\n";
  md << "| model | coefficient | t-value | dof | p-value two-sided | p-value greater | p-value less | sig | "
        "interpretation | direction |\n";
  md << "|---|---|---:|---:|---:|---:|---:|---|---|---|\n";
  for (const auto& r : rows) {
    csv << r.model << ",\"" << r.coefficient << "\"," << format_number(r.test.t_value) << ','
        << format_number(r.test.dof) << ',' << format_number(r.test.p_two_sided) << ','
        << format_number(r.test.p_greater) << ',' << format_number(r.test.p_less) << ',' << r.test.stars << ",\""
        << r.interpretation << "\"," << r.direction << '\n';
    md << "| " << r.model << " t-test (" << sides_label(r.test.sides) << ") | " << r.coefficient << " | "
       << two(r.test.t_value) << " | " << fmt::format("{:.0f}", r.test.dof) << " | " << two(r.test.p_two_sided)
       << " | " << two(r.test.p_greater) << " | " << two(r.test.p_less) << " | " << r.test.stars << " | "
       << r.interpretation << " | " << r.direction << " |\n";
  }
  md << "\n*** significant at 1%, ** at 5%, * at 10%.\n";
}

std::string portfolio_description(const PortfolioVariant& v) {
  const char* kind = v.liquidity_adjusted() ? "LAMV" : "TMV";
  switch (v.covariance) {
    case CovSource::rolling_window: return fmt::format("standard {}", kind);
    case CovSource::intraday: return fmt::format("intraday {}", kind);
    case CovSource::posterior: return fmt::format("enhanced {}", kind);
  }
  return kind;
}

void write_table4(const std::filesystem::path& stem, const std::vector<BacktestResult>& results,
                  const std::string& portfolio) {
  auto csv = open_file(with_ext(stem, ".csv"));
  csv << "portfolio,description,return_in_mv,covariance_in_mv,mean_daily_return,std_daily_return,"
         "annualized_sharpe,degenerate,failed_days\n";
  auto md = open_file(with_ext(stem, ".md"));
  md << "### Performance comparison of TMV and LAMV portfolios (" << portfolio << ")\n\n";
  md << "| portfolio | description | return in MV | covariance in MV | mean daily return | daily volatility | "
        "annualized Sharpe ratio (rf = 0%) |\n";
  md << "|---:|---|---|---|---:|---:|---:|\n";
  for (const auto& r : results) {
    const auto& v = r.variant;
    const std::string ret = to_string(v.returns) + " rolling window mean";
    const std::string cov = (v.liquidity_adjusted() ? "liquidity_adjusted " : "regular ") + to_string(v.covariance);
    csv << v.id << ',' << portfolio_description(v) << ",\"" << ret << "\",\"" << cov << "\","
        << format_number(r.sharpe.mean) << ',' << format_number(r.sharpe.std) << ',' << format_number(r.sharpe.value)
        << ',' << (r.sharpe.degenerate ? 1 : 0) << ',' << r.failures.size() << '\n';
    md << "| " << v.id << " | " << portfolio_description(v) << " | " << ret << " | " << cov << " | "
       << fmt::format("{:.5f}", r.sharpe.mean) << " | " << fmt::format("{:.5f}", r.sharpe.std) << " | "
       << two(r.sharpe.value) << (r.sharpe.degenerate ? " (degenerate)" : "") << " |\n";
  }
}

void write_histogram(const std::filesystem::path& stem, const Histogram& h, const std::string& title) {
  auto csv = open_file(with_ext(stem, ".csv"));
  csv << "bin_lo,bin_hi,count\n";
  const double w = h.bin_width();
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    csv << format_number(h.lo + w * static_cast<double>(k)) << ',' << format_number(h.lo + w * static_cast<double>(k + 1))
        << ',' << h.counts[k] << '\n';
  }

  const double width = 640.0;
  const double height = 360.0;
  const double left = 50.0;
  const double bottom = 320.0;
  const double plot_w = width - left - 20.0;
  const double plot_h = bottom - 40.0;
  const std::size_t peak = std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
  const double bar_w = plot_w / static_cast<double>(h.counts.size());
  auto svg = open_file(with_ext(stem, ".svg"));
  svg << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{:.0f}" height="{:.0f}">)", width, height) << '\n';
  svg << fmt::format(R"(<text x="{:.1f}" y="20" font-family="sans-serif" font-size="14">{}</text>)", left, title) << '\n';
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double bh = plot_h * static_cast<double>(h.counts[k]) / static_cast<double>(peak);
    svg << fmt::format(R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="#4a78a8"/>)",
                       left + bar_w * static_cast<double>(k), bottom - bh, std::max(bar_w - 1.0, 0.5), bh)
        << '\n';
  }
  svg << fmt::format(R"(<line x1="{0:.1f}" y1="{1:.1f}" x2="{2:.1f}" y2="{1:.1f}" stroke="black"/>)", left, bottom,
                     left + plot_w)
      << '\n';
  svg << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11">{}</text>)", left,
                     bottom + 16, two(h.lo))
      << '\n';
  svg << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>)",
                     left + plot_w, bottom + 16, two(h.hi))
      << '\n';
  svg << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>)",
                     left - 4, bottom - plot_h + 4, peak)
      << '\n';
  svg << "</svg>\n";
}

}  // namespace liqvol
