#include "liqvol/condsvd.hpp"
#include "liqvol/pipeline.hpp"
#include "liqvol/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace liqvol;

namespace {

struct Overrides {
  std::string variants;
  int window = 0;
  int stride = 0;
  double tau = 0.0;
  long long seed = -1;
  int threads = 0;
  std::string out;
};

std::vector<int> parse_variants(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("--variants: '" + item + "' is not an integer");
    out.push_back(v);
  }
  return out;
}

RunConfig make_config(const std::string& path, const Overrides& o) {
  RunConfig c = load_config(path);
  if (!o.variants.empty()) c.variants = parse_variants(o.variants);
  if (o.window > 0) c.window_days = o.window;
  if (o.stride > 0) c.refit_stride = o.stride;
  if (o.tau != 0.0) c.tau = o.tau;
  if (o.seed >= 0) {
    c.seed = static_cast<std::uint64_t>(o.seed);
    if (c.synthetic) c.synthetic->seed = c.seed;
  }
  if (o.threads > 0) c.threads = o.threads;
  if (!o.out.empty()) c.out_dir = o.out;
  c.validate();
  return c;
}

void print(const StageReport& r) {
  std::cout << r.stage << ": " << (r.skipped ? "up to date" : "done") << ", " << r.files.size() << " files\n";
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

Matrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
      throw std::invalid_argument(path + ": matrix must be square");
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

void print_matrix(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) std::cout << (j ? "," : "") << format_number(m(i, j));
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liqvol: liquidity-adjusted volatility pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--variants", o.variants, "comma separated portfolio ids, 1-6");
    sub->add_option("--window", o.window, "rolling window in days");
    sub->add_option("--stride", o.stride, "refit every k decision days");
    sub->add_option("--tau", o.tau, "prior scaling in [0.01, 10]");
    sub->add_option("--seed", o.seed, "seed for synthetic data");
    sub->add_option("--threads", o.threads, "worker threads");
    sub->add_option("--out", o.out, "output directory");
  };

  auto* liq = app.add_subcommand("liquidity", "daily returns, liquidity matrices, Table 1 and histograms");
  auto* fc = app.add_subcommand("forecast", "VECM, DCC/ADCC forecasts, posteriors, Tables 2 and 3");
  auto* bt = app.add_subcommand("backtest", "portfolio backtests and Table 4");
  auto* rep = app.add_subcommand("report", "run every stage and write report.md");
  auto* synth = app.add_subcommand("synth", "write the synthetic minute CSV of a config");
  for (auto* s : {liq, fc, bt, rep, synth}) add_common(s);
  std::string synth_path;
  synth->add_option("--output", synth_path, "CSV path")->required();

  std::string a_path, b_path;
  auto* dbg = app.add_subcommand("condsvd-debug", "solve A = H B H' for two CSV matrices");
  dbg->add_option("A", a_path)->required()->check(CLI::ExistingFile);
  dbg->add_option("B", b_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dbg) {
      const auto r = conditional_svd(read_matrix(a_path), read_matrix(b_path));
      std::cout << "H\n";
      print_matrix(r.H);
      std::cout << "residual," << format_number(r.residual) << "\nregularized," << (r.regularized ? 1 : 0)
                << "\nfloor," << format_number(r.floor_used) << '\n';
      return 0;
    }
    const RunConfig c = make_config(config_path, o);
    if (*synth) {
      if (!c.synthetic) throw std::invalid_argument("config has no data.synthetic section");
      write_synthetic_csv(synth_path, *c.synthetic);
      std::cout << "wrote " << synth_path << '\n';
    } else if (*liq) {
      print(run_liquidity(c));
    } else if (*fc) {
      print(run_forecast(c));
    } else if (*bt) {
      print(run_backtest(c));
    } else if (*rep) {
      print(run_report(c));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
