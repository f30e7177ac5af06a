#include "liqvol/pipeline.hpp"

#include "liqvol/bayes.hpp"
#include "liqvol/condsvd.hpp"
#include "liqvol/dcc.hpp"
#include "liqvol/liquidity.hpp"
#include "liqvol/parallel.hpp"
#include "liqvol/portfolio.hpp"
#include "liqvol/report.hpp"
#include "liqvol/stats.hpp"
#include "liqvol/vecm.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace liqvol {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- files

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == sep && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const fs::path& file, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(fmt::format("{}: '{}' is not a number", file.string(), s), line);
  }
  return v;
}

// Date-keyed numeric table: first column a date, the rest numbers.
struct DatedTable {
  std::vector<std::string> columns;  // without the date column
  std::vector<Date> dates;
  Matrix values;
};

DatedTable read_dated_table(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(p.string() + ": empty file", 1);
  DatedTable t;
  auto head = split(line);
  t.columns.assign(head.begin() + 1, head.end());
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != head.size()) throw ParseError(p.string() + ": wrong number of fields", lineno);
    t.dates.push_back(parse_date(f[0]));
    std::vector<double> r;
    for (std::size_t k = 1; k < f.size(); ++k) r.push_back(to_double(f[k], p, lineno));
    rows.push_back(std::move(r));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return t;
}

std::string dated_row(Date d, const Vector& v) {
  std::string s = format_date(d);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    s += ',';
    s += format_number(v(i));
  }
  s += '\n';
  return s;
}

Vector flatten(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  }
  return v;
}

Matrix unflatten(const Vector& v, Eigen::Index n) {
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = v(i * n + j);
  }
  return m;
}

std::string matrix_header(Eigen::Index n) {
  std::string s = "date";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) s += fmt::format(",c{}_{}", i, j);
  }
  return s + '\n';
}

// ---------------------------------------------------------------- manifest

fs::path manifest_path(const RunConfig& c) { return c.out_dir / "manifest.json"; }

json read_manifest(const RunConfig& c) {
  const fs::path p = manifest_path(c);
  if (!fs::exists(p)) return json::object();
  try {
    return json::parse(read_file(p));
  } catch (const json::exception&) {
    return json::object();
  }
}

bool stage_fresh(const RunConfig& c, const std::string& stage) {
  const json m = read_manifest(c);
  if (!m.contains("stages") || !m["stages"].contains(stage)) return false;
  const json& s = m["stages"][stage];
  if (s.value("fingerprint", "") != fnv1a_hex(stage_fingerprint(c, stage))) return false;
  for (const auto& [rel, hash] : s["files"].items()) {
    const fs::path p = c.out_dir / rel;
    if (!fs::exists(p) || fnv1a_hex(read_file(p)) != hash.get<std::string>()) return false;
  }
  return true;
}

void record_stage(const RunConfig& c, const StageReport& r) {
  json m = read_manifest(c);
  json files = json::object();
  for (const auto& rel : r.files) files[rel] = fnv1a_hex(read_file(c.out_dir / rel));
  m["stages"][r.stage] = {{"fingerprint", fnv1a_hex(stage_fingerprint(c, r.stage))},
                          {"settings", json::parse(stage_fingerprint(c, r.stage))},
                          {"files", files}};
  write_file(manifest_path(c), m.dump(2) + "\n");
}

StageReport skipped_report(const RunConfig& c, const std::string& stage) {
  StageReport r;
  r.stage = stage;
  r.skipped = true;
  const json m = read_manifest(c);
  for (const auto& [rel, hash] : m["stages"][stage]["files"].items()) r.files.push_back(rel);
  return r;
}

// Writes text under the output directory and records the relative path.
void emit(const RunConfig& c, StageReport& r, const std::string& rel, const std::string& text) {
  write_file(c.out_dir / rel, text);
  r.files.push_back(rel);
}

void track(StageReport& r, const std::vector<std::string>& rels) {
  for (const auto& rel : rels) r.files.push_back(rel);
}

// ---------------------------------------------------------------- config

json synthetic_json(const SyntheticSpec& s) {
  return {{"assets", s.assets},
          {"days", s.days},
          {"minutes_per_day", s.minutes_per_day},
          {"jump_regime_share", s.jump_regime_share},
          {"start", format_date(s.start)}};
}

std::string input_identity(const RunConfig& c) {
  if (c.synthetic) return "synthetic";
  const fs::path& p = c.minute_csv.empty() ? c.tick_csv : c.minute_csv;
  if (!fs::exists(p)) throw std::runtime_error("data file not found: " + p.string());
  return (c.minute_csv.empty() ? "ticks:" : "minutes:") + fnv1a_hex(read_file(p));
}

bool needs_forecast(const RunConfig& c) {
  for (int v : c.variants) {
    if (v == 5 || v == 6) return true;
  }
  return false;
}

}  // namespace

int RunConfig::annualization() const {
  if (periods_per_year > 0) return periods_per_year;
  return calendar.asset_class == AssetClass::crypto ? 365 : 252;
}

void RunConfig::validate() const {
  calendar.validate();
  if (!synthetic && minute_csv.empty() && tick_csv.empty()) {
    throw std::invalid_argument("config: data.minutes, data.ticks or data.synthetic is required");
  }
  if (synthetic && synthetic->minutes_per_day != calendar.minutes_per_day) {
    throw std::invalid_argument("config: calendar.minutes_per_day must match data.synthetic.minutes_per_day");
  }
  if (synthetic && (calendar.asset_class != AssetClass::crypto || calendar.day_boundary_minute != 0)) {
    throw std::invalid_argument("config: synthetic data uses a crypto calendar with the day starting at 00:00 UTC");
  }
  if (window_days < 60) throw std::invalid_argument("config: window_days must be at least 60");
  if (refit_stride < 1) throw std::invalid_argument("config: refit_stride must be at least 1");
  if (!(tau >= kMinTau && tau <= kMaxTau)) {
    throw std::invalid_argument(fmt::format("config: tau must lie in [{}, {}], got {}", kMinTau, kMaxTau, tau));
  }
  if (variants.empty()) throw std::invalid_argument("config: no portfolio variants selected");
  for (int v : variants) portfolio_variant(v);
  if (threads < 1) throw std::invalid_argument("config: threads must be at least 1");
  if (histogram_bins < 1) throw std::invalid_argument("config: histogram_bins must be at least 1");
  if (synthetic && window_days >= synthetic->days) {
    throw std::invalid_argument("config: window_days must be smaller than the number of days");
  }
}

RunConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  RunConfig c;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  try {
    if (j.contains("data")) {
      const json& d = j["data"];
      if (d.contains("minutes")) c.minute_csv = resolve(d["minutes"].get<std::string>());
      if (d.contains("ticks")) c.tick_csv = resolve(d["ticks"].get<std::string>());
      if (d.contains("synthetic")) {
        const json& s = d["synthetic"];
        SyntheticSpec spec;
        spec.assets = s.value("assets", spec.assets);
        spec.days = s.value("days", spec.days);
        spec.minutes_per_day = s.value("minutes_per_day", spec.minutes_per_day);
        spec.jump_regime_share = s.value("jump_regime_share", spec.jump_regime_share);
        if (s.contains("start")) spec.start = parse_date(s["start"].get<std::string>());
        c.synthetic = spec;
        c.calendar.minutes_per_day = spec.minutes_per_day;
      }
    }
    if (j.contains("calendar")) {
      const json& cal = j["calendar"];
      if (cal.contains("asset_class")) {
        const AssetClass ac = parse_asset_class(cal["asset_class"].get<std::string>());
        const int keep_t = c.calendar.minutes_per_day;
        c.calendar = ac == AssetClass::crypto ? CalendarSpec::crypto() : CalendarSpec::equity();
        if (c.synthetic) c.calendar.minutes_per_day = keep_t;
      }
      c.calendar.minutes_per_day = cal.value("minutes_per_day", c.calendar.minutes_per_day);
      c.calendar.day_boundary_minute = cal.value("day_boundary_minute", c.calendar.day_boundary_minute);
    }
    c.window_days = j.value("window_days", c.window_days);
    c.refit_stride = j.value("refit_stride", c.refit_stride);
    c.tau = j.value("tau", c.tau);
    if (j.contains("variants")) c.variants = j["variants"].get<std::vector<int>>();
    if (j.contains("out")) c.out_dir = resolve(j["out"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.periods_per_year = j.value("periods_per_year", c.periods_per_year);
    c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
    c.portfolio_name = j.value("portfolio_name", c.portfolio_name);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (c.synthetic) c.synthetic->seed = c.seed;
  return c;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("config file not found: " + path.string());
  return parse_config(read_file(path), path.parent_path());
}

std::string stage_fingerprint(const RunConfig& c, const std::string& stage) {
  json liq = {{"input", input_identity(c)},
              {"calendar",
               {{"asset_class", to_string(c.calendar.asset_class)},
                {"minutes_per_day", c.calendar.minutes_per_day},
                {"day_boundary_minute", c.calendar.day_boundary_minute}}},
              {"histogram_bins", c.histogram_bins},
              {"portfolio_name", c.portfolio_name}};
  if (c.synthetic) {
    liq["synthetic"] = synthetic_json(*c.synthetic);
    liq["seed"] = c.seed;
  }
  json fc = {{"liquidity", liq}, {"window_days", c.window_days}, {"refit_stride", c.refit_stride}, {"tau", c.tau}};
  json bt = {{"liquidity", liq},
             {"window_days", c.window_days},
             {"variants", c.variants},
             {"periods_per_year", c.annualization()}};
  if (needs_forecast(c)) bt["forecast"] = fc;
  if (stage == "liquidity") return liq.dump();
  if (stage == "forecast") return fc.dump();
  if (stage == "backtest") return bt.dump();
  if (stage == "report") return json{{"backtest", bt}, {"forecast", fc}}.dump();
  throw std::invalid_argument("unknown stage " + stage);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

// ================================================================ liquidity

StageReport run_liquidity(const RunConfig& c) {
  c.validate();
  if (stage_fresh(c, "liquidity")) return skipped_report(c, "liquidity");
  StageReport r;
  r.stage = "liquidity";

  IngestResult ingest;
  if (c.synthetic) {
    const std::string rel = "data/minutes.csv";
    fs::create_directories(c.out_dir / "data");
    write_synthetic_csv(c.out_dir / rel, *c.synthetic);
    r.files.push_back(rel);
    ingest = ingest_minute_csv(c.out_dir / rel, c.calendar);
  } else if (!c.minute_csv.empty()) {
    if (!fs::exists(c.minute_csv)) throw std::runtime_error("minute data file not found: " + c.minute_csv.string());
    ingest = ingest_minute_csv(c.minute_csv, c.calendar);
  } else {
    if (!fs::exists(c.tick_csv)) throw std::runtime_error("tick data file not found: " + c.tick_csv.string());
    ingest = ingest_tick_csv(c.tick_csv, c.calendar);
  }

  std::set<std::string> symbol_set;
  std::map<Date, std::vector<MinuteGrid>> by_date;
  for (auto& g : ingest.grids) {
    symbol_set.insert(g.symbol);
    by_date[g.date].push_back(std::move(g));
  }
  const std::vector<std::string> symbols(symbol_set.begin(), symbol_set.end());
  if (symbols.empty()) throw std::runtime_error("no complete asset-days in the input");
  std::string warnings = "symbol,date,missing_minutes,reason\n";
  for (const auto& w : ingest.warnings) {
    warnings += fmt::format("{},{},{},\"{}\"\n", w.symbol, format_date(w.date), w.missing_minutes, w.reason);
  }
  std::vector<Date> dates;
  std::vector<std::vector<MinuteGrid>> days;
  for (auto& [date, grids] : by_date) {
    if (grids.size() != symbols.size()) {
      warnings += fmt::format(",{},0,\"day dropped: {} of {} assets present\"\n", format_date(date), grids.size(),
                              symbols.size());
      continue;
    }
    std::sort(grids.begin(), grids.end(), [](const MinuteGrid& a, const MinuteGrid& b) { return a.symbol < b.symbol; });
    dates.push_back(date);
    days.push_back(std::move(grids));
  }
  if (dates.empty()) throw std::runtime_error("no day has data for every asset");

  std::vector<LiquiditySnapshot> snaps(days.size());
  parallel_for(days.size(), c.threads, [&](std::size_t i) { snaps[i] = build_snapshot(days[i]); });

  const auto N = static_cast<Eigen::Index>(symbols.size());
  std::string sym_header;
  for (const auto& s : symbols) sym_header += "," + s;
  std::string q = "date" + sym_header + "\n";
  std::string ql = q;
  std::string cov = matrix_header(N);
  std::string covl = cov;
  std::string snap = "date,degenerate,det_jump_raw,det_jump,det_diff_raw,det_diff,det_comp_raw,det_comp,diffusion_residual";
  for (const auto& s : symbols) snap += ",beta_r_" + s;
  for (const auto& s : symbols) snap += ",beta_sigma_" + s;
  snap += ",note\n";
  std::vector<double> jump, diff, comp;
  for (const auto& s : snaps) {
    q += dated_row(s.date, s.q);
    ql += dated_row(s.date, s.q_adjusted);
    cov += dated_row(s.date, flatten(s.sigma_tt));
    covl += dated_row(s.date, flatten(s.sigma_tt_adjusted));
    snap += fmt::format("{},{},{},{},{},{},{},{},{}", format_date(s.date), s.degenerate ? 1 : 0,
                        format_number(s.det_jump.raw), format_number(s.det_jump.reported),
                        format_number(s.det_diff.raw), format_number(s.det_diff.reported),
                        format_number(s.det_comp.raw), format_number(s.det_comp.reported),
                        format_number(s.diffusion_residual));
    for (const auto& b : s.betas) snap += "," + format_number(b.jump);
    for (const auto& b : s.betas) snap += "," + format_number(b.diffusion);
    snap += ",\"" + s.note + "\"\n";
    jump.push_back(s.det_jump.reported);
    diff.push_back(s.det_diff.reported);
    comp.push_back(s.det_comp.reported);
  }
  emit(c, r, "liquidity/returns.csv", q);
  emit(c, r, "liquidity/returns_adjusted.csv", ql);
  emit(c, r, "liquidity/intraday_cov.csv", cov);
  emit(c, r, "liquidity/intraday_cov_adjusted.csv", covl);
  emit(c, r, "liquidity/snapshots.csv", snap);
  emit(c, r, "liquidity/warnings.csv", warnings);

  LiquidityTable t1{descriptive_table(jump), descriptive_table(diff), descriptive_table(comp)};
  write_table1(c.out_dir / "tables/table1", t1, c.portfolio_name);
  track(r, {"tables/table1.csv", "tables/table1.md"});
  const std::pair<const char*, const std::vector<double>*> figs[] = {
      {"jump", &jump}, {"diffusion", &diff}, {"composite", &comp}};
  for (const auto& [name, series] : figs) {
    const Histogram h = histogram(*series, c.histogram_bins, 0.0, kReportCap);
    write_histogram(c.out_dir / fmt::format("figures/hist_{}", name), h,
                    fmt::format("liquidity {} determinant, capped at 10 ({})", name, c.portfolio_name));
    track(r, {fmt::format("figures/hist_{}.csv", name), fmt::format("figures/hist_{}.svg", name)});
  }
  for (const auto& w : ingest.warnings) r.warnings.push_back(fmt::format("{} {}: {}", w.symbol, format_date(w.date), w.reason));
  record_stage(c, r);
  return r;
}

// ================================================================ forecast

namespace {

struct LiquidityData {
  std::vector<std::string> symbols;
  std::vector<Date> dates;
  Matrix q;
  Matrix q_adjusted;
  std::vector<Matrix> cov;
  std::vector<Matrix> cov_adjusted;
  Matrix beta_r;  // D x N
};

LiquidityData load_liquidity(const RunConfig& c) {
  LiquidityData d;
  const DatedTable q = read_dated_table(c.out_dir / "liquidity/returns.csv");
  const DatedTable ql = read_dated_table(c.out_dir / "liquidity/returns_adjusted.csv");
  const DatedTable cov = read_dated_table(c.out_dir / "liquidity/intraday_cov.csv");
  const DatedTable covl = read_dated_table(c.out_dir / "liquidity/intraday_cov_adjusted.csv");
  d.symbols = q.columns;
  d.dates = q.dates;
  d.q = q.values;
  d.q_adjusted = ql.values;
  const auto N = static_cast<Eigen::Index>(d.symbols.size());
  for (Eigen::Index t = 0; t < cov.values.rows(); ++t) {
    d.cov.push_back(unflatten(cov.values.row(t).transpose(), N));
    d.cov_adjusted.push_back(unflatten(covl.values.row(t).transpose(), N));
  }
  // betas: columns beta_r_* of the snapshot file
  std::istringstream in(read_file(c.out_dir / "liquidity/snapshots.csv"));
  std::string line;
  std::getline(in, line);
  const auto head = split(line);
  std::vector<std::size_t> beta_cols;
  for (std::size_t k = 0; k < head.size(); ++k) {
    if (head[k].rfind("beta_r_", 0) == 0) beta_cols.push_back(k);
  }
  d.beta_r.resize(static_cast<Eigen::Index>(d.dates.size()), N);
  std::size_t lineno = 1;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    for (std::size_t k = 0; k < beta_cols.size(); ++k) {
      d.beta_r(row, static_cast<Eigen::Index>(k)) = to_double(f[beta_cols[k]], "snapshots.csv", lineno);
    }
    ++row;
  }
  if (d.q_adjusted.rows() != d.q.rows() || static_cast<Eigen::Index>(d.cov.size()) != d.q.rows() || row != d.q.rows()) {
    throw std::runtime_error("liquidity intermediates disagree on the number of days; rerun the liquidity stage");
  }
  return d;
}

struct DayForecast {
  bool ok = false;
  std::string note;
  bool refit = false;
  int lag = 0;
  int rank = 0;
  double ll_dcc = kNaN;
  double ll_adcc = kNaN;
  DccKind best = DccKind::dcc;
  double det_omega[3] = {kNaN, kNaN, kNaN};
  double det_post[3] = {kNaN, kNaN, kNaN};
  double det_prior = kNaN;
  double det_omega_scaled = kNaN;
  double det_post_linked = kNaN;
  Matrix posterior_best;
};

struct FitRecord {
  bool ok = false;
  std::string note;
  int lag = 0;
  int rank = 0;
  bool ridge = false;
  DccFit dcc;
  DccFit adcc;
};

struct BlockResult {
  FitRecord fit;
  std::vector<DayForecast> days;
};

// One refit window followed by stride - 1 filtered days of one pipeline.
BlockResult run_block(const RunConfig& c, const LiquidityData& data, bool adjusted, Eigen::Index first_k,
                      Eigen::Index last_k) {
  const Eigen::Index W = c.window_days;
  const Matrix& series = adjusted ? data.q_adjusted : data.q;
  const std::vector<Matrix>& priors = adjusted ? data.cov_adjusted : data.cov;
  BlockResult out;
  out.days.resize(static_cast<std::size_t>(last_k - first_k));

  VecmFit vecm;
  try {
    const Eigen::Index t0 = W - 1 + first_k;
    const Matrix window = series.middleRows(t0 - W + 1, W);
    const VecmModel model = estimate_vecm(window);
    vecm = model.fit;
    const UnivariateStage stage = fit_univariate(vecm.residuals);
    out.fit.dcc = fit_dcc(stage, DccKind::dcc);
    out.fit.adcc = fit_dcc(stage, DccKind::adcc, &out.fit.dcc);
    out.fit.lag = vecm.lag;
    out.fit.rank = vecm.coint_rank;
    out.fit.ridge = vecm.ridge;
    out.fit.ok = true;
  } catch (const std::exception& e) {
    out.fit.note = e.what();
    for (auto& d : out.days) d.note = std::string("refit failed: ") + e.what();
    return out;
  }

  for (Eigen::Index k = first_k; k < last_k; ++k) {
    DayForecast& day = out.days[static_cast<std::size_t>(k - first_k)];
    const Eigen::Index t = W - 1 + k;
    try {
      DccFit dcc = out.fit.dcc;
      DccFit adcc = out.fit.adcc;
      if (k != first_k) {
        const Matrix resid = vecm_residuals(vecm, series.middleRows(t - W + 1, W));
        dcc = filter_dcc(out.fit.dcc, resid);
        adcc = filter_dcc(out.fit.adcc, resid);
      }
      day.refit = k == first_k;
      day.lag = vecm.lag;
      day.rank = vecm.coint_rank;
      day.ll_dcc = dcc.loglik;
      day.ll_adcc = adcc.loglik;
      const DccFit& best = select_best(dcc, adcc);
      day.best = best.kind;
      const Matrix omegas[3] = {forecast_covariance(dcc), forecast_covariance(adcc), forecast_covariance(best)};
      const Matrix& prior = priors[static_cast<std::size_t>(t)];
      day.det_prior = prior.determinant();
      for (int m = 0; m < 3; ++m) {
        day.det_omega[m] = omegas[m].determinant();
        const Matrix post = posterior_covariance(prior, omegas[m], c.tau);
        day.det_post[m] = post.determinant();
        if (m == 2) day.posterior_best = post;
      }
      if (!adjusted) {
        const Vector beta = data.beta_r.row(t).transpose();
        if (beta.allFinite() && (beta.array() > 0.0).all()) {
          day.det_omega_scaled = scale_covariance_by_jump(omegas[2], Matrix(beta.asDiagonal())).determinant();
          const auto svd = conditional_svd(data.cov[static_cast<std::size_t>(t)], data.cov_adjusted[static_cast<std::size_t>(t)]);
          if (!(svd.regularized && svd.residual > 1e-8)) {
            day.det_post_linked = linked_posterior(prior, omegas[2], svd.H, beta, c.tau).determinant();
          }
        }
      }
      day.ok = true;
    } catch (const std::exception& e) {
      day.ok = false;
      day.note = e.what();
    }
  }
  return out;
}

std::string fit_row(Date d, const char* pipeline, const FitRecord& f) {
  if (!f.ok) {
    return fmt::format("{},{},0,,,,,,,,,,,,,,,,,\"{}\"\n", format_date(d), pipeline, f.note);
  }
  return fmt::format("{},{},1,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},\"\"\n", format_date(d), pipeline, f.lag,
                     f.rank, f.ridge ? 1 : 0, format_number(f.dcc.params.a), format_number(f.dcc.params.b),
                     format_number(f.dcc.loglik), f.dcc.converged ? 1 : 0, f.dcc.fallback ? 1 : 0,
                     format_number(f.adcc.params.a), format_number(f.adcc.params.b), format_number(f.adcc.params.g),
                     format_number(f.adcc.loglik), f.adcc.converged ? 1 : 0, f.adcc.fallback ? 1 : 0,
                     f.dcc.garch_fallbacks, to_string(select_best(f.dcc, f.adcc).kind));
}

}  // namespace

StageReport run_forecast(const RunConfig& c) {
  c.validate();
  run_liquidity(c);
  if (stage_fresh(c, "forecast")) return skipped_report(c, "forecast");
  StageReport r;
  r.stage = "forecast";
  const LiquidityData data = load_liquidity(c);
  const auto D = static_cast<Eigen::Index>(data.dates.size());
  const Eigen::Index W = c.window_days;
  if (D < W + 1) {
    throw std::runtime_error(fmt::format("forecast: {} days cannot fill a {}-day window plus one", D, W));
  }
  const Eigen::Index M = D - W;  // decision days t = W-1 .. D-2
  const Eigen::Index S = c.refit_stride;
  const Eigen::Index blocks = (M + S - 1) / S;

  std::vector<BlockResult> results(static_cast<std::size_t>(2 * blocks));
  parallel_for(results.size(), c.threads, [&](std::size_t i) {
    const bool adjusted = i % 2 == 1;
    const auto b = static_cast<Eigen::Index>(i / 2);
    results[i] = run_block(c, data, adjusted, b * S, std::min(M, (b + 1) * S));
  });

  const auto N = static_cast<Eigen::Index>(data.symbols.size());
  std::string fc =
      "decision_date,date,pipeline,status,refit,lag,rank,best,loglik_dcc,loglik_adcc,det_omega_dcc,det_omega_adcc,"
      "det_omega_best,det_prior,det_post_dcc,det_post_adcc,det_post_best,det_omega_scaled,det_post_linked,note\n";
  std::string post = matrix_header(N);
  std::string postl = post;
  std::string fits =
      "decision_date,pipeline,ok,lag,rank,ridge,dcc_a,dcc_b,dcc_loglik,dcc_converged,dcc_fallback,adcc_a,adcc_b,"
      "adcc_g,adcc_loglik,adcc_converged,adcc_fallback,garch_fallbacks,best,note\n";
  DeterminantSeries omega_s[3], post_s[3];
  CoefficientSeries dcc_reg, dcc_adj, adcc_reg, adcc_adj;
  int failures = 0;
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const BlockResult& reg = results[static_cast<std::size_t>(2 * b)];
    const BlockResult& adj = results[static_cast<std::size_t>(2 * b + 1)];
    const Date refit_date = data.dates[static_cast<std::size_t>(W - 1 + b * S)];
    fits += fit_row(refit_date, "regular", reg.fit);
    fits += fit_row(refit_date, "adjusted", adj.fit);
    if (reg.fit.ok && adj.fit.ok) {
      dcc_reg.a.push_back(reg.fit.dcc.params.a);
      dcc_reg.b.push_back(reg.fit.dcc.params.b);
      dcc_adj.a.push_back(adj.fit.dcc.params.a);
      dcc_adj.b.push_back(adj.fit.dcc.params.b);
      adcc_reg.a.push_back(reg.fit.adcc.params.a);
      adcc_reg.b.push_back(reg.fit.adcc.params.b);
      adcc_reg.g.push_back(reg.fit.adcc.params.g);
      adcc_adj.a.push_back(adj.fit.adcc.params.a);
      adcc_adj.b.push_back(adj.fit.adcc.params.b);
      adcc_adj.g.push_back(adj.fit.adcc.params.g);
    }
    for (std::size_t j = 0; j < reg.days.size(); ++j) {
      const Eigen::Index t = W - 1 + b * S + static_cast<Eigen::Index>(j);
      const Date dd = data.dates[static_cast<std::size_t>(t)];
      const Date next = data.dates[static_cast<std::size_t>(t + 1)];
      const std::pair<const char*, const DayForecast*> rows[] = {{"regular", &reg.days[j]}, {"adjusted", &adj.days[j]}};
      for (const auto& [name, f] : rows) {
        if (!f->ok) ++failures;
        fc += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"\n", format_date(dd),
                          format_date(next), name, f->ok ? "ok" : "failed", f->refit ? 1 : 0, f->lag, f->rank,
                          to_string(f->best), format_number(f->ll_dcc), format_number(f->ll_adcc),
                          format_number(f->det_omega[0]), format_number(f->det_omega[1]),
                          format_number(f->det_omega[2]), format_number(f->det_prior), format_number(f->det_post[0]),
                          format_number(f->det_post[1]), format_number(f->det_post[2]),
                          format_number(f->det_omega_scaled), format_number(f->det_post_linked), f->note);
      }
      const DayForecast& rd = reg.days[j];
      const DayForecast& ad = adj.days[j];
      post += dated_row(dd, rd.ok ? flatten(rd.posterior_best) : Vector::Constant(N * N, kNaN));
      postl += dated_row(dd, ad.ok ? flatten(ad.posterior_best) : Vector::Constant(N * N, kNaN));
      if (rd.ok && ad.ok) {
        for (int m = 0; m < 3; ++m) {
          omega_s[m].regular.push_back(rd.det_omega[m]);
          omega_s[m].adjusted.push_back(ad.det_omega[m]);
          post_s[m].regular.push_back(rd.det_post[m]);
          post_s[m].adjusted.push_back(ad.det_post[m]);
        }
      }
    }
  }
  emit(c, r, "forecast/forecasts.csv", fc);
  emit(c, r, "forecast/fits.csv", fits);
  emit(c, r, "forecast/posterior.csv", post);
  emit(c, r, "forecast/posterior_adjusted.csv", postl);
  if (failures > 0) r.warnings.push_back(fmt::format("{} pipeline-days failed; see forecast/forecasts.csv", failures));

  if (omega_s[0].regular.size() >= 2) {
    const auto panel_a = determinant_tests(omega_s[0], omega_s[1], omega_s[2], "conditional covariance");
    const auto panel_b = determinant_tests(post_s[0], post_s[1], post_s[2], "posterior covariance");
    write_table2(c.out_dir / "tables/table2", panel_a, panel_b, c.portfolio_name);
    track(r, {"tables/table2.csv", "tables/table2.md"});
  } else {
    r.warnings.push_back("too few paired forecasts for the determinant tests");
  }
  if (dcc_reg.a.size() >= 2) {
    const auto rows = coefficient_tests(dcc_reg, dcc_adj, adcc_reg, adcc_adj);
    write_table3(c.out_dir / "tables/table3", rows, c.portfolio_name);
    track(r, {"tables/table3.csv", "tables/table3.md"});
  } else {
    r.warnings.push_back("fewer than two refit windows; coefficient tests skipped (lower refit_stride)");
  }
  record_stage(c, r);
  return r;
}

// ================================================================ backtest

StageReport run_backtest(const RunConfig& c) {
  c.validate();
  run_liquidity(c);
  const bool want_forecast = needs_forecast(c);
  if (want_forecast) run_forecast(c);
  if (stage_fresh(c, "backtest")) return skipped_report(c, "backtest");
  StageReport r;
  r.stage = "backtest";
  const LiquidityData data = load_liquidity(c);
  const auto D = static_cast<Eigen::Index>(data.dates.size());
  const auto N = static_cast<Eigen::Index>(data.symbols.size());

  BacktestInput in;
  in.dates = data.dates;
  in.returns = data.q;
  in.adjusted_returns = data.q_adjusted;
  in.intraday = data.cov;
  in.intraday_adjusted = data.cov_adjusted;
  if (want_forecast) {
    in.posterior.assign(static_cast<std::size_t>(D), Matrix());
    in.posterior_adjusted.assign(static_cast<std::size_t>(D), Matrix());
    std::map<Date, std::size_t> index;
    for (std::size_t t = 0; t < data.dates.size(); ++t) index[data.dates[t]] = t;
    const std::pair<const char*, std::vector<Matrix>*> files[] = {{"forecast/posterior.csv", &in.posterior},
                                                                  {"forecast/posterior_adjusted.csv", &in.posterior_adjusted}};
    for (const auto& [rel, target] : files) {
      const DatedTable t = read_dated_table(c.out_dir / rel);
      for (std::size_t k = 0; k < t.dates.size(); ++k) {
        const Vector v = t.values.row(static_cast<Eigen::Index>(k)).transpose();
        const auto it = index.find(t.dates[k]);
        if (it == index.end() || !v.allFinite()) continue;
        (*target)[it->second] = unflatten(v, N);
      }
    }
  }

  BacktestOptions opt;
  opt.window_days = c.window_days;
  opt.periods_per_year = c.annualization();
  std::vector<BacktestResult> results(c.variants.size());
  parallel_for(c.variants.size(), c.threads,
               [&](std::size_t i) { results[i] = run_variant(in, portfolio_variant(c.variants[i]), opt); });

  std::string failures = "portfolio,message\n";
  for (const auto& res : results) {
    std::string csv = "date";
    for (const auto& s : data.symbols) csv += ",w_" + s;
    csv += ",cash,realized_return\n";
    for (std::size_t k = 0; k < res.dates.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      Vector v(N + 2);
      v.head(N + 1) = res.weights.row(row).transpose();
      v(N + 1) = res.realized(row);
      csv += dated_row(res.dates[k], v);
    }
    emit(c, r, fmt::format("backtest/portfolio_{}.csv", res.variant.id), csv);
    for (const auto& f : res.failures) failures += fmt::format("{},\"{}\"\n", res.variant.id, f);
    if (!res.failures.empty()) {
      r.warnings.push_back(fmt::format("portfolio {}: {} days kept the previous weights", res.variant.id, res.failures.size()));
    }
  }
  emit(c, r, "backtest/failures.csv", failures);
  write_table4(c.out_dir / "tables/table4", results, c.portfolio_name);
  track(r, {"tables/table4.csv", "tables/table4.md"});
  record_stage(c, r);
  return r;
}

// ================================================================ report

StageReport run_report(const RunConfig& c) {
  c.validate();
  run_backtest(c);
  if (!needs_forecast(c)) run_forecast(c);
  if (stage_fresh(c, "report")) return skipped_report(c, "report");
  StageReport r;
  r.stage = "report";
  std::string md = fmt::format("# Liquidity-adjusted volatility report: {}\n\n", c.portfolio_name);
  md += fmt::format("Window {} days, refit stride {}, tau {}, portfolios {}.\n\n", c.window_days, c.refit_stride,
                    format_number(c.tau), fmt::join(c.variants, ", "));
  for (const char* t : {"table1", "table2", "table3", "table4"}) {
    const fs::path p = c.out_dir / "tables" / (std::string(t) + ".md");
    if (fs::exists(p)) md += read_file(p) + "\n";
  }
  md += "Histograms: figures/hist_jump.svg, figures/hist_diffusion.svg, figures/hist_composite.svg\n";
  emit(c, r, "report.md", md);
  record_stage(c, r);
  return r;
}

}  // namespace liqvol
