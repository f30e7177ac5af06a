#include "liqvol/marketdata.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace liqvol {

namespace {

constexpr std::int64_t kMsPerMinute = 60'000;
constexpr std::int64_t kMinutesPerDay = 1440;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text, std::size_t line, const char* what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ParseError(fmt::format("invalid {} '{}'", what, text), line);
  }
  return v;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

struct SessionSlot {
  std::int64_t session = 0;  // days since epoch of the session start
  int minute = 0;
  bool in_session = false;
};

SessionSlot locate(std::int64_t ts_ms, const CalendarSpec& spec) {
  const std::int64_t minute_abs = floor_div(ts_ms, kMsPerMinute) - spec.day_boundary_minute;
  SessionSlot slot;
  slot.session = floor_div(minute_abs, kMinutesPerDay);
  const std::int64_t offset = minute_abs - slot.session * kMinutesPerDay;
  slot.minute = static_cast<int>(offset);
  slot.in_session = offset < spec.minutes_per_day;
  return slot;
}

std::vector<std::string> read_header(std::istream& in, const std::vector<std::string>& expected,
                                     const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file " + path.string(), 1);
  auto fields = split_csv(trim(line));
  for (auto& f : fields) f = trim(f);
  if (fields != expected) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    throw ParseError(fmt::format("unexpected header in {} (want '{}')", path.string(), want), 1);
  }
  return fields;
}

}  // namespace

AssetClass parse_asset_class(const std::string& text) {
  if (text == "crypto") return AssetClass::crypto;
  if (text == "equity") return AssetClass::equity;
  throw std::invalid_argument("unknown asset class '" + text + "' (expected crypto or equity)");
}

std::string to_string(AssetClass c) { return c == AssetClass::crypto ? "crypto" : "equity"; }

void CalendarSpec::validate() const {
  if (minutes_per_day < 2 || minutes_per_day > kMinutesPerDay) {
    throw std::invalid_argument("minutes_per_day must lie in [2, 1440]");
  }
  if (day_boundary_minute < 0 || day_boundary_minute >= kMinutesPerDay) {
    throw std::invalid_argument("day_boundary_minute must lie in [0, 1440)");
  }
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(text.c_str(), "%d-%u-%u", &y, &m, &d) != 3) {
    throw std::invalid_argument("invalid date '" + text + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw std::invalid_argument("invalid date '" + text + "'");
  return Date{ymd};
}

std::int64_t parse_timestamp_ms(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) throw std::invalid_argument("empty timestamp");
  if (std::all_of(text.begin(), text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '-'; }) &&
      text.find('-', 1) == std::string::npos) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw std::invalid_argument("invalid epoch timestamp '" + text + "'");
    return v;
  }
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  char sep = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%d-%u-%u%c%u:%u:%lf%n", &y, &mo, &d, &sep, &h, &mi, &sec, &consumed) != 7 ||
      (sep != 'T' && sep != ' ')) {
    throw std::invalid_argument("invalid ISO-8601 timestamp '" + text + "'");
  }
  const std::string rest = text.substr(static_cast<std::size_t>(consumed));
  if (!(rest.empty() || rest == "Z" || rest == "+00:00")) {
    throw std::invalid_argument("timestamp must be UTC: '" + text + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec < 0.0 || sec >= 61.0) {
    throw std::invalid_argument("out-of-range timestamp '" + text + "'");
  }
  const std::int64_t days = Date{ymd}.time_since_epoch().count();
  return ((days * 24 + h) * 60 + mi) * kMsPerMinute + static_cast<std::int64_t>(std::llround(sec * 1000.0));
}

std::string format_timestamp(std::int64_t epoch_ms) {
  const std::int64_t days = floor_div(epoch_ms, 86'400'000);
  const std::int64_t rem = epoch_ms - days * 86'400'000;
  const Date d{std::chrono::days{days}};
  const std::int64_t secs = rem / 1000;
  return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", format_date(d), secs / 3600, (secs / 60) % 60, secs % 60);
}

double daily_compound_return(std::span<const double> returns) {
  double growth = 1.0;
  for (double r : returns) {
    if (!(r > -1.0)) throw std::domain_error("minute return must exceed -1");
    growth *= 1.0 + r;
  }
  return growth - 1.0;
}

IngestResult ingest_minute_csv(const std::filesystem::path& path, const CalendarSpec& spec) {
  spec.validate();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open minute file " + path.string());
  read_header(in, {"timestamp", "symbol", "close", "dollar_volume"}, path);

  struct Observation {
    double close = 0.0;
    double volume = 0.0;
    bool present = false;
  };
  // symbol -> session -> minute slots
  std::map<std::string, std::map<std::int64_t, std::vector<Observation>>> book;

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_csv(t);
    if (fields.size() != 4) throw ParseError("expected 4 fields", line_no);
    std::int64_t ts = 0;
    try {
      ts = parse_timestamp_ms(fields[0]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
    const std::string symbol = trim(fields[1]);
    if (symbol.empty()) throw ParseError("empty symbol", line_no);
    const double close = parse_double(fields[2], line_no, "close");
    const double volume = parse_double(fields[3], line_no, "dollar_volume");
    if (close <= 0.0) throw ParseError("close must be positive", line_no);
    if (volume < 0.0) throw ParseError("dollar_volume must be non-negative", line_no);

    const SessionSlot slot = locate(ts, spec);
    if (!slot.in_session) continue;
    auto& minutes = book[symbol][slot.session];
    if (minutes.empty()) minutes.resize(static_cast<std::size_t>(spec.minutes_per_day));
    minutes[static_cast<std::size_t>(slot.minute)] = {close, volume, true};
  }

  IngestResult result;
  const int T = spec.minutes_per_day;
  const int max_missing = T / 5;  // more than 20% missing rejects the day
  for (const auto& [symbol, sessions] : book) {
    std::optional<double> prior_close;
    for (const auto& [session, minutes] : sessions) {
      const Date date{std::chrono::days{session}};
      const int missing = static_cast<int>(std::count_if(minutes.begin(), minutes.end(),
                                                          [](const Observation& o) { return !o.present; }));
      std::optional<double> last_close_this_session;
      for (const auto& o : minutes) {
        if (o.present) last_close_this_session = o.close;
      }
      if (missing > max_missing) {
        result.warnings.push_back({symbol, date, missing,
                                   fmt::format("{} of {} minutes missing (limit {})", missing, T, max_missing)});
        if (last_close_this_session) prior_close = last_close_this_session;
        continue;
      }

      MinuteGrid grid;
      grid.symbol = symbol;
      grid.date = date;
      grid.returns.assign(static_cast<std::size_t>(T), 0.0);
      grid.dollar_volume.assign(static_cast<std::size_t>(T), 0.0);
      grid.closes.assign(static_cast<std::size_t>(T), 0.0);

      std::optional<double> reference = prior_close;
      double first_observed = 0.0;
      for (const auto& o : minutes) {
        if (o.present) {
          first_observed = o.close;
          break;
        }
      }
      for (int tau = 0; tau < T; ++tau) {
        const auto& o = minutes[static_cast<std::size_t>(tau)];
        const auto k = static_cast<std::size_t>(tau);
        if (o.present) {
          grid.returns[k] = reference ? o.close / *reference - 1.0 : 0.0;
          grid.dollar_volume[k] = o.volume;
          grid.closes[k] = o.close;
          reference = o.close;
        } else {
          grid.closes[k] = reference ? *reference : first_observed;
        }
      }
      prior_close = last_close_this_session;
      result.grids.push_back(std::move(grid));
    }
  }
  std::sort(result.grids.begin(), result.grids.end(), [](const MinuteGrid& a, const MinuteGrid& b) {
    return a.date != b.date ? a.date < b.date : a.symbol < b.symbol;
  });
  return result;
}

void write_minute_csv(const std::filesystem::path& path, std::span<const MinuteGrid> grids,
                      const CalendarSpec& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write minute file " + path.string());
  out << "timestamp,symbol,close,dollar_volume\n";
  for (const auto& g : grids) {
    const std::int64_t start_min = g.date.time_since_epoch().count() * kMinutesPerDay + spec.day_boundary_minute;
    for (std::size_t tau = 0; tau < g.closes.size(); ++tau) {
      const std::int64_t ts = (start_min + static_cast<std::int64_t>(tau)) * kMsPerMinute;
      out << format_timestamp(ts) << ',' << g.symbol << ',' << fmt::format("{:.17g}", g.closes[tau]) << ','
          << fmt::format("{:.17g}", g.dollar_volume[tau]) << '\n';
    }
  }
}

MinuteGrid aggregate_ticks(std::span<const Tick> ticks, const std::string& symbol, Date session,
                           const CalendarSpec& spec, std::optional<double> prior_close) {
  spec.validate();
  const int T = spec.minutes_per_day;
  MinuteGrid grid;
  grid.symbol = symbol;
  grid.date = session;
  grid.returns.assign(static_cast<std::size_t>(T), 0.0);
  grid.dollar_volume.assign(static_cast<std::size_t>(T), 0.0);
  grid.closes.assign(static_cast<std::size_t>(T), 0.0);

  std::vector<double> last_price(static_cast<std::size_t>(T), 0.0);
  std::vector<bool> traded(static_cast<std::size_t>(T), false);
  const std::int64_t session_days = session.time_since_epoch().count();
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const Tick& tk = ticks[i];
    if (i > 0 && tk.timestamp_ms < ticks[i - 1].timestamp_ms) {
      throw std::invalid_argument(fmt::format("ticks for {} are not time-sorted at index {}", symbol, i));
    }
    if (!(tk.price > 0.0) || !(tk.size >= 0.0)) {
      throw std::invalid_argument(fmt::format("invalid tick for {} at index {}", symbol, i));
    }
    const SessionSlot slot = locate(tk.timestamp_ms, spec);
    if (slot.session != session_days || !slot.in_session) {
      throw std::invalid_argument(fmt::format("tick {} for {} lies outside session {}", i, symbol, format_date(session)));
    }
    const auto k = static_cast<std::size_t>(slot.minute);
    last_price[k] = tk.price;
    traded[k] = true;
    grid.dollar_volume[k] += tk.price * tk.size;
  }

  std::optional<double> reference = prior_close;
  if (!reference && !ticks.empty()) reference = ticks.front().price;
  for (std::size_t k = 0; k < static_cast<std::size_t>(T); ++k) {
    if (traded[k]) {
      grid.returns[k] = last_price[k] / *reference - 1.0;
      reference = last_price[k];
    }
    grid.closes[k] = reference ? *reference : 0.0;
  }
  return grid;
}

IngestResult ingest_tick_csv(const std::filesystem::path& path, const CalendarSpec& spec) {
  spec.validate();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tick file " + path.string());
  read_header(in, {"timestamp", "symbol", "price", "size"}, path);

  std::map<std::string, std::map<std::int64_t, std::vector<Tick>>> book;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_csv(t);
    if (fields.size() != 4) throw ParseError("expected 4 fields", line_no);
    Tick tk;
    try {
      tk.timestamp_ms = parse_timestamp_ms(fields[0]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
    tk.price = parse_double(fields[2], line_no, "price");
    tk.size = parse_double(fields[3], line_no, "size");
    const SessionSlot slot = locate(tk.timestamp_ms, spec);
    if (!slot.in_session) continue;
    auto& bucket = book[trim(fields[1])][slot.session];
    if (!bucket.empty() && tk.timestamp_ms < bucket.back().timestamp_ms) {
      throw ParseError("tick timestamps are not sorted", line_no);
    }
    bucket.push_back(tk);
  }

  IngestResult result;
  for (const auto& [symbol, sessions] : book) {
    std::optional<double> prior;
    for (const auto& [session, ticks] : sessions) {
      MinuteGrid g = aggregate_ticks(ticks, symbol, Date{std::chrono::days{session}}, spec, prior);
      prior = ticks.back().price;
      result.grids.push_back(std::move(g));
    }
  }
  std::sort(result.grids.begin(), result.grids.end(), [](const MinuteGrid& a, const MinuteGrid& b) {
    return a.date != b.date ? a.date < b.date : a.symbol < b.symbol;
  });
  return result;
}

}  // namespace liqvol
