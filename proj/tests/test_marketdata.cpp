#include "liqvol/marketdata.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>

using namespace liqvol;
using liqvol::testing::scratch_dir;

namespace {

constexpr std::int64_t kDayMs = 86'400'000;
constexpr std::int64_t kMinMs = 60'000;

CalendarSpec small_calendar(int T) {
  CalendarSpec c = CalendarSpec::crypto();
  c.minutes_per_day = T;
  return c;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

std::int64_t day0_ms() { return Date{std::chrono::year{2024} / 1 / 2}.time_since_epoch().count() * kDayMs; }

}  // namespace

TEST(Timestamps, IsoAndEpochAgree) {
  const auto iso = parse_timestamp_ms("2024-01-02T03:04:05Z");
  const auto spaced = parse_timestamp_ms("2024-01-02 03:04:05");
  const auto epoch = parse_timestamp_ms(std::to_string(iso));
  EXPECT_EQ(iso, spaced);
  EXPECT_EQ(iso, epoch);
  EXPECT_EQ(iso % 1000, 0);
  EXPECT_EQ(parse_timestamp_ms("2024-01-02T03:04:05.250Z") - iso, 250);
  EXPECT_EQ(parse_timestamp_ms(format_timestamp(iso)), iso);
  EXPECT_THROW(parse_timestamp_ms("yesterday"), std::invalid_argument);
}

TEST(DailyCompound, AllZerosIsZero) {
  const std::vector<double> r(390, 0.0);
  EXPECT_EQ(daily_compound_return(r), 0.0);
}

TEST(DailyCompound, ConstantMinuteReturn) {
  const std::vector<double> r(60, 0.001);
  EXPECT_NEAR(daily_compound_return(r), std::pow(1.001, 60) - 1.0, 1e-14);
}

TEST(DailyCompound, RandomMatchesProductAndSplits) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> r(390);
    for (auto& x : r) x = liqvol::testing::uniform(rng, -0.01, 0.01);
    long double prod = 1.0L;
    for (double x : r) prod *= 1.0L + x;
    EXPECT_NEAR(daily_compound_return(r), static_cast<double>(prod - 1.0L), 1e-13);
    const std::size_t cut = static_cast<std::size_t>(trial * 7 % 389) + 1;
    const double a = daily_compound_return(std::span(r).first(cut));
    const double b = daily_compound_return(std::span(r).subspan(cut));
    EXPECT_NEAR((1 + a) * (1 + b) - 1, daily_compound_return(r), 1e-13);
  }
}

TEST(DailyCompound, RejectsMinusOne) {
  const std::vector<double> r{0.01, -1.0};
  EXPECT_THROW(daily_compound_return(r), std::domain_error);
}

TEST(MinuteCsv, ShapeTwoAssetsThreeDays) {
  const auto dir = scratch_dir("md_shape");
  const int T = 4;
  std::string csv = "timestamp,symbol,close,dollar_volume\n";
  for (int d = 0; d < 3; ++d) {
    for (int m = 0; m < T; ++m) {
      for (const char* s : {"AAA", "BBB"}) {
        csv += std::to_string(day0_ms() + d * kDayMs + m * kMinMs) + "," + s + ",100,10\n";
      }
    }
  }
  write_text(dir / "m.csv", csv);
  const auto res = ingest_minute_csv(dir / "m.csv", small_calendar(T));
  ASSERT_EQ(res.grids.size(), 6u);
  for (const auto& g : res.grids) {
    EXPECT_EQ(g.returns.size(), 4u);
    EXPECT_EQ(g.dollar_volume.size(), 4u);
    for (double r : g.returns) EXPECT_EQ(r, 0.0);
  }
  EXPECT_TRUE(res.warnings.empty());
}

TEST(MinuteCsv, ReturnsMatchRowByRowRecomputation) {
  const auto dir = scratch_dir("md_returns");
  const int T = 5;
  const std::vector<double> closes{100, 101, 101, 99.98, 100.5, 100.25, 99.0, 98.5, 99.75, 101.0};
  std::string csv = "timestamp,symbol,close,dollar_volume\n";
  for (std::size_t k = 0; k < closes.size(); ++k) {
    const auto d = static_cast<std::int64_t>(k / T);
    const auto m = static_cast<std::int64_t>(k % T);
    csv += format_timestamp(day0_ms() + d * kDayMs + m * kMinMs) + ",X," + std::to_string(closes[k]) + ",1000\n";
  }
  write_text(dir / "m.csv", csv);
  const auto res = ingest_minute_csv(dir / "m.csv", small_calendar(T));
  ASSERT_EQ(res.grids.size(), 2u);
  // spreadsheet-style oracle: previous close, across the day boundary too
  std::vector<double> expect(closes.size(), 0.0);
  for (std::size_t k = 1; k < closes.size(); ++k) expect[k] = closes[k] / closes[k - 1] - 1.0;
  for (std::size_t k = 0; k < closes.size(); ++k) {
    EXPECT_DOUBLE_EQ(res.grids[k / T].returns[k % T], expect[k]) << k;
  }
}

TEST(MinuteCsv, MissingMinutesFilledAndHeavyGapsRejected) {
  const auto dir = scratch_dir("md_missing");
  const int T = 10;
  std::string csv = "timestamp,symbol,close,dollar_volume\n";
  // day 0: minutes 3 and 4 missing (20%, kept); day 1: three missing (rejected)
  for (int m = 0; m < T; ++m) {
    if (m == 3 || m == 4) continue;
    csv += std::to_string(day0_ms() + m * kMinMs) + ",X," + std::to_string(100 + m) + ",5\n";
  }
  for (int m = 0; m < T; ++m) {
    if (m < 3) continue;
    csv += std::to_string(day0_ms() + kDayMs + m * kMinMs) + ",X,100,5\n";
  }
  write_text(dir / "m.csv", csv);
  const auto res = ingest_minute_csv(dir / "m.csv", small_calendar(T));
  ASSERT_EQ(res.grids.size(), 1u);
  ASSERT_EQ(res.warnings.size(), 1u);
  EXPECT_EQ(res.warnings[0].missing_minutes, 3);
  const auto& g = res.grids[0];
  EXPECT_EQ(g.returns[3], 0.0);
  EXPECT_EQ(g.dollar_volume[4], 0.0);
  EXPECT_DOUBLE_EQ(g.returns[5], 105.0 / 102.0 - 1.0);
}

TEST(MinuteCsv, MalformedRowReportsLine) {
  const auto dir = scratch_dir("md_bad");
  write_text(dir / "m.csv", "timestamp,symbol,close,dollar_volume\n0,X,100,1\n60000,X,abc,1\n");
  try {
    ingest_minute_csv(dir / "m.csv", small_calendar(4));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(MinuteCsv, IngestWriteIngestIsIdempotent) {
  const auto dir = scratch_dir("md_idem");
  const int T = 12;
  std::mt19937_64 rng(5);
  std::string csv = "timestamp,symbol,close,dollar_volume\n";
  std::map<std::string, double> price{{"A", 50.0}, {"B", 20.0}};
  for (int d = 0; d < 4; ++d) {
    for (int m = 0; m < T; ++m) {
      for (auto& [s, p] : price) {
        if ((m + d + static_cast<int>(s[0])) % 7 == 3) continue;  // one or two gaps per day
        p *= 1.0 + liqvol::testing::uniform(rng, -0.01, 0.01);
        csv += format_timestamp(day0_ms() + d * kDayMs + m * kMinMs) + "," + s + "," +
               std::to_string(p) + "," + std::to_string(liqvol::testing::uniform(rng, 0, 1e4)) + "\n";
      }
    }
  }
  write_text(dir / "a.csv", csv);
  const auto first = ingest_minute_csv(dir / "a.csv", small_calendar(T));
  ASSERT_TRUE(first.warnings.empty());
  write_minute_csv(dir / "b.csv", first.grids, small_calendar(T));
  const auto second = ingest_minute_csv(dir / "b.csv", small_calendar(T));
  ASSERT_EQ(first.grids.size(), second.grids.size());
  for (std::size_t i = 0; i < first.grids.size(); ++i) {
    EXPECT_EQ(first.grids[i].symbol, second.grids[i].symbol);
    EXPECT_EQ(first.grids[i].date, second.grids[i].date);
    EXPECT_EQ(first.grids[i].returns, second.grids[i].returns);
    EXPECT_EQ(first.grids[i].dollar_volume, second.grids[i].dollar_volume);
    EXPECT_EQ(first.grids[i].closes, second.grids[i].closes);
  }
}

TEST(MinuteCsv, EquitySessionSkipsOutsideRows) {
  const auto dir = scratch_dir("md_equity");
  CalendarSpec cal = CalendarSpec::equity();
  cal.minutes_per_day = 4;
  const std::int64_t open = day0_ms() + cal.day_boundary_minute * kMinMs;
  std::string csv = "timestamp,symbol,close,dollar_volume\n";
  csv += std::to_string(open - kMinMs) + ",X,90,1\n";  // pre-market
  for (int m = 0; m < 4; ++m) csv += std::to_string(open + m * kMinMs) + ",X," + std::to_string(100 + m) + ",1\n";
  csv += std::to_string(open + 10 * kMinMs) + ",X,200,1\n";  // after the close
  write_text(dir / "m.csv", csv);
  const auto res = ingest_minute_csv(dir / "m.csv", cal);
  ASSERT_EQ(res.grids.size(), 1u);
  EXPECT_EQ(res.grids[0].returns[0], 0.0);
  EXPECT_DOUBLE_EQ(res.grids[0].returns[3], 103.0 / 102.0 - 1.0);
}

TEST(Ticks, OneTickPerMinute) {
  const int T = 5;
  const Date day{std::chrono::year{2024} / 1 / 2};
  std::vector<Tick> ticks;
  for (int m = 0; m < T; ++m) ticks.push_back({day0_ms() + m * kMinMs + 1000, 10.0 + m, 2.0});
  const auto g = aggregate_ticks(ticks, "X", day, small_calendar(T));
  for (int m = 0; m < T; ++m) EXPECT_DOUBLE_EQ(g.dollar_volume[static_cast<std::size_t>(m)], (10.0 + m) * 2.0);
}

TEST(Ticks, GapMinuteHasZeroReturnAndVolume) {
  const int T = 3;
  const Date day{std::chrono::year{2024} / 1 / 2};
  const std::vector<Tick> ticks{{day0_ms(), 10.0, 1.0}, {day0_ms() + 2 * kMinMs, 11.0, 1.0}};
  const auto g = aggregate_ticks(ticks, "X", day, small_calendar(T));
  EXPECT_EQ(g.returns[1], 0.0);
  EXPECT_EQ(g.dollar_volume[1], 0.0);
  EXPECT_EQ(g.returns[2], 11.0 / 10.0 - 1.0);
}

TEST(Ticks, UnsortedThrows) {
  const Date day{std::chrono::year{2024} / 1 / 2};
  const std::vector<Tick> ticks{{day0_ms() + kMinMs, 10.0, 1.0}, {day0_ms(), 11.0, 1.0}};
  EXPECT_THROW(aggregate_ticks(ticks, "X", day, small_calendar(3)), std::invalid_argument);
}

TEST(Ticks, RandomTicksMatchGroupByOracle) {
  const int T = 60;
  const Date day{std::chrono::year{2024} / 1 / 2};
  std::mt19937_64 rng(3);
  std::vector<Tick> ticks;
  for (int i = 0; i < 1000; ++i) {
    const auto ts = day0_ms() + static_cast<std::int64_t>(liqvol::testing::uniform(rng, 0, T * kMinMs));
    ticks.push_back({ts, liqvol::testing::uniform(rng, 90, 110), liqvol::testing::uniform(rng, 0, 5)});
  }
  std::sort(ticks.begin(), ticks.end(), [](const Tick& a, const Tick& b) { return a.timestamp_ms < b.timestamp_ms; });
  const auto g = aggregate_ticks(ticks, "X", day, small_calendar(T));

  std::vector<double> vol(T, 0.0), last(T, 0.0);
  std::vector<bool> seen(T, false);
  double total = 0.0;
  for (const auto& t : ticks) {
    const auto m = static_cast<std::size_t>((t.timestamp_ms - day0_ms()) / kMinMs);
    vol[m] += t.price * t.size;
    last[m] = t.price;
    seen[m] = true;
    total += t.price * t.size;
  }
  double ref = ticks.front().price;
  double sum = 0.0;
  for (std::size_t m = 0; m < static_cast<std::size_t>(T); ++m) {
    EXPECT_NEAR(g.dollar_volume[m], vol[m], 1e-9);
    sum += g.dollar_volume[m];
    if (seen[m]) {
      EXPECT_DOUBLE_EQ(g.returns[m], last[m] / ref - 1.0);
      ref = last[m];
    } else {
      EXPECT_EQ(g.returns[m], 0.0);
    }
  }
  EXPECT_NEAR(sum, total, 1e-8 * total);
}

TEST(TickCsv, AggregatesPerSession) {
  const auto dir = scratch_dir("md_ticks");
  std::string csv = "timestamp,symbol,price,size\n";
  for (int d = 0; d < 2; ++d) {
    for (int m = 0; m < 4; ++m) {
      csv += std::to_string(day0_ms() + d * kDayMs + m * kMinMs + 5) + ",X," + std::to_string(10 + m + d) + ",1\n";
      csv += std::to_string(day0_ms() + d * kDayMs + m * kMinMs + 9) + ",X," + std::to_string(10 + m + d) + ",2\n";
    }
  }
  write_text(dir / "t.csv", csv);
  const auto res = ingest_tick_csv(dir / "t.csv", small_calendar(4));
  ASSERT_EQ(res.grids.size(), 2u);
  EXPECT_DOUBLE_EQ(res.grids[0].dollar_volume[2], 12.0 * 3.0);
  // second session opens against the first session's last price
  EXPECT_DOUBLE_EQ(res.grids[1].returns[0], 11.0 / 13.0 - 1.0);
}
