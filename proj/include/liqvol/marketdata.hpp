#pragma once

#include "liqvol/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace liqvol {

enum class AssetClass { crypto, equity };

AssetClass parse_asset_class(const std::string& text);
std::string to_string(AssetClass c);

/// Session calendar shared by every asset of a portfolio.
struct CalendarSpec {
  int minutes_per_day = 1440;     ///< T: 1440 for crypto, 390 for US equities
  int day_boundary_minute = 0;    ///< session start as minutes after 00:00 UTC
  AssetClass asset_class = AssetClass::crypto;

  static CalendarSpec crypto() { return {1440, 0, AssetClass::crypto}; }
  static CalendarSpec equity() { return {390, 14 * 60 + 30, AssetClass::equity}; }
  void validate() const;
};

/// One asset-day of minute returns and traded dollar amounts on a fixed grid.
struct MinuteGrid {
  std::string symbol;
  Date date{};
  std::vector<double> returns;
  std::vector<double> dollar_volume;
  /// Close at each minute; missing minutes carry the previous close forward.
  std::vector<double> closes;
};

struct IngestWarning {
  std::string symbol;
  Date date{};
  int missing_minutes = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<MinuteGrid> grids;  ///< sorted by (date, symbol)
  std::vector<IngestWarning> warnings;
};

/// Milliseconds since the Unix epoch. Accepts ISO-8601 UTC
/// (`2024-01-02T03:04:05Z`, optional fraction, `T` or space) or a bare
/// integer epoch-milliseconds value.
std::int64_t parse_timestamp_ms(const std::string& text);
std::string format_timestamp(std::int64_t epoch_ms);

/// Reads `timestamp,symbol,close,dollar_volume`. Days missing more than 20%
/// of their minutes are rejected with a warning.
IngestResult ingest_minute_csv(const std::filesystem::path& path, const CalendarSpec& spec);

/// Writes grids back as a minute CSV (ISO timestamps, 17 significant digits).
void write_minute_csv(const std::filesystem::path& path, std::span<const MinuteGrid> grids,
                      const CalendarSpec& spec);

struct Tick {
  std::int64_t timestamp_ms = 0;
  double price = 0.0;
  double size = 0.0;
};

/// Aggregates time-sorted ticks of one session into a minute grid. The first
/// minute's return is taken against `prior_close` when given, else against
/// the session's first traded price.
MinuteGrid aggregate_ticks(std::span<const Tick> ticks, const std::string& symbol, Date session,
                           const CalendarSpec& spec, std::optional<double> prior_close = std::nullopt);

/// Reads `timestamp,symbol,price,size` and aggregates each (symbol, session).
IngestResult ingest_tick_csv(const std::filesystem::path& path, const CalendarSpec& spec);

/// prod(1 + r) - 1 over the minute returns of one day.
double daily_compound_return(std::span<const double> returns);

}  // namespace liqvol
