#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace odt {

// A UTC calendar day, stored as days since 1970-01-01.
struct Day {
  int32_t value = 0;

  constexpr Day() = default;
  constexpr explicit Day(int32_t days) : value(days) {}

  static Day from_ymd(int year, unsigned month, unsigned day);
  static Day from_sys_days(std::chrono::sys_days d) {
    return Day(static_cast<int32_t>(d.time_since_epoch().count()));
  }

  std::chrono::sys_days sys_days() const {
    return std::chrono::sys_days(std::chrono::days(value));
  }
  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day(sys_days()); }

  Day next() const { return Day(value + 1); }

  constexpr auto operator<=>(const Day&) const = default;
};

// Inclusive [first, last] range of days.
struct Period {
  Day first;
  Day last;

  bool contains(Day d) const { return first <= d && d <= last; }
  int32_t length() const { return last.value - first.value + 1; }
  bool operator==(const Period&) const = default;
};

// Parses `YYYY-MM-DD`; throws Error(kMalformedDate).
Day parse_day(std::string_view text);
std::string format_day(Day d);

// Seconds since the Unix epoch.
using Instant = int64_t;

// Parses an ISO-8601 timestamp `YYYY-MM-DDTHH:MM:SS[.fff](Z|±HH:MM|±HHMM)`.
// A missing zone designator is read as UTC. Throws Error(kMalformedDate).
Instant parse_instant(std::string_view text);

// UTC calendar day containing the instant.
Day utc_day(Instant t);

// Calendar date as written in the timestamp, i.e. in its own stated offset.
Day local_day_of_timestamp(std::string_view text);

}  // namespace odt
