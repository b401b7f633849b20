#include "odt/date.hpp"

#include <charconv>
#include <cstdio>

#include "odt/error.hpp"

namespace odt {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kUnsupportedLevel: return "UnsupportedLevel";
    case ErrorCode::kUnknownUnit: return "UnknownUnit";
    case ErrorCode::kUnknownDataset: return "UnknownDataset";
    case ErrorCode::kInvalidLevelPair: return "InvalidLevelPair";
    case ErrorCode::kMalformedDestinationMap: return "MalformedDestinationMap";
    case ErrorCode::kMalformedDate: return "MalformedDate";
    case ErrorCode::kMixedDataset: return "MixedDataset";
    case ErrorCode::kInvalidPeriod: return "InvalidPeriod";
    case ErrorCode::kUnsupportedDirection: return "UnsupportedDirection";
    case ErrorCode::kFormat: return "Format";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

namespace {

[[noreturn]] void bad_date(std::string_view text) {
  throw Error(ErrorCode::kMalformedDate, "malformed date/time: '" + std::string(text) + "'");
}

// Reads exactly `width` digits at `pos`.
int read_fixed(std::string_view text, size_t pos, size_t width) {
  if (pos + width > text.size()) bad_date(text);
  int value = 0;
  for (size_t i = pos; i < pos + width; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') bad_date(text);
    value = value * 10 + (c - '0');
  }
  return value;
}

void expect_char(std::string_view text, size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) bad_date(text);
}

Day parse_date_prefix(std::string_view text) {
  int y = read_fixed(text, 0, 4);
  expect_char(text, 4, '-');
  int m = read_fixed(text, 5, 2);
  expect_char(text, 7, '-');
  int d = read_fixed(text, 8, 2);
  std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(m)),
                                  std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok()) bad_date(text);
  return Day::from_sys_days(std::chrono::sys_days(ymd));
}

}  // namespace

Day Day::from_ymd(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year(year), std::chrono::month(month),
                                  std::chrono::day(day)};
  if (!ymd.ok()) {
    throw Error(ErrorCode::kMalformedDate, "invalid calendar date");
  }
  return from_sys_days(std::chrono::sys_days(ymd));
}

Day parse_day(std::string_view text) {
  if (text.size() != 10) bad_date(text);
  return parse_date_prefix(text);
}

std::string format_day(Day d) {
  auto ymd = d.ymd();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Instant parse_instant(std::string_view text) {
  if (text.size() < 19) bad_date(text);
  Day day = parse_date_prefix(text);
  if (text[10] != 'T' && text[10] != ' ') bad_date(text);
  int hh = read_fixed(text, 11, 2);
  expect_char(text, 13, ':');
  int mm = read_fixed(text, 14, 2);
  expect_char(text, 16, ':');
  int ss = read_fixed(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) bad_date(text);

  size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    size_t digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      ++pos;
      ++digits;
    }
    if (digits == 0) bad_date(text);
  }

  int offset_seconds = 0;
  if (pos < text.size()) {
    char z = text[pos];
    if (z == 'Z' || z == 'z') {
      ++pos;
    } else if (z == '+' || z == '-') {
      int oh = read_fixed(text, pos + 1, 2);
      size_t next = pos + 3;
      if (next < text.size() && text[next] == ':') ++next;
      int om = read_fixed(text, next, 2);
      if (oh > 23 || om > 59) bad_date(text);
      offset_seconds = (oh * 3600 + om * 60) * (z == '-' ? -1 : 1);
      pos = next + 2;
    } else {
      bad_date(text);
    }
  }
  if (pos != text.size()) bad_date(text);

  int64_t local = static_cast<int64_t>(day.value) * 86400 + hh * 3600 + mm * 60 + ss;
  return local - offset_seconds;
}

Day utc_day(Instant t) {
  int64_t days = t / 86400;
  if (t % 86400 < 0) --days;
  return Day(static_cast<int32_t>(days));
}

Day local_day_of_timestamp(std::string_view text) {
  if (text.size() == 10) return parse_day(text);
  parse_instant(text);  // validates the whole timestamp
  return parse_date_prefix(text);
}

}  // namespace odt
