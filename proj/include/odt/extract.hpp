#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "odt/date.hpp"
#include "odt/geo.hpp"
#include "odt/records.hpp"

namespace odt {

// Place precision attached to a geotagged event, finest first.
enum class Resolution : uint8_t { kPoint, kPoi, kNeighborhood, kCity, kAdmin, kCountry };

std::string_view resolution_name(Resolution r);
Resolution parse_resolution(std::string_view name);

struct GeoEvent {
  std::string user_id;
  Instant timestamp = 0;
  GeoPoint point;
  std::string source;
  Resolution resolution = Resolution::kPoint;

  Day day() const { return utc_day(timestamp); }
};

struct FilterConfig {
  std::set<std::string, std::less<>> bot_sources = default_bot_sources();
  // Events strictly coarser than this are dropped.
  Resolution max_resolution = Resolution::kCity;

  static std::set<std::string, std::less<>> default_bot_sources();
  // One source per line; blank lines and `#` comments ignored. Replaces the
  // defaults.
  static FilterConfig with_bot_list(std::string_view text);
};

struct FilterStats {
  uint64_t kept = 0;
  uint64_t dropped_bot = 0;
  uint64_t dropped_resolution = 0;
};

std::vector<GeoEvent> filter_events(std::span<const GeoEvent> events, const FilterConfig& cfg,
                                    FilterStats* stats = nullptr);

// First location to the location farthest from it, for one user-day. Events
// must share the user and UTC day and be ordered by timestamp; otherwise
// Error(kInvalidInput).
std::optional<FlowRecord> extract_single_day(std::span<const GeoEvent> user_day_events);

// Mean-center shift from one day to the next, dated on the arrival day.
// Throws Error(kInvalidInput) when the days are not consecutive.
std::optional<FlowRecord> extract_cross_day(std::span<const GeoEvent> day_a_events,
                                            std::span<const GeoEvent> day_b_events);

// Filters, buckets by UTC day, and emits every single-day and cross-day flow
// for one user, sorted by (date, kind).
std::vector<FlowRecord> extract_user_flows(std::span<const GeoEvent> all_events_one_user,
                                           const FilterConfig& cfg, FilterStats* stats = nullptr);

struct DestinationCount {
  std::string cbg;
  uint64_t count = 0;

  bool operator==(const DestinationCount&) const = default;
};

// Accepts the JSON object form and the quote-stripped `{id:n,...}` form.
// Zero counts are dropped. Throws Error(kMalformedDestinationMap).
std::vector<DestinationCount> parse_destination_cbgs(std::string_view text);

struct SdmRow {
  std::string origin_census_block_group;
  std::string destination_cbgs;
  std::string date_range_start;
};

// One sdm FlowRecord per destination entry, dated on the calendar day of
// date_range_start in its own offset.
std::vector<FlowRecord> explode_sdm_row(const SdmRow& row);

// Event input readers. Rows that fail to parse are counted, not fatal.
struct EventReadStats {
  uint64_t rows = 0;
  uint64_t malformed = 0;
};

// CSV with a header naming user_id,timestamp,lat,lon,source,resolution.
std::vector<GeoEvent> read_events_csv(std::istream& in, EventReadStats* stats = nullptr);
// One JSON object per line with the same field names.
std::vector<GeoEvent> read_events_ndjson(std::istream& in, EventReadStats* stats = nullptr);

struct EventPipelineStats {
  uint64_t events_read = 0;
  uint64_t events_malformed = 0;
  uint64_t filtered_bot = 0;
  uint64_t filtered_resolution = 0;
  uint64_t events_kept = 0;
  uint64_t users = 0;
  uint64_t users_with_flows = 0;
  uint64_t flows_single_day = 0;
  uint64_t flows_cross_day = 0;
};

// Groups events by user and runs extract_user_flows per user. Output is in
// canonical record order, independent of input order.
std::vector<FlowRecord> extract_all_users(std::span<const GeoEvent> events, const FilterConfig& cfg,
                                          EventPipelineStats* stats = nullptr);

struct SdmPipelineStats {
  uint64_t rows_read = 0;
  uint64_t rows_skipped = 0;
  uint64_t malformed_row = 0;
  uint64_t malformed_map = 0;
  uint64_t malformed_date = 0;
  uint64_t malformed_origin = 0;
  uint64_t records = 0;
  uint64_t total_count = 0;
};

// Reads an SDM CSV (header must name origin_census_block_group,
// destination_cbgs, date_range_start) and explodes every row. Malformed rows
// are skipped and counted.
std::vector<FlowRecord> ingest_sdm_csv(std::istream& in, SdmPipelineStats* stats = nullptr);

}  // namespace odt
