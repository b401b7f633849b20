#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "odt/date.hpp"
#include "odt/geo.hpp"

namespace odt {

enum class FlowKind : uint8_t { kSingleDay, kCrossDay, kSdm };

std::string_view kind_name(FlowKind kind);
FlowKind parse_kind(std::string_view name);

enum class Dataset : uint8_t { kTwitter, kSafegraph };

std::string_view dataset_name(Dataset dataset);
Dataset parse_dataset(std::string_view name);
Dataset dataset_of(FlowKind kind);

// A coordinate for event-derived flows, a unit id (block-group FIPS for SDM)
// otherwise.
using Endpoint = std::variant<GeoPoint, std::string>;

// One extracted daily OD flow at its finest granularity.
struct FlowRecord {
  Endpoint origin;
  Endpoint destination;
  Day date;
  uint64_t count = 1;
  FlowKind kind = FlowKind::kSingleDay;

  bool operator==(const FlowRecord&) const = default;
};

// Total order used for canonical sorting and set comparisons.
bool operator<(const FlowRecord& a, const FlowRecord& b);

// Flat CSV batch format:
//   kind,date,o_id,o_lat,o_lon,d_id,d_lat,d_lon,count
// Point endpoints leave the id column empty, id endpoints leave lat/lon empty.
// Coordinates use the shortest representation that round-trips exactly.
inline constexpr std::string_view kRecordCsvHeader = "kind,date,o_id,o_lat,o_lon,d_id,d_lat,d_lon,count";

void write_records_csv(std::span<const FlowRecord> records, std::ostream& out);
// Throws Error(kFormat) with the offending line number.
std::vector<FlowRecord> read_records_csv(std::istream& in);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);
// Fixed six-decimal form used by the export contract.
void append_fixed6(std::string& out, double v);

}  // namespace odt
