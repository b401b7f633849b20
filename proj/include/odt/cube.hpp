#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "odt/date.hpp"
#include "odt/geo.hpp"
#include "odt/records.hpp"

namespace odt {

enum class Direction : uint8_t { kInflow, kOutflow, kInAndOut, kIntraflow };

std::string_view direction_name(Direction d);
// Accepts `inflow`, `outflow`, `in_and_out`, `intraflow`.
Direction parse_direction(std::string_view name);

// Coordinates are accumulated as integer multiples of 1e-7 degree so sums are
// exact and independent of record order.
inline constexpr double kCoordScale = 1e7;
int64_t quantize_degrees(double deg);

// Count-weighted sums of the finest-granularity endpoint coordinates that
// were aggregated into one cell. `weight` is the count that carried
// coordinates; zero means "fall back to unit centroids".
struct CoordSum {
  int64_t o_lat = 0;
  int64_t o_lon = 0;
  int64_t d_lat = 0;
  int64_t d_lon = 0;
  uint64_t weight = 0;

  CoordSum& operator+=(const CoordSum& o) {
    o_lat += o.o_lat;
    o_lon += o.o_lon;
    d_lat += o.d_lat;
    d_lon += o.d_lon;
    weight += o.weight;
    return *this;
  }
  bool operator==(const CoordSum&) const = default;
};

struct Cell {
  uint32_t origin = 0;
  uint32_t destination = 0;
  uint64_t count = 0;

  bool operator==(const Cell&) const = default;
};

// Share of a diagonal cell whose finest endpoints coincide (e.g. an SDM
// block group visiting itself). Such counts carry no movement.
struct Stay {
  uint32_t unit = 0;
  uint64_t count = 0;

  bool operator==(const Stay&) const = default;
};

struct DayPartition {
  Day day;
  std::vector<Cell> cells;                // sorted by (origin, destination)
  std::vector<uint32_t> by_destination;   // cell indices sorted by (destination, origin)
  std::vector<CoordSum> coords;           // parallel to cells, or empty
  std::vector<Stay> stays;                // sorted by unit

  // Cells with the given origin, as an index range into `cells`.
  std::pair<size_t, size_t> origin_range(uint32_t origin) const;
  // Positions in `by_destination` for the given destination.
  std::pair<size_t, size_t> destination_range(uint32_t destination) const;
  uint64_t stay_of(uint32_t unit) const;
};

struct Marginal {
  Day day;
  uint64_t inflow = 0;
  uint64_t outflow = 0;
  uint64_t intraflow = 0;

  bool operator==(const Marginal&) const = default;
};

struct CubeUnit {
  std::string id;
  GeoPoint centroid;

  bool operator==(const CubeUnit&) const = default;
};

struct BuildReport {
  uint64_t records_in = 0;
  uint64_t records_kept = 0;
  uint64_t dropped_outside_geometry = 0;
  uint64_t dropped_unknown_unit = 0;
  uint64_t stays = 0;  // count whose finest endpoints coincide

  uint64_t dropped() const { return dropped_outside_geometry + dropped_unknown_unit; }
  bool operator==(const BuildReport&) const = default;
};

// Sparse origin-destination-time cube for one (dataset, level). Immutable
// once built; safe for concurrent readers.
class OdtCube {
 public:
  OdtCube() = default;
  OdtCube(Dataset dataset, GeoLevel level, std::vector<CubeUnit> units,
          std::vector<DayPartition> days, BuildReport report);

  Dataset dataset() const { return dataset_; }
  GeoLevel level() const { return level_; }
  std::optional<Period> date_range() const;

  const std::vector<CubeUnit>& units() const { return units_; }
  std::optional<uint32_t> find_unit(std::string_view id) const;
  // Throws Error(kUnknownUnit).
  uint32_t unit_index(std::string_view id) const;

  const std::vector<DayPartition>& days() const { return days_; }
  // Partitions whose day lies in `period`, as a contiguous span.
  std::span<const DayPartition> days_in(const Period& period) const;

  // Marginal entries of one unit, sorted by day; days with no flow omitted.
  std::span<const Marginal> marginals(uint32_t unit) const;
  // Fault injection hook for audit tests.
  Marginal* mutable_marginal(uint32_t unit, Day day);

  const BuildReport& report() const { return report_; }
  uint64_t total_count() const;
  size_t cell_count() const;
  bool has_coords() const;

  // Recomputes marginals from the partitions. Called by the constructor.
  static std::vector<std::vector<Marginal>> compute_marginals(size_t unit_count,
                                                              const std::vector<DayPartition>& days);

 private:
  friend OdtCube deserialize_cube(std::string_view bytes);
  void index();

  Dataset dataset_ = Dataset::kTwitter;
  GeoLevel level_ = GeoLevel::kCounty;
  std::vector<CubeUnit> units_;  // sorted by id
  std::unordered_map<std::string, uint32_t> unit_lookup_;
  std::vector<DayPartition> days_;  // sorted by day
  std::vector<uint32_t> marginal_offsets_;
  std::vector<Marginal> marginals_;
  BuildReport report_;
};

// Accumulates flow records (or pre-resolved cells) and produces a cube.
class CubeBuilder {
 public:
  // Unit table is every registry unit at `level`, ordered by id.
  CubeBuilder(Dataset dataset, GeoLevel level, const UnitRegistry& reg);
  // Explicit unit table, for synthetic cubes without a registry.
  CubeBuilder(Dataset dataset, GeoLevel level, std::vector<CubeUnit> units);

  // Resolves both endpoints to `level` and accumulates. Unresolvable records
  // are dropped and counted. Throws Error(kMixedDataset) when the record kind
  // does not belong to the builder's dataset, Error(kUnsupportedLevel) for a
  // point endpoint when neither the level nor any finer level has geometry.
  void add(const FlowRecord& record);

  // Adds `count` to the cell (origin, destination, day) by unit index.
  // `same_finest` marks counts whose finest endpoints coincide.
  void add_cell(uint32_t origin, uint32_t destination, Day day, uint64_t count,
                bool same_finest = false, const CoordSum* coords = nullptr);

  std::optional<uint32_t> unit_index(std::string_view id) const;
  const std::vector<CubeUnit>& units() const { return units_; }

  OdtCube finish() &&;

 private:
  struct Resolved {
    std::optional<uint32_t> unit;
    std::optional<GeoPoint> finest;
    bool outside = false;
  };
  Resolved resolve(const Endpoint& e);
  Resolved resolve_id(const std::string& id);

  struct Pending {
    int32_t day;
    uint32_t origin;
    uint32_t destination;
    uint64_t count;
  };
  struct PendingCoord {
    int32_t day;
    uint32_t origin;
    uint32_t destination;
    CoordSum sum;
  };
  struct PendingStay {
    int32_t day;
    uint32_t unit;
    uint64_t count;
  };

  Dataset dataset_;
  GeoLevel level_;
  const UnitRegistry* reg_ = nullptr;
  std::vector<CubeUnit> units_;
  std::unordered_map<std::string, uint32_t> lookup_;
  std::unordered_map<std::string, Resolved> id_cache_;
  std::vector<Pending> pending_;
  std::vector<PendingCoord> pending_coords_;
  std::vector<PendingStay> pending_stays_;
  BuildReport report_;
};

OdtCube build_cube(std::span<const FlowRecord> records, Dataset dataset, GeoLevel level,
                   const UnitRegistry& reg);

// ---- Slices and aggregates -------------------------------------------------

struct FlowLine {
  std::string origin_id;
  GeoPoint origin_centroid;
  std::string destination_id;
  GeoPoint destination_centroid;
  uint64_t count = 0;

  bool operator==(const FlowLine&) const = default;
};

// Sorted by (origin_id, destination_id).
using FlowLineSet = std::vector<FlowLine>;

// Pairs summed over `period`, admitted by `direction` relative to `aoi`, and
// strictly greater than `threshold`. Throws kInvalidPeriod when the period is
// inverted, kUnsupportedDirection for intraflow.
FlowLineSet od_matrix(const OdtCube& cube, const Period& period, const std::optional<BBox>& aoi,
                      Direction direction, uint64_t threshold);

// Counterpart unit id -> dense per-day counts over the period.
using TimeMatrix = std::map<std::string, std::vector<uint64_t>>;

// Flows out of `origin_id` to every destination (including itself).
TimeMatrix dt_matrix(const OdtCube& cube, std::string_view origin_id, const Period& period);
// Flows into `destination_id` from every origin (including itself).
TimeMatrix ot_matrix(const OdtCube& cube, std::string_view destination_id, const Period& period);

struct ChoroplethVector {
  std::string selected_unit;
  Direction direction = Direction::kInflow;
  Period period;
  std::map<std::string, uint64_t> values;  // never contains selected_unit

  bool operator==(const ChoroplethVector&) const = default;
};

ChoroplethVector choropleth(const OdtCube& cube, std::string_view unit_id, const Period& period,
                            Direction direction);

struct TimeSeries {
  std::string unit_id;
  Direction direction = Direction::kInflow;
  Period period;
  std::vector<uint64_t> counts;  // one per day of the period

  bool operator==(const TimeSeries&) const = default;
};

TimeSeries daily_series(const OdtCube& cube, std::string_view unit_id, const Period& period,
                        Direction direction);

struct AuditMismatch {
  std::string unit_id;
  Day day;
  std::string field;  // inflow | outflow | intraflow | stays
  uint64_t stored = 0;
  uint64_t recomputed = 0;

  bool operator==(const AuditMismatch&) const = default;
};

struct AuditReport {
  std::vector<AuditMismatch> mismatches;

  bool ok() const { return mismatches.empty(); }
};

// Recomputes marginals from the stored cells and reports every difference.
AuditReport audit(const OdtCube& cube);

// Throws Error(kInvalidPeriod) when last < first.
void check_period(const Period& period);

}  // namespace odt
