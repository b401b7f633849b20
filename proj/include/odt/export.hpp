#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odt/cube.hpp"

namespace odt {

inline constexpr std::string_view kDailyExportHeader =
    "o_fips,d_fips,year,month,day,cnt,o_lat,o_lon,d_lat,d_lon";
inline constexpr std::string_view kAggregatedExportHeader = "o_fips,d_fips,cnt,o_lat,o_lon,d_lat,d_lon";

struct ExportSpec {
  Period period;
  std::optional<BBox> bbox;  // pairs with origin or destination centroid inside
  bool aggregated = false;
};

struct ExportRow {
  uint32_t origin = 0;
  uint32_t destination = 0;
  Day day;  // unused when aggregated
  uint64_t count = 0;
  CoordSum coords;
};

// Selected rows for one export, sorted by (origin id, destination id, day).
// Holds a reference to the cube; keep the cube alive while streaming.
class ExportPlan {
 public:
  ExportPlan(const OdtCube& cube, const ExportSpec& spec);

  size_t row_count() const { return rows_.size(); }
  const std::vector<ExportRow>& rows() const { return rows_; }
  bool aggregated() const { return aggregated_; }

  // Appends the CSV header line.
  void write_header(std::string& out) const;
  // Appends row `i` as one CSV line.
  void write_row(size_t i, std::string& out) const;
  // Whole CSV in one string.
  std::string to_csv() const;

 private:
  const OdtCube* cube_;
  bool aggregated_;
  std::vector<ExportRow> rows_;
};

// Number of (pair, day) cells a daily export of `spec` would emit, without
// materializing them.
size_t count_export_cells(const OdtCube& cube, const ExportSpec& spec);

// Mean center of a cell's finest endpoints, or the unit centroids when no
// finest coordinates were recorded.
struct ExportCoords {
  double o_lat, o_lon, d_lat, d_lon;
};
ExportCoords export_coords(const OdtCube& cube, const ExportRow& row);

// Reads a daily export CSV back into flow records (id endpoints, kind chosen
// by dataset). Throws Error(kFormat) on header or field errors.
std::vector<FlowRecord> records_from_export(std::string_view csv, Dataset dataset);

}  // namespace odt
