#include "odt/export.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "odt/error.hpp"
#include "odt/io.hpp"

namespace odt {

namespace {

void append_uint(std::string& out, uint64_t v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

bool row_key_less(const ExportRow& a, const ExportRow& b) {
  if (a.origin != b.origin) return a.origin < b.origin;
  if (a.destination != b.destination) return a.destination < b.destination;
  return a.day < b.day;
}

std::vector<uint8_t> box_flags(const OdtCube& cube, const ExportSpec& spec) {
  std::vector<uint8_t> in_box;
  if (spec.bbox) {
    in_box.assign(cube.units().size(), 0);
    for (uint32_t i = 0; i < cube.units().size(); ++i) {
      in_box[i] = spec.bbox->contains(cube.units()[i].centroid) ? 1 : 0;
    }
  }
  return in_box;
}

}  // namespace

size_t count_export_cells(const OdtCube& cube, const ExportSpec& spec) {
  check_period(spec.period);
  auto in_box = box_flags(cube, spec);
  size_t n = 0;
  for (const auto& part : cube.days_in(spec.period)) {
    if (!spec.bbox) {
      n += part.cells.size();
      continue;
    }
    for (const auto& c : part.cells) n += (in_box[c.origin] || in_box[c.destination]) ? 1 : 0;
  }
  return n;
}

ExportPlan::ExportPlan(const OdtCube& cube, const ExportSpec& spec)
    : cube_(&cube), aggregated_(spec.aggregated) {
  check_period(spec.period);
  auto in_box = box_flags(cube, spec);
  for (const auto& part : cube.days_in(spec.period)) {
    for (size_t i = 0; i < part.cells.size(); ++i) {
      const Cell& c = part.cells[i];
      if (spec.bbox && !in_box[c.origin] && !in_box[c.destination]) continue;
      ExportRow row{c.origin, c.destination, part.day, c.count, {}};
      if (!part.coords.empty()) row.coords = part.coords[i];
      rows_.push_back(row);
    }
  }
  std::sort(rows_.begin(), rows_.end(), row_key_less);

  if (aggregated_) {
    size_t w = 0;
    for (size_t i = 0; i < rows_.size();) {
      ExportRow merged = rows_[i];
      size_t j = i + 1;
      for (; j < rows_.size() && rows_[j].origin == merged.origin &&
             rows_[j].destination == merged.destination;
           ++j) {
        merged.count += rows_[j].count;
        merged.coords += rows_[j].coords;
      }
      merged.day = spec.period.first;
      rows_[w++] = merged;
      i = j;
    }
    rows_.resize(w);
  }
}

ExportCoords export_coords(const OdtCube& cube, const ExportRow& row) {
  const auto& o = cube.units()[row.origin].centroid;
  const auto& d = cube.units()[row.destination].centroid;
  if (row.coords.weight == 0) return {o.lat(), o.lon(), d.lat(), d.lon()};
  double w = static_cast<double>(row.coords.weight) * kCoordScale;
  return {static_cast<double>(row.coords.o_lat) / w, static_cast<double>(row.coords.o_lon) / w,
          static_cast<double>(row.coords.d_lat) / w, static_cast<double>(row.coords.d_lon) / w};
}

void ExportPlan::write_header(std::string& out) const {
  out.append(aggregated_ ? kAggregatedExportHeader : kDailyExportHeader);
  out.push_back('\n');
}

void ExportPlan::write_row(size_t i, std::string& out) const {
  const ExportRow& row = rows_[i];
  const auto& units = cube_->units();
  append_csv_field(out, units[row.origin].id);
  out.push_back(',');
  append_csv_field(out, units[row.destination].id);
  out.push_back(',');
  if (!aggregated_) {
    auto ymd = row.day.ymd();
    append_uint(out, static_cast<uint64_t>(static_cast<int>(ymd.year())));
    out.push_back(',');
    append_uint(out, static_cast<unsigned>(ymd.month()));
    out.push_back(',');
    append_uint(out, static_cast<unsigned>(ymd.day()));
    out.push_back(',');
  }
  append_uint(out, row.count);
  ExportCoords c = export_coords(*cube_, row);
  for (double v : {c.o_lat, c.o_lon, c.d_lat, c.d_lon}) {
    out.push_back(',');
    append_fixed6(out, v);
  }
  out.push_back('\n');
}

std::string ExportPlan::to_csv() const {
  std::string out;
  out.reserve(64 + rows_.size() * 72);
  write_header(out);
  for (size_t i = 0; i < rows_.size(); ++i) write_row(i, out);
  return out;
}

std::vector<FlowRecord> records_from_export(std::string_view csv, Dataset dataset) {
  std::istringstream in{std::string(csv)};
  CsvReader reader(in);
  std::vector<std::string> fields;
  std::vector<FlowRecord> out;
  if (!reader.next(fields)) throw Error(ErrorCode::kFormat, "export is empty");
  std::string header;
  for (size_t i = 0; i < fields.size(); ++i) header += (i ? "," : "") + fields[i];
  if (header != kDailyExportHeader) {
    throw Error(ErrorCode::kFormat, "not a daily export header: '" + header + "'");
  }
  const FlowKind kind = dataset == Dataset::kSafegraph ? FlowKind::kSdm : FlowKind::kSingleDay;
  auto to_u64 = [&](const std::string& s) {
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorCode::kFormat,
                  "export line " + std::to_string(reader.line()) + ": bad integer '" + s + "'");
    }
    return v;
  };
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 10) {
      throw Error(ErrorCode::kFormat, "export line " + std::to_string(reader.line()) +
                                          ": expected 10 fields");
    }
    Day date = Day::from_ymd(static_cast<int>(to_u64(fields[2])),
                             static_cast<unsigned>(to_u64(fields[3])),
                             static_cast<unsigned>(to_u64(fields[4])));
    out.push_back(FlowRecord{fields[0], fields[1], date, to_u64(fields[5]), kind});
  }
  return out;
}

}  // namespace odt
