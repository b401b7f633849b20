#include "odt/records.hpp"

#include <charconv>
#include <cstdio>

#include "odt/error.hpp"
#include "odt/io.hpp"

namespace odt {

std::string_view kind_name(FlowKind kind) {
  switch (kind) {
    case FlowKind::kSingleDay: return "single_day";
    case FlowKind::kCrossDay: return "cross_day";
    case FlowKind::kSdm: return "sdm";
  }
  return "unknown";
}

FlowKind parse_kind(std::string_view name) {
  if (name == "single_day") return FlowKind::kSingleDay;
  if (name == "cross_day") return FlowKind::kCrossDay;
  if (name == "sdm") return FlowKind::kSdm;
  throw Error(ErrorCode::kInvalidInput, "unknown flow kind '" + std::string(name) + "'");
}

std::string_view dataset_name(Dataset dataset) {
  return dataset == Dataset::kTwitter ? "twitter" : "safegraph";
}

Dataset parse_dataset(std::string_view name) {
  if (name == "twitter") return Dataset::kTwitter;
  if (name == "safegraph") return Dataset::kSafegraph;
  throw Error(ErrorCode::kUnknownDataset, "unknown dataset '" + std::string(name) + "'");
}

Dataset dataset_of(FlowKind kind) {
  return kind == FlowKind::kSdm ? Dataset::kSafegraph : Dataset::kTwitter;
}

namespace {

int compare_endpoint(const Endpoint& a, const Endpoint& b) {
  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  if (const auto* pa = std::get_if<GeoPoint>(&a)) {
    const auto& pb = std::get<GeoPoint>(b);
    if (pa->lat() != pb.lat()) return pa->lat() < pb.lat() ? -1 : 1;
    if (pa->lon() != pb.lon()) return pa->lon() < pb.lon() ? -1 : 1;
    return 0;
  }
  return std::get<std::string>(a).compare(std::get<std::string>(b));
}

void append_endpoint(std::string& line, const Endpoint& e) {
  if (const auto* p = std::get_if<GeoPoint>(&e)) {
    line += ',';
    line += format_double(p->lat());
    line += ',';
    line += format_double(p->lon());
  } else {
    append_csv_field(line, std::get<std::string>(e));
    line += ",,";
  }
}

double parse_double_field(const std::string& s, size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::kFormat,
                "record line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

Endpoint parse_endpoint(const std::string& id, const std::string& lat, const std::string& lon,
                        size_t line) {
  if (!id.empty()) {
    if (!lat.empty() || !lon.empty()) {
      throw Error(ErrorCode::kFormat,
                  "record line " + std::to_string(line) + ": endpoint has both id and coordinates");
    }
    return id;
  }
  return GeoPoint(parse_double_field(lat, line), parse_double_field(lon, line));
}

}  // namespace

bool operator<(const FlowRecord& a, const FlowRecord& b) {
  if (a.date != b.date) return a.date < b.date;
  if (a.kind != b.kind) return a.kind < b.kind;
  if (int c = compare_endpoint(a.origin, b.origin); c != 0) return c < 0;
  if (int c = compare_endpoint(a.destination, b.destination); c != 0) return c < 0;
  return a.count < b.count;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void append_fixed6(std::string& out, double v) {
  char buf[64];
  int n = std::snprintf(buf, sizeof(buf), "%.6f", v);
  out.append(buf, static_cast<size_t>(n));
}

void write_records_csv(std::span<const FlowRecord> records, std::ostream& out) {
  std::string line;
  out << kRecordCsvHeader << '\n';
  for (const auto& r : records) {
    line.clear();
    line += kind_name(r.kind);
    line += ',';
    line += format_day(r.date);
    line += ',';
    append_endpoint(line, r.origin);
    line += ',';
    append_endpoint(line, r.destination);
    line += ',';
    line += std::to_string(r.count);
    line += '\n';
    out << line;
  }
}

std::vector<FlowRecord> read_records_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  std::vector<FlowRecord> out;
  if (!reader.next(fields)) return out;
  std::string header;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) header += ',';
    header += fields[i];
  }
  if (header != kRecordCsvHeader) {
    throw Error(ErrorCode::kFormat, "unexpected record batch header '" + header + "'");
  }
  while (reader.next(fields)) {
    size_t line = reader.line();
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 9) {
      throw Error(ErrorCode::kFormat, "record line " + std::to_string(line) + ": expected 9 fields");
    }
    FlowRecord r;
    r.kind = parse_kind(fields[0]);
    r.date = parse_day(fields[1]);
    r.origin = parse_endpoint(fields[2], fields[3], fields[4], line);
    r.destination = parse_endpoint(fields[5], fields[6], fields[7], line);
    uint64_t count = 0;
    const auto& c = fields[8];
    auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), count);
    if (ec != std::errc() || ptr != c.data() + c.size() || count == 0) {
      throw Error(ErrorCode::kFormat, "record line " + std::to_string(line) + ": bad count '" + c + "'");
    }
    r.count = count;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace odt
