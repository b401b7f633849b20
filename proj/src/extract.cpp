#include "odt/extract.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <tuple>

#include "json.hpp"

#include "odt/error.hpp"
#include "odt/io.hpp"

namespace odt {

namespace {

bool event_before(const GeoEvent& a, const GeoEvent& b) {
  return std::tie(a.timestamp, a.point, a.source, a.resolution) <
         std::tie(b.timestamp, b.point, b.source, b.resolution);
}

void check_same_user_and_day(std::span<const GeoEvent> events, std::string_view what) {
  if (events.empty()) return;
  const auto& first = events.front();
  Day day = first.day();
  for (size_t i = 0; i < events.size(); ++i) {
    if (events[i].user_id != first.user_id) {
      throw Error(ErrorCode::kInvalidInput, std::string(what) + ": events of more than one user");
    }
    if (events[i].day() != day) {
      throw Error(ErrorCode::kInvalidInput, std::string(what) + ": events span more than one day");
    }
    if (i > 0 && events[i].timestamp < events[i - 1].timestamp) {
      throw Error(ErrorCode::kInvalidInput, std::string(what) + ": events not ordered by time");
    }
  }
}

std::vector<GeoPoint> points_of(std::span<const GeoEvent> events) {
  std::vector<GeoPoint> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.point);
  return out;
}

[[noreturn]] void bad_map(std::string_view text, std::string_view why) {
  std::string shown(text.substr(0, 80));
  throw Error(ErrorCode::kMalformedDestinationMap,
              "malformed destination_cbgs (" + std::string(why) + "): '" + shown + "'");
}

bool parse_u64(std::string_view s, uint64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void add_destination(std::vector<DestinationCount>& out, std::string_view text, std::string id,
                     uint64_t count) {
  if (!is_fips_id(id, GeoLevel::kBlockGroup)) bad_map(text, "destination id is not a 12-digit FIPS");
  if (count > 0) out.push_back({std::move(id), count});
}

std::vector<DestinationCount> parse_stripped_form(std::string_view text) {
  std::string_view body = trim(text);
  if (body.size() < 2 || body.front() != '{' || body.back() != '}') bad_map(text, "not an object");
  body = trim(body.substr(1, body.size() - 2));
  std::vector<DestinationCount> out;
  if (body.empty()) return out;
  for (std::string_view entry : split(body, ',')) {
    auto kv = split(entry, ':');
    if (kv.size() != 2) bad_map(text, "entry is not key:value");
    uint64_t count = 0;
    if (!parse_u64(trim(kv[1]), count)) bad_map(text, "count is not a non-negative integer");
    add_destination(out, text, std::string(trim(kv[0])), count);
  }
  return out;
}

size_t column_index(const std::vector<std::string>& header, std::string_view name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw Error(ErrorCode::kFormat, "input header lacks column '" + std::string(name) + "'");
  }
  return static_cast<size_t>(it - header.begin());
}

double parse_coord(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInvalidInput, "bad coordinate '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string_view resolution_name(Resolution r) {
  switch (r) {
    case Resolution::kPoint: return "point";
    case Resolution::kPoi: return "poi";
    case Resolution::kNeighborhood: return "neighborhood";
    case Resolution::kCity: return "city";
    case Resolution::kAdmin: return "admin";
    case Resolution::kCountry: return "country";
  }
  return "unknown";
}

Resolution parse_resolution(std::string_view name) {
  for (auto r : {Resolution::kPoint, Resolution::kPoi, Resolution::kNeighborhood, Resolution::kCity,
                 Resolution::kAdmin, Resolution::kCountry}) {
    if (resolution_name(r) == name) return r;
  }
  throw Error(ErrorCode::kInvalidInput, "unknown place resolution '" + std::string(name) + "'");
}

std::set<std::string, std::less<>> FilterConfig::default_bot_sources() {
  return {"TweetMyJOBS", "SafeTweet by TweetMyJOBS"};
}

FilterConfig FilterConfig::with_bot_list(std::string_view text) {
  FilterConfig cfg;
  cfg.bot_sources.clear();
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    cfg.bot_sources.emplace(line);
  }
  return cfg;
}

std::vector<GeoEvent> filter_events(std::span<const GeoEvent> events, const FilterConfig& cfg,
                                    FilterStats* stats) {
  std::vector<GeoEvent> out;
  out.reserve(events.size());
  FilterStats local;
  for (const auto& e : events) {
    if (cfg.bot_sources.count(e.source) != 0) {
      ++local.dropped_bot;
    } else if (e.resolution > cfg.max_resolution) {
      ++local.dropped_resolution;
    } else {
      ++local.kept;
      out.push_back(e);
    }
  }
  if (stats != nullptr) {
    stats->kept += local.kept;
    stats->dropped_bot += local.dropped_bot;
    stats->dropped_resolution += local.dropped_resolution;
  }
  return out;
}

std::optional<FlowRecord> extract_single_day(std::span<const GeoEvent> user_day_events) {
  check_same_user_and_day(user_day_events, "extract_single_day");
  if (user_day_events.size() < 2) return std::nullopt;

  const GeoEvent& initial = user_day_events.front();
  const GeoEvent* farthest = nullptr;
  double best = 0.0;
  for (size_t i = 1; i < user_day_events.size(); ++i) {
    double d = haversine_km(initial.point, user_day_events[i].point);
    if (d > best) {  // strict: ties keep the earlier event
      best = d;
      farthest = &user_day_events[i];
    }
  }
  if (farthest == nullptr) return std::nullopt;
  return FlowRecord{initial.point, farthest->point, initial.day(), 1, FlowKind::kSingleDay};
}

std::optional<FlowRecord> extract_cross_day(std::span<const GeoEvent> day_a_events,
                                            std::span<const GeoEvent> day_b_events) {
  if (day_a_events.empty() || day_b_events.empty()) return std::nullopt;
  check_same_user_and_day(day_a_events, "extract_cross_day");
  check_same_user_and_day(day_b_events, "extract_cross_day");
  if (day_a_events.front().user_id != day_b_events.front().user_id) {
    throw Error(ErrorCode::kInvalidInput, "extract_cross_day: days belong to different users");
  }
  Day a = day_a_events.front().day();
  Day b = day_b_events.front().day();
  if (b != a.next()) {
    throw Error(ErrorCode::kInvalidInput, "extract_cross_day: days " + format_day(a) + " and " +
                                              format_day(b) + " are not consecutive");
  }
  auto pa = points_of(day_a_events);
  auto pb = points_of(day_b_events);
  GeoPoint from = mean_center(pa);
  GeoPoint to = mean_center(pb);
  if (haversine_km(from, to) == 0.0) return std::nullopt;
  return FlowRecord{from, to, b, 1, FlowKind::kCrossDay};
}

std::vector<FlowRecord> extract_user_flows(std::span<const GeoEvent> all_events_one_user,
                                           const FilterConfig& cfg, FilterStats* stats) {
  std::vector<GeoEvent> kept = filter_events(all_events_one_user, cfg, stats);
  std::sort(kept.begin(), kept.end(), event_before);

  // Contiguous per-day ranges of the time-sorted events.
  std::vector<std::span<const GeoEvent>> days;
  for (size_t i = 0; i < kept.size();) {
    size_t j = i + 1;
    while (j < kept.size() && kept[j].day() == kept[i].day()) ++j;
    days.emplace_back(kept.data() + i, j - i);
    i = j;
  }

  std::vector<FlowRecord> out;
  for (size_t k = 0; k < days.size(); ++k) {
    if (auto r = extract_single_day(days[k])) out.push_back(std::move(*r));
    if (k > 0 && days[k].front().day() == days[k - 1].front().day().next()) {
      if (auto r = extract_cross_day(days[k - 1], days[k])) out.push_back(std::move(*r));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<DestinationCount> parse_destination_cbgs(std::string_view text) {
  auto doc = nlohmann::ordered_json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) return parse_stripped_form(text);
  if (!doc.is_object()) bad_map(text, "not an object");

  std::vector<DestinationCount> out;
  out.reserve(doc.size());
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number_integer()) bad_map(text, "count is not an integer");
    if (value.is_number_unsigned()) {
      add_destination(out, text, key, value.get<uint64_t>());
    } else {
      auto v = value.get<int64_t>();
      if (v < 0) bad_map(text, "negative count");
      add_destination(out, text, key, static_cast<uint64_t>(v));
    }
  }
  return out;
}

std::vector<FlowRecord> explode_sdm_row(const SdmRow& row) {
  if (!is_fips_id(row.origin_census_block_group, GeoLevel::kBlockGroup)) {
    throw Error(ErrorCode::kInvalidInput,
                "origin_census_block_group '" + row.origin_census_block_group +
                    "' is not a 12-digit FIPS code");
  }
  Day date = local_day_of_timestamp(trim(row.date_range_start));
  auto destinations = parse_destination_cbgs(row.destination_cbgs);

  std::vector<FlowRecord> out;
  out.reserve(destinations.size());
  for (auto& d : destinations) {
    out.push_back(FlowRecord{row.origin_census_block_group, std::move(d.cbg), date, d.count,
                             FlowKind::kSdm});
  }
  return out;
}

std::vector<GeoEvent> read_events_csv(std::istream& in, EventReadStats* stats) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  std::vector<GeoEvent> out;
  if (!reader.next(fields)) return out;
  const auto header = fields;
  const size_t i_user = column_index(header, "user_id");
  const size_t i_ts = column_index(header, "timestamp");
  const size_t i_lat = column_index(header, "lat");
  const size_t i_lon = column_index(header, "lon");
  const size_t i_src = column_index(header, "source");
  const size_t i_res = column_index(header, "resolution");

  EventReadStats local;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    ++local.rows;
    try {
      if (fields.size() != header.size()) {
        throw Error(ErrorCode::kInvalidInput, "wrong field count");
      }
      GeoEvent e;
      e.user_id = fields[i_user];
      e.timestamp = parse_instant(trim(fields[i_ts]));
      e.point = GeoPoint(parse_coord(fields[i_lat]), parse_coord(fields[i_lon]));
      e.source = fields[i_src];
      e.resolution = parse_resolution(trim(fields[i_res]));
      if (e.user_id.empty()) throw Error(ErrorCode::kInvalidInput, "empty user id");
      out.push_back(std::move(e));
    } catch (const Error&) {
      ++local.malformed;
    }
  }
  if (stats != nullptr) {
    stats->rows += local.rows;
    stats->malformed += local.malformed;
  }
  return out;
}

std::vector<GeoEvent> read_events_ndjson(std::istream& in, EventReadStats* stats) {
  std::vector<GeoEvent> out;
  EventReadStats local;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++local.rows;
    auto doc = nlohmann::json::parse(line, nullptr, false);
    try {
      if (!doc.is_object()) throw Error(ErrorCode::kInvalidInput, "not an object");
      GeoEvent e;
      e.user_id = doc.at("user_id").is_string() ? doc["user_id"].get<std::string>()
                                                : doc["user_id"].dump();
      e.timestamp = parse_instant(doc.at("timestamp").get<std::string>());
      e.point = GeoPoint(doc.at("lat").get<double>(), doc.at("lon").get<double>());
      e.source = doc.at("source").get<std::string>();
      e.resolution = parse_resolution(doc.at("resolution").get<std::string>());
      if (e.user_id.empty()) throw Error(ErrorCode::kInvalidInput, "empty user id");
      out.push_back(std::move(e));
    } catch (const Error&) {
      ++local.malformed;
    } catch (const nlohmann::json::exception&) {
      ++local.malformed;
    }
  }
  if (stats != nullptr) {
    stats->rows += local.rows;
    stats->malformed += local.malformed;
  }
  return out;
}

std::vector<FlowRecord> extract_all_users(std::span<const GeoEvent> events, const FilterConfig& cfg,
                                          EventPipelineStats* stats) {
  std::map<std::string_view, std::vector<GeoEvent>> by_user;
  for (const auto& e : events) by_user[e.user_id].push_back(e);

  std::vector<FlowRecord> out;
  EventPipelineStats local;
  for (const auto& [user, user_events] : by_user) {
    FilterStats fs;
    auto flows = extract_user_flows(user_events, cfg, &fs);
    local.filtered_bot += fs.dropped_bot;
    local.filtered_resolution += fs.dropped_resolution;
    local.events_kept += fs.kept;
    if (fs.kept > 0) ++local.users;
    if (!flows.empty()) ++local.users_with_flows;
    for (auto& f : flows) {
      if (f.kind == FlowKind::kSingleDay) ++local.flows_single_day;
      else ++local.flows_cross_day;
      out.push_back(std::move(f));
    }
  }
  std::sort(out.begin(), out.end());
  if (stats != nullptr) {
    stats->filtered_bot += local.filtered_bot;
    stats->filtered_resolution += local.filtered_resolution;
    stats->events_kept += local.events_kept;
    stats->users += local.users;
    stats->users_with_flows += local.users_with_flows;
    stats->flows_single_day += local.flows_single_day;
    stats->flows_cross_day += local.flows_cross_day;
  }
  return out;
}

std::vector<FlowRecord> ingest_sdm_csv(std::istream& in, SdmPipelineStats* stats) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  std::vector<FlowRecord> out;
  SdmPipelineStats local;
  if (reader.next(fields)) {
    const auto header = fields;
    const size_t i_origin = column_index(header, "origin_census_block_group");
    const size_t i_dest = column_index(header, "destination_cbgs");
    const size_t i_date = column_index(header, "date_range_start");
    while (reader.next(fields)) {
      if (fields.size() == 1 && fields[0].empty()) continue;
      ++local.rows_read;
      if (fields.size() != header.size()) {
        ++local.rows_skipped;
        ++local.malformed_row;
        continue;
      }
      SdmRow row{fields[i_origin], fields[i_dest], fields[i_date]};
      try {
        for (auto& r : explode_sdm_row(row)) {
          ++local.records;
          local.total_count += r.count;
          out.push_back(std::move(r));
        }
      } catch (const Error& e) {
        ++local.rows_skipped;
        switch (e.code()) {
          case ErrorCode::kMalformedDestinationMap: ++local.malformed_map; break;
          case ErrorCode::kMalformedDate: ++local.malformed_date; break;
          default: ++local.malformed_origin; break;
        }
      }
    }
  }
  if (stats != nullptr) {
    stats->rows_read += local.rows_read;
    stats->rows_skipped += local.rows_skipped;
    stats->malformed_row += local.malformed_row;
    stats->malformed_map += local.malformed_map;
    stats->malformed_date += local.malformed_date;
    stats->malformed_origin += local.malformed_origin;
    stats->records += local.records;
    stats->total_count += local.total_count;
  }
  return out;
}

}  // namespace odt
