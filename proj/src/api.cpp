#include "odt/api.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>

#include "httplib.h"
#include "json.hpp"

#include "odt/cube_io.hpp"
#include "odt/error.hpp"
#include "odt/io.hpp"

namespace odt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t parse_u64_param(std::string_view name, std::string_view text) {
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kInvalidInput, std::string(name) + " must be a non-negative integer");
  }
  return v;
}

bool parse_bool_param(std::string_view name, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error(ErrorCode::kInvalidInput, std::string(name) + " must be true or false");
}

const std::string* param(const QueryParams& params, std::string_view name) {
  auto it = params.find(name);
  return it == params.end() ? nullptr : &it->second;
}

ApiResponse json_response(int status, const json& body) {
  ApiResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

ApiResponse error_response(int status, std::string_view message) {
  return json_response(status, json{{"error", message}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownUnit:
    case ErrorCode::kUnknownDataset: return 404;
    case ErrorCode::kIo:
    case ErrorCode::kFormat: return 500;
    default: return 400;
  }
}

// Runs a handler body and maps library errors to HTTP statuses.
template <typename F>
ApiResponse guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.what());
  }
}

Period resolve_period(const QuerySpec& spec, const OdtCube& cube) {
  auto range = cube.date_range();
  if ((!spec.start || !spec.end) && !range) {
    throw Error(ErrorCode::kInvalidInput, "start and end are required for an empty cube");
  }
  Period p{spec.start ? *spec.start : range->first, spec.end ? *spec.end : range->last};
  check_period(p);
  return p;
}

const std::string& require_unit(const QuerySpec& spec) {
  if (!spec.unit_id) throw Error(ErrorCode::kInvalidInput, "missing parameter 'unit'");
  return *spec.unit_id;
}

Direction require_direction(const QuerySpec& spec) {
  if (!spec.direction) throw Error(ErrorCode::kInvalidInput, "missing parameter 'direction'");
  return *spec.direction;
}

void apply_u64(const json& doc, const char* key, uint64_t& out) {
  if (doc.contains(key)) out = doc[key].get<uint64_t>();
}

}  // namespace

// ---- Config ----------------------------------------------------------------

void ServiceConfig::apply_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
    if (!doc.is_object()) throw Error(ErrorCode::kFormat, "config must be a JSON object");
    if (doc.contains("data_dir")) data_dir = doc["data_dir"].get<std::string>();
    if (doc.contains("host")) host = doc["host"].get<std::string>();
    if (doc.contains("port")) port = doc["port"].get<int>();
    apply_u64(doc, "row_cap", row_cap);
    apply_u64(doc, "twitter_min_count", twitter_min_count);
    apply_u64(doc, "safegraph_min_count", safegraph_min_count);
    if (doc.contains("cors_origin")) cors_origin = doc["cors_origin"].get<std::string>();
    if (doc.contains("geo")) geo_path = doc["geo"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad config: ") + e.what());
  }
}

void ServiceConfig::apply_env() {
  auto env = [](const char* name) -> const char* { return std::getenv(name); };
  if (const char* v = env("ODT_DATA_DIR")) data_dir = v;
  if (const char* v = env("ODT_HOST")) host = v;
  if (const char* v = env("ODT_PORT")) port = static_cast<int>(parse_u64_param("ODT_PORT", v));
  if (const char* v = env("ODT_ROW_CAP")) row_cap = parse_u64_param("ODT_ROW_CAP", v);
  if (const char* v = env("ODT_TWITTER_MIN_COUNT")) {
    twitter_min_count = parse_u64_param("ODT_TWITTER_MIN_COUNT", v);
  }
  if (const char* v = env("ODT_SAFEGRAPH_MIN_COUNT")) {
    safegraph_min_count = parse_u64_param("ODT_SAFEGRAPH_MIN_COUNT", v);
  }
  if (const char* v = env("ODT_CORS_ORIGIN")) cors_origin = v;
  if (const char* v = env("ODT_GEO")) geo_path = v;
}

CubeSet load_cube_dir(const std::string& dir) {
  CubeSet cubes;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return cubes;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".odtc") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    auto cube = std::make_shared<const OdtCube>(read_cube_file(path.string()));
    CubeKey key{cube->dataset(), cube->level()};
    if (!cubes.emplace(key, cube).second) {
      throw Error(ErrorCode::kFormat, "two cube files for " +
                                          std::string(dataset_name(key.first)) + "/" +
                                          std::string(level_name(key.second)));
    }
  }
  return cubes;
}

// ---- QuerySpec -------------------------------------------------------------

QueryParams parse_query_string(std::string_view query) {
  if (!query.empty() && query.front() == '?') query.remove_prefix(1);
  auto decode = [](std::string_view in) {
    std::string out;
    for (size_t i = 0; i < in.size(); ++i) {
      char c = in[i];
      if (c == '+') {
        out.push_back(' ');
      } else if (c == '%') {
        unsigned v = 0;
        auto [ptr, ec] = i + 3 <= in.size()
                             ? std::from_chars(in.data() + i + 1, in.data() + i + 3, v, 16)
                             : std::from_chars_result{nullptr, std::errc::invalid_argument};
        if (ec != std::errc() || ptr != in.data() + i + 3) {
          throw Error(ErrorCode::kInvalidInput, "bad percent escape in query string");
        }
        out.push_back(static_cast<char>(v));
        i += 2;
      } else {
        out.push_back(c);
      }
    }
    return out;
  };
  QueryParams params;
  for (auto part : split(query, '&')) {
    if (part.empty()) continue;
    auto eq = part.find('=');
    std::string key = decode(part.substr(0, eq));
    std::string value = eq == std::string_view::npos ? std::string() : decode(part.substr(eq + 1));
    params.emplace(std::move(key), std::move(value));
  }
  return params;
}

QuerySpec QuerySpec::parse(const QueryParams& params) {
  QuerySpec spec;
  const std::string* dataset = param(params, "dataset");
  const std::string* level = param(params, "level");
  if (dataset == nullptr) throw Error(ErrorCode::kInvalidInput, "missing parameter 'dataset'");
  if (level == nullptr) throw Error(ErrorCode::kInvalidInput, "missing parameter 'level'");
  spec.dataset = parse_dataset(*dataset);
  spec.level = parse_level(*level);
  if (const auto* v = param(params, "unit")) spec.unit_id = *v;
  if (const auto* v = param(params, "start")) spec.start = parse_day(*v);
  if (const auto* v = param(params, "end")) spec.end = parse_day(*v);
  if (const auto* v = param(params, "direction")) spec.direction = parse_direction(*v);
  if (const auto* v = param(params, "bbox")) spec.bbox = BBox::parse(*v);
  if (const auto* v = param(params, "min_count")) spec.threshold = parse_u64_param("min_count", *v);
  if (const auto* v = param(params, "aggregated")) spec.aggregated = parse_bool_param("aggregated", *v);
  if (spec.start && spec.end) check_period(Period{*spec.start, *spec.end});
  return spec;
}

// ---- Export streaming ------------------------------------------------------

ExportStream::ExportStream(std::shared_ptr<const OdtCube> cube, const ExportSpec& spec)
    : cube_(std::move(cube)), plan_(*cube_, spec) {}

bool ExportStream::next_chunk(std::string& out, size_t max_rows) {
  bool wrote = false;
  if (!header_sent_) {
    plan_.write_header(out);
    header_sent_ = true;
    wrote = true;
  }
  size_t end = std::min(plan_.row_count(), next_row_ + max_rows);
  for (; next_row_ < end; ++next_row_) {
    plan_.write_row(next_row_, out);
    wrote = true;
  }
  return wrote;
}

std::string ExportStream::read_all() {
  std::string out;
  while (next_chunk(out)) {
  }
  return out;
}

std::string ApiResponse::full_body() const {
  if (!stream) return body;
  return body + stream->read_all();
}

// ---- Service ---------------------------------------------------------------

Service::Service(ServiceConfig config, CubeSet cubes)
    : config_(std::move(config)), cubes_(std::make_shared<const CubeSet>(std::move(cubes))) {}

std::shared_ptr<const CubeSet> Service::cubes() const {
  std::lock_guard lock(mu_);
  return cubes_;
}

void Service::replace_cubes(CubeSet cubes) {
  auto next = std::make_shared<const CubeSet>(std::move(cubes));
  std::lock_guard lock(mu_);
  cubes_ = std::move(next);
}

void Service::set_geojson(std::string geojson_text) {
  json doc;
  try {
    doc = json::parse(geojson_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("GeoJSON parse error: ") + e.what());
  }
  std::map<GeoLevel, json> by_level;
  for (const auto& feature : doc.value("features", json::array())) {
    GeoLevel level = parse_level(feature.at("properties").at("level").get<std::string>());
    auto& fc = by_level[level];
    if (fc.is_null()) fc = json{{"type", "FeatureCollection"}, {"features", json::array()}};
    fc["features"].push_back(feature);
  }
  geo_by_level_.clear();
  for (auto& [level, fc] : by_level) geo_by_level_[level] = fc.dump();
}

std::shared_ptr<const OdtCube> Service::cube_for(const QuerySpec& spec) const {
  auto set = cubes();
  auto it = set->find(CubeKey{spec.dataset, spec.level});
  if (it == set->end()) return nullptr;
  return it->second;
}

ApiResponse Service::handle(std::string_view path, const QueryParams& params) const {
  if (path == "/api/v1/meta") return meta();
  if (path == "/api/v1/choropleth") return choropleth(params);
  if (path == "/api/v1/flows") return flows(params);
  if (path == "/api/v1/timeseries") return timeseries(params);
  if (path == "/api/v1/export") return export_csv(params);
  if (path == "/api/v1/geo") return geo(params);
  return error_response(404, "no such endpoint");
}

ApiResponse Service::meta() const {
  auto set = cubes();
  json datasets = json::array();
  for (Dataset d : {Dataset::kTwitter, Dataset::kSafegraph}) {
    json levels = json::array();
    for (GeoLevel level : kAllLevels) {
      auto it = set->find(CubeKey{d, level});
      if (it == set->end()) continue;
      const auto& cube = *it->second;
      auto range = cube.date_range();
      levels.push_back(json{{"level", level_name(level)},
                            {"start", range ? json(format_day(range->first)) : json(nullptr)},
                            {"end", range ? json(format_day(range->last)) : json(nullptr)},
                            {"units", cube.units().size()},
                            {"cells", cube.cell_count()},
                            {"default_min_count", config_.default_min_count(d)}});
    }
    if (!levels.empty()) {
      datasets.push_back(json{{"name", dataset_name(d)}, {"levels", std::move(levels)}});
    }
  }
  return json_response(200, json{{"datasets", std::move(datasets)}});
}

ApiResponse Service::choropleth(const QueryParams& params) const {
  return guarded([&] {
    QuerySpec spec = QuerySpec::parse(params);
    const auto& unit = require_unit(spec);
    Direction direction = require_direction(spec);
    auto cube = cube_for(spec);
    if (!cube) return error_response(404, "no cube loaded for this dataset and level");
    auto v = odt::choropleth(*cube, unit, resolve_period(spec, *cube), direction);
    json body = json::object();
    for (const auto& [id, count] : v.values) body[id] = count;
    return json_response(200, body);
  });
}

ApiResponse Service::flows(const QueryParams& params) const {
  return guarded([&] {
    QuerySpec spec = QuerySpec::parse(params);
    auto cube = cube_for(spec);
    if (!cube) return error_response(404, "no cube loaded for this dataset and level");
    Direction direction = spec.direction.value_or(Direction::kInAndOut);
    uint64_t threshold = spec.threshold.value_or(config_.default_min_count(spec.dataset));
    auto lines = od_matrix(*cube, resolve_period(spec, *cube), spec.bbox, direction, threshold);
    json body = json::array();
    for (const auto& l : lines) {
      body.push_back(json{{"origin", l.origin_id},
                          {"origin_lat", l.origin_centroid.lat()},
                          {"origin_lon", l.origin_centroid.lon()},
                          {"destination", l.destination_id},
                          {"destination_lat", l.destination_centroid.lat()},
                          {"destination_lon", l.destination_centroid.lon()},
                          {"count", l.count}});
    }
    return json_response(200, body);
  });
}

ApiResponse Service::timeseries(const QueryParams& params) const {
  return guarded([&] {
    QuerySpec spec = QuerySpec::parse(params);
    const auto& unit = require_unit(spec);
    Direction direction = require_direction(spec);
    auto cube = cube_for(spec);
    if (!cube) return error_response(404, "no cube loaded for this dataset and level");
    Period period = resolve_period(spec, *cube);
    auto series = daily_series(*cube, unit, period, direction);
    json body = json::array();
    for (size_t i = 0; i < series.counts.size(); ++i) {
      Day d(period.first.value + static_cast<int32_t>(i));
      body.push_back(json{{"date", format_day(d)}, {"count", series.counts[i]}});
    }
    return json_response(200, body);
  });
}

ApiResponse Service::export_csv(const QueryParams& params) const {
  return guarded([&] {
    QuerySpec spec = QuerySpec::parse(params);
    auto cube = cube_for(spec);
    if (!cube) return error_response(404, "no cube loaded for this dataset and level");
    ExportSpec es{resolve_period(spec, *cube), spec.bbox, spec.aggregated};
    // Daily row count is known before materializing; aggregated can only shrink.
    size_t cells = count_export_cells(*cube, es);
    auto too_large = [&](size_t rows) {
      return json_response(413, json{{"error", "export exceeds the server row cap"},
                                     {"rows", rows},
                                     {"row_cap", config_.row_cap},
                                     {"hint", "narrow the period or bbox, or request aggregated=true"}});
    };
    if (!spec.aggregated && cells > config_.row_cap) return too_large(cells);
    auto stream = std::make_shared<ExportStream>(cube, es);
    if (stream->row_count() > config_.row_cap) return too_large(stream->row_count());
    ApiResponse r;
    r.content_type = "text/csv";
    r.stream = std::move(stream);
    return r;
  });
}

ApiResponse Service::geo(const QueryParams& params) const {
  return guarded([&] {
    const std::string* level = param(params, "level");
    if (level == nullptr) throw Error(ErrorCode::kInvalidInput, "missing parameter 'level'");
    auto it = geo_by_level_.find(parse_level(*level));
    if (it == geo_by_level_.end()) return error_response(404, "no boundaries loaded for this level");
    ApiResponse r;
    r.content_type = "application/geo+json";
    r.body = it->second;
    return r;
  });
}

// ---- HTTP binding ----------------------------------------------------------

void install_routes(httplib::Server& server, const Service& service) {
  const std::string cors = service.config().cors_origin;
  auto handler = [&service, cors](const httplib::Request& req, httplib::Response& res) {
    QueryParams params;
    for (const auto& [k, v] : req.params) params.emplace(k, v);  // first value wins
    ApiResponse r = service.handle(req.path, params);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", cors);
    if (r.stream) {
      auto stream = r.stream;
      res.set_chunked_content_provider(
          r.content_type, [stream](size_t, httplib::DataSink& sink) {
            std::string chunk;
            if (stream->next_chunk(chunk)) {
              return sink.write(chunk.data(), chunk.size());
            }
            sink.done();
            return true;
          });
    } else {
      res.set_content(r.body, r.content_type);
    }
  };
  for (const char* path : {"/api/v1/meta", "/api/v1/choropleth", "/api/v1/flows",
                           "/api/v1/timeseries", "/api/v1/export", "/api/v1/geo"}) {
    server.Get(path, handler);
  }
  server.Options(R"(/api/v1/.*)", [cors](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Origin", cors);
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
}

}  // namespace odt
