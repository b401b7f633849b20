#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "odt/cube.hpp"
#include "odt/export.hpp"

namespace httplib {
class Server;
}

namespace odt {

struct ServiceConfig {
  std::string data_dir = "data";
  std::string host = "0.0.0.0";
  int port = 8080;
  uint64_t row_cap = 5'000'000;
  uint64_t twitter_min_count = 0;
  uint64_t safegraph_min_count = 20;
  std::string cors_origin = "*";
  std::string geo_path;  // optional GeoJSON served at /api/v1/geo

  uint64_t default_min_count(Dataset d) const {
    return d == Dataset::kTwitter ? twitter_min_count : safegraph_min_count;
  }

  // JSON object with any of: data_dir, host, port, row_cap,
  // twitter_min_count, safegraph_min_count, cors_origin, geo.
  void apply_json(std::string_view text);
  // ODT_DATA_DIR, ODT_HOST, ODT_PORT, ODT_ROW_CAP, ODT_TWITTER_MIN_COUNT,
  // ODT_SAFEGRAPH_MIN_COUNT, ODT_CORS_ORIGIN, ODT_GEO.
  void apply_env();
};

using CubeKey = std::pair<Dataset, GeoLevel>;
using CubeSet = std::map<CubeKey, std::shared_ptr<const OdtCube>>;

// Loads every `*.odtc` file in `dir`. A missing directory yields an empty set.
CubeSet load_cube_dir(const std::string& dir);

using QueryParams = std::map<std::string, std::string, std::less<>>;

// Decodes `a=1&b=x%2Cy` (with or without a leading `?`). Repeated keys keep
// the first value. Throws Error(kInvalidInput) on bad percent escapes.
QueryParams parse_query_string(std::string_view query);

// Parsed and validated query parameters shared by every endpoint.
struct QuerySpec {
  Dataset dataset = Dataset::kTwitter;
  GeoLevel level = GeoLevel::kCounty;
  std::optional<std::string> unit_id;
  std::optional<Day> start;
  std::optional<Day> end;
  std::optional<Direction> direction;
  std::optional<BBox> bbox;
  std::optional<uint64_t> threshold;
  bool aggregated = false;

  // Throws Error(kInvalidInput / kMalformedDate / kInvalidPeriod).
  static QuerySpec parse(const QueryParams& params);
};

// Streams export CSV in bounded chunks. Keeps its cube alive.
class ExportStream {
 public:
  ExportStream(std::shared_ptr<const OdtCube> cube, const ExportSpec& spec);

  size_t row_count() const { return plan_.row_count(); }
  // Appends the next chunk to `out`; returns false once everything was sent.
  bool next_chunk(std::string& out, size_t max_rows = 8192);
  std::string read_all();

 private:
  std::shared_ptr<const OdtCube> cube_;
  ExportPlan plan_;
  bool header_sent_ = false;
  size_t next_row_ = 0;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::shared_ptr<ExportStream> stream;  // set for streamed CSV exports

  // Body with any stream drained into it.
  std::string full_body() const;
};

// Request handling over a swappable, immutable cube set. Handlers are
// stateless; `replace_cubes` is visible to requests that start afterwards.
class Service {
 public:
  explicit Service(ServiceConfig config, CubeSet cubes = {});

  const ServiceConfig& config() const { return config_; }
  std::shared_ptr<const CubeSet> cubes() const;
  void replace_cubes(CubeSet cubes);
  void set_geojson(std::string geojson_text);

  // `path` is the URL path without the query string.
  ApiResponse handle(std::string_view path, const QueryParams& params) const;

  ApiResponse meta() const;
  ApiResponse choropleth(const QueryParams& params) const;
  ApiResponse flows(const QueryParams& params) const;
  ApiResponse timeseries(const QueryParams& params) const;
  ApiResponse export_csv(const QueryParams& params) const;
  ApiResponse geo(const QueryParams& params) const;

 private:
  std::shared_ptr<const OdtCube> cube_for(const QuerySpec& spec) const;

  ServiceConfig config_;
  mutable std::mutex mu_;
  std::shared_ptr<const CubeSet> cubes_;
  std::map<GeoLevel, std::string> geo_by_level_;  // serialized FeatureCollections
};

// Registers GET /api/v1/{meta,choropleth,flows,timeseries,export,geo} plus
// CORS preflight on `server`.
void install_routes(httplib::Server& server, const Service& service);

}  // namespace odt
