#include <cstdlib>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "synth.hpp"

#include "odt/api.hpp"
#include "odt/cube_io.hpp"
#include "odt/error.hpp"

using namespace odt;
using nlohmann::json;

namespace {

const Day d1 = Day::from_ymd(2020, 1, 1);
const Day d2 = Day::from_ymd(2020, 1, 2);

// Units A, B, C. B->A 7 on d1; A->C 20 on d1 and 5 on d2; C->B 21 on d2.
std::shared_ptr<const OdtCube> abc_cube(Dataset dataset = Dataset::kSafegraph) {
  std::vector<CubeUnit> units{{"A", GeoPoint(30, -100)}, {"B", GeoPoint(35, -95)}, {"C", GeoPoint(40, -90)}};
  CubeBuilder b(dataset, GeoLevel::kCounty, units);
  auto at = [&](const char* id) { return *b.unit_index(id); };
  b.add_cell(at("B"), at("A"), d1, 7);
  b.add_cell(at("A"), at("C"), d1, 20);
  b.add_cell(at("A"), at("C"), d2, 5);
  b.add_cell(at("C"), at("B"), d2, 21);
  return std::make_shared<const OdtCube>(std::move(b).finish());
}

Service abc_service(ServiceConfig cfg = {}) {
  CubeSet set;
  set[{Dataset::kSafegraph, GeoLevel::kCounty}] = abc_cube();
  return Service(cfg, std::move(set));
}

QueryParams q(std::string_view s) { return parse_query_string(s); }

json body_of(const ApiResponse& r) { return json::parse(r.body); }

std::vector<std::string> flow_pairs(const ApiResponse& r) {
  std::vector<std::string> out;
  for (const auto& f : body_of(r)) out.push_back(f["origin"].get<std::string>() + ">" + f["destination"].get<std::string>());
  return out;
}

}  // namespace

TEST_CASE("query string decoding") {
  auto p = q("?dataset=twitter&bbox=-100%2C30%2C-90%2C40&unit=a+b&dataset=safegraph&flag");
  CHECK(p.at("dataset") == "twitter");
  CHECK(p.at("bbox") == "-100,30,-90,40");
  CHECK(p.at("unit") == "a b");
  CHECK(p.at("flag").empty());
  CHECK(q("").empty());
  CHECK_THROWS_AS(q("a=%zz"), Error);
  CHECK_THROWS_AS(q("a=%2"), Error);
}

TEST_CASE("query spec validation") {
  CHECK_THROWS_AS(QuerySpec::parse(q("level=county")), Error);
  CHECK_THROWS_AS(QuerySpec::parse(q("dataset=twitter")), Error);
  auto s = QuerySpec::parse(q("dataset=twitter&level=state&start=2020-01-01&end=2020-01-31&direction=outflow&min_count=3&aggregated=1"));
  CHECK(s.dataset == Dataset::kTwitter);
  CHECK(s.level == GeoLevel::kState);
  CHECK(s.start == Day::from_ymd(2020, 1, 1));
  CHECK(s.direction == Direction::kOutflow);
  CHECK(s.threshold == 3u);
  CHECK(s.aggregated);
  CHECK_THROWS_AS(QuerySpec::parse(q("dataset=twitter&level=state&start=2020-02-01&end=2020-01-01")), Error);
  CHECK_THROWS_AS(QuerySpec::parse(q("dataset=twitter&level=state&min_count=-1")), Error);
  CHECK_THROWS_AS(QuerySpec::parse(q("dataset=twitter&level=state&aggregated=yes")), Error);
}

TEST_CASE("config from json and environment") {
  ServiceConfig cfg;
  cfg.apply_json(R"({"data_dir":"/tmp/x","port":9001,"row_cap":10,"safegraph_min_count":5})");
  CHECK(cfg.data_dir == "/tmp/x");
  CHECK(cfg.port == 9001);
  CHECK(cfg.row_cap == 10u);
  CHECK(cfg.default_min_count(Dataset::kSafegraph) == 5u);
  CHECK(cfg.default_min_count(Dataset::kTwitter) == 0u);
  CHECK_THROWS_AS(cfg.apply_json("[1]"), Error);
  CHECK_THROWS_AS(cfg.apply_json("{"), Error);
  setenv("ODT_ROW_CAP", "77", 1);
  setenv("ODT_HOST", "127.0.0.1", 1);
  cfg.apply_env();
  unsetenv("ODT_ROW_CAP");
  unsetenv("ODT_HOST");
  CHECK(cfg.row_cap == 77u);
  CHECK(cfg.host == "127.0.0.1");
}

TEST_CASE("meta lists loaded cubes") {
  Service empty(ServiceConfig{});
  CHECK(body_of(empty.meta()) == json::parse(R"({"datasets":[]})"));
  Service svc = abc_service();
  auto m = body_of(svc.meta());
  REQUIRE(m["datasets"].size() == 1);
  CHECK(m["datasets"][0]["name"] == "safegraph");
  auto lvl = m["datasets"][0]["levels"][0];
  CHECK(lvl["level"] == "county");
  CHECK(lvl["start"] == "2020-01-01");
  CHECK(lvl["end"] == "2020-01-02");
  CHECK(lvl["units"] == 3);
  CHECK(lvl["cells"] == 4);
  CHECK(lvl["default_min_count"] == 20);
}

TEST_CASE("choropleth endpoint") {
  Service svc = abc_service();
  auto r = svc.handle("/api/v1/choropleth", q("dataset=safegraph&level=county&unit=A&direction=inflow"));
  CHECK(r.status == 200);
  CHECK(body_of(r) == json::parse(R"({"B":7})"));
  r = svc.handle("/api/v1/choropleth", q("dataset=safegraph&level=county&unit=A&direction=outflow&start=2020-01-02&end=2020-01-02"));
  CHECK(body_of(r) == json::parse(R"({"C":5})"));
  CHECK(svc.handle("/api/v1/choropleth", q("dataset=safegraph&level=county&unit=A&direction=intraflow")).status == 400);
  CHECK(svc.handle("/api/v1/choropleth", q("dataset=safegraph&level=county&unit=A")).status == 400);
  CHECK(svc.handle("/api/v1/choropleth", q("dataset=safegraph&level=county&unit=Z&direction=inflow")).status == 404);
  CHECK(svc.handle("/api/v1/choropleth", q("dataset=foursquare&level=county&unit=A&direction=inflow")).status == 404);
  CHECK(svc.handle("/api/v1/choropleth", q("dataset=twitter&level=county&unit=A&direction=inflow")).status == 404);
  CHECK(svc.handle("/api/v1/choropleth", q("dataset=safegraph&level=zip&unit=A&direction=inflow")).status == 400);
  CHECK(svc.handle("/api/v1/nothing", {}).status == 404);
}

TEST_CASE("flows endpoint applies the dataset threshold") {
  Service svc = abc_service();
  auto r = svc.handle("/api/v1/flows", q("dataset=safegraph&level=county"));
  CHECK(r.status == 200);
  CHECK(flow_pairs(r) == std::vector<std::string>{"A>C", "C>B"});
  auto first = body_of(r)[0];
  CHECK(first["count"] == 25);
  CHECK(first["origin_lat"] == 30.0);
  CHECK(first["destination_lon"] == -90.0);
  CHECK(flow_pairs(svc.handle("/api/v1/flows", q("dataset=safegraph&level=county&min_count=21"))) ==
        std::vector<std::string>{"A>C"});
  CHECK(flow_pairs(svc.handle("/api/v1/flows", q("dataset=safegraph&level=county&min_count=25"))).empty());
  CHECK(flow_pairs(svc.handle("/api/v1/flows", q("dataset=safegraph&level=county&min_count=0"))) ==
        std::vector<std::string>{"A>C", "B>A", "C>B"});
  // A bbox that admits nothing gives an empty array, not an error.
  r = svc.handle("/api/v1/flows", q("dataset=safegraph&level=county&bbox=0,0,1,1"));
  CHECK(r.status == 200);
  CHECK(r.body == "[]");
  // Only A is inside; outflow keeps A->C, inflow keeps B->A.
  CHECK(flow_pairs(svc.handle("/api/v1/flows", q("dataset=safegraph&level=county&min_count=0&bbox=-101,29,-99,31&direction=outflow"))) ==
        std::vector<std::string>{"A>C"});
  CHECK(flow_pairs(svc.handle("/api/v1/flows", q("dataset=safegraph&level=county&min_count=0&bbox=-101,29,-99,31&direction=inflow"))) ==
        std::vector<std::string>{"B>A"});
  CHECK(svc.handle("/api/v1/flows", q("dataset=safegraph&level=county&bbox=1,1,0,0")).status == 400);
  CHECK(svc.handle("/api/v1/flows", q("dataset=safegraph&level=county&direction=intraflow")).status == 400);
}

TEST_CASE("timeseries endpoint is dense") {
  Service svc = abc_service();
  auto r = svc.handle("/api/v1/timeseries", q("dataset=safegraph&level=county&unit=A&direction=inflow&start=2019-12-31&end=2020-01-03"));
  CHECK(r.status == 200);
  CHECK(body_of(r) == json::parse(R"([{"date":"2019-12-31","count":0},{"date":"2020-01-01","count":7},
                                      {"date":"2020-01-02","count":0},{"date":"2020-01-03","count":0}])"));
  r = svc.handle("/api/v1/timeseries", q("dataset=safegraph&level=county&unit=C&direction=in_and_out"));
  CHECK(body_of(r) == json::parse(R"([{"date":"2020-01-01","count":20},{"date":"2020-01-02","count":26}])"));
  CHECK(svc.handle("/api/v1/timeseries", q("dataset=safegraph&level=county&unit=A&direction=inflow&start=2020-13-01")).status == 400);
}

TEST_CASE("export endpoint and row cap") {
  Service svc = abc_service();
  auto r = svc.handle("/api/v1/export", q("dataset=safegraph&level=county"));
  CHECK(r.status == 200);
  CHECK(r.content_type == "text/csv");
  CHECK(r.full_body() ==
        "o_fips,d_fips,year,month,day,cnt,o_lat,o_lon,d_lat,d_lon\n"
        "A,C,2020,1,1,20,30.000000,-100.000000,40.000000,-90.000000\n"
        "A,C,2020,1,2,5,30.000000,-100.000000,40.000000,-90.000000\n"
        "B,A,2020,1,1,7,35.000000,-95.000000,30.000000,-100.000000\n"
        "C,B,2020,1,2,21,40.000000,-90.000000,35.000000,-95.000000\n");
  r = svc.handle("/api/v1/export", q("dataset=safegraph&level=county&aggregated=true"));
  CHECK(r.full_body() ==
        "o_fips,d_fips,cnt,o_lat,o_lon,d_lat,d_lon\n"
        "A,C,25,30.000000,-100.000000,40.000000,-90.000000\n"
        "B,A,7,35.000000,-95.000000,30.000000,-100.000000\n"
        "C,B,21,40.000000,-90.000000,35.000000,-95.000000\n");

  ServiceConfig small;
  small.row_cap = 3;
  Service capped = abc_service(small);
  r = capped.handle("/api/v1/export", q("dataset=safegraph&level=county"));
  CHECK(r.status == 413);
  auto b = body_of(r);
  CHECK(b["rows"] == 4);
  CHECK(b["row_cap"] == 3);
  CHECK(b.contains("hint"));
  // Aggregation brings it under the cap.
  CHECK(capped.handle("/api/v1/export", q("dataset=safegraph&level=county&aggregated=true")).status == 200);
}

TEST_CASE("export stream chunks concatenate to the full body") {
  synth::Rng rng(5);
  auto rc = synth::make_random_cube(rng, 3000);
  auto cube = std::make_shared<const OdtCube>(std::move(rc.cube));
  ExportSpec spec{*cube->date_range(), std::nullopt, false};
  std::string whole = ExportPlan(*cube, spec).to_csv();
  ExportStream s(cube, spec);
  std::string acc;
  int chunks = 0;
  for (std::string c; (c.clear(), s.next_chunk(c, 100));) {
    acc += c;
    ++chunks;
  }
  CHECK(acc == whole);
  CHECK(chunks >= static_cast<int>(s.row_count() / 100));
}

TEST_CASE("replace_cubes swaps what later requests see") {
  Service svc(ServiceConfig{});
  auto before = svc.cubes();
  CHECK(svc.handle("/api/v1/flows", q("dataset=safegraph&level=county")).status == 404);
  CubeSet set;
  set[{Dataset::kSafegraph, GeoLevel::kCounty}] = abc_cube();
  svc.replace_cubes(std::move(set));
  CHECK(before->empty());
  CHECK(svc.handle("/api/v1/flows", q("dataset=safegraph&level=county")).status == 200);
}

TEST_CASE("cube directory loading") {
  auto dir = synth::temp_dir("api_load");
  CHECK(load_cube_dir(dir + "/absent").empty());
  write_cube_file(*abc_cube(), dir + "/" + cube_file_name(Dataset::kSafegraph, GeoLevel::kCounty));
  write_cube_file(*abc_cube(Dataset::kTwitter), dir + "/" + cube_file_name(Dataset::kTwitter, GeoLevel::kCounty));
  auto set = load_cube_dir(dir);
  CHECK(set.size() == 2);
  CHECK(set.count({Dataset::kTwitter, GeoLevel::kCounty}) == 1);
  // Same key under another name is a conflict.
  write_cube_file(*abc_cube(), dir + "/copy.odtc");
  CHECK_THROWS_AS(load_cube_dir(dir), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("geo endpoint serves boundaries by level") {
  synth::Geography geo = synth::make_geography();
  Service svc(ServiceConfig{});
  svc.set_geojson(geo.geojson);
  auto r = svc.handle("/api/v1/geo", q("level=state"));
  CHECK(r.status == 200);
  CHECK(r.content_type == "application/geo+json");
  auto fc = json::parse(r.body);
  CHECK(fc["type"] == "FeatureCollection");
  CHECK(fc["features"].size() == 2);
  CHECK(svc.handle("/api/v1/geo", {}).status == 400);
  Service bare(ServiceConfig{});
  CHECK(bare.handle("/api/v1/geo", q("level=state")).status == 404);
}

TEST_CASE("http server end to end") {
  synth::Rng rng(77);
  auto rc = synth::make_random_cube(rng, 5000);
  CubeSet set;
  set[{Dataset::kSafegraph, GeoLevel::kCounty}] = abc_cube();
  set[{Dataset::kTwitter, GeoLevel::kCounty}] = std::make_shared<const OdtCube>(std::move(rc.cube));
  Service svc(ServiceConfig{}, std::move(set));

  httplib::Server server;
  install_routes(server, svc);
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/api/v1/meta");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(res->body == svc.meta().body);

  res = cli.Get("/api/v1/choropleth?dataset=safegraph&level=county&unit=A&direction=inflow");
  REQUIRE(res);
  CHECK(res->body == R"({"B":7})");

  res = cli.Get("/api/v1/choropleth?dataset=safegraph&level=county&unit=Q&direction=inflow");
  REQUIRE(res);
  CHECK(res->status == 404);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");

  auto pre = cli.Options("/api/v1/flows");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("GET") != std::string::npos);

  // Multi-chunk export equals the in-process body, and repeats are identical.
  std::string path = "/api/v1/export?dataset=twitter&level=county";
  std::string expected = svc.handle("/api/v1/export", q("dataset=twitter&level=county")).full_body();
  res = cli.Get(path);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "text/csv");
  CHECK(res->body.size() == expected.size());
  CHECK(res->body == expected);
  auto again = cli.Get(path);
  REQUIRE(again);
  CHECK(again->body == res->body);

  std::string fpath = "/api/v1/flows?dataset=twitter&level=county&bbox=-110,30,-90,40";
  auto f1 = cli.Get(fpath);
  auto f2 = cli.Get(fpath);
  REQUIRE(f1);
  REQUIRE(f2);
  CHECK(f1->body == f2->body);

  server.stop();
  t.join();
}
