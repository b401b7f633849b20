#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "synth.hpp"

#include "odt/api.hpp"
#include "odt/cube_io.hpp"
#include "odt/io.hpp"
#include "odt/records.hpp"

using namespace odt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& dir, const std::string& args) {
  std::string out = dir + "/stdout.txt", err = dir + "/stderr.txt";
  std::string cmd = std::string(ODT_BINARY) + " " + args + " >" + out + " 2>" + err;
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

struct Workspace {
  std::string dir = synth::temp_dir("cli");
  synth::Geography geo = synth::make_geography();
  std::string geo_path = dir + "/geo.geojson";

  Workspace() { write_file(geo_path, geo.geojson); }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return dir + "/" + name; }
};

std::vector<FlowRecord> read_records(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_records_csv(in);
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  Workspace ws;
  write_file(ws.path("e.csv"), "user_id,timestamp,lat,lon,source,resolution\n");
  CHECK(run(ws.dir, "").exit_code == 2);
  CHECK(run(ws.dir, "frobnicate").exit_code == 2);
  CHECK(run(ws.dir, "ingest-events --input " + ws.path("e.csv") + " --out " + ws.path("o")).exit_code == 2);
  CHECK(run(ws.dir, "ingest-events --input " + ws.path("e.csv") + " --geo " + ws.path("missing.geojson") +
                        " --out " + ws.path("o")).exit_code == 2);
  write_file(ws.path("r.csv"), "");
  CHECK(run(ws.dir, "build --records " + ws.path("r.csv") + " --dataset safegraph --levels county,zip --geo " +
                        ws.geo_path + " --out " + ws.path("c")).exit_code == 2);
  CHECK(run(ws.dir, "build --records " + ws.path("r.csv") + " --dataset foursquare --levels county --geo " +
                        ws.geo_path + " --out " + ws.path("c")).exit_code == 2);
  CHECK(run(ws.dir, "export --data-dir " + ws.path("c") + " --spec level=county").exit_code == 2);
}

TEST_CASE("runtime failures exit with 1") {
  Workspace ws;
  CHECK(run(ws.dir, "ingest-sdm --input " + ws.path("nope.csv") + " --out " + ws.path("o")).exit_code == 1);
  write_file(ws.path("r.csv"), "not,a,records,file\n1,2,3,4\n");
  CHECK(run(ws.dir, "build --records " + ws.path("r.csv") + " --dataset safegraph --levels county --geo " +
                        ws.geo_path + " --out " + ws.path("c")).exit_code == 1);
}

TEST_CASE("ingest-events matches the extraction oracle") {
  Workspace ws;
  auto events = synth::make_event_corpus(ws.geo, {40, 8}, 3);
  // Split across two files in a directory.
  fs::create_directories(ws.path("in"));
  std::vector<GeoEvent> a(events.begin(), events.begin() + events.size() / 2);
  std::vector<GeoEvent> b(events.begin() + events.size() / 2, events.end());
  write_file(ws.path("in/a.csv"), synth::events_to_csv(a));
  write_file(ws.path("in/b.csv"), synth::events_to_csv(b));

  auto r = run(ws.dir, "ingest-events --input " + ws.path("in") + " --geo " + ws.geo_path + " --out " + ws.path("out"));
  REQUIRE(r.exit_code == 0);
  synth::OracleStats os;
  auto expected = synth::oracle_extract(events, &os);
  auto got = read_records(ws.path("out/flows.csv"));
  std::sort(got.begin(), got.end());
  CHECK(got == expected);

  auto stats = json::parse(read_file(ws.path("out/stats.json")));
  CHECK(stats == json::parse(r.out));
  CHECK(stats["events_read"] == events.size());
  CHECK(stats["events_malformed"] == 0);
  CHECK(stats["filtered_bot"] == os.filtered_bot);
  CHECK(stats["filtered_resolution"] == os.filtered_resolution);
  CHECK(stats["events_kept"] == os.kept);
  CHECK(stats["flows_single_day"] == os.single_day);
  CHECK(stats["flows_cross_day"] == os.cross_day);
  CHECK(stats["flows_outside_coverage"] == 0);

  // Rerun gives byte-identical outputs.
  std::string flows = read_file(ws.path("out/flows.csv"));
  REQUIRE(run(ws.dir, "ingest-events --input " + ws.path("in") + " --geo " + ws.geo_path + " --out " + ws.path("out")).exit_code == 0);
  CHECK(read_file(ws.path("out/flows.csv")) == flows);
}

TEST_CASE("a bot list that names every source removes every flow") {
  Workspace ws;
  auto events = synth::make_event_corpus(ws.geo, {10, 4, Day::from_ymd(2020, 1, 1), 1.0, 0.0}, 8);
  write_file(ws.path("e.csv"), synth::events_to_csv(events));
  auto r = run(ws.dir, "ingest-events --input " + ws.path("e.csv") + " --geo " + ws.geo_path + " --out " + ws.path("o"));
  REQUIRE(r.exit_code == 0);
  auto stats = json::parse(r.out);
  CHECK(stats["filtered_bot"] == events.size());
  CHECK(stats["flows_single_day"] == 0);
  CHECK(read_records(ws.path("o/flows.csv")).empty());

  // With a replacement list naming nobody, the same events are kept.
  write_file(ws.path("bots.txt"), "# none of ours\nSomeOtherBot\n");
  r = run(ws.dir, "ingest-events --input " + ws.path("e.csv") + " --geo " + ws.geo_path + " --bots " +
                      ws.path("bots.txt") + " --out " + ws.path("o2"));
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(r.out)["filtered_bot"] == 0);
}

TEST_CASE("ingest-sdm explodes rows and skips malformed ones") {
  Workspace ws;
  write_file(ws.path("sdm.csv"),
             "origin_census_block_group,date_range_start,date_range_end,destination_cbgs\n"
             "100010001001,2020-03-14T00:00:00-05:00,2020-03-15T00:00:00-05:00,\"{\"\"100010001002\"\":4,\"\"100030001001\"\":2}\"\n"
             "100010001002,2020-03-14T00:00:00-05:00,2020-03-15T00:00:00-05:00,\"{\"\"100010001001\"\":1}\"\n"
             "100030001001,2020-03-14T00:00:00-05:00,2020-03-15T00:00:00-05:00,\"{\"\"100010001001\"\":3,\"\"100030001002\"\":5}\"\n"
             "100030001002,2020-03-14T00:00:00-05:00,2020-03-15T00:00:00-05:00,\"{\"\"100010001001\"\":-3}\"\n");
  auto r = run(ws.dir, "ingest-sdm --input " + ws.path("sdm.csv") + " --out " + ws.path("o"));
  REQUIRE(r.exit_code == 0);
  auto stats = json::parse(r.out);
  CHECK(stats["rows_read"] == 4);
  CHECK(stats["malformed_map"] == 1);
  CHECK(stats["records"] == 5);
  CHECK(stats["total_count"] == 15);
  auto recs = read_records(ws.path("o/flows.csv"));
  CHECK(recs.size() == 5);
  CHECK(std::is_sorted(recs.begin(), recs.end()));
  for (const auto& rec : recs) CHECK(rec.date == Day::from_ymd(2020, 3, 14));

  write_file(ws.path("empty.csv"), "");
  r = run(ws.dir, "ingest-sdm --input " + ws.path("empty.csv") + " --out " + ws.path("e"));
  CHECK(r.exit_code == 0);
  CHECK(json::parse(r.out)["records"] == 0);
}

TEST_CASE("build writes conserved, order-independent cubes") {
  Workspace ws;
  auto corpus = synth::make_sdm_corpus(ws.geo, 400, 0, 19);
  write_file(ws.path("sdm.csv"), corpus.csv);
  REQUIRE(run(ws.dir, "ingest-sdm --input " + ws.path("sdm.csv") + " --out " + ws.path("rec")).exit_code == 0);

  auto r = run(ws.dir, "build --records " + ws.path("rec/flows.csv") +
                           " --dataset safegraph --levels block_group,county,state --geo " + ws.geo_path +
                           " --out " + ws.path("cubes"));
  REQUIRE(r.exit_code == 0);
  auto summary = json::parse(r.out);
  REQUIRE(summary["levels"].size() == 3);
  for (const auto& lvl : summary["levels"]) {
    CHECK(lvl["total_count"] == corpus.expected_total);
    CHECK(lvl["audit_mismatches"] == 0);
    CHECK(lvl["dropped_unknown_unit"] == 0);
  }

  // Same records split into shuffled batches in a directory.
  auto recs = read_records(ws.path("rec/flows.csv"));
  synth::Rng rng(4);
  std::shuffle(recs.begin(), recs.end(), rng);
  fs::create_directories(ws.path("batches"));
  size_t third = recs.size() / 3;
  for (int i = 0; i < 3; ++i) {
    auto first = recs.begin() + i * third;
    auto last = i == 2 ? recs.end() : first + third;
    std::ostringstream out;
    write_records_csv(std::vector<FlowRecord>(first, last), out);
    write_file(ws.path("batches/b" + std::to_string(i) + ".csv"), out.str());
  }
  REQUIRE(run(ws.dir, "build --records " + ws.path("batches") + " --dataset safegraph --levels state,county,block_group --geo " +
                          ws.geo_path + " --out " + ws.path("cubes2")).exit_code == 0);
  for (const char* f : {"safegraph_state.odtc", "safegraph_county.odtc", "safegraph_block_group.odtc"}) {
    CHECK(read_file(ws.path(std::string("cubes/") + f)) == read_file(ws.path(std::string("cubes2/") + f)));
  }

  // Offline export equals what the service returns for the same query.
  std::string spec = "dataset=safegraph&level=county&bbox=-100,30,-98,34";
  r = run(ws.dir, "export --data-dir " + ws.path("cubes") + " --spec '" + spec + "'");
  REQUIRE(r.exit_code == 0);
  Service svc(ServiceConfig{}, load_cube_dir(ws.path("cubes")));
  CHECK(r.out == svc.export_csv(parse_query_string(spec)).full_body());
  REQUIRE(run(ws.dir, "export --data-dir " + ws.path("cubes") + " --spec '" + spec + "' --out " + ws.path("x.csv")).exit_code == 0);
  CHECK(read_file(ws.path("x.csv")) == r.out);

  // Over the row cap.
  r = run(ws.dir, "export --data-dir " + ws.path("cubes") + " --row-cap 1 --spec dataset=safegraph\\&level=block_group");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("413") != std::string::npos);
}

TEST_CASE("serve answers over http") {
  Workspace ws;
  fs::create_directories(ws.path("empty"));
  int port = 20000 + static_cast<int>(getpid() % 20000);
  pid_t pid = fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    std::string p = std::to_string(port);
    execl(ODT_BINARY, ODT_BINARY, "serve", "--host", "127.0.0.1", "--port", p.c_str(), "--data-dir",
          ws.path("empty").c_str(), "--geo", ws.geo_path.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  httplib::Client cli("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 100 && !res; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    res = cli.Get("/api/v1/meta");
  }
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == R"({"datasets":[]})");
  auto g = cli.Get("/api/v1/geo?level=county");
  REQUIRE(g);
  CHECK(json::parse(g->body)["features"].size() == 6);
  auto e = cli.Get("/api/v1/flows?dataset=twitter&level=county");
  REQUIRE(e);
  CHECK(e->status == 404);
  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
}
