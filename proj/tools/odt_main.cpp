// odt: ingest raw inputs, build cubes, serve the API, export offline.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include "odt/api.hpp"
#include "odt/cube.hpp"
#include "odt/cube_io.hpp"
#include "odt/error.hpp"
#include "odt/extract.hpp"
#include "odt/geo.hpp"
#include "odt/io.hpp"
#include "odt/records.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Raised for bad flag values discovered after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Expands directories into their regular files with `ext`, sorted by path.
std::vector<std::string> expand_inputs(const std::vector<std::string>& paths,
                                       std::initializer_list<std::string_view> exts) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        if (std::find(exts.begin(), exts.end(), ext) != exts.end()) found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw odt::Error(odt::ErrorCode::kIo, "cannot open " + path);
  return in;
}

void write_records(const std::string& out_dir, const std::vector<odt::FlowRecord>& records,
                   const ordered_json& stats) {
  fs::create_directories(out_dir);
  std::ostringstream csv;
  odt::write_records_csv(records, csv);
  odt::write_file((fs::path(out_dir) / "flows.csv").string(), csv.str());
  odt::write_file((fs::path(out_dir) / "stats.json").string(), stats.dump(2) + "\n");
  std::cout << stats.dump(2) << "\n";
}

odt::UnitRegistry load_registry(const std::string& geo, const std::string& parents) {
  odt::UnitRegistry reg;
  odt::load_geojson_file(geo, reg);
  if (!parents.empty()) odt::load_parent_mapping_file(parents, reg);
  return reg;
}

// ---- ingest-events ---------------------------------------------------------

struct IngestEventsArgs {
  std::vector<std::string> inputs;
  std::string geo;
  std::string bots;
  std::string out;
};

int run_ingest_events(const IngestEventsArgs& a) {
  odt::FilterConfig cfg;
  if (!a.bots.empty()) cfg = odt::FilterConfig::with_bot_list(odt::read_file(a.bots));
  odt::UnitRegistry reg = load_registry(a.geo, "");

  std::vector<odt::GeoEvent> events;
  odt::EventReadStats read_stats;
  for (const auto& path : expand_inputs(a.inputs, {".csv", ".ndjson", ".jsonl"})) {
    auto in = open_input(path);
    auto ext = fs::path(path).extension().string();
    auto batch = ext == ".csv" ? odt::read_events_csv(in, &read_stats)
                               : odt::read_events_ndjson(in, &read_stats);
    events.insert(events.end(), std::make_move_iterator(batch.begin()),
                  std::make_move_iterator(batch.end()));
  }

  odt::EventPipelineStats st;
  auto records = odt::extract_all_users(events, cfg, &st);
  st.events_read = read_stats.rows;
  st.events_malformed = read_stats.malformed;

  // Coverage against the finest level that has polygons.
  uint64_t outside = 0;
  std::optional<odt::GeoLevel> finest;
  for (auto level : odt::kAllLevels) {
    if (reg.has_geometry(level)) {
      finest = level;
      break;
    }
  }
  if (finest) {
    for (const auto& r : records) {
      const auto& o = std::get<odt::GeoPoint>(r.origin);
      const auto& d = std::get<odt::GeoPoint>(r.destination);
      if (!odt::resolve_unit_ptr(o, *finest, reg) || !odt::resolve_unit_ptr(d, *finest, reg)) {
        ++outside;
      }
    }
  }

  ordered_json stats{{"events_read", st.events_read},
                     {"events_malformed", st.events_malformed},
                     {"filtered_bot", st.filtered_bot},
                     {"filtered_resolution", st.filtered_resolution},
                     {"events_kept", st.events_kept},
                     {"users", st.users},
                     {"users_with_flows", st.users_with_flows},
                     {"flows_single_day", st.flows_single_day},
                     {"flows_cross_day", st.flows_cross_day},
                     {"flows_outside_coverage", outside}};
  write_records(a.out, records, stats);
  return kExitOk;
}

// ---- ingest-sdm ------------------------------------------------------------

struct IngestSdmArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int run_ingest_sdm(const IngestSdmArgs& a) {
  std::vector<odt::FlowRecord> records;
  odt::SdmPipelineStats st;
  for (const auto& path : expand_inputs(a.inputs, {".csv"})) {
    auto in = open_input(path);
    auto batch = odt::ingest_sdm_csv(in, &st);
    records.insert(records.end(), std::make_move_iterator(batch.begin()),
                   std::make_move_iterator(batch.end()));
  }
  std::sort(records.begin(), records.end());
  uint64_t malformed = st.malformed_row + st.malformed_map + st.malformed_date + st.malformed_origin;
  ordered_json stats{{"rows_read", st.rows_read},
                     {"rows_skipped", st.rows_skipped},
                     {"malformed_rows", malformed},
                     {"malformed_row", st.malformed_row},
                     {"malformed_map", st.malformed_map},
                     {"malformed_date", st.malformed_date},
                     {"malformed_origin", st.malformed_origin},
                     {"records", st.records},
                     {"total_count", st.total_count}};
  write_records(a.out, records, stats);
  return kExitOk;
}

// ---- build -----------------------------------------------------------------

struct BuildArgs {
  std::vector<std::string> records;
  std::string dataset;
  std::string levels;
  std::string geo;
  std::string parents;
  std::string out;
};

int run_build(const BuildArgs& a) {
  odt::Dataset dataset;
  std::vector<odt::GeoLevel> levels;
  try {
    dataset = odt::parse_dataset(a.dataset);
    for (auto name : odt::split(a.levels, ',')) {
      auto lvl = odt::parse_level(odt::trim(name));
      if (std::find(levels.begin(), levels.end(), lvl) == levels.end()) levels.push_back(lvl);
    }
  } catch (const odt::Error& e) {
    throw UsageError(e.what());
  }
  if (levels.empty()) throw UsageError("--levels is empty");

  odt::UnitRegistry reg = load_registry(a.geo, a.parents);
  std::vector<odt::FlowRecord> records;
  for (const auto& path : expand_inputs(a.records, {".csv"})) {
    auto in = open_input(path);
    auto batch = odt::read_records_csv(in);
    records.insert(records.end(), std::make_move_iterator(batch.begin()),
                   std::make_move_iterator(batch.end()));
  }

  fs::create_directories(a.out);
  ordered_json summary = ordered_json::array();
  bool all_ok = true;
  for (auto level : levels) {
    odt::OdtCube cube = odt::build_cube(records, dataset, level, reg);
    odt::AuditReport audit = odt::audit(cube);
    all_ok = all_ok && audit.ok();
    std::string path = (fs::path(a.out) / odt::cube_file_name(dataset, level)).string();
    const auto& rep = cube.report();
    ordered_json entry{{"level", odt::level_name(level)},
                       {"file", path},
                       {"records_in", rep.records_in},
                       {"records_kept", rep.records_kept},
                       {"dropped_outside_geometry", rep.dropped_outside_geometry},
                       {"dropped_unknown_unit", rep.dropped_unknown_unit},
                       {"stays", rep.stays},
                       {"cells", cube.cell_count()},
                       {"total_count", cube.total_count()},
                       {"audit_mismatches", audit.mismatches.size()}};
    if (audit.ok()) {
      odt::write_cube_file(cube, path);
    } else {
      for (const auto& m : audit.mismatches) {
        std::cerr << "audit: " << m.unit_id << " " << odt::format_day(m.day) << " " << m.field
                  << " stored=" << m.stored << " recomputed=" << m.recomputed << "\n";
      }
    }
    summary.push_back(std::move(entry));
  }
  std::cout << ordered_json{{"dataset", odt::dataset_name(dataset)}, {"levels", summary}}.dump(2)
            << "\n";
  return all_ok ? kExitOk : kExitFailure;
}

// ---- serve / export --------------------------------------------------------

struct ServeArgs {
  std::string config;
  std::optional<std::string> data_dir;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<uint64_t> row_cap;
  std::optional<std::string> geo;
};

odt::ServiceConfig make_config(const ServeArgs& a) {
  odt::ServiceConfig cfg;
  if (!a.config.empty()) cfg.apply_json(odt::read_file(a.config));
  cfg.apply_env();
  if (a.data_dir) cfg.data_dir = *a.data_dir;
  if (a.host) cfg.host = *a.host;
  if (a.port) cfg.port = *a.port;
  if (a.row_cap) cfg.row_cap = *a.row_cap;
  if (a.geo) cfg.geo_path = *a.geo;
  return cfg;
}

int run_serve(const ServeArgs& a) {
  odt::ServiceConfig cfg = make_config(a);
  odt::Service service(cfg, odt::load_cube_dir(cfg.data_dir));
  if (!cfg.geo_path.empty()) service.set_geojson(odt::read_file(cfg.geo_path));

  httplib::Server server;
  odt::install_routes(server, service);
  if (!server.bind_to_port(cfg.host, cfg.port)) {
    throw odt::Error(odt::ErrorCode::kIo,
                     "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  }
  std::cerr << "serving " << service.cubes()->size() << " cube(s) from " << cfg.data_dir << " on "
            << cfg.host << ":" << cfg.port << "\n";
  return server.listen_after_bind() ? kExitOk : kExitFailure;
}

struct ExportArgs {
  ServeArgs serve;
  std::string spec;
  std::string out;
};

int run_export(const ExportArgs& a) {
  odt::ServiceConfig cfg = make_config(a.serve);
  odt::Service service(cfg, odt::load_cube_dir(cfg.data_dir));
  odt::ApiResponse r = service.export_csv(odt::parse_query_string(a.spec));
  if (r.status != 200) {
    std::cerr << "export failed (" << r.status << "): " << r.body << "\n";
    return r.status == 400 ? kExitUsage : kExitFailure;
  }
  if (a.out.empty() || a.out == "-") {
    std::string chunk;
    while (r.stream->next_chunk(chunk)) {
      std::cout << chunk;
      chunk.clear();
    }
    std::cout.flush();
  } else {
    odt::write_file(a.out, r.full_body());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Origin-destination-time cube toolkit"};
  app.require_subcommand(1);

  IngestEventsArgs ie;
  auto* ingest_events = app.add_subcommand("ingest-events", "Extract flows from geotagged events");
  ingest_events->add_option("--input", ie.inputs, "Event files or directories (.csv, .ndjson)")
      ->required();
  ingest_events->add_option("--geo", ie.geo, "Boundary GeoJSON")->required()->check(CLI::ExistingFile);
  ingest_events->add_option("--bots", ie.bots, "Bot source list, one per line")
      ->check(CLI::ExistingFile);
  ingest_events->add_option("--out", ie.out, "Output directory")->required();

  IngestSdmArgs is;
  auto* ingest_sdm = app.add_subcommand("ingest-sdm", "Explode SDM origin-destination rows");
  ingest_sdm->add_option("--input", is.inputs, "SDM CSV files or directories")->required();
  ingest_sdm->add_option("--out", is.out, "Output directory")->required();

  BuildArgs ba;
  auto* build = app.add_subcommand("build", "Build cube files from flow records");
  build->add_option("--records", ba.records, "Record CSV files or directories")->required();
  build->add_option("--dataset", ba.dataset, "twitter or safegraph")->required();
  build->add_option("--levels", ba.levels, "Comma-separated levels, e.g. state,county")->required();
  build->add_option("--geo", ba.geo, "Boundary GeoJSON")->required()->check(CLI::ExistingFile);
  build->add_option("--parents", ba.parents, "Explicit parent mapping CSV")
      ->check(CLI::ExistingFile);
  build->add_option("--out", ba.out, "Output directory")->required();

  ServeArgs sa;
  auto add_service_flags = [](CLI::App* cmd, ServeArgs& s) {
    cmd->add_option("--config", s.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--data-dir", s.data_dir, "Directory of .odtc cube files");
    cmd->add_option("--row-cap", s.row_cap, "Maximum export rows");
  };
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  add_service_flags(serve, sa);
  serve->add_option("--host", sa.host, "Bind address");
  serve->add_option("--port", sa.port, "Listen port")->check(CLI::Range(0, 65535));
  serve->add_option("--geo", sa.geo, "Boundary GeoJSON served at /api/v1/geo")
      ->check(CLI::ExistingFile);

  ExportArgs ea;
  auto* exp = app.add_subcommand("export", "Write the CSV /api/v1/export would return");
  add_service_flags(exp, ea.serve);
  exp->add_option("--spec", ea.spec, "Query string, e.g. dataset=twitter&level=county&start=...")
      ->required();
  exp->add_option("--out", ea.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest_events) return run_ingest_events(ie);
    if (*ingest_sdm) return run_ingest_sdm(is);
    if (*build) return run_build(ba);
    if (*serve) return run_serve(sa);
    if (*exp) return run_export(ea);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const odt::Error& e) {
    std::cerr << "error [" << odt::error_code_name(e.code()) << "]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
