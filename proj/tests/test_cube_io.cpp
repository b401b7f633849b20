#include <filesystem>

#include "doctest.h"
#include "synth.hpp"

#include "odt/cube_io.hpp"
#include "odt/error.hpp"
#include "odt/extract.hpp"

using namespace odt;

namespace {

OdtCube sample_cube() {
  synth::Geography geo = synth::make_geography();
  auto events = synth::make_event_corpus(geo, {30, 6}, 21);
  auto recs = extract_all_users(events, FilterConfig{});
  return build_cube(recs, Dataset::kTwitter, GeoLevel::kCounty, geo.registry);
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected odt::Error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("write, read, write gives identical bytes") {
  OdtCube cube = sample_cube();
  REQUIRE(cube.cell_count() > 0);
  std::string a = serialize_cube(cube);
  OdtCube back = deserialize_cube(a);
  CHECK(serialize_cube(back) == a);
  CHECK(back.units() == cube.units());
  CHECK(back.report() == cube.report());
  CHECK(back.date_range() == cube.date_range());
  CHECK(audit(back).ok());
  for (size_t i = 0; i < cube.days().size(); ++i) {
    CHECK(back.days()[i].cells == cube.days()[i].cells);
    CHECK(back.days()[i].by_destination == cube.days()[i].by_destination);
    CHECK(back.days()[i].coords == cube.days()[i].coords);
  }
}

TEST_CASE("random cubes round-trip") {
  synth::Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    auto rc = synth::make_random_cube(rng, 400);
    std::string bytes = serialize_cube(rc.cube);
    CHECK(serialize_cube(deserialize_cube(bytes)) == bytes);
  }
}

TEST_CASE("empty cube round-trips") {
  OdtCube empty(Dataset::kSafegraph, GeoLevel::kState, {}, {}, {});
  std::string bytes = serialize_cube(empty);
  OdtCube back = deserialize_cube(bytes);
  CHECK_FALSE(back.date_range().has_value());
  CHECK(back.dataset() == Dataset::kSafegraph);
  CHECK(back.level() == GeoLevel::kState);
  CHECK(serialize_cube(back) == bytes);
}

TEST_CASE("corrupt input is rejected with a format error") {
  std::string bytes = serialize_cube(sample_cube());
  CHECK(code_of([&] { deserialize_cube(""); }) == ErrorCode::kFormat);
  CHECK(code_of([&] { deserialize_cube(bytes.substr(0, bytes.size() / 2)); }) == ErrorCode::kFormat);
  CHECK(code_of([&] { deserialize_cube(bytes + "x"); }) == ErrorCode::kFormat);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(code_of([&] { deserialize_cube(bad_magic); }) == ErrorCode::kFormat);
  std::string bad_version = bytes;
  bad_version[8] = 9;
  CHECK(code_of([&] { deserialize_cube(bad_version); }) == ErrorCode::kFormat);
  // Every truncation point fails cleanly.
  for (size_t n = 0; n < bytes.size(); n += 97) {
    CHECK_THROWS_AS(deserialize_cube(bytes.substr(0, n)), Error);
  }
}

TEST_CASE("file helpers") {
  OdtCube cube = sample_cube();
  auto dir = synth::temp_dir("cube_io");
  auto path = (std::filesystem::path(dir) / cube_file_name(cube.dataset(), cube.level())).string();
  CHECK(cube_file_name(Dataset::kSafegraph, GeoLevel::kBlockGroup) == "safegraph_block_group.odtc");
  write_cube_file(cube, path);
  CHECK(serialize_cube(read_cube_file(path)) == serialize_cube(cube));
  CHECK(code_of([&] { read_cube_file(dir + "/missing.odtc"); }) == ErrorCode::kIo);
  std::filesystem::remove_all(dir);
}
