#pragma once

#include <string>
#include <string_view>

#include "odt/cube.hpp"

namespace odt {

// Binary cube file, little-endian:
//   "ODTCUBE\0" u32 version | u8 dataset u8 level u16 reserved
//   u8 has_range i32 first_day i32 last_day | build report (5 x u64)
//   u32 n_units { u32 len, id bytes, f64 lat, f64 lon }
//   u32 n_days  { i32 day, u64 n_cells {u32 o, u32 d, u64 count},
//                 u8 has_coords [{i64 o_lat, i64 o_lon, i64 d_lat, i64 d_lon, u64 w}],
//                 u32 n_stays {u32 unit, u64 count} }
//   "MARG" u64 n { u32 unit, i32 day, u64 inflow, u64 outflow, u64 intraflow }
//   "END\0"
// The destination index is rebuilt on load. write -> read -> write is
// byte-identical.
inline constexpr uint32_t kCubeFormatVersion = 1;

std::string serialize_cube(const OdtCube& cube);
// Throws Error(kFormat) on any structural problem.
OdtCube deserialize_cube(std::string_view bytes);

void write_cube_file(const OdtCube& cube, const std::string& path);
OdtCube read_cube_file(const std::string& path);

// `<dataset>_<level>.odtc`
std::string cube_file_name(Dataset dataset, GeoLevel level);

}  // namespace odt
