#include "odt/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"

#include "odt/error.hpp"
#include "odt/io.hpp"

namespace odt {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kBoundaryEps = 1e-12;

int64_t grid_key(int64_t cx, int64_t cy) { return (cx + 512) * 1024 + (cy + 512); }

int64_t grid_cell(double deg) { return static_cast<int64_t>(std::floor(deg)); }

std::string parent_key(std::string_view child, GeoLevel from, GeoLevel to) {
  std::string key;
  key.push_back(static_cast<char>('0' + static_cast<int>(from)));
  key.push_back(static_cast<char>('0' + static_cast<int>(to)));
  key.push_back('|');
  key.append(child);
  return key;
}

bool on_segment(const std::array<double, 2>& a, const std::array<double, 2>& b, double x,
                double y) {
  double cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
  double scale = std::max({1.0, std::abs(b[0] - a[0]), std::abs(b[1] - a[1])});
  if (std::abs(cross) > kBoundaryEps * scale) return false;
  return x >= std::min(a[0], b[0]) - kBoundaryEps && x <= std::max(a[0], b[0]) + kBoundaryEps &&
         y >= std::min(a[1], b[1]) - kBoundaryEps && y <= std::max(a[1], b[1]) + kBoundaryEps;
}

enum class RingSide { kOutside, kInside, kBoundary };

RingSide ring_side(const Ring& ring, double x, double y) {
  size_t n = ring.size();
  if (n < 3) return RingSide::kOutside;
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = ring[i];
    const auto& b = ring[j];
    if (on_segment(a, b, x, y)) return RingSide::kBoundary;
    if ((a[1] > y) != (b[1] > y)) {
      double xi = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
      if (x < xi) inside = !inside;
    }
  }
  return inside ? RingSide::kInside : RingSide::kOutside;
}

Ring parse_ring(const nlohmann::json& coords) {
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& v : coords) {
    if (!v.is_array() || v.size() < 2) throw Error(ErrorCode::kFormat, "bad GeoJSON position");
    ring.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  return ring;
}

Polygon parse_polygon(const nlohmann::json& rings) {
  if (!rings.is_array() || rings.empty()) throw Error(ErrorCode::kFormat, "bad GeoJSON polygon");
  Polygon poly;
  poly.outer = parse_ring(rings[0]);
  for (size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i]));
  return poly;
}

// Signed shoelace area and first moments of a ring.
void ring_moments(const Ring& ring, double& area, double& mx, double& my) {
  area = mx = my = 0.0;
  size_t n = ring.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    double cross = ring[j][0] * ring[i][1] - ring[i][0] * ring[j][1];
    area += cross;
    mx += (ring[j][0] + ring[i][0]) * cross;
    my += (ring[j][1] + ring[i][1]) * cross;
  }
  area *= 0.5;
}

}  // namespace

std::string_view level_name(GeoLevel level) {
  switch (level) {
    case GeoLevel::kBlockGroup: return "block_group";
    case GeoLevel::kTract: return "tract";
    case GeoLevel::kCounty: return "county";
    case GeoLevel::kState: return "state";
    case GeoLevel::kSubdivision1: return "subdivision1";
    case GeoLevel::kCountry: return "country";
  }
  return "unknown";
}

GeoLevel parse_level(std::string_view name) {
  for (GeoLevel level : kAllLevels) {
    if (level_name(level) == name) return level;
  }
  throw Error(ErrorCode::kInvalidInput, "unknown geographic level '" + std::string(name) + "'");
}

bool is_fips_level(GeoLevel level) { return fips_length(level) != 0; }

size_t fips_length(GeoLevel level) {
  switch (level) {
    case GeoLevel::kState: return 2;
    case GeoLevel::kCounty: return 5;
    case GeoLevel::kTract: return 11;
    case GeoLevel::kBlockGroup: return 12;
    default: return 0;
  }
}

bool is_fips_id(std::string_view id, GeoLevel level) {
  size_t len = fips_length(level);
  return len != 0 && id.size() == len &&
         std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; });
}

GeoPoint::GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
    throw Error(ErrorCode::kInvalidInput, "coordinate out of range: (" + std::to_string(lat) +
                                              ", " + std::to_string(lon) + ")");
  }
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  double phi1 = a.lat() * kDegToRad;
  double phi2 = b.lat() * kDegToRad;
  double dphi = (b.lat() - a.lat()) * kDegToRad;
  double dlambda = (b.lon() - a.lon()) * kDegToRad;
  double s1 = std::sin(dphi / 2.0);
  double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

GeoPoint mean_center(std::span<const GeoPoint> points) {
  if (points.empty()) throw Error(ErrorCode::kInvalidInput, "mean_center of an empty point list");
  double lat = 0.0;
  double lon = 0.0;
  for (const auto& p : points) {
    lat += p.lat();
    lon += p.lon();
  }
  double n = static_cast<double>(points.size());
  return GeoPoint(std::clamp(lat / n, -90.0, 90.0), std::clamp(lon / n, -180.0, 180.0));
}

BBox BBox::make(double min_lon, double min_lat, double max_lon, double max_lat) {
  if (!(min_lon <= max_lon) || !(min_lat <= max_lat)) {
    throw Error(ErrorCode::kInvalidInput, "bounding box is not well ordered");
  }
  return BBox{min_lon, min_lat, max_lon, max_lat};
}

BBox BBox::parse(std::string_view text) {
  auto parts = split(text, ',');
  if (parts.size() != 4) {
    throw Error(ErrorCode::kInvalidInput, "bbox must be min_lon,min_lat,max_lon,max_lat");
  }
  double v[4];
  for (size_t i = 0; i < 4; ++i) {
    std::string part(trim(parts[i]));
    size_t used = 0;
    try {
      v[i] = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (part.empty() || used != part.size() || !std::isfinite(v[i])) {
      throw Error(ErrorCode::kInvalidInput, "bbox component '" + part + "' is not a number");
    }
  }
  return make(v[0], v[1], v[2], v[3]);
}

bool polygon_contains(const Polygon& poly, const GeoPoint& p) {
  double x = p.lon();
  double y = p.lat();
  RingSide outer = ring_side(poly.outer, x, y);
  if (outer == RingSide::kOutside) return false;
  if (outer == RingSide::kBoundary) return true;
  for (const auto& hole : poly.holes) {
    if (ring_side(hole, x, y) == RingSide::kInside) return false;
  }
  return true;
}

BBox GeoUnit::bounds() const {
  if (geometry.empty()) {
    return BBox{centroid.lon(), centroid.lat(), centroid.lon(), centroid.lat()};
  }
  BBox box{180.0, 90.0, -180.0, -90.0};
  for (const auto& poly : geometry) {
    for (const auto& v : poly.outer) {
      box.min_lon = std::min(box.min_lon, v[0]);
      box.max_lon = std::max(box.max_lon, v[0]);
      box.min_lat = std::min(box.min_lat, v[1]);
      box.max_lat = std::max(box.max_lat, v[1]);
    }
  }
  return box;
}

GeoPoint geometry_centroid(const std::vector<Polygon>& geometry) {
  double area = 0.0;
  double mx = 0.0;
  double my = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  size_t vn = 0;
  auto accumulate = [&](const Ring& ring, double sign) {
    double a, x, y;
    ring_moments(ring, a, x, y);
    // Orientation-agnostic: outer rings add, holes subtract.
    double s = (a < 0 ? -1.0 : 1.0) * sign;
    area += s * a;
    mx += s * x;
    my += s * y;
  };
  for (const auto& poly : geometry) {
    accumulate(poly.outer, 1.0);
    for (const auto& hole : poly.holes) accumulate(hole, -1.0);
    for (const auto& v : poly.outer) {
      vx += v[0];
      vy += v[1];
      ++vn;
    }
  }
  if (std::abs(area) < 1e-15) {
    if (vn == 0) throw Error(ErrorCode::kInvalidInput, "centroid of empty geometry");
    return GeoPoint(vy / static_cast<double>(vn), vx / static_cast<double>(vn));
  }
  double cx = mx / (6.0 * area);
  double cy = my / (6.0 * area);
  return GeoPoint(std::clamp(cy, -90.0, 90.0), std::clamp(cx, -180.0, 180.0));
}

void UnitRegistry::add_unit(GeoUnit unit) {
  if (unit.id.empty()) throw Error(ErrorCode::kInvalidInput, "unit id must not be empty");
  if (is_fips_level(unit.level) && !is_fips_id(unit.id, unit.level)) {
    throw Error(ErrorCode::kInvalidInput, "unit '" + unit.id + "' is not a " +
                                              std::to_string(fips_length(unit.level)) +
                                              "-digit FIPS code for level " +
                                              std::string(level_name(unit.level)));
  }
  auto& idx = levels_[static_cast<size_t>(unit.level)];
  if (idx.units.count(unit.id) != 0) {
    throw Error(ErrorCode::kInvalidInput, "duplicate unit '" + unit.id + "' at level " +
                                              std::string(level_name(unit.level)));
  }
  if (unit.has_geometry()) {
    BBox box = unit.bounds();
    for (int64_t cx = grid_cell(box.min_lon); cx <= grid_cell(box.max_lon); ++cx) {
      for (int64_t cy = grid_cell(box.min_lat); cy <= grid_cell(box.max_lat); ++cy) {
        idx.grid[grid_key(cx, cy)].push_back(unit.id);
      }
    }
    ++idx.with_geometry;
  }
  std::string id = unit.id;
  idx.units.emplace(std::move(id), std::move(unit));
}

void UnitRegistry::add_parent(std::string child_id, GeoLevel from, std::string parent_id,
                              GeoLevel to) {
  if (!is_coarser(to, from)) {
    throw Error(ErrorCode::kInvalidLevelPair, "parent level must be coarser than child level");
  }
  parents_[parent_key(child_id, from, to)] = std::move(parent_id);
}

const GeoUnit* UnitRegistry::find(std::string_view id, GeoLevel level) const {
  const auto& units = levels_[static_cast<size_t>(level)].units;
  auto it = units.find(id);
  return it == units.end() ? nullptr : &it->second;
}

std::optional<GeoLevel> UnitRegistry::level_of(std::string_view id) const {
  for (GeoLevel level : kAllLevels) {
    if (find(id, level) != nullptr) return level;
  }
  for (GeoLevel level : kAllLevels) {
    if (is_fips_id(id, level)) return level;
  }
  return std::nullopt;
}

const std::map<std::string, GeoUnit, std::less<>>& UnitRegistry::units(GeoLevel level) const {
  return levels_[static_cast<size_t>(level)].units;
}

bool UnitRegistry::has_geometry(GeoLevel level) const {
  return levels_[static_cast<size_t>(level)].with_geometry > 0;
}

size_t UnitRegistry::size() const {
  size_t n = 0;
  for (const auto& l : levels_) n += l.units.size();
  return n;
}

std::vector<const GeoUnit*> UnitRegistry::candidates(const GeoPoint& p, GeoLevel level) const {
  std::vector<const GeoUnit*> out;
  const auto& idx = levels_[static_cast<size_t>(level)];
  // A point exactly on a grid line may belong to a unit registered only in
  // the neighbouring cell, so probe both sides of integral coordinates.
  int64_t cx = grid_cell(p.lon());
  int64_t cy = grid_cell(p.lat());
  bool edge_x = std::floor(p.lon()) == p.lon();
  bool edge_y = std::floor(p.lat()) == p.lat();
  for (int64_t dx = edge_x ? -1 : 0; dx <= 0; ++dx) {
    for (int64_t dy = edge_y ? -1 : 0; dy <= 0; ++dy) {
      auto it = idx.grid.find(grid_key(cx + dx, cy + dy));
      if (it == idx.grid.end()) continue;
      for (const auto& id : it->second) {
        const GeoUnit* u = &idx.units.find(id)->second;
        if (std::find(out.begin(), out.end(), u) == out.end()) out.push_back(u);
      }
    }
  }
  return out;
}

std::optional<std::string> UnitRegistry::explicit_parent(std::string_view child_id, GeoLevel from,
                                                         GeoLevel to) const {
  auto it = parents_.find(parent_key(child_id, from, to));
  if (it == parents_.end()) return std::nullopt;
  return it->second;
}

const GeoUnit* resolve_unit_ptr(const GeoPoint& p, GeoLevel level, const UnitRegistry& reg) {
  if (!reg.has_geometry(level)) {
    throw Error(ErrorCode::kUnsupportedLevel,
                "no geometry loaded for level " + std::string(level_name(level)));
  }
  const GeoUnit* best = nullptr;
  for (const GeoUnit* unit : reg.candidates(p, level)) {
    if (best != nullptr && unit->id >= best->id) continue;
    for (const auto& poly : unit->geometry) {
      if (polygon_contains(poly, p)) {
        best = unit;
        break;
      }
    }
  }
  return best;
}

std::optional<GeoUnit> resolve_unit(const GeoPoint& p, GeoLevel level, const UnitRegistry& reg) {
  const GeoUnit* u = resolve_unit_ptr(p, level, reg);
  if (u == nullptr) return std::nullopt;
  return *u;
}

namespace {

std::optional<std::string> try_parent(std::string_view id, GeoLevel from, GeoLevel to,
                                      const UnitRegistry& reg) {
  if (is_fips_level(from) && is_fips_level(to)) {
    if (!is_fips_id(id, from)) return std::nullopt;
    return std::string(id.substr(0, fips_length(to)));
  }
  if (auto p = reg.explicit_parent(id, from, to)) return p;
  for (auto mid = static_cast<uint8_t>(static_cast<uint8_t>(from) + 1);
       mid < static_cast<uint8_t>(to); ++mid) {
    auto m = static_cast<GeoLevel>(mid);
    if (auto step = try_parent(id, from, m, reg)) {
      if (auto p = try_parent(*step, m, to, reg)) return p;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string parent_unit(std::string_view id, GeoLevel from, GeoLevel to, const UnitRegistry& reg) {
  if (!is_coarser(to, from)) {
    throw Error(ErrorCode::kInvalidLevelPair, std::string(level_name(to)) +
                                                  " is not coarser than " +
                                                  std::string(level_name(from)));
  }
  if (auto p = try_parent(id, from, to, reg)) return *p;
  throw Error(ErrorCode::kUnknownUnit, "no " + std::string(level_name(to)) + " parent for " +
                                           std::string(level_name(from)) + " unit '" +
                                           std::string(id) + "'");
}

void load_geojson(std::string_view text, UnitRegistry& reg) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("GeoJSON parse error: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw Error(ErrorCode::kFormat, "expected a GeoJSON FeatureCollection");
  }
  for (const auto& feature : doc["features"]) {
    try {
      const auto& props = feature.at("properties");
      if (!props.at("id").is_string()) {
        throw Error(ErrorCode::kFormat, "feature property 'id' must be a string");
      }
      GeoUnit unit;
      unit.id = props.at("id").get<std::string>();
      unit.level = parse_level(props.at("level").get<std::string>());
      unit.name = props.value("name", unit.id);

      const auto& geom = feature.contains("geometry") ? feature["geometry"] : nlohmann::json();
      if (!geom.is_null()) {
        std::string type = geom.at("type").get<std::string>();
        const auto& coords = geom.at("coordinates");
        if (type == "Polygon") {
          unit.geometry.push_back(parse_polygon(coords));
        } else if (type == "MultiPolygon") {
          for (const auto& poly : coords) unit.geometry.push_back(parse_polygon(poly));
        } else {
          throw Error(ErrorCode::kFormat, "unsupported geometry type '" + type + "'");
        }
      }
      if (props.contains("lat") && props.contains("lon")) {
        unit.centroid = GeoPoint(props["lat"].get<double>(), props["lon"].get<double>());
      } else if (unit.has_geometry()) {
        unit.centroid = geometry_centroid(unit.geometry);
      } else {
        throw Error(ErrorCode::kFormat, "feature '" + unit.id + "' has neither geometry nor lat/lon");
      }
      reg.add_unit(std::move(unit));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, std::string("bad GeoJSON feature: ") + e.what());
    }
  }
}

void load_geojson_file(const std::string& path, UnitRegistry& reg) {
  load_geojson(read_file(path), reg);
}

void load_parent_mapping(std::string_view text, UnitRegistry& reg) {
  size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto parts = split(line, ',');
    if (parts.size() != 3) {
      throw Error(ErrorCode::kFormat,
                  "parent mapping line " + std::to_string(line_no) + ": expected 3 fields");
    }
    auto pair = split(trim(parts[2]), ':');
    if (pair.size() != 2) {
      throw Error(ErrorCode::kFormat,
                  "parent mapping line " + std::to_string(line_no) + ": level pair must be from:to");
    }
    reg.add_parent(std::string(trim(parts[0])), parse_level(trim(pair[0])),
                   std::string(trim(parts[1])), parse_level(trim(pair[1])));
  }
}

void load_parent_mapping_file(const std::string& path, UnitRegistry& reg) {
  load_parent_mapping(read_file(path), reg);
}

}  // namespace odt
