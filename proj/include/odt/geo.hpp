#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace odt {

// Ordered from finest to coarsest; the numeric value grows with coarseness.
enum class GeoLevel : uint8_t {
  kBlockGroup = 0,
  kTract = 1,
  kCounty = 2,
  kState = 3,
  kSubdivision1 = 4,
  kCountry = 5,
};

inline constexpr std::array<GeoLevel, 6> kAllLevels = {
    GeoLevel::kBlockGroup, GeoLevel::kTract,        GeoLevel::kCounty,
    GeoLevel::kState,      GeoLevel::kSubdivision1, GeoLevel::kCountry};

std::string_view level_name(GeoLevel level);
// Accepts the canonical names (`block_group`, `tract`, `county`, `state`,
// `subdivision1`, `country`); throws Error(kInvalidInput) otherwise.
GeoLevel parse_level(std::string_view name);

inline bool is_coarser(GeoLevel a, GeoLevel b) {
  return static_cast<uint8_t>(a) > static_cast<uint8_t>(b);
}

// U.S. census levels addressed by nested FIPS codes.
bool is_fips_level(GeoLevel level);
// Digit count of a FIPS id at `level` (2/5/11/12); 0 for non-FIPS levels.
size_t fips_length(GeoLevel level);
bool is_fips_id(std::string_view id, GeoLevel level);

class GeoPoint {
 public:
  GeoPoint() = default;
  // Throws Error(kInvalidInput) when lat ∉ [-90, 90] or lon ∉ [-180, 180].
  GeoPoint(double lat, double lon);

  double lat() const { return lat_; }
  double lon() const { return lon_; }

  bool operator==(const GeoPoint&) const = default;
  auto operator<=>(const GeoPoint&) const = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0088;

double haversine_km(const GeoPoint& a, const GeoPoint& b);

// Planar arithmetic mean of latitudes and of longitudes. Throws
// Error(kInvalidInput) on an empty list.
GeoPoint mean_center(std::span<const GeoPoint> points);

struct BBox {
  double min_lon = 0.0;
  double min_lat = 0.0;
  double max_lon = 0.0;
  double max_lat = 0.0;

  // Throws Error(kInvalidInput) unless min <= max on both axes.
  static BBox make(double min_lon, double min_lat, double max_lon, double max_lat);
  // Parses `min_lon,min_lat,max_lon,max_lat`.
  static BBox parse(std::string_view text);

  bool contains(const GeoPoint& p) const {
    return p.lon() >= min_lon && p.lon() <= max_lon && p.lat() >= min_lat && p.lat() <= max_lat;
  }
  bool intersects(const BBox& o) const {
    return !(o.min_lon > max_lon || o.max_lon < min_lon || o.min_lat > max_lat ||
             o.max_lat < min_lat);
  }
};

// Vertices are (lon, lat) pairs as in GeoJSON. Rings may be open or closed.
using Ring = std::vector<std::array<double, 2>>;

struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

// Boundary-inclusive containment test.
bool polygon_contains(const Polygon& poly, const GeoPoint& p);

struct GeoUnit {
  std::string id;
  GeoLevel level = GeoLevel::kCounty;
  std::string name;
  GeoPoint centroid;
  std::vector<Polygon> geometry;  // empty for centroid-only units

  bool has_geometry() const { return !geometry.empty(); }
  BBox bounds() const;
};

// Area-weighted planar centroid of the outer rings minus holes.
GeoPoint geometry_centroid(const std::vector<Polygon>& geometry);

// Geographic units per level plus explicit parent links for hierarchies that
// are not FIPS-prefix based. Built single-threaded, then read-only.
class UnitRegistry {
 public:
  // Throws Error(kInvalidInput) for a duplicate (level, id) or for a U.S.
  // unit whose id is not a FIPS code of the level's length.
  void add_unit(GeoUnit unit);
  void add_parent(std::string child_id, GeoLevel from, std::string parent_id, GeoLevel to);

  const GeoUnit* find(std::string_view id, GeoLevel level) const;
  // Finest level where `id` is registered, or the FIPS level implied by its
  // length when unregistered.
  std::optional<GeoLevel> level_of(std::string_view id) const;

  const std::map<std::string, GeoUnit, std::less<>>& units(GeoLevel level) const;
  bool has_geometry(GeoLevel level) const;
  size_t size() const;

  // Candidates whose bounding box may contain `p`.
  std::vector<const GeoUnit*> candidates(const GeoPoint& p, GeoLevel level) const;

  std::optional<std::string> explicit_parent(std::string_view child_id, GeoLevel from,
                                             GeoLevel to) const;

 private:
  struct LevelIndex {
    std::map<std::string, GeoUnit, std::less<>> units;
    // 1-degree grid cell -> ids of units whose bbox touches the cell.
    std::unordered_map<int64_t, std::vector<std::string>> grid;
    size_t with_geometry = 0;
  };

  std::array<LevelIndex, kAllLevels.size()> levels_;
  std::map<std::string, std::string, std::less<>> parents_;  // key: from|to|child
};

// Unique unit at `level` whose polygon contains `p`; on a shared boundary the
// lexicographically smallest id wins. Throws Error(kUnsupportedLevel) when the
// level has no geometry.
std::optional<GeoUnit> resolve_unit(const GeoPoint& p, GeoLevel level, const UnitRegistry& reg);
// Non-copying variant used on hot paths.
const GeoUnit* resolve_unit_ptr(const GeoPoint& p, GeoLevel level, const UnitRegistry& reg);

// Parent of `id` at the coarser level `to`. FIPS levels use prefixing; other
// pairs use the registry's explicit mapping, chaining through intermediate
// levels when needed. Throws kInvalidLevelPair / kUnknownUnit.
std::string parent_unit(std::string_view id, GeoLevel from, GeoLevel to, const UnitRegistry& reg);

// GeoJSON FeatureCollection with properties `id`, `level`, `name` and
// optional `lat`/`lon` centroid overrides.
void load_geojson(std::string_view text, UnitRegistry& reg);
void load_geojson_file(const std::string& path, UnitRegistry& reg);
// Lines of `child_id,parent_id,from:to`; blank lines and `#` comments skipped.
void load_parent_mapping(std::string_view text, UnitRegistry& reg);
void load_parent_mapping_file(const std::string& path, UnitRegistry& reg);

}  // namespace odt
