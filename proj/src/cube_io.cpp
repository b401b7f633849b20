#include "odt/cube_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <type_traits>

#include "odt/error.hpp"
#include "odt/io.hpp"

namespace odt {

static_assert(std::endian::native == std::endian::little,
              "cube files are little-endian; add byte swapping for this target");

namespace {

constexpr char kMagic[8] = {'O', 'D', 'T', 'C', 'U', 'B', 'E', '\0'};
constexpr char kMarginalTag[4] = {'M', 'A', 'R', 'G'};
constexpr char kEndTag[4] = {'E', 'N', 'D', '\0'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(const void* p, size_t n) { out_.append(static_cast<const char*>(p), n); }
  void reserve(size_t n) { out_.reserve(n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  const char* take(size_t n) {
    if (n > in_.size() - pos_) throw Error(ErrorCode::kFormat, "cube file truncated");
    const char* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  void expect(const char* tag, size_t n, const char* what) {
    if (std::memcmp(take(n), tag, n) != 0) {
      throw Error(ErrorCode::kFormat, std::string("cube file: missing ") + what);
    }
  }
  bool done() const { return pos_ == in_.size(); }
  // Guards element counts against the remaining input before allocating.
  void check_count(uint64_t n, size_t element_size) const {
    if (element_size != 0 && n > (in_.size() - pos_) / element_size) {
      throw Error(ErrorCode::kFormat, "cube file: element count exceeds file size");
    }
  }

 private:
  std::string_view in_;
  size_t pos_ = 0;
};

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::kFormat, "cube file: " + what);
}

}  // namespace

std::string serialize_cube(const OdtCube& cube) {
  Writer w;
  w.reserve(64 + cube.cell_count() * (cube.has_coords() ? 56 : 16));
  w.bytes(kMagic, sizeof(kMagic));
  w.put<uint32_t>(kCubeFormatVersion);
  w.put<uint8_t>(static_cast<uint8_t>(cube.dataset()));
  w.put<uint8_t>(static_cast<uint8_t>(cube.level()));
  w.put<uint16_t>(0);
  auto range = cube.date_range();
  w.put<uint8_t>(range ? 1 : 0);
  w.put<int32_t>(range ? range->first.value : 0);
  w.put<int32_t>(range ? range->last.value : 0);

  const auto& rep = cube.report();
  w.put<uint64_t>(rep.records_in);
  w.put<uint64_t>(rep.records_kept);
  w.put<uint64_t>(rep.dropped_outside_geometry);
  w.put<uint64_t>(rep.dropped_unknown_unit);
  w.put<uint64_t>(rep.stays);

  w.put<uint32_t>(static_cast<uint32_t>(cube.units().size()));
  for (const auto& u : cube.units()) {
    w.put<uint32_t>(static_cast<uint32_t>(u.id.size()));
    w.bytes(u.id.data(), u.id.size());
    w.put<double>(u.centroid.lat());
    w.put<double>(u.centroid.lon());
  }

  w.put<uint32_t>(static_cast<uint32_t>(cube.days().size()));
  for (const auto& part : cube.days()) {
    w.put<int32_t>(part.day.value);
    w.put<uint64_t>(part.cells.size());
    for (const auto& c : part.cells) {
      w.put<uint32_t>(c.origin);
      w.put<uint32_t>(c.destination);
      w.put<uint64_t>(c.count);
    }
    w.put<uint8_t>(part.coords.empty() ? 0 : 1);
    for (const auto& s : part.coords) {
      w.put<int64_t>(s.o_lat);
      w.put<int64_t>(s.o_lon);
      w.put<int64_t>(s.d_lat);
      w.put<int64_t>(s.d_lon);
      w.put<uint64_t>(s.weight);
    }
    w.put<uint32_t>(static_cast<uint32_t>(part.stays.size()));
    for (const auto& s : part.stays) {
      w.put<uint32_t>(s.unit);
      w.put<uint64_t>(s.count);
    }
  }

  w.bytes(kMarginalTag, sizeof(kMarginalTag));
  uint64_t n_marginals = 0;
  for (uint32_t u = 0; u < cube.units().size(); ++u) n_marginals += cube.marginals(u).size();
  w.put<uint64_t>(n_marginals);
  for (uint32_t u = 0; u < cube.units().size(); ++u) {
    for (const auto& m : cube.marginals(u)) {
      w.put<uint32_t>(u);
      w.put<int32_t>(m.day.value);
      w.put<uint64_t>(m.inflow);
      w.put<uint64_t>(m.outflow);
      w.put<uint64_t>(m.intraflow);
    }
  }
  w.bytes(kEndTag, sizeof(kEndTag));
  return w.take();
}

OdtCube deserialize_cube(std::string_view bytes) {
  Reader r(bytes);
  r.expect(kMagic, sizeof(kMagic), "magic header");
  if (auto version = r.get<uint32_t>(); version != kCubeFormatVersion) {
    corrupt("unsupported format version " + std::to_string(version));
  }
  OdtCube cube;
  auto dataset = r.get<uint8_t>();
  auto level = r.get<uint8_t>();
  if (dataset > static_cast<uint8_t>(Dataset::kSafegraph)) corrupt("bad dataset");
  if (level > static_cast<uint8_t>(GeoLevel::kCountry)) corrupt("bad level");
  cube.dataset_ = static_cast<Dataset>(dataset);
  cube.level_ = static_cast<GeoLevel>(level);
  r.get<uint16_t>();
  auto has_range = r.get<uint8_t>();
  Period range{Day(r.get<int32_t>()), Day(r.get<int32_t>())};

  cube.report_.records_in = r.get<uint64_t>();
  cube.report_.records_kept = r.get<uint64_t>();
  cube.report_.dropped_outside_geometry = r.get<uint64_t>();
  cube.report_.dropped_unknown_unit = r.get<uint64_t>();
  cube.report_.stays = r.get<uint64_t>();

  auto n_units = r.get<uint32_t>();
  r.check_count(n_units, 20);
  cube.units_.reserve(n_units);
  for (uint32_t i = 0; i < n_units; ++i) {
    auto len = r.get<uint32_t>();
    std::string id(r.take(len), len);
    double lat = r.get<double>();
    double lon = r.get<double>();
    if (!cube.units_.empty() && !(cube.units_.back().id < id)) corrupt("units not sorted");
    try {
      cube.units_.push_back(CubeUnit{std::move(id), GeoPoint(lat, lon)});
    } catch (const Error&) {
      corrupt("unit centroid out of range");
    }
  }

  auto n_days = r.get<uint32_t>();
  r.check_count(n_days, 17);
  cube.days_.reserve(n_days);
  for (uint32_t i = 0; i < n_days; ++i) {
    DayPartition part;
    part.day = Day(r.get<int32_t>());
    if (!cube.days_.empty() && !(cube.days_.back().day < part.day)) corrupt("days not sorted");
    auto n_cells = r.get<uint64_t>();
    r.check_count(n_cells, 16);
    part.cells.resize(n_cells);
    for (auto& c : part.cells) {
      c.origin = r.get<uint32_t>();
      c.destination = r.get<uint32_t>();
      c.count = r.get<uint64_t>();
      if (c.origin >= n_units || c.destination >= n_units) corrupt("cell unit out of range");
      if (c.count == 0) corrupt("zero-count cell");
    }
    for (size_t k = 1; k < part.cells.size(); ++k) {
      const auto& a = part.cells[k - 1];
      const auto& b = part.cells[k];
      if (!(a.origin < b.origin || (a.origin == b.origin && a.destination < b.destination))) {
        corrupt("cells not sorted");
      }
    }
    if (r.get<uint8_t>() != 0) {
      r.check_count(n_cells, 40);
      part.coords.resize(n_cells);
      for (auto& s : part.coords) {
        s.o_lat = r.get<int64_t>();
        s.o_lon = r.get<int64_t>();
        s.d_lat = r.get<int64_t>();
        s.d_lon = r.get<int64_t>();
        s.weight = r.get<uint64_t>();
      }
    }
    auto n_stays = r.get<uint32_t>();
    r.check_count(n_stays, 12);
    part.stays.resize(n_stays);
    for (auto& s : part.stays) {
      s.unit = r.get<uint32_t>();
      s.count = r.get<uint64_t>();
      if (s.unit >= n_units) corrupt("stay unit out of range");
    }
    if (part.cells.empty()) corrupt("empty day partition");
    cube.days_.push_back(std::move(part));
  }
  if ((has_range != 0) != !cube.days_.empty()) corrupt("date range flag disagrees with data");
  if (has_range && (range.first != cube.days_.front().day || range.last != cube.days_.back().day)) {
    corrupt("date range disagrees with data");
  }

  r.expect(kMarginalTag, sizeof(kMarginalTag), "marginal block");
  auto n_marginals = r.get<uint64_t>();
  r.check_count(n_marginals, 32);
  cube.marginal_offsets_.assign(n_units + 1, 0);
  cube.marginals_.reserve(n_marginals);
  uint32_t prev_unit = 0;
  for (uint64_t i = 0; i < n_marginals; ++i) {
    auto unit = r.get<uint32_t>();
    Marginal m;
    m.day = Day(r.get<int32_t>());
    m.inflow = r.get<uint64_t>();
    m.outflow = r.get<uint64_t>();
    m.intraflow = r.get<uint64_t>();
    if (unit >= n_units || unit < prev_unit) corrupt("marginals out of order");
    if (unit == prev_unit && !cube.marginals_.empty() && i > 0 &&
        !(cube.marginals_.back().day < m.day)) {
      corrupt("marginal days out of order");
    }
    prev_unit = unit;
    ++cube.marginal_offsets_[unit + 1];
    cube.marginals_.push_back(m);
  }
  for (size_t u = 1; u < cube.marginal_offsets_.size(); ++u) {
    cube.marginal_offsets_[u] += cube.marginal_offsets_[u - 1];
  }
  r.expect(kEndTag, sizeof(kEndTag), "end marker");
  if (!r.done()) corrupt("trailing bytes");

  cube.index();
  return cube;
}

void write_cube_file(const OdtCube& cube, const std::string& path) {
  write_file(path, serialize_cube(cube));
}

OdtCube read_cube_file(const std::string& path) {
  try {
    return deserialize_cube(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kFormat) throw Error(ErrorCode::kFormat, path + ": " + e.what());
    throw;
  }
}

std::string cube_file_name(Dataset dataset, GeoLevel level) {
  return std::string(dataset_name(dataset)) + "_" + std::string(level_name(level)) + ".odtc";
}

}  // namespace odt
