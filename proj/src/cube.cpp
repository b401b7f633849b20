#include "odt/cube.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "odt/error.hpp"

namespace odt {

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::kInflow: return "inflow";
    case Direction::kOutflow: return "outflow";
    case Direction::kInAndOut: return "in_and_out";
    case Direction::kIntraflow: return "intraflow";
  }
  return "unknown";
}

Direction parse_direction(std::string_view name) {
  for (auto d : {Direction::kInflow, Direction::kOutflow, Direction::kInAndOut,
                 Direction::kIntraflow}) {
    if (direction_name(d) == name) return d;
  }
  throw Error(ErrorCode::kInvalidInput, "unknown direction '" + std::string(name) + "'");
}

int64_t quantize_degrees(double deg) { return std::llround(deg * kCoordScale); }

void check_period(const Period& period) {
  if (period.last < period.first) {
    throw Error(ErrorCode::kInvalidPeriod, "period end " + format_day(period.last) +
                                               " precedes start " + format_day(period.first));
  }
}

// ---- DayPartition ----------------------------------------------------------

std::pair<size_t, size_t> DayPartition::origin_range(uint32_t origin) const {
  auto lo = std::lower_bound(cells.begin(), cells.end(), origin,
                             [](const Cell& c, uint32_t o) { return c.origin < o; });
  auto hi = std::upper_bound(lo, cells.end(), origin,
                             [](uint32_t o, const Cell& c) { return o < c.origin; });
  return {static_cast<size_t>(lo - cells.begin()), static_cast<size_t>(hi - cells.begin())};
}

std::pair<size_t, size_t> DayPartition::destination_range(uint32_t destination) const {
  auto key = [this](uint32_t idx) { return cells[idx].destination; };
  auto lo = std::lower_bound(by_destination.begin(), by_destination.end(), destination,
                             [&](uint32_t idx, uint32_t d) { return key(idx) < d; });
  auto hi = std::upper_bound(lo, by_destination.end(), destination,
                             [&](uint32_t d, uint32_t idx) { return d < key(idx); });
  return {static_cast<size_t>(lo - by_destination.begin()),
          static_cast<size_t>(hi - by_destination.begin())};
}

uint64_t DayPartition::stay_of(uint32_t unit) const {
  auto it = std::lower_bound(stays.begin(), stays.end(), unit,
                             [](const Stay& s, uint32_t u) { return s.unit < u; });
  return it != stays.end() && it->unit == unit ? it->count : 0;
}

namespace {

void index_destinations(DayPartition& part, size_t unit_count) {
  // Counting sort by destination; cells are already ordered by origin, so
  // each destination bucket comes out ordered by origin as well.
  std::vector<uint32_t> offsets(unit_count + 1, 0);
  for (const auto& c : part.cells) ++offsets[c.destination + 1];
  for (size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
  part.by_destination.assign(part.cells.size(), 0);
  for (uint32_t i = 0; i < part.cells.size(); ++i) {
    part.by_destination[offsets[part.cells[i].destination]++] = i;
  }
}

}  // namespace

// ---- OdtCube ---------------------------------------------------------------

OdtCube::OdtCube(Dataset dataset, GeoLevel level, std::vector<CubeUnit> units,
                 std::vector<DayPartition> days, BuildReport report)
    : dataset_(dataset),
      level_(level),
      units_(std::move(units)),
      days_(std::move(days)),
      report_(report) {
  index();
  auto per_unit = compute_marginals(units_.size(), days_);
  marginal_offsets_.assign(units_.size() + 1, 0);
  for (size_t u = 0; u < per_unit.size(); ++u) {
    marginal_offsets_[u + 1] = marginal_offsets_[u] + static_cast<uint32_t>(per_unit[u].size());
  }
  marginals_.reserve(marginal_offsets_.back());
  for (auto& v : per_unit) marginals_.insert(marginals_.end(), v.begin(), v.end());
}

void OdtCube::index() {
  unit_lookup_.clear();
  unit_lookup_.reserve(units_.size());
  for (uint32_t i = 0; i < units_.size(); ++i) unit_lookup_.emplace(units_[i].id, i);
  for (auto& part : days_) {
    if (part.by_destination.size() != part.cells.size()) index_destinations(part, units_.size());
  }
}

std::vector<std::vector<Marginal>> OdtCube::compute_marginals(
    size_t unit_count, const std::vector<DayPartition>& days) {
  std::vector<std::vector<Marginal>> per_unit(unit_count);
  std::vector<Marginal> scratch(unit_count);
  std::vector<uint8_t> touched_flag(unit_count, 0);
  std::vector<uint32_t> touched;
  for (const auto& part : days) {
    touched.clear();
    auto touch = [&](uint32_t u) -> Marginal& {
      if (!touched_flag[u]) {
        touched_flag[u] = 1;
        touched.push_back(u);
        scratch[u] = Marginal{part.day, 0, 0, 0};
      }
      return scratch[u];
    };
    for (const auto& c : part.cells) {
      if (c.origin != c.destination) {
        touch(c.origin).outflow += c.count;
        touch(c.destination).inflow += c.count;
      } else {
        uint64_t stay = part.stay_of(c.origin);
        touch(c.origin).intraflow += c.count - std::min(stay, c.count);
      }
    }
    std::sort(touched.begin(), touched.end());
    for (uint32_t u : touched) {
      touched_flag[u] = 0;
      const Marginal& m = scratch[u];
      if (m.inflow != 0 || m.outflow != 0 || m.intraflow != 0) per_unit[u].push_back(m);
    }
  }
  return per_unit;
}

std::optional<Period> OdtCube::date_range() const {
  if (days_.empty()) return std::nullopt;
  return Period{days_.front().day, days_.back().day};
}

std::optional<uint32_t> OdtCube::find_unit(std::string_view id) const {
  auto it = unit_lookup_.find(std::string(id));
  if (it == unit_lookup_.end()) return std::nullopt;
  return it->second;
}

uint32_t OdtCube::unit_index(std::string_view id) const {
  if (auto idx = find_unit(id)) return *idx;
  throw Error(ErrorCode::kUnknownUnit, "unknown " + std::string(level_name(level_)) + " unit '" +
                                           std::string(id) + "'");
}

std::span<const DayPartition> OdtCube::days_in(const Period& period) const {
  auto lo = std::lower_bound(days_.begin(), days_.end(), period.first,
                             [](const DayPartition& p, Day d) { return p.day < d; });
  auto hi = std::upper_bound(lo, days_.end(), period.last,
                             [](Day d, const DayPartition& p) { return d < p.day; });
  return {days_.data() + (lo - days_.begin()), static_cast<size_t>(hi - lo)};
}

std::span<const Marginal> OdtCube::marginals(uint32_t unit) const {
  if (unit + 1 >= marginal_offsets_.size()) return {};
  return {marginals_.data() + marginal_offsets_[unit],
          marginal_offsets_[unit + 1] - marginal_offsets_[unit]};
}

Marginal* OdtCube::mutable_marginal(uint32_t unit, Day day) {
  if (unit + 1 >= marginal_offsets_.size()) return nullptr;
  for (uint32_t i = marginal_offsets_[unit]; i < marginal_offsets_[unit + 1]; ++i) {
    if (marginals_[i].day == day) return &marginals_[i];
  }
  return nullptr;
}

uint64_t OdtCube::total_count() const {
  uint64_t total = 0;
  for (const auto& part : days_) {
    for (const auto& c : part.cells) total += c.count;
  }
  return total;
}

size_t OdtCube::cell_count() const {
  size_t n = 0;
  for (const auto& part : days_) n += part.cells.size();
  return n;
}

bool OdtCube::has_coords() const {
  return std::any_of(days_.begin(), days_.end(),
                     [](const DayPartition& p) { return !p.coords.empty(); });
}

// ---- CubeBuilder -----------------------------------------------------------

CubeBuilder::CubeBuilder(Dataset dataset, GeoLevel level, const UnitRegistry& reg)
    : dataset_(dataset), level_(level), reg_(&reg) {
  for (const auto& [id, unit] : reg.units(level)) units_.push_back(CubeUnit{id, unit.centroid});
  for (uint32_t i = 0; i < units_.size(); ++i) lookup_.emplace(units_[i].id, i);
}

CubeBuilder::CubeBuilder(Dataset dataset, GeoLevel level, std::vector<CubeUnit> units)
    : dataset_(dataset), level_(level), units_(std::move(units)) {
  std::sort(units_.begin(), units_.end(),
            [](const CubeUnit& a, const CubeUnit& b) { return a.id < b.id; });
  for (uint32_t i = 0; i < units_.size(); ++i) {
    if (!lookup_.emplace(units_[i].id, i).second) {
      throw Error(ErrorCode::kInvalidInput, "duplicate unit '" + units_[i].id + "'");
    }
  }
}

std::optional<uint32_t> CubeBuilder::unit_index(std::string_view id) const {
  auto it = lookup_.find(std::string(id));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

CubeBuilder::Resolved CubeBuilder::resolve_id(const std::string& id) {
  auto cached = id_cache_.find(id);
  if (cached != id_cache_.end()) return cached->second;

  Resolved r;
  if (auto lvl = reg_->level_of(id)) {
    if (const GeoUnit* u = reg_->find(id, *lvl)) r.finest = u->centroid;
    std::optional<std::string> target;
    if (*lvl == level_) {
      target = id;
    } else if (is_coarser(level_, *lvl)) {
      try {
        target = parent_unit(id, *lvl, level_, *reg_);
      } catch (const Error&) {
      }
    }
    if (target) r.unit = unit_index(*target);
  }
  id_cache_.emplace(id, r);
  return r;
}

CubeBuilder::Resolved CubeBuilder::resolve(const Endpoint& e) {
  if (const auto* id = std::get_if<std::string>(&e)) return resolve_id(*id);

  const GeoPoint& p = std::get<GeoPoint>(e);
  Resolved r;
  r.finest = p;
  if (reg_->has_geometry(level_)) {
    if (const GeoUnit* u = resolve_unit_ptr(p, level_, *reg_)) {
      r.unit = unit_index(u->id);
    } else {
      r.outside = true;
    }
    return r;
  }
  // No polygons at this level: resolve at the nearest finer level that has
  // them, then roll up.
  for (auto lv = static_cast<int>(level_) - 1; lv >= 0; --lv) {
    auto finer = static_cast<GeoLevel>(lv);
    if (!reg_->has_geometry(finer)) continue;
    const GeoUnit* u = resolve_unit_ptr(p, finer, *reg_);
    if (u == nullptr) {
      r.outside = true;
      return r;
    }
    try {
      r.unit = unit_index(parent_unit(u->id, finer, level_, *reg_));
    } catch (const Error&) {
    }
    return r;
  }
  throw Error(ErrorCode::kUnsupportedLevel, "no geometry at or below level " +
                                                std::string(level_name(level_)) +
                                                " to resolve point endpoints");
}

void CubeBuilder::add(const FlowRecord& record) {
  if (dataset_of(record.kind) != dataset_) {
    throw Error(ErrorCode::kMixedDataset, std::string(kind_name(record.kind)) +
                                              " record in a " + std::string(dataset_name(dataset_)) +
                                              " cube");
  }
  if (reg_ == nullptr) {
    throw Error(ErrorCode::kInvalidInput, "builder has no registry to resolve records");
  }
  if (record.count == 0) throw Error(ErrorCode::kInvalidInput, "flow record with zero count");
  ++report_.records_in;
  Resolved o = resolve(record.origin);
  Resolved d = resolve(record.destination);
  if (!o.unit || !d.unit) {
    if (o.outside || d.outside) ++report_.dropped_outside_geometry;
    else ++report_.dropped_unknown_unit;
    return;
  }
  ++report_.records_kept;
  bool same_finest = record.origin == record.destination;
  if (o.finest && d.finest) {
    CoordSum sum;
    auto c = static_cast<int64_t>(record.count);
    sum.o_lat = quantize_degrees(o.finest->lat()) * c;
    sum.o_lon = quantize_degrees(o.finest->lon()) * c;
    sum.d_lat = quantize_degrees(d.finest->lat()) * c;
    sum.d_lon = quantize_degrees(d.finest->lon()) * c;
    sum.weight = record.count;
    add_cell(*o.unit, *d.unit, record.date, record.count, same_finest, &sum);
  } else {
    add_cell(*o.unit, *d.unit, record.date, record.count, same_finest, nullptr);
  }
}

void CubeBuilder::add_cell(uint32_t origin, uint32_t destination, Day day, uint64_t count,
                           bool same_finest, const CoordSum* coords) {
  if (origin >= units_.size() || destination >= units_.size()) {
    throw Error(ErrorCode::kUnknownUnit, "cell references a unit index outside the unit table");
  }
  if (count == 0) return;
  pending_.push_back(Pending{day.value, origin, destination, count});
  if (coords != nullptr) pending_coords_.push_back(PendingCoord{day.value, origin, destination, *coords});
  if (same_finest) {
    if (origin != destination) {
      throw Error(ErrorCode::kInvalidInput, "coinciding endpoints resolved to different units");
    }
    pending_stays_.push_back(PendingStay{day.value, origin, count});
    report_.stays += count;
  }
}

OdtCube CubeBuilder::finish() && {
  auto key_less = [](const auto& a, const auto& b) {
    if (a.day != b.day) return a.day < b.day;
    if (a.origin != b.origin) return a.origin < b.origin;
    return a.destination < b.destination;
  };
  std::sort(pending_.begin(), pending_.end(), key_less);
  std::sort(pending_coords_.begin(), pending_coords_.end(), key_less);
  std::sort(pending_stays_.begin(), pending_stays_.end(), [](const auto& a, const auto& b) {
    return a.day != b.day ? a.day < b.day : a.unit < b.unit;
  });

  std::vector<DayPartition> days;
  for (size_t i = 0; i < pending_.size();) {
    DayPartition part;
    part.day = Day(pending_[i].day);
    size_t j = i;
    while (j < pending_.size() && pending_[j].day == pending_[i].day) {
      const auto& p = pending_[j];
      if (!part.cells.empty() && part.cells.back().origin == p.origin &&
          part.cells.back().destination == p.destination) {
        part.cells.back().count += p.count;
      } else {
        part.cells.push_back(Cell{p.origin, p.destination, p.count});
      }
      ++j;
    }
    part.cells.shrink_to_fit();
    days.push_back(std::move(part));
    i = j;
  }
  std::vector<Pending>().swap(pending_);

  // Attach coordinate sums; both lists are sorted by (day, origin, destination).
  size_t di = 0;
  for (size_t i = 0; i < pending_coords_.size(); ++i) {
    const auto& pc = pending_coords_[i];
    while (days[di].day.value != pc.day) ++di;
    auto& part = days[di];
    if (part.coords.empty()) part.coords.assign(part.cells.size(), CoordSum{});
    auto it = std::lower_bound(part.cells.begin(), part.cells.end(), pc,
                               [](const Cell& c, const PendingCoord& k) {
                                 return c.origin != k.origin ? c.origin < k.origin
                                                             : c.destination < k.destination;
                               });
    part.coords[static_cast<size_t>(it - part.cells.begin())] += pc.sum;
  }

  di = 0;
  for (const auto& ps : pending_stays_) {
    while (days[di].day.value != ps.day) ++di;
    auto& stays = days[di].stays;
    if (!stays.empty() && stays.back().unit == ps.unit) {
      stays.back().count += ps.count;
    } else {
      stays.push_back(Stay{ps.unit, ps.count});
    }
  }

  return OdtCube(dataset_, level_, std::move(units_), std::move(days), report_);
}

OdtCube build_cube(std::span<const FlowRecord> records, Dataset dataset, GeoLevel level,
                   const UnitRegistry& reg) {
  CubeBuilder builder(dataset, level, reg);
  for (const auto& r : records) builder.add(r);
  return std::move(builder).finish();
}

// ---- Queries ---------------------------------------------------------------

namespace {

uint64_t pair_key(uint32_t o, uint32_t d) { return (static_cast<uint64_t>(o) << 32) | d; }

std::vector<uint32_t> units_in_box(const OdtCube& cube, const BBox& box,
                                   std::vector<uint8_t>& flags) {
  flags.assign(cube.units().size(), 0);
  std::vector<uint32_t> inside;
  for (uint32_t i = 0; i < cube.units().size(); ++i) {
    if (box.contains(cube.units()[i].centroid)) {
      flags[i] = 1;
      inside.push_back(i);
    }
  }
  return inside;
}

size_t day_offset(const Period& period, Day d) {
  return static_cast<size_t>(d.value - period.first.value);
}

}  // namespace

FlowLineSet od_matrix(const OdtCube& cube, const Period& period, const std::optional<BBox>& aoi,
                      Direction direction, uint64_t threshold) {
  check_period(period);
  if (direction == Direction::kIntraflow) {
    throw Error(ErrorCode::kUnsupportedDirection, "flow lines support inflow, outflow, in_and_out");
  }
  const bool want_out = direction == Direction::kOutflow || direction == Direction::kInAndOut;
  const bool want_in = direction == Direction::kInflow || direction == Direction::kInAndOut;

  std::vector<uint8_t> flags;
  std::vector<uint32_t> inside;
  if (aoi) inside = units_in_box(cube, *aoi, flags);
  // Few units in the box: probe the indexes. Otherwise a flagged scan is cheaper.
  const bool probe = aoi && inside.size() * 8 < cube.units().size();

  std::vector<std::pair<uint64_t, uint64_t>> entries;
  for (const auto& part : cube.days_in(period)) {
    if (!aoi) {
      for (const auto& c : part.cells) entries.emplace_back(pair_key(c.origin, c.destination), c.count);
    } else if (probe) {
      if (want_out) {
        for (uint32_t u : inside) {
          auto [lo, hi] = part.origin_range(u);
          for (size_t i = lo; i < hi; ++i) {
            const auto& c = part.cells[i];
            entries.emplace_back(pair_key(c.origin, c.destination), c.count);
          }
        }
      }
      if (want_in) {
        for (uint32_t u : inside) {
          auto [lo, hi] = part.destination_range(u);
          for (size_t i = lo; i < hi; ++i) {
            const auto& c = part.cells[part.by_destination[i]];
            if (want_out && flags[c.origin]) continue;  // already admitted as outflow
            entries.emplace_back(pair_key(c.origin, c.destination), c.count);
          }
        }
      }
    } else {
      for (const auto& c : part.cells) {
        bool admitted = (want_out && flags[c.origin]) || (want_in && flags[c.destination]);
        if (admitted) entries.emplace_back(pair_key(c.origin, c.destination), c.count);
      }
    }
  }

  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  FlowLineSet out;
  const auto& units = cube.units();
  for (size_t i = 0; i < entries.size();) {
    uint64_t key = entries[i].first;
    uint64_t sum = 0;
    for (; i < entries.size() && entries[i].first == key; ++i) sum += entries[i].second;
    if (sum <= threshold) continue;
    const auto& o = units[key >> 32];
    const auto& d = units[key & 0xffffffffu];
    out.push_back(FlowLine{o.id, o.centroid, d.id, d.centroid, sum});
  }
  return out;
}

TimeMatrix dt_matrix(const OdtCube& cube, std::string_view origin_id, const Period& period) {
  check_period(period);
  uint32_t origin = cube.unit_index(origin_id);
  std::map<uint32_t, std::vector<uint64_t>> acc;
  const auto n = static_cast<size_t>(period.length());
  for (const auto& part : cube.days_in(period)) {
    auto [lo, hi] = part.origin_range(origin);
    for (size_t i = lo; i < hi; ++i) {
      auto& row = acc[part.cells[i].destination];
      if (row.empty()) row.assign(n, 0);
      row[day_offset(period, part.day)] += part.cells[i].count;
    }
  }
  TimeMatrix out;
  for (auto& [u, row] : acc) out.emplace(cube.units()[u].id, std::move(row));
  return out;
}

TimeMatrix ot_matrix(const OdtCube& cube, std::string_view destination_id, const Period& period) {
  check_period(period);
  uint32_t destination = cube.unit_index(destination_id);
  std::map<uint32_t, std::vector<uint64_t>> acc;
  const auto n = static_cast<size_t>(period.length());
  for (const auto& part : cube.days_in(period)) {
    auto [lo, hi] = part.destination_range(destination);
    for (size_t i = lo; i < hi; ++i) {
      const auto& c = part.cells[part.by_destination[i]];
      auto& row = acc[c.origin];
      if (row.empty()) row.assign(n, 0);
      row[day_offset(period, part.day)] += c.count;
    }
  }
  TimeMatrix out;
  for (auto& [u, row] : acc) out.emplace(cube.units()[u].id, std::move(row));
  return out;
}

ChoroplethVector choropleth(const OdtCube& cube, std::string_view unit_id, const Period& period,
                            Direction direction) {
  check_period(period);
  if (direction == Direction::kIntraflow) {
    throw Error(ErrorCode::kUnsupportedDirection, "choropleth does not support intraflow");
  }
  uint32_t unit = cube.unit_index(unit_id);
  std::map<uint32_t, uint64_t> acc;
  for (const auto& part : cube.days_in(period)) {
    if (direction != Direction::kOutflow) {
      auto [lo, hi] = part.destination_range(unit);
      for (size_t i = lo; i < hi; ++i) {
        const auto& c = part.cells[part.by_destination[i]];
        if (c.origin != unit) acc[c.origin] += c.count;
      }
    }
    if (direction != Direction::kInflow) {
      auto [lo, hi] = part.origin_range(unit);
      for (size_t i = lo; i < hi; ++i) {
        const auto& c = part.cells[i];
        if (c.destination != unit) acc[c.destination] += c.count;
      }
    }
  }
  ChoroplethVector out;
  out.selected_unit = std::string(unit_id);
  out.direction = direction;
  out.period = period;
  for (const auto& [u, v] : acc) out.values.emplace(cube.units()[u].id, v);
  return out;
}

TimeSeries daily_series(const OdtCube& cube, std::string_view unit_id, const Period& period,
                        Direction direction) {
  check_period(period);
  uint32_t unit = cube.unit_index(unit_id);
  TimeSeries out;
  out.unit_id = std::string(unit_id);
  out.direction = direction;
  out.period = period;
  out.counts.assign(static_cast<size_t>(period.length()), 0);

  auto entries = cube.marginals(unit);
  auto it = std::lower_bound(entries.begin(), entries.end(), period.first,
                             [](const Marginal& m, Day d) { return m.day < d; });
  for (; it != entries.end() && it->day <= period.last; ++it) {
    uint64_t v = 0;
    switch (direction) {
      case Direction::kInflow: v = it->inflow; break;
      case Direction::kOutflow: v = it->outflow; break;
      case Direction::kInAndOut: v = it->inflow + it->outflow; break;
      case Direction::kIntraflow: v = it->intraflow; break;
    }
    out.counts[day_offset(period, it->day)] = v;
  }
  return out;
}

AuditReport audit(const OdtCube& cube) {
  AuditReport report;
  const auto& units = cube.units();
  for (const auto& part : cube.days()) {
    for (const auto& s : part.stays) {
      uint64_t diagonal = 0;
      auto [lo, hi] = part.origin_range(s.unit);
      for (size_t i = lo; i < hi; ++i) {
        if (part.cells[i].destination == s.unit) diagonal = part.cells[i].count;
      }
      if (s.count > diagonal) {
        report.mismatches.push_back({units[s.unit].id, part.day, "stays", s.count, diagonal});
      }
    }
  }

  auto recomputed = OdtCube::compute_marginals(units.size(), cube.days());
  for (uint32_t u = 0; u < units.size(); ++u) {
    auto stored = cube.marginals(u);
    const auto& fresh = recomputed[u];
    size_t i = 0;
    size_t j = 0;
    auto emit = [&](Day day, const Marginal& s, const Marginal& f) {
      if (s.inflow != f.inflow) report.mismatches.push_back({units[u].id, day, "inflow", s.inflow, f.inflow});
      if (s.outflow != f.outflow) report.mismatches.push_back({units[u].id, day, "outflow", s.outflow, f.outflow});
      if (s.intraflow != f.intraflow) {
        report.mismatches.push_back({units[u].id, day, "intraflow", s.intraflow, f.intraflow});
      }
    };
    while (i < stored.size() || j < fresh.size()) {
      if (j == fresh.size() || (i < stored.size() && stored[i].day < fresh[j].day)) {
        emit(stored[i].day, stored[i], Marginal{stored[i].day, 0, 0, 0});
        ++i;
      } else if (i == stored.size() || fresh[j].day < stored[i].day) {
        emit(fresh[j].day, Marginal{fresh[j].day, 0, 0, 0}, fresh[j]);
        ++j;
      } else {
        emit(stored[i].day, stored[i], fresh[j]);
        ++i;
        ++j;
      }
    }
  }
  return report;
}

}  // namespace odt
