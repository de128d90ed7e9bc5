#include "morseflow/cellset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "morseflow/csv.hpp"

namespace morseflow {

namespace {

void require_same_partition(const Partition& a, const Partition& b,
                            const char* op) {
  if (!(a == b)) {
    std::ostringstream err;
    err << op << ": operands live on different partitions";
    throw MisuseError(err.str());
  }
}

// Box distance between two cells of one partition, from index offsets:
// adjacent or overlapping cells are at distance 0.
double cell_box_distance(const Partition& p, int a, int b) {
  int ax = a, ay = 0, bx = b, by = 0;
  if (p.dim() == 2) {
    p.unflatten(a, &ax, &ay);
    p.unflatten(b, &bx, &by);
  }
  const int gx = std::max(0, std::abs(ax - bx) - 1);
  const int gy = std::max(0, std::abs(ay - by) - 1);
  const double dx = gx * p.width(0);
  const double dy = p.dim() == 2 ? gy * p.width(1) : 0.0;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Partition::Partition(StateBox b, int cells) : box(b), cells_per_axis(cells) {
  if (cells_per_axis < 2)
    throw ConfigError("Partition: cells_per_axis must be at least 2");
}

long Partition::cell_count() const {
  long n = cells_per_axis;
  return dim() == 2 ? n * n : n;
}

double Partition::cell_diameter() const {
  const double wx = width(0);
  if (dim() == 1) return wx;
  const double wy = width(1);
  return std::sqrt(wx * wx + wy * wy);
}

int Partition::axis_index(double x, int axis) const {
  const double lo = box.lower[axis];
  const double hi = box.upper[axis];
  const double slack = 1e-9 * box.extent(axis);
  if (x < lo - slack || x > hi + slack) {
    std::ostringstream err;
    err << "Partition::locate: coordinate " << x << " outside box [" << lo
        << ", " << hi << "]";
    throw DomainError(err.str());
  }
  int i = static_cast<int>(std::floor((x - lo) / width(axis)));
  if (i < 0) i = 0;
  if (i >= cells_per_axis) i = cells_per_axis - 1;
  return i;
}

int Partition::locate(const Point& p) const {
  const int ix = axis_index(p[0], 0);
  if (dim() == 1) return ix;
  return flatten(ix, axis_index(p[1], 1));
}

Point Partition::cell_center(int index) const {
  int ix = index, iy = 0;
  if (dim() == 2) unflatten(index, &ix, &iy);
  // (2i+1)/(2n) keeps centers of symmetric partitions exactly symmetric
  // (e.g. the middle cell of an odd split of [-1, 1] centers at 0.0).
  const auto center = [this](int i, int axis) {
    const double q = (2.0 * i + 1.0) / (2.0 * cells_per_axis);
    return box.lower[axis] + q * (box.upper[axis] - box.lower[axis]);
  };
  Point c{center(ix, 0), 0.0};
  if (dim() == 2) c[1] = center(iy, 1);
  return c;
}

void Partition::cell_bounds(int index, Point* lo, Point* hi) const {
  int ix = index, iy = 0;
  if (dim() == 2) unflatten(index, &ix, &iy);
  (*lo)[0] = box.lower[0] + ix * width(0);
  (*hi)[0] = box.lower[0] + (ix + 1) * width(0);
  (*lo)[1] = (*hi)[1] = 0.0;
  if (dim() == 2) {
    (*lo)[1] = box.lower[1] + iy * width(1);
    (*hi)[1] = box.lower[1] + (iy + 1) * width(1);
  }
}

void Partition::unflatten(int index, int* ix, int* iy) const {
  *ix = index % cells_per_axis;
  *iy = index / cells_per_axis;
}

CellSet::CellSet(Partition partition, std::vector<int> members)
    : partition_(std::move(partition)), members_(std::move(members)) {
  if (partition_.cells_per_axis == 0)
    throw MisuseError("CellSet: partition is not initialized");
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()),
                 members_.end());
  if (!members_.empty() &&
      (members_.front() < 0 || members_.back() >= partition_.cell_count()))
    throw MisuseError("CellSet: member index out of range");
}

CellSet CellSet::whole(const Partition& p) {
  std::vector<int> all(static_cast<std::size_t>(p.cell_count()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return CellSet(p, std::move(all));
}

CellSet CellSet::from_intervals(
    const Partition& p,
    const std::vector<std::pair<double, double>>& intervals) {
  if (p.dim() != 1)
    throw MisuseError("CellSet::from_intervals: partition is not 1-D");
  std::vector<std::pair<Point, Point>> boxes;
  boxes.reserve(intervals.size());
  for (const auto& iv : intervals)
    boxes.push_back({make_point(iv.first), make_point(iv.second)});
  return from_boxes(p, boxes);
}

CellSet CellSet::from_boxes(
    const Partition& p, const std::vector<std::pair<Point, Point>>& boxes) {
  std::vector<int> members;
  for (const auto& bx : boxes) {
    const Point& lo = bx.first;
    const Point& hi = bx.second;
    for (int axis = 0; axis < p.dim(); ++axis)
      if (hi[axis] < lo[axis])
        throw ConfigError("CellSet::from_boxes: box with hi < lo");
    // A cell joins iff its open interior meets the closed box: for a
    // degenerate box this is the containing cell; endpoints that coincide
    // with a cell edge do not leak into the neighbour cell.
    auto axis_range = [&p](double a, double b, int axis, int* first,
                           int* last) {
      const double w = p.width(axis);
      const double lo_ax = p.box.lower[axis];
      if (a == b) {
        *first = *last = p.axis_index(a, axis);
        return;
      }
      int f = static_cast<int>(std::floor((a - lo_ax) / w));
      // Cell f has interior (lo+f*w, lo+(f+1)*w); it meets [a,b] iff
      // lo+(f+1)*w > a, i.e. skip the cell whose right edge equals a.
      if (lo_ax + (f + 1) * w <= a) ++f;
      int l = static_cast<int>(std::floor((b - lo_ax) / w));
      if (lo_ax + l * w >= b) --l;  // left edge at b: interior misses [a,b]
      *first = std::max(0, f);
      *last = std::min(p.cells_per_axis - 1, l);
    };
    int fx, lx;
    axis_range(lo[0], hi[0], 0, &fx, &lx);
    if (p.dim() == 1) {
      for (int i = fx; i <= lx; ++i) members.push_back(i);
    } else {
      int fy, ly;
      axis_range(lo[1], hi[1], 1, &fy, &ly);
      for (int iy = fy; iy <= ly; ++iy)
        for (int ix = fx; ix <= lx; ++ix) members.push_back(p.flatten(ix, iy));
    }
  }
  return CellSet(p, std::move(members));
}

bool CellSet::contains(int index) const {
  return std::binary_search(members_.begin(), members_.end(), index);
}

CellSet set_union(const CellSet& a, const CellSet& b) {
  require_same_partition(a.partition(), b.partition(), "set_union");
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.members().begin(), a.members().end(), b.members().begin(),
                 b.members().end(), std::back_inserter(out));
  return CellSet(a.partition(), std::move(out));
}

CellSet set_intersect(const CellSet& a, const CellSet& b) {
  require_same_partition(a.partition(), b.partition(), "set_intersect");
  std::vector<int> out;
  std::set_intersection(a.members().begin(), a.members().end(),
                        b.members().begin(), b.members().end(),
                        std::back_inserter(out));
  return CellSet(a.partition(), std::move(out));
}

CellSet set_difference(const CellSet& a, const CellSet& b) {
  require_same_partition(a.partition(), b.partition(), "set_difference");
  std::vector<int> out;
  std::set_difference(a.members().begin(), a.members().end(),
                      b.members().begin(), b.members().end(),
                      std::back_inserter(out));
  return CellSet(a.partition(), std::move(out));
}

CellSet complement(const CellSet& a) {
  const long n = a.partition().cell_count();
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - a.size());
  auto it = a.members().begin();
  for (int i = 0; i < n; ++i) {
    if (it != a.members().end() && *it == i) {
      ++it;
      continue;
    }
    out.push_back(i);
  }
  return CellSet(a.partition(), std::move(out));
}

bool subset(const CellSet& a, const CellSet& b) {
  require_same_partition(a.partition(), b.partition(), "subset");
  return std::includes(b.members().begin(), b.members().end(),
                       a.members().begin(), a.members().end());
}

CellSet dilate(const CellSet& a, int k) {
  if (k < 0) throw MisuseError("dilate: negative radius");
  if (k == 0 || a.is_empty()) return a;
  const Partition& p = a.partition();
  std::vector<int> out;
  if (p.dim() == 1) {
    for (const auto& run : interval_runs(a)) {
      const int lo = std::max(0, run.first - k);
      const int hi = std::min(p.cells_per_axis - 1, run.second + k);
      for (int i = lo; i <= hi; ++i) out.push_back(i);
    }
  } else {
    for (int idx : a.members()) {
      int ix, iy;
      p.unflatten(idx, &ix, &iy);
      for (int dy = -k; dy <= k; ++dy) {
        const int jy = iy + dy;
        if (jy < 0 || jy >= p.cells_per_axis) continue;
        for (int dx = -k; dx <= k; ++dx) {
          const int jx = ix + dx;
          if (jx < 0 || jx >= p.cells_per_axis) continue;
          out.push_back(p.flatten(jx, jy));
        }
      }
    }
  }
  return CellSet(p, std::move(out));
}

CellSet erode(const CellSet& a, int k) {
  if (k < 0) throw MisuseError("erode: negative radius");
  if (k == 0) return a;
  // Interior relative to the box: out-of-box neighbours never disqualify.
  return complement(dilate(complement(a), k));
}

CellSet boundary_rim(const CellSet& a, int k) {
  return set_difference(a, erode(a, k));
}

bool within_cells(const CellSet& a, const CellSet& b, int k) {
  require_same_partition(a.partition(), b.partition(), "within_cells");
  if (a.is_empty()) return true;
  if (b.is_empty()) return false;
  return subset(a, dilate(b, k));
}

double dist_point_set(const Point& p, const CellSet& s) {
  if (s.is_empty())
    throw EmptySetError("dist_point_set: distance to the empty set");
  const Partition& part = s.partition();
  double best = std::numeric_limits<double>::infinity();
  Point lo, hi;
  for (int idx : s.members()) {
    part.cell_bounds(idx, &lo, &hi);
    double d2 = 0.0;
    for (int ax = 0; ax < part.dim(); ++ax) {
      const double g = std::max({0.0, lo[ax] - p[ax], p[ax] - hi[ax]});
      d2 += g * g;
    }
    if (d2 < best) best = d2;
    if (best == 0.0) break;
  }
  return std::sqrt(best);
}

double hausdorff_semi(const CellSet& a, const CellSet& b) {
  require_same_partition(a.partition(), b.partition(), "hausdorff_semi");
  if (a.is_empty()) return 0.0;  // sup over the empty set
  if (b.is_empty())
    throw EmptySetError("hausdorff_semi: distance to the empty set");
  const Partition& p = a.partition();
  double worst = 0.0;
  for (int ia : a.members()) {
    double best = std::numeric_limits<double>::infinity();
    for (int ib : b.members()) {
      const double d = cell_box_distance(p, ia, ib);
      if (d < best) best = d;
      if (best == 0.0) break;
    }
    if (best > worst) worst = best;
  }
  return worst;
}

double hausdorff(const CellSet& a, const CellSet& b) {
  return std::max(hausdorff_semi(a, b), hausdorff_semi(b, a));
}

double set_diameter(const CellSet& s) {
  const auto& m = s.members();
  if (m.size() < 2) return 0.0;
  const Partition& p = s.partition();
  if (p.dim() == 1) return cell_box_distance(p, m.front(), m.back());
  double worst = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j)
      worst = std::max(worst, cell_box_distance(p, m[i], m[j]));
  return worst;
}

std::vector<std::pair<int, int>> interval_runs(const CellSet& s) {
  if (s.partition().dim() != 1)
    throw MisuseError("interval_runs: partition is not 1-D");
  std::vector<std::pair<int, int>> runs;
  for (int idx : s.members()) {
    if (!runs.empty() && runs.back().second + 1 == idx)
      runs.back().second = idx;
    else
      runs.push_back({idx, idx});
  }
  return runs;
}

std::vector<std::pair<double, double>> to_intervals(const CellSet& s) {
  std::vector<std::pair<double, double>> out;
  Point lo, hi;
  for (const auto& run : interval_runs(s)) {
    s.partition().cell_bounds(run.first, &lo, &hi);
    const double a = lo[0];
    s.partition().cell_bounds(run.second, &lo, &hi);
    out.push_back({a, hi[0]});
  }
  return out;
}

namespace {

// Per-axis sample offsets within one cell.
std::vector<double> lattice_fractions(int samples_per_cell) {
  if (samples_per_cell < 1)
    throw MisuseError("image_under_flow: samples_per_cell must be >= 1");
  if (samples_per_cell == 1) return {0.5};
  std::vector<double> f(samples_per_cell);
  for (int j = 0; j < samples_per_cell; ++j)
    f[j] = static_cast<double>(j) / (samples_per_cell - 1);
  return f;
}

}  // namespace

CellSet image_under_flow(const CellSet& s, const CocycleSystem& sys, double t,
                         const NoisePath& path, int samples_per_cell) {
  const Partition& p = s.partition();
  if (!(p.box == sys.box()))
    throw MisuseError("image_under_flow: partition box differs from system box");
  if (s.is_empty()) return s;
  const auto fractions = lattice_fractions(samples_per_cell);
  std::vector<int> hits;
  Point lo, hi;

  if (p.dim() == 1) {
    for (const auto& run : interval_runs(s)) {
      int min_hit = static_cast<int>(p.cell_count()), max_hit = -1;
      for (int idx = run.first; idx <= run.second; ++idx) {
        p.cell_bounds(idx, &lo, &hi);
        for (double f : fractions) {
          const Point y =
              sys.flow(t, path, make_point(lo[0] + f * (hi[0] - lo[0])));
          const int cell = p.locate(y);
          min_hit = std::min(min_hit, cell);
          max_hit = std::max(max_hit, cell);
        }
      }
      // Monotone 1-D map: the run's image covers every index in between.
      for (int i = min_hit; i <= max_hit; ++i) hits.push_back(i);
    }
  } else {
    for (int idx : s.members()) {
      p.cell_bounds(idx, &lo, &hi);
      for (double fx : fractions)
        for (double fy : fractions) {
          const Point y = sys.flow(
              t, path,
              make_point(lo[0] + fx * (hi[0] - lo[0]),
                         lo[1] + fy * (hi[1] - lo[1])));
          hits.push_back(p.locate(y));
        }
    }
  }
  return dilate(CellSet(p, std::move(hits)), 1);
}

void export_cells_csv(const CellSet& s, const std::string& path) {
  const Partition& p = s.partition();
  std::vector<std::string> header{"cell_index", "center_x"};
  if (p.dim() == 2) header.push_back("center_y");
  header.push_back("member");
  CsvWriter csv(path, header);
  for (long i = 0; i < p.cell_count(); ++i) {
    const Point c = p.cell_center(static_cast<int>(i));
    std::vector<std::string> row{std::to_string(i), fmt_real(c[0])};
    if (p.dim() == 2) row.push_back(fmt_real(c[1]));
    row.push_back(s.contains(static_cast<int>(i)) ? "1" : "0");
    csv.write_row(row);
  }
}

SetRule SetRule::constant(CellSet value, std::string name) {
  SetRule r;
  r.name_ = std::move(name);
  r.partition_ = value.partition();
  r.fn_ = [set = std::move(value)](const NoisePath&) { return set; };
  return r;
}

SetRule SetRule::whole(const Partition& p) {
  return constant(CellSet::whole(p), "whole-box");
}

SetRule SetRule::empty(const Partition& p) {
  return constant(CellSet::empty(p), "empty");
}

SetRule SetRule::intervals(const Partition& p,
                           std::vector<std::pair<double, double>> intervals,
                           std::string name) {
  return constant(CellSet::from_intervals(p, intervals), std::move(name));
}

SetRule SetRule::computed(std::string name, Partition p,
                          std::function<CellSet(const NoisePath&)> fn,
                          bool memoize) {
  SetRule r;
  r.name_ = std::move(name);
  r.partition_ = p;
  r.fn_ = std::move(fn);
  if (memoize) r.memo_ = std::make_shared<Memo>();
  return r;
}

CellSet SetRule::operator()(const NoisePath& path) const {
  if (!fn_) throw MisuseError("SetRule: evaluating an empty rule");
  if (memo_) {
    const std::pair<NoisePath::RealizationKey, double> key{
        path.realization_id(), path.shift_offset()};
    {
      std::lock_guard<std::mutex> lock(memo_->mutex);
      auto it = memo_->table.find(key);
      if (it != memo_->table.end()) return it->second;
    }
    CellSet result = fn_(path);
    std::lock_guard<std::mutex> lock(memo_->mutex);
    return memo_->table.emplace(key, std::move(result)).first->second;
  }
  return fn_(path);
}

RandomSet materialize(const SetRule& rule, const TimeGrid& grid,
                      std::span<const std::uint64_t> seeds) {
  RandomSet out;
  out.rule_name = rule.name();
  out.realizations.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    CellSet cells = rule(sample_wiener(grid, seed));
    if (!out.realizations.empty() &&
        !(cells.partition() == out.realizations.front().second.partition()))
      throw MisuseError("materialize: rule changed partitions across seeds");
    out.realizations.push_back({seed, std::move(cells)});
  }
  return out;
}

}  // namespace morseflow
