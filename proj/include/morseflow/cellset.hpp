#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "morseflow/cocycle.hpp"
#include "morseflow/errors.hpp"
#include "morseflow/noise.hpp"

namespace morseflow {

// Uniform grid over a state box; cells_per_axis >= 2, dim 1 or 2.
// Cells are half-open [lo, lo+w) except the last cell on an axis, which is
// closed so the box is covered exactly; indices are flattened x-major.
struct Partition {
  StateBox box;
  int cells_per_axis = 0;

  Partition() = default;
  Partition(StateBox b, int cells);

  int dim() const { return box.dim; }
  long cell_count() const;
  double width(int axis) const {
    return box.extent(axis) / cells_per_axis;
  }
  // Length of a cell's diagonal.
  double cell_diameter() const;

  // Cell containing p; indices clamp to the box edges, and points farther
  // than a hair outside the box are a DomainError.
  int locate(const Point& p) const;
  int axis_index(double x, int axis) const;

  Point cell_center(int index) const;
  void cell_bounds(int index, Point* lo, Point* hi) const;
  int flatten(int ix, int iy) const { return ix + cells_per_axis * iy; }
  void unflatten(int index, int* ix, int* iy) const;

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.box == b.box && a.cells_per_axis == b.cells_per_axis;
  }
};

// Finite set of partition cells, stored as sorted unique indices (the
// canonical form; equality is structural).
class CellSet {
 public:
  CellSet() = default;
  CellSet(Partition partition, std::vector<int> members);

  static CellSet empty(const Partition& p) { return CellSet(p, {}); }
  static CellSet whole(const Partition& p);
  // Cells whose open interior intersects any of the given closed intervals
  // (1-D). A degenerate [a, a] yields the cell(s) containing the point a.
  static CellSet from_intervals(
      const Partition& p,
      const std::vector<std::pair<double, double>>& intervals);
  // Same for axis-aligned boxes (works in 1-D and 2-D).
  static CellSet from_boxes(const Partition& p,
                            const std::vector<std::pair<Point, Point>>& boxes);

  const Partition& partition() const { return partition_; }
  const std::vector<int>& members() const { return members_; }
  bool is_empty() const { return members_.empty(); }
  std::size_t size() const { return members_.size(); }
  bool contains(int index) const;
  bool contains_point(const Point& p) const {
    return contains(partition_.locate(p));
  }

  friend bool operator==(const CellSet& a, const CellSet& b) {
    return a.partition_ == b.partition_ && a.members_ == b.members_;
  }

 private:
  Partition partition_;
  std::vector<int> members_;
};

// Set algebra (all operands must share one partition).
CellSet set_union(const CellSet& a, const CellSet& b);
CellSet set_intersect(const CellSet& a, const CellSet& b);
CellSet set_difference(const CellSet& a, const CellSet& b);
CellSet complement(const CellSet& a);
bool subset(const CellSet& a, const CellSet& b);

// Grid morphology with a Chebyshev-ball structuring element, clipped to the
// box. Interior is relative to the box: cells on the box boundary are
// interior-eligible, so erode(whole box, k) == whole box.
CellSet dilate(const CellSet& a, int k);
CellSet erode(const CellSet& a, int k);
// Cells of a that are not k-interior (default one-cell rim).
CellSet boundary_rim(const CellSet& a, int k = 1);

// True iff every cell of a lies within Chebyshev index distance k of a cell
// of b (i. e. a is contained in b dilated by k cells).
bool within_cells(const CellSet& a, const CellSet& b, int k);

// Exact Euclidean distance from a point to the nearest member cell, cells
// taken as solid boxes (0 if the point lies in a member cell).
double dist_point_set(const Point& p, const CellSet& s);

// One-sided Hausdorff distance sup_{a in A} dist(a, B) with cells taken as
// solid boxes, so the value is 0 exactly when A is within one cell of B;
// the semi-distance of the solid unions lies in [d, d + cell diameter].
double hausdorff_semi(const CellSet& a, const CellSet& b);
double hausdorff(const CellSet& a, const CellSet& b);

// Largest pairwise box-to-box distance among member cells.
double set_diameter(const CellSet& s);

// Maximal runs [first, last] of contiguous indices (1-D only).
std::vector<std::pair<int, int>> interval_runs(const CellSet& s);
// Solid intervals covered by the member cells (1-D only).
std::vector<std::pair<double, double>> to_intervals(const CellSet& s);

// Outer approximation of phi(t, omega) S on the grid: a deterministic sample
// lattice per cell (samples_per_cell per axis, endpoints included; one
// sample at the center if samples_per_cell == 1) is pushed through the flow,
// hit cells are collected and dilated by one cell. In 1-D each contiguous
// run additionally fills the whole index interval spanned by its sample
// images (cocycle maps are monotone there, so the image of an interval is an
// interval); 2-D images are purely sample-based.
CellSet image_under_flow(const CellSet& s, const CocycleSystem& sys, double t,
                         const NoisePath& path, int samples_per_cell);

// Full-partition CSV: cell_index, center coordinates, member flag.
void export_cells_csv(const CellSet& s, const std::string& path);

// A cell-set valued map over noise realizations: evaluates on (possibly
// shifted) paths, with an optional memo keyed by path realization + shift.
class SetRule {
 public:
  SetRule() = default;

  static SetRule constant(CellSet value, std::string name);
  static SetRule whole(const Partition& p);
  static SetRule empty(const Partition& p);
  static SetRule intervals(const Partition& p,
                           std::vector<std::pair<double, double>> intervals,
                           std::string name);
  static SetRule computed(std::string name, Partition p,
                          std::function<CellSet(const NoisePath&)> fn,
                          bool memoize = true);

  CellSet operator()(const NoisePath& path) const;
  const std::string& name() const { return name_; }
  const Partition& partition() const { return partition_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  struct Memo {
    std::mutex mutex;
    std::map<std::pair<NoisePath::RealizationKey, double>, CellSet> table;
  };

  std::string name_;
  Partition partition_;
  std::function<CellSet(const NoisePath&)> fn_;
  std::shared_ptr<Memo> memo_;
};

// Materialized realizations of a rule over a pinned seed panel, for reports
// and exports. Every realization shares the rule's partition.
struct RandomSet {
  std::string rule_name;
  std::vector<std::pair<std::uint64_t, CellSet>> realizations;
};

RandomSet materialize(const SetRule& rule, const TimeGrid& grid,
                      std::span<const std::uint64_t> seeds);

}  // namespace morseflow
