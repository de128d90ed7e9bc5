#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "morseflow/cellset.hpp"

using namespace morseflow;

namespace {
const Partition p200(StateBox(-1.0, 1.0), 200);
const Partition p10(StateBox(-1.0, 1.0), 10);

CellSet cells(const Partition& p, std::vector<int> idx) {
  return CellSet(p, std::move(idx));
}
}  // namespace

TEST_CASE("partition geometry") {
  CHECK(p200.cell_count() == 200);
  CHECK(p200.width(0) == doctest::Approx(0.01));
  CHECK(p200.locate(make_point(-1.0)) == 0);
  CHECK(p200.locate(make_point(1.0)) == 199);     // closed last cell
  CHECK(p200.locate(make_point(0.0)) == 100);     // half-open cells
  CHECK(p200.locate(make_point(-0.0000001)) == 99);
  CHECK_THROWS_AS(p200.locate(make_point(1.5)), DomainError);
  CHECK_THROWS_AS(Partition(StateBox(-1.0, 1.0), 1), ConfigError);

  Point lo, hi;
  p200.cell_bounds(100, &lo, &hi);
  CHECK(lo[0] == doctest::Approx(0.0));
  CHECK(hi[0] == doctest::Approx(0.01));
  CHECK(p200.cell_center(100)[0] == doctest::Approx(0.005));

  // 201 cells put 0 at the center of the middle cell
  const Partition p201(StateBox(-1.0, 1.0), 201);
  CHECK(p201.cell_center(100)[0] == 0.0);

  const Partition q(StateBox(make_point(0.0, 0.0), make_point(1.0, 2.0), 2), 4);
  CHECK(q.cell_count() == 16);
  CHECK(q.flatten(1, 2) == 9);
  int ix = 0, iy = 0;
  q.unflatten(9, &ix, &iy);
  CHECK(ix == 1);
  CHECK(iy == 2);
  CHECK(q.locate(make_point(0.3, 1.7)) == q.flatten(1, 3));
}

TEST_CASE("cells from intervals use open interiors") {
  // [0.5, 1]: the cell [0.49, 0.50) only touches at the closed endpoint
  const CellSet s = CellSet::from_intervals(p200, {{0.5, 1.0}});
  CHECK(s.size() == 50);
  CHECK(s.members().front() == 150);
  CHECK(s.members().back() == 199);

  // degenerate interval picks exactly the containing cell
  const CellSet pt = CellSet::from_intervals(p200, {{0.275, 0.275}});
  CHECK(pt.size() == 1);
  CHECK(pt.members().front() == p200.locate(make_point(0.275)));

  // endpoint on a cell edge: only the right cell has interior overlap
  const CellSet edge = CellSet::from_intervals(p200, {{0.0, 0.0}});
  CHECK(edge.size() == 1);
  CHECK(edge.members().front() == 100);

  const CellSet multi = CellSet::from_intervals(p200, {{-1.0, -0.9}, {0.9, 1.0}});
  CHECK(multi.size() == 20);
}

TEST_CASE("set algebra") {
  const CellSet a = cells(p10, {1, 2, 3, 7});
  const CellSet b = cells(p10, {3, 4, 7, 9});
  CHECK(set_union(a, b) == cells(p10, {1, 2, 3, 4, 7, 9}));
  CHECK(set_intersect(a, b) == cells(p10, {3, 7}));
  CHECK(set_difference(a, b) == cells(p10, {1, 2}));
  CHECK(complement(CellSet::empty(p10)) == CellSet::whole(p10));
  CHECK(set_union(a, complement(a)) == CellSet::whole(p10));
  CHECK(set_intersect(a, complement(a)).is_empty());
  CHECK(subset(set_intersect(a, b), a));
  CHECK(subset(a, set_union(a, b)));
  CHECK_FALSE(subset(a, b));
  CHECK(subset(CellSet::empty(p10), b));
}

TEST_CASE("dilate, erode and rims") {
  const CellSet s = cells(p10, {4, 5});
  CHECK(dilate(s, 1) == cells(p10, {3, 4, 5, 6}));
  CHECK(dilate(s, 0) == s);
  CHECK(erode(dilate(s, 1), 1) == s);

  // clipping at the box edge
  CHECK(dilate(cells(p10, {0}), 2) == cells(p10, {0, 1, 2}));

  // interior is relative to the box: edge cells are interior-eligible
  CHECK(erode(CellSet::whole(p10), 1) == CellSet::whole(p10));
  CHECK(erode(cells(p10, {0, 1, 2}), 1) == cells(p10, {0, 1}));
  CHECK(boundary_rim(cells(p10, {0, 1, 2}), 1) == cells(p10, {2}));
  CHECK(erode(cells(p10, {4}), 1).is_empty());

  SUBCASE("2-D chebyshev ball") {
    const Partition q(StateBox(make_point(-1, -1), make_point(1, 1), 2), 9);
    const CellSet pt = cells(q, {q.flatten(4, 4)});
    const CellSet ball = dilate(pt, 1);
    CHECK(ball.size() == 9);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        CHECK(ball.contains(q.flatten(4 + dx, 4 + dy)));
    CHECK(erode(ball, 1) == pt);
  }
}

TEST_CASE("distances between cell sets") {
  const double w = p200.width(0);
  const CellSet a = cells(p200, {0});
  const CellSet b = cells(p200, {5});
  // solid boxes [index gap minus one] apart
  CHECK(hausdorff_semi(a, b) == doctest::Approx(4.0 * w));
  CHECK(hausdorff_semi(b, a) == doctest::Approx(4.0 * w));
  CHECK(hausdorff(a, b) == doctest::Approx(4.0 * w));

  // adjacency means zero box distance
  CHECK(hausdorff_semi(cells(p200, {4}), cells(p200, {5})) == 0.0);
  CHECK(hausdorff_semi(cells(p200, {3, 4, 5}), cells(p200, {5})) ==
        doctest::Approx(w));

  CHECK(within_cells(cells(p200, {4, 5, 6}), cells(p200, {5}), 1));
  CHECK_FALSE(within_cells(cells(p200, {3}), cells(p200, {5}), 1));
  CHECK(within_cells(cells(p200, {3}), cells(p200, {5}), 2));

  // hausdorff_semi == 0 exactly when a is within one cell of b
  for (int k : {3, 4, 5, 6, 7}) {
    const bool zero = hausdorff_semi(cells(p200, {k}), b) == 0.0;
    CHECK(zero == within_cells(cells(p200, {k}), b, 1));
  }

  CHECK(dist_point_set(make_point(0.0), cells(p200, {100})) == 0.0);
  CHECK(dist_point_set(make_point(0.0), cells(p200, {102})) ==
        doctest::Approx(2.0 * w));
  CHECK(set_diameter(cells(p200, {0, 199})) == doctest::Approx(198.0 * w));
}

TEST_CASE("interval runs and solid intervals") {
  const CellSet s = cells(p200, {0, 1, 2, 50, 51, 199});
  const auto runs = interval_runs(s);
  REQUIRE(runs.size() == 3);
  CHECK(runs[0] == std::pair<int, int>{0, 2});
  CHECK(runs[1] == std::pair<int, int>{50, 51});
  CHECK(runs[2] == std::pair<int, int>{199, 199});
  const auto iv = to_intervals(s);
  REQUIRE(iv.size() == 3);
  CHECK(iv[0].first == doctest::Approx(-1.0));
  CHECK(iv[0].second == doctest::Approx(-0.97));
  CHECK(iv[2].second == doctest::Approx(1.0));
}

TEST_CASE("image under the flow covers the true image") {
  const TimeGrid g(-10.0, 10.0, 0.1);
  const CocycleSystem sys = CocycleSystem::exact_double_well();
  const NoisePath z = zero_path(g);
  const CellSet src = CellSet::from_intervals(p200, {{0.1, 0.2}});
  const CellSet img = image_under_flow(src, sys, 1.0, z, 5);

  // true image of the realized cell interval (the cells of [0.1, 0.2] extend
  // past 0.2 to the next cell edge)
  const auto span = to_intervals(src);
  REQUIRE(span.size() == 1);
  const double lo = sys.flow1(1.0, z, span[0].first);
  const double hi = sys.flow1(1.0, z, span[0].second);
  const CellSet true_cells = CellSet::from_intervals(p200, {{lo, hi}});
  CHECK(subset(true_cells, img));          // outer approximation
  CHECK(within_cells(img, true_cells, 2)); // but a tight one
  // 1-D images of intervals are single runs (monotone maps)
  CHECK(interval_runs(img).size() == 1);

  // t = 0 is the identity up to boundary samples plus the one-cell pad
  const CellSet img0 = image_under_flow(src, sys, 0.0, z, 5);
  CHECK(subset(src, img0));
  CHECK(within_cells(img0, src, 2));
}

TEST_CASE("set rules evaluate, name and memoize") {
  const TimeGrid g(-5.0, 5.0, 0.1);
  const NoisePath w = sample_wiener(g, 42);

  const SetRule c = SetRule::constant(cells(p10, {2, 3}), "pair");
  CHECK(c.name() == "pair");
  CHECK(c(w) == cells(p10, {2, 3}));
  CHECK(c(w.shifted(1.0)) == cells(p10, {2, 3}));

  const SetRule iv = SetRule::intervals(p200, {{0.5, 1.0}}, "right-half");
  CHECK(iv(w).size() == 50);

  std::atomic<int> calls{0};
  const SetRule counted = SetRule::computed(
      "counted", p10,
      [&calls](const NoisePath&) {
        ++calls;
        return cells(p10, {1});
      });
  (void)counted(w);
  (void)counted(w);
  CHECK(calls.load() == 1);  // memo hit on the same realization
  (void)counted(w.shifted(0.5));
  CHECK(calls.load() == 2);  // distinct shift is a distinct key
  // a separately sampled path with the same seed and grid is the same
  // realization by content, so the memo still applies
  const NoisePath w2 = sample_wiener(g, 42);
  (void)counted(w2);
  CHECK(calls.load() == 2);
  (void)counted(sample_wiener(g, 43));
  CHECK(calls.load() == 3);

  CHECK(SetRule::whole(p10)(w) == CellSet::whole(p10));
  CHECK(SetRule::empty(p10)(w).is_empty());
  CHECK_FALSE(SetRule().valid());
}

TEST_CASE("materialize pins a rule over a seed panel") {
  const TimeGrid g(-2.0, 2.0, 0.1);
  const SetRule rule = SetRule::intervals(p10, {{-1.0, 0.0}}, "left");
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const RandomSet rs = materialize(rule, g, seeds);
  CHECK(rs.rule_name == "left");
  REQUIRE(rs.realizations.size() == 3);
  for (const auto& [seed, set] : rs.realizations) {
    (void)seed;
    CHECK(set.size() == 5);
  }
}

TEST_CASE("csv export") {
  const std::string path = "/tmp/morseflow_cells_test.csv";
  export_cells_csv(cells(p10, {0, 9}), path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line.find("cell") != std::string::npos);
  int rows = 0, members = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.back() == '1') ++members;
  }
  CHECK(rows == 10);
  CHECK(members == 2);
  std::remove(path.c_str());
}

TEST_CASE("mixed partitions are rejected") {
  CHECK_THROWS_AS(set_union(cells(p10, {1}), cells(p200, {1})), MisuseError);
  CHECK_THROWS_AS(subset(cells(p10, {1}), cells(p200, {1})), MisuseError);
}
