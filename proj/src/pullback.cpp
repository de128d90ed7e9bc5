#include "morseflow/pullback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "morseflow/parallel.hpp"

namespace morseflow {

namespace {

double default_time_step(const CocycleSystem& sys, const NoisePath& path) {
  if (sys.kind() == CocycleSystem::Kind::exact_double_well)
    return path.grid().dt;
  return std::max(path.grid().dt, sys.step());
}

// Shared ladder walk for omega/alpha limits; `forward` selects the pullback
// direction: images phi(t, theta_{-t} omega) D(theta_{-t} omega) when true,
// phi(-t, theta_t omega) D(theta_t omega) when false.
LimitResult limit_ladder(const SetRule& D, const CocycleSystem& sys,
                         const NoisePath& path, const PullbackSchedule& sched,
                         bool forward) {
  sched.validate();
  const double dt = sched.time_step > 0.0 ? sched.time_step
                                          : default_time_step(sys, path);
  const auto& ladder = sched.t_ladder;
  const long steps = std::lround(sched.t_max() / dt);
  const double tol = 1e-9 * dt;

  const Partition& part = D.partition();
  std::vector<CellSet> rung_sets(ladder.size(), CellSet::empty(part));
  CellSet suffix = CellSet::empty(part);
  int rung = static_cast<int>(ladder.size()) - 1;

  for (long j = steps; j >= 0; --j) {
    const double t = static_cast<double>(j) * dt;
    const double shift = forward ? -t : t;
    const NoisePath shifted = path.shifted(shift);
    const CellSet img = image_under_flow(D(shifted), sys, forward ? t : -t,
                                         shifted, sched.samples_per_cell);
    suffix = set_union(suffix, img);
    while (rung >= 0 && t >= ladder[rung] - tol &&
           (j == 0 || static_cast<double>(j - 1) * dt < ladder[rung] - tol)) {
      rung_sets[rung] = suffix;
      --rung;
    }
  }

  LimitResult result;
  result.limit = CellSet::empty(part);
  CellSet running = CellSet::whole(part);
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    running = set_intersect(running, rung_sets[k]);
    LimitHistoryEntry entry;
    entry.T = ladder[k];
    entry.set = running;
    if (running.is_empty()) {
      // Resolution too coarse to carry mass along the pullback.
      entry.hausdorff_step = 0.0;
      result.history.push_back(entry);
      result.limit = running;
      result.converged = true;
      result.under_resolved = true;
      return result;
    }
    entry.hausdorff_step =
        k == 0 ? 0.0 : hausdorff(result.history.back().set, running);
    result.history.push_back(entry);
  }
  result.limit = running;
  result.converged = result.history.size() >= 2 &&
                     result.history.back().hausdorff_step <= sched.stop_tol;
  return result;
}

}  // namespace

void PullbackSchedule::validate() const {
  if (t_ladder.empty())
    throw ConfigError("PullbackSchedule: T ladder must be nonempty");
  double prev = 0.0;
  for (double t : t_ladder) {
    if (!(t > prev))
      throw ConfigError(
          "PullbackSchedule: T ladder must be strictly increasing and positive");
    prev = t;
  }
  if (samples_per_cell < 1)
    throw ConfigError("PullbackSchedule: samples_per_cell must be >= 1");
  if (stop_tol < 0.0)
    throw ConfigError("PullbackSchedule: stop_tol must be nonnegative");
  if (time_step < 0.0)
    throw ConfigError("PullbackSchedule: time_step must be nonnegative");
}

LimitResult omega_limit(const SetRule& D, const CocycleSystem& sys,
                        const NoisePath& path, const PullbackSchedule& sched) {
  return limit_ladder(D, sys, path, sched, true);
}

LimitResult alpha_limit(const SetRule& D, const CocycleSystem& sys,
                        const NoisePath& path, const PullbackSchedule& sched) {
  return limit_ladder(D, sys, path, sched, false);
}

CellSet invariant_hull(const SetRule& N, const CocycleSystem& sys,
                       const NoisePath& path, double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max >= 0.0))
    throw ConfigError("invariant_hull: need dt > 0 and t_max >= 0");
  CellSet hull = CellSet::empty(N.partition());
  const long steps = std::lround(t_max / dt);
  for (long j = 0; j <= steps; ++j) {
    const double t = static_cast<double>(j) * dt;
    const NoisePath shifted = path.shifted(-t);
    hull = set_union(hull, image_under_flow(N(shifted), sys, t, shifted, 5));
  }
  return hull;
}

namespace {

InvarianceCheck invariance_check(const SetRule& D, const CocycleSystem& sys,
                                 const NoisePath& path,
                                 std::span<const double> t_checks,
                                 int samples_per_cell, bool forward) {
  InvarianceCheck check;
  const CellSet d_now = D(path);
  for (double t : t_checks) {
    if (!(t > 0.0))
      throw MisuseError("invariance check: t_checks must be positive");
    const CellSet d_then = D(path.shifted(t));
    double violation = 0.0;
    if (forward) {
      // No mass may escape: image of D(omega) stays within one cell of
      // D(theta_t omega).
      if (d_now.is_empty()) continue;
      const CellSet img =
          image_under_flow(d_now, sys, t, path, samples_per_cell);
      violation = d_then.is_empty() ? std::numeric_limits<double>::infinity()
                                    : hausdorff_semi(img, d_then);
    } else {
      // No mass may be lost: D(theta_t omega) stays inside the (padded)
      // forward image of D(omega). Flowing the cover backward instead would
      // reject every attracting set at grid resolution.
      if (d_then.is_empty()) continue;
      if (d_now.is_empty()) {
        violation = std::numeric_limits<double>::infinity();
      } else {
        const CellSet img =
            image_under_flow(d_now, sys, t, path, samples_per_cell);
        violation = hausdorff_semi(d_then, img);
      }
    }
    if (violation > check.max_violation) {
      check.max_violation = violation;
      check.worst_t = t;
    }
    if (violation > 0.0) check.invariant = false;
  }
  return check;
}

}  // namespace

InvarianceCheck is_forward_invariant(const SetRule& D, const CocycleSystem& sys,
                                     const NoisePath& path,
                                     std::span<const double> t_checks,
                                     int samples_per_cell) {
  return invariance_check(D, sys, path, t_checks, samples_per_cell, true);
}

InvarianceCheck is_backward_invariant(const SetRule& D,
                                      const CocycleSystem& sys,
                                      const NoisePath& path,
                                      std::span<const double> t_checks,
                                      int samples_per_cell) {
  return invariance_check(D, sys, path, t_checks, samples_per_cell, false);
}

AttractorReport verify_attractor(const SetRule& A, const SetRule& N,
                                 const CocycleSystem& sys,
                                 const TimeGrid& grid,
                                 std::span<const std::uint64_t> seeds,
                                 const PullbackSchedule& sched,
                                 std::span<const double> invariance_t_checks) {
  AttractorReport report;
  report.rows = parallel_map<AttractorSeedRow>(
      seeds.size(), [&](std::size_t i) {
        const std::uint64_t seed = seeds[i];
        const NoisePath path = sample_wiener(grid, seed);
        const CellSet a0 = A(path);
        const CellSet n0 = N(path);
        if (!subset(a0, erode(n0, 1))) {
          std::ostringstream err;
          err << "verify_attractor: A is not inside the one-cell interior of N"
                 " for seed " << seed;
          throw MisuseError(err.str());
        }
        AttractorSeedRow row;
        row.seed = seed;
        const LimitResult lim = omega_limit(N, sys, path, sched);
        row.converged = lim.converged;
        row.under_resolved = lim.under_resolved;
        const bool contained = !lim.limit.is_empty() && !a0.is_empty() &&
                               within_cells(lim.limit, a0, 2) &&
                               within_cells(a0, lim.limit, 2);
        row.hausdorff_to_target =
            (lim.limit.is_empty() || a0.is_empty())
                ? std::numeric_limits<double>::infinity()
                : hausdorff(lim.limit, a0);
        // Invariance of A, both directions, two-cell tolerance: the forward
        // image keeps its one-cell padding, so allow one more cell of drift.
        bool invariant = true;
        for (double t : invariance_t_checks) {
          const CellSet a_then = A(path.shifted(t));
          const CellSet img =
              image_under_flow(a0, sys, t, path, sched.samples_per_cell);
          if (!subset(img, dilate(a_then, 2)) || !subset(a_then, img))
            invariant = false;
        }
        row.invariant = invariant;
        row.pass = row.converged && contained && invariant;
        return row;
      });
  std::size_t passes = 0;
  for (const auto& row : report.rows) passes += row.pass ? 1 : 0;
  report.pass_fraction =
      seeds.empty() ? 0.0
                    : static_cast<double>(passes) /
                          static_cast<double>(seeds.size());
  return report;
}

StrongNeighborhoodReport verify_strong_neighborhood(
    const SetRule& N, const SetRule& A, const CocycleSystem& sys,
    const TimeGrid& grid, std::span<const std::uint64_t> seeds,
    std::span<const double> t_checks, int samples_per_cell) {
  (void)A;  // context only; the strong property is about N alone
  StrongNeighborhoodReport report;
  const auto fractions_count = std::max(samples_per_cell, 1);
  std::size_t pass = 0;
  for (std::uint64_t seed : seeds) {
    const NoisePath path = sample_wiener(grid, seed);
    const InvarianceCheck inv =
        is_forward_invariant(N, sys, path, t_checks, samples_per_cell);
    if (!inv.invariant) {
      report.precondition_ok = false;
      continue;
    }
    const CellSet n0 = N(path);
    const CellSet rim = boundary_rim(n0, 1);
    if (rim.is_empty()) continue;  // nothing to probe: vacuously strong
    const Partition& part = n0.partition();
    Point lo, hi;
    for (int idx : rim.members()) {
      part.cell_bounds(idx, &lo, &hi);
      for (int jx = 0; jx < fractions_count; ++jx) {
        const double fx = fractions_count == 1
                              ? 0.5
                              : static_cast<double>(jx) / (fractions_count - 1);
        const int jy_count = part.dim() == 2 ? fractions_count : 1;
        for (int jy = 0; jy < jy_count; ++jy) {
          Point x = make_point(lo[0] + fx * (hi[0] - lo[0]));
          if (part.dim() == 2) {
            const double fy =
                fractions_count == 1
                    ? 0.5
                    : static_cast<double>(jy) / (fractions_count - 1);
            x[1] = lo[1] + fy * (hi[1] - lo[1]);
          }
          for (double t : t_checks) {
            const Point y = sys.flow(t, path, x);
            const CellSet inner = erode(N(path.shifted(t)), 1);
            ++report.probes;
            if (!inner.is_empty() && inner.contains_point(y))
              ++pass;
            else
              ++report.failures;
          }
        }
      }
    }
  }
  report.vacuous = report.probes == 0;
  report.pass_fraction =
      report.probes == 0
          ? 1.0
          : static_cast<double>(pass) / static_cast<double>(report.probes);
  return report;
}

CellSet basin_estimate(const SetRule& A, const SetRule& N,
                       const CocycleSystem& sys, const NoisePath& path,
                       double t_max, double t_step, int samples_per_cell) {
  (void)A;  // the basin is determined by N; A names the attractor in reports
  if (!(t_step > 0.0) || !(t_max >= 0.0))
    throw ConfigError("basin_estimate: need t_step > 0 and t_max >= 0");
  const Partition& part = N.partition();
  const long cells = part.cell_count();
  const auto fractions = [&] {
    std::vector<double> f;
    if (samples_per_cell <= 1) {
      f.push_back(0.5);
    } else {
      for (int j = 0; j < samples_per_cell; ++j)
        f.push_back(static_cast<double>(j) / (samples_per_cell - 1));
    }
    return f;
  }();

  // One orbit per sample point of every cell; cells are marked once all of
  // their samples have entered erode(N, 1) at some checked time.
  struct Sample {
    FlowOrbit orbit;
    int cell;
    bool entered = false;
  };
  std::vector<Sample> samples;
  std::vector<int> remaining(static_cast<std::size_t>(cells), 0);
  Point lo, hi;
  for (long c = 0; c < cells; ++c) {
    part.cell_bounds(static_cast<int>(c), &lo, &hi);
    for (double fx : fractions) {
      if (part.dim() == 1) {
        samples.push_back(
            {FlowOrbit(sys, path, make_point(lo[0] + fx * (hi[0] - lo[0]))),
             static_cast<int>(c)});
        ++remaining[static_cast<std::size_t>(c)];
      } else {
        for (double fy : fractions) {
          samples.push_back(
              {FlowOrbit(sys, path,
                         make_point(lo[0] + fx * (hi[0] - lo[0]),
                                    lo[1] + fy * (hi[1] - lo[1]))),
               static_cast<int>(c)});
          ++remaining[static_cast<std::size_t>(c)];
        }
      }
    }
  }

  const long steps = std::lround(t_max / t_step);
  std::size_t open = samples.size();
  for (long j = 0; j <= steps && open > 0; ++j) {
    const double t = static_cast<double>(j) * t_step;
    const CellSet inner = erode(N(path.shifted(t)), 1);
    if (inner.is_empty()) continue;
    for (auto& s : samples) {
      if (s.entered) continue;
      const Point y = s.orbit.advance_to(t);
      if (inner.contains(part.locate(y))) {
        s.entered = true;
        --remaining[static_cast<std::size_t>(s.cell)];
        --open;
      }
    }
  }

  std::vector<int> marked;
  for (long c = 0; c < cells; ++c)
    if (remaining[static_cast<std::size_t>(c)] == 0)
      marked.push_back(static_cast<int>(c));
  return CellSet(part, std::move(marked));
}

std::optional<double> uniform_entrance_time(const CellSet& K, const SetRule& N,
                                            const CocycleSystem& sys,
                                            const NoisePath& path,
                                            double t_max, double t_step,
                                            int samples_per_cell) {
  if (!(t_step > 0.0) || !(t_max >= 0.0))
    throw ConfigError("uniform_entrance_time: need t_step > 0 and t_max >= 0");
  const long steps = std::lround(t_max / t_step);
  std::vector<bool> contained(static_cast<std::size_t>(steps) + 1, false);
  for (long j = 0; j <= steps; ++j) {
    const double t = static_cast<double>(j) * t_step;
    const CellSet img = image_under_flow(K, sys, t, path, samples_per_cell);
    const CellSet inner = erode(N(path.shifted(t)), 1);
    contained[static_cast<std::size_t>(j)] =
        !inner.is_empty() && subset(img, inner);
  }
  // Smallest checked T with containment at every checked t >= T.
  long start = steps + 1;
  for (long j = steps; j >= 0; --j) {
    if (!contained[static_cast<std::size_t>(j)]) break;
    start = j;
  }
  if (start > steps) return std::nullopt;
  return static_cast<double>(start) * t_step;
}

}  // namespace morseflow
