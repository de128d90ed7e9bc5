#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morseflow/cellset.hpp"
#include "morseflow/cocycle.hpp"
#include "morseflow/noise.hpp"

namespace morseflow {

// Truncation controls for pullback limit sets: the union over t >= T is
// accumulated on a time grid up to the ladder maximum, one rung per ladder
// entry; convergence is declared when the Hausdorff step between successive
// rungs drops to stop_tol.
struct PullbackSchedule {
  std::vector<double> t_ladder;  // strictly increasing, > 0
  int samples_per_cell = 5;
  double stop_tol = 0.0;
  // Spacing of the time grid the unions are sampled on; 0 picks the noise
  // grid step (integrator kinds: the integrator step if larger).
  double time_step = 0.0;

  void validate() const;
  double t_max() const { return t_ladder.back(); }
};

struct LimitHistoryEntry {
  double T = 0.0;
  CellSet set;
  double hausdorff_step = 0.0;  // vs the previous rung (0 for the first)
};

struct LimitResult {
  CellSet limit;
  bool converged = false;
  // Set when an intermediate union came out empty (resolution too coarse to
  // carry mass along the pullback).
  bool under_resolved = false;
  std::vector<LimitHistoryEntry> history;
};

// Pullback omega-limit of the moving set D: the nested-in-T truncations of
//   cap_{T>=0} cl cup_{t>=T} phi(t, theta_{-t} omega) D(theta_{-t} omega),
// intersected cumulatively down the ladder.
LimitResult omega_limit(const SetRule& D, const CocycleSystem& sys,
                        const NoisePath& path, const PullbackSchedule& sched);

// Pullback alpha-limit: same ladder applied to backward images
// phi(-t, theta_t omega) D(theta_t omega).
LimitResult alpha_limit(const SetRule& D, const CocycleSystem& sys,
                        const NoisePath& path, const PullbackSchedule& sched);

// Forward-invariant hull of N at omega: the union of pullback images of N
// over t in {0, dt, ..., T_max} (each image carries its one-cell outer
// padding). Always contains N(omega).
CellSet invariant_hull(const SetRule& N, const CocycleSystem& sys,
                       const NoisePath& path, double t_max, double dt);

struct InvarianceCheck {
  bool invariant = true;
  double max_violation = 0.0;  // largest escape distance (state units)
  double worst_t = 0.0;
};

// Checks image_under_flow(D(omega), t) stays within one cell of
// D(theta_t omega) for each t in t_checks (forward invariance at grid
// resolution); reports the largest escape distance otherwise.
InvarianceCheck is_forward_invariant(const SetRule& D, const CocycleSystem& sys,
                                     const NoisePath& path,
                                     std::span<const double> t_checks,
                                     int samples_per_cell = 5);

// Backward counterpart: D(theta_t omega) must stay inside the forward image
// image_under_flow(D(omega), t) for each t in t_checks, i.e. no mass appears
// at time t that is unreachable from the time-0 set. (Flowing a one-cell
// cover of an attracting set backward explodes at grid resolution, so the
// containment is checked in this direction instead.)
InvarianceCheck is_backward_invariant(const SetRule& D,
                                      const CocycleSystem& sys,
                                      const NoisePath& path,
                                      std::span<const double> t_checks,
                                      int samples_per_cell = 5);

struct AttractorSeedRow {
  std::uint64_t seed = 0;
  bool converged = false;
  bool under_resolved = false;
  double hausdorff_to_target = 0.0;  // between omega-limit of N and A
  bool invariant = false;
  bool pass = false;
};

struct AttractorReport {
  std::vector<AttractorSeedRow> rows;
  double pass_fraction = 0.0;
  bool passed(double threshold = 0.95) const {
    return pass_fraction >= threshold;
  }
};

// Verifies the attractor-neighborhood pair (A, N) over a seed panel: per
// seed, A must sit inside erode(N,1) (precondition, MisuseError otherwise),
// the omega-limit of N must agree with A within two cells both ways, and A
// must be invariant (forward images within two cells of the shifted A, and
// the shifted A covered by the forward image).
AttractorReport verify_attractor(const SetRule& A, const SetRule& N,
                                 const CocycleSystem& sys,
                                 const TimeGrid& grid,
                                 std::span<const std::uint64_t> seeds,
                                 const PullbackSchedule& sched,
                                 std::span<const double> invariance_t_checks);

struct StrongNeighborhoodReport {
  bool precondition_ok = true;   // N forward invariant on every seed
  double pass_fraction = 0.0;    // fraction of (seed, sample, t) probes inside
  std::size_t probes = 0;
  std::size_t failures = 0;
  bool vacuous = false;  // N had no boundary rim to sample
};

// Checks that boundary-rim points of N(omega) flow strictly into the eroded
// interior of N(theta_t omega) for every t in t_checks.
StrongNeighborhoodReport verify_strong_neighborhood(
    const SetRule& N, const SetRule& A, const CocycleSystem& sys,
    const TimeGrid& grid, std::span<const std::uint64_t> seeds,
    std::span<const double> t_checks, int samples_per_cell = 5);

// Cells whose deterministic sample points ALL reach erode(N(theta_t omega),1)
// for some checked t <= T_max (checked on multiples of t_step; entrance is
// monotone for forward-invariant N, so coarse checking only delays marks).
CellSet basin_estimate(const SetRule& A, const SetRule& N,
                       const CocycleSystem& sys, const NoisePath& path,
                       double t_max, double t_step, int samples_per_cell = 5);

// Smallest checked T such that the flow image of K is inside erode(N,1) for
// every checked t >= T; +infinity (nullopt) if none.
std::optional<double> uniform_entrance_time(const CellSet& K, const SetRule& N,
                                            const CocycleSystem& sys,
                                            const NoisePath& path,
                                            double t_max, double t_step,
                                            int samples_per_cell = 5);

}  // namespace morseflow
