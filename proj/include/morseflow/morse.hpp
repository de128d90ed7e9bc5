#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "morseflow/cellset.hpp"
#include "morseflow/cocycle.hpp"
#include "morseflow/errors.hpp"
#include "morseflow/lyapunov.hpp"
#include "morseflow/noise.hpp"
#include "morseflow/pullback.hpp"
#include "morseflow/rational.hpp"

namespace morseflow {

// Knobs for the basin sweep behind repeller construction.
struct BasinParams {
  double t_max = 20.0;
  double t_step = 0.5;
  int samples_per_cell = 5;
};

// Strictly nested inner attractors A_1 c ... c A_{n-1} with their fundamental
// neighborhoods. The trivial ends (the empty set below, the whole box above)
// are implicit, so levels() == n is the number of Morse sets produced. A
// filtration with no inner attractors is legal and yields the trivial
// one-level decomposition on its partition.
struct Filtration {
  Partition partition;
  std::vector<SetRule> attractors;     // A_1..A_{n-1}
  std::vector<SetRule> neighborhoods;  // N_1..N_{n-1}

  int levels() const { return static_cast<int>(attractors.size()) + 1; }
  void validate() const;  // shape and partition agreement only
};

// Basin-complement repeller rule R(omega) = X \ basin_estimate(A, N, omega),
// memoized per (path realization, shift).
SetRule repeller_of(const SetRule& A, const SetRule& N,
                    const CocycleSystem& sys, const BasinParams& params);

// Duality cross-check of a repeller rule against the pullback alpha-limit of
// complement(erode(N,1)). Disagreement signals under-resolution; it is
// reported, never thrown.
struct RepellerCheckRow {
  std::uint64_t seed = 0;
  double discrepancy = 0.0;  // two-sided Hausdorff, state units
  bool consistent = false;   // within two cells both ways, limit converged
};
struct RepellerCheckReport {
  std::vector<RepellerCheckRow> rows;
  double pass_fraction = 0.0;
  bool consistent(double threshold = 0.95) const {
    return pass_fraction >= threshold;
  }
};
RepellerCheckReport cross_check_repeller(const SetRule& R, const SetRule& N,
                                         const CocycleSystem& sys,
                                         const TimeGrid& grid,
                                         std::span<const std::uint64_t> seeds,
                                         const PullbackSchedule& sched);

struct MorseDecomposition {
  std::vector<SetRule> morse_sets;  // M_1..M_n, M_i = A_i intersect R_{i-1}
  std::vector<SetRule> repellers;   // R_0..R_n; R_0 = X, R_n = empty
  std::vector<Rational> plateaus;   // alpha_i = 1 - 3^{-i}, exact
  int levels() const { return static_cast<int>(morse_sets.size()); }
};

struct DecompositionSeedRow {
  std::uint64_t seed = 0;
  bool disjoint = false;    // pairwise cell-disjoint Morse sets
  bool grid_slack = false;  // overlaps confined to both sets' boundary layers
  bool invariant = false;   // every M_i passes the two-image containment
  bool pass = false;
  std::vector<CellSet> morse_cells;  // materialized M_i(omega)
};

struct DecompositionReport {
  MorseDecomposition decomposition;
  std::vector<DecompositionSeedRow> rows;
  double pass_fraction = 0.0;
};

// Derives repellers from the filtration, forms M_i = A_i intersect R_{i-1},
// and validates per seed. Nesting must be strict by at least one full cell on
// every seed; a violation rejects the filtration (ConfigError naming the seed
// and witness cells). Disjointness (exact, or flagged one-cell grid slack on
// shared boundary layers) and invariance of each M_i — the shifted cover must
// sit inside the forward image of the time-zero cover and vice versa with the
// backward image, two-cell tolerance — are reported per seed, not thrown.
DecompositionReport build_decomposition(const Filtration& f,
                                        const CocycleSystem& sys,
                                        const TimeGrid& grid,
                                        std::span<const std::uint64_t> seeds,
                                        const BasinParams& params,
                                        std::span<const double> t_checks);

// Per-seed comparison of union(M_i) against intersect(A_i union R_i), the two
// cell-set sides of the decomposition identity.
struct UnionIdentityReport {
  std::vector<double> per_seed;    // two-sided Hausdorff, state units
  double max_discrepancy = 0.0;
  double pass_fraction = 0.0;      // seeds within two cells both ways
};
UnionIdentityReport morse_union_identity_check(
    const MorseDecomposition& d, const Filtration& f, const TimeGrid& grid,
    std::span<const std::uint64_t> seeds);

// Rebuilds the decomposition from the sub-filtration at keep_indices
// (1-based, strictly increasing; empty keeps nothing and yields the trivial
// {X}). Validates that the original Morse sets land inside the coarsened ones
// within one cell per seed.
struct CoarsenReport {
  DecompositionReport coarse;
  std::vector<double> union_gap;  // per seed: how far union M(d) escapes
  double pass_fraction = 0.0;     // seeds with containment within one cell
};
CoarsenReport coarsen(const MorseDecomposition& d, const Filtration& f,
                      std::span<const int> keep_indices,
                      const CocycleSystem& sys, const TimeGrid& grid,
                      std::span<const std::uint64_t> seeds,
                      const BasinParams& params,
                      std::span<const double> t_checks);

// A Lyapunov field evaluatable at (realization, point).
using LyapunovField = std::function<LyapEval(const NoisePath&, const Point&)>;

struct LyapunovWitness {
  std::uint64_t seed = 0;
  int cell = -1;      // cell index of the sampled point
  double t = 0.0;     // orbit time of the non-decrease
  double L_before = 0.0;
  double L_after = 0.0;
};

struct LyapunovCheckParams {
  double tol_const = 1e-9;  // allowed L spread across each candidate set
  double t_step = 0.5;      // orbit sampling step for the decrease condition
  double t_max = 2.0;       // orbit horizon for the decrease condition
  int max_cells = 512;      // stride cap on off-candidate cells per seed
  int max_witnesses_per_seed = 4;
  std::vector<double> invariance_t_checks{4.0};
};

// Certificate that a candidate family of sets is consistent with a Morse
// decomposition under the supplied Lyapunov field. Checks, per seed panel:
// candidates pairwise disjoint and invariant (precondition), L constant on
// each candidate set (constancy), the constants strictly increasing
// (ordering), and L strictly decreasing along orbits started at every
// off-candidate cell center (decrease; censored evaluations are skipped and
// counted). Failures are findings with witnesses, never errors.
struct LyapunovCertificate {
  bool precondition_ok = false;
  bool constancy_ok = false;
  double max_spread = 0.0;
  std::vector<double> plateau_values;  // per candidate set
  bool ordering_ok = false;
  bool decrease_ok = false;
  std::size_t decrease_checked = 0;
  std::size_t censored_skipped = 0;
  std::vector<LyapunovWitness> violations;
  bool consistent() const {
    return precondition_ok && constancy_ok && ordering_ok && decrease_ok;
  }
};

LyapunovCertificate verify_by_lyapunov(std::span<const SetRule> candidates,
                                       const LyapunovField& L,
                                       const CocycleSystem& sys,
                                       const TimeGrid& grid,
                                       std::span<const std::uint64_t> seeds,
                                       const LyapunovCheckParams& params);

}  // namespace morseflow
