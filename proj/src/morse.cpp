#include "morseflow/morse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "morseflow/parallel.hpp"

namespace morseflow {

namespace {

// Invariance of a cover of an invariant set, two-image containment form: the
// shifted cover must lie inside the forward image of the time-zero cover, and
// the time-zero cover inside the backward image of the shifted one (two-cell
// tolerance on top of the images' own one-cell padding). Plain forward
// containment is structurally false for repelling covers, whose off-set
// points escape by order-one distances.
bool cover_invariant(const SetRule& M, const CocycleSystem& sys,
                     const NoisePath& path, std::span<const double> t_checks,
                     int samples_per_cell) {
  const CellSet m_now = M(path);
  if (m_now.is_empty()) return false;
  for (double t : t_checks) {
    const NoisePath shifted = path.shifted(t);
    const CellSet m_then = M(shifted);
    if (m_then.is_empty()) return false;
    const CellSet fwd =
        image_under_flow(m_now, sys, t, path, samples_per_cell);
    const CellSet bwd =
        image_under_flow(m_then, sys, -t, shifted, samples_per_cell);
    if (!within_cells(m_then, fwd, 2) || !within_cells(m_now, bwd, 2))
      return false;
  }
  return true;
}

std::string first_cells(const CellSet& s, std::size_t cap = 8) {
  std::ostringstream out;
  std::size_t shown = 0;
  for (int c : s.members()) {
    if (shown++ == cap) {
      out << " ...";
      break;
    }
    out << (shown == 1 ? "" : " ") << c;
  }
  return out.str();
}

// Nesting of the materialized inner attractors: strictly growing by at least
// one full cell, nonempty at the bottom, proper at the top. Violations reject
// the filtration.
void check_nesting(const std::vector<CellSet>& a_sets, const Partition& part,
                   std::uint64_t seed) {
  for (std::size_t i = 0; i < a_sets.size(); ++i) {
    std::ostringstream err;
    if (a_sets[i].is_empty()) {
      err << "build_decomposition: attractor " << i + 1 << " is empty at seed "
          << seed;
      throw ConfigError(err.str());
    }
    if (i > 0) {
      if (!subset(a_sets[i - 1], a_sets[i])) {
        const CellSet escape = set_difference(a_sets[i - 1], a_sets[i]);
        err << "build_decomposition: attractor " << i << " is not contained "
            << "in attractor " << i + 1 << " at seed " << seed
            << "; witness cells: " << first_cells(escape);
        throw ConfigError(err.str());
      }
      if (a_sets[i].size() == a_sets[i - 1].size()) {
        err << "build_decomposition: attractors " << i << " and " << i + 1
            << " coincide at seed " << seed << " (no full cell of growth)";
        throw ConfigError(err.str());
      }
    }
  }
  if (!a_sets.empty() &&
      a_sets.back().size() == static_cast<std::size_t>(part.cell_count())) {
    std::ostringstream err;
    err << "build_decomposition: top inner attractor already covers the box "
        << "at seed " << seed;
    throw ConfigError(err.str());
  }
}

}  // namespace

void Filtration::validate() const {
  if (partition.cells_per_axis < 2)
    throw ConfigError("Filtration: partition is not set");
  if (attractors.size() != neighborhoods.size())
    throw ConfigError(
        "Filtration: need exactly one neighborhood per inner attractor");
  for (const auto& a : attractors) {
    if (!a.valid()) throw ConfigError("Filtration: unbound attractor rule");
    if (!(a.partition() == partition))
      throw ConfigError("Filtration: attractor partition mismatch");
  }
  for (const auto& n : neighborhoods) {
    if (!n.valid()) throw ConfigError("Filtration: unbound neighborhood rule");
    if (!(n.partition() == partition))
      throw ConfigError("Filtration: neighborhood partition mismatch");
  }
}

SetRule repeller_of(const SetRule& A, const SetRule& N,
                    const CocycleSystem& sys, const BasinParams& params) {
  if (!A.valid() || !N.valid())
    throw ConfigError("repeller_of: unbound set rule");
  if (!(A.partition() == N.partition()))
    throw ConfigError("repeller_of: attractor and neighborhood partitions differ");
  if (!(params.t_max >= 0.0) || !(params.t_step > 0.0) ||
      params.samples_per_cell < 1)
    throw ConfigError("repeller_of: bad basin parameters");
  const std::string name = "complement-basin(" + A.name() + ")";
  return SetRule::computed(
      name, A.partition(), [A, N, sys, params](const NoisePath& path) {
        return complement(basin_estimate(A, N, sys, path, params.t_max,
                                         params.t_step,
                                         params.samples_per_cell));
      });
}

RepellerCheckReport cross_check_repeller(const SetRule& R, const SetRule& N,
                                         const CocycleSystem& sys,
                                         const TimeGrid& grid,
                                         std::span<const std::uint64_t> seeds,
                                         const PullbackSchedule& sched) {
  if (!R.valid() || !N.valid())
    throw ConfigError("cross_check_repeller: unbound set rule");
  if (!(R.partition() == N.partition()))
    throw ConfigError("cross_check_repeller: partitions differ");
  const SetRule source = SetRule::computed(
      "complement-interior(" + N.name() + ")", N.partition(),
      [N](const NoisePath& path) { return complement(erode(N(path), 1)); });

  RepellerCheckReport report;
  report.rows =
      parallel_map<RepellerCheckRow>(seeds.size(), [&](std::size_t i) {
        RepellerCheckRow row;
        row.seed = seeds[i];
        const NoisePath path = sample_wiener(grid, seeds[i]);
        const CellSet r = R(path);
        const LimitResult lim = alpha_limit(source, sys, path, sched);
        if (r.is_empty() && lim.limit.is_empty()) {
          row.discrepancy = 0.0;
          row.consistent = lim.converged;
        } else if (r.is_empty() || lim.limit.is_empty()) {
          row.discrepancy = std::numeric_limits<double>::infinity();
          row.consistent = false;
        } else {
          row.discrepancy = hausdorff(r, lim.limit);
          row.consistent = lim.converged && within_cells(r, lim.limit, 2) &&
                           within_cells(lim.limit, r, 2);
        }
        return row;
      });
  std::size_t ok = 0;
  for (const auto& row : report.rows) ok += row.consistent ? 1 : 0;
  report.pass_fraction =
      seeds.empty()
          ? 0.0
          : static_cast<double>(ok) / static_cast<double>(seeds.size());
  return report;
}

DecompositionReport build_decomposition(const Filtration& f,
                                        const CocycleSystem& sys,
                                        const TimeGrid& grid,
                                        std::span<const std::uint64_t> seeds,
                                        const BasinParams& params,
                                        std::span<const double> t_checks) {
  f.validate();
  const int n = f.levels();
  const Partition& part = f.partition;

  DecompositionReport report;
  MorseDecomposition& d = report.decomposition;

  d.repellers.push_back(SetRule::whole(part));  // R_0 = X
  for (int i = 1; i <= n - 1; ++i)
    d.repellers.push_back(repeller_of(f.attractors[static_cast<std::size_t>(
                                          i - 1)],
                                      f.neighborhoods[static_cast<std::size_t>(
                                          i - 1)],
                                      sys, params));
  d.repellers.push_back(SetRule::empty(part));  // R_n = empty

  for (int i = 1; i <= n; ++i) {
    const SetRule r_prev = d.repellers[static_cast<std::size_t>(i - 1)];
    const std::string name = "M" + std::to_string(i);
    if (i == n) {
      // A_n is the whole box, so M_n is just R_{n-1}.
      d.morse_sets.push_back(SetRule::computed(
          name, part,
          [r_prev](const NoisePath& path) { return r_prev(path); }));
    } else {
      const SetRule a_i = f.attractors[static_cast<std::size_t>(i - 1)];
      d.morse_sets.push_back(SetRule::computed(
          name, part, [a_i, r_prev](const NoisePath& path) {
            return set_intersect(a_i(path), r_prev(path));
          }));
    }
    d.plateaus.push_back(Rational(pow3(i) - 1, pow3(i)));  // 1 - 3^{-i}
  }

  report.rows =
      parallel_map<DecompositionSeedRow>(seeds.size(), [&](std::size_t si) {
        DecompositionSeedRow row;
        row.seed = seeds[si];
        const NoisePath path = sample_wiener(grid, seeds[si]);

        std::vector<CellSet> a_sets;
        for (const auto& a : f.attractors) a_sets.push_back(a(path));
        check_nesting(a_sets, part, row.seed);

        for (const auto& m : d.morse_sets) row.morse_cells.push_back(m(path));

        row.disjoint = true;
        bool slack_only = true;
        for (std::size_t i = 0; i < row.morse_cells.size(); ++i) {
          for (std::size_t j = i + 1; j < row.morse_cells.size(); ++j) {
            const CellSet overlap =
                set_intersect(row.morse_cells[i], row.morse_cells[j]);
            if (overlap.is_empty()) continue;
            row.disjoint = false;
            // Tolerated only when every shared cell lies in the boundary
            // layer of both sets: one-cell grid slack, not real overlap.
            const CellSet rim_i = set_difference(row.morse_cells[i],
                                                 erode(row.morse_cells[i], 1));
            const CellSet rim_j = set_difference(row.morse_cells[j],
                                                 erode(row.morse_cells[j], 1));
            if (!subset(overlap, set_intersect(rim_i, rim_j)))
              slack_only = false;
          }
        }
        row.grid_slack = !row.disjoint && slack_only;

        row.invariant = true;
        for (const auto& m : d.morse_sets) {
          if (!cover_invariant(m, sys, path, t_checks,
                               params.samples_per_cell)) {
            row.invariant = false;
            break;
          }
        }

        row.pass = (row.disjoint || row.grid_slack) && row.invariant;
        return row;
      });

  std::size_t ok = 0;
  for (const auto& row : report.rows) ok += row.pass ? 1 : 0;
  report.pass_fraction =
      seeds.empty()
          ? 0.0
          : static_cast<double>(ok) / static_cast<double>(seeds.size());
  return report;
}

UnionIdentityReport morse_union_identity_check(
    const MorseDecomposition& d, const Filtration& f, const TimeGrid& grid,
    std::span<const std::uint64_t> seeds) {
  f.validate();
  if (d.levels() != f.levels())
    throw ConfigError(
        "morse_union_identity_check: decomposition and filtration disagree "
        "on the number of levels");
  const int n = d.levels();

  UnionIdentityReport report;
  struct Row {
    double discrepancy;
    bool pass;
  };
  const std::vector<Row> rows =
      parallel_map<Row>(seeds.size(), [&](std::size_t si) {
        const NoisePath path = sample_wiener(grid, seeds[si]);
        CellSet morse_union = CellSet::empty(f.partition);
        for (const auto& m : d.morse_sets)
          morse_union = set_union(morse_union, m(path));
        // The i = 0 and i = n terms of the intersection are the whole box.
        CellSet product = CellSet::whole(f.partition);
        for (int i = 1; i <= n - 1; ++i) {
          const CellSet a_or_r = set_union(
              f.attractors[static_cast<std::size_t>(i - 1)](path),
              d.repellers[static_cast<std::size_t>(i)](path));
          product = set_intersect(product, a_or_r);
        }
        Row row{0.0, false};
        if (morse_union.is_empty() && product.is_empty()) {
          row.pass = true;
        } else if (morse_union.is_empty() || product.is_empty()) {
          row.discrepancy = std::numeric_limits<double>::infinity();
        } else {
          row.discrepancy = hausdorff(morse_union, product);
          row.pass = within_cells(morse_union, product, 2) &&
                     within_cells(product, morse_union, 2);
        }
        return row;
      });

  std::size_t ok = 0;
  for (const Row& row : rows) {
    report.per_seed.push_back(row.discrepancy);
    report.max_discrepancy = std::max(report.max_discrepancy, row.discrepancy);
    ok += row.pass ? 1 : 0;
  }
  report.pass_fraction =
      seeds.empty()
          ? 0.0
          : static_cast<double>(ok) / static_cast<double>(seeds.size());
  return report;
}

CoarsenReport coarsen(const MorseDecomposition& d, const Filtration& f,
                      std::span<const int> keep_indices,
                      const CocycleSystem& sys, const TimeGrid& grid,
                      std::span<const std::uint64_t> seeds,
                      const BasinParams& params,
                      std::span<const double> t_checks) {
  f.validate();
  int prev = 0;
  for (int k : keep_indices) {
    if (k <= prev || k > static_cast<int>(f.attractors.size()))
      throw ConfigError(
          "coarsen: keep_indices must be a strictly increasing subsequence "
          "of the inner attractor indices");
    prev = k;
  }

  Filtration sub;
  sub.partition = f.partition;
  for (int k : keep_indices) {
    sub.attractors.push_back(f.attractors[static_cast<std::size_t>(k - 1)]);
    sub.neighborhoods.push_back(
        f.neighborhoods[static_cast<std::size_t>(k - 1)]);
  }

  CoarsenReport out;
  out.coarse = build_decomposition(sub, sys, grid, seeds, params, t_checks);

  std::size_t ok = 0;
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    const NoisePath path = sample_wiener(grid, seeds[si]);
    CellSet u_fine = CellSet::empty(f.partition);
    for (const auto& m : d.morse_sets) u_fine = set_union(u_fine, m(path));
    CellSet u_coarse = CellSet::empty(f.partition);
    for (const auto& cells : out.coarse.rows[si].morse_cells)
      u_coarse = set_union(u_coarse, cells);
    double gap = 0.0;
    bool pass = true;
    if (!u_fine.is_empty()) {
      if (u_coarse.is_empty()) {
        gap = std::numeric_limits<double>::infinity();
        pass = false;
      } else {
        gap = hausdorff_semi(u_fine, u_coarse);
        pass = within_cells(u_fine, u_coarse, 1);
      }
    }
    out.union_gap.push_back(gap);
    ok += pass ? 1 : 0;
  }
  out.pass_fraction =
      seeds.empty()
          ? 0.0
          : static_cast<double>(ok) / static_cast<double>(seeds.size());
  return out;
}

LyapunovCertificate verify_by_lyapunov(std::span<const SetRule> candidates,
                                       const LyapunovField& L,
                                       const CocycleSystem& sys,
                                       const TimeGrid& grid,
                                       std::span<const std::uint64_t> seeds,
                                       const LyapunovCheckParams& params) {
  if (candidates.empty())
    throw ConfigError("verify_by_lyapunov: no candidate sets");
  for (const auto& c : candidates) {
    if (!c.valid())
      throw ConfigError("verify_by_lyapunov: unbound candidate rule");
    if (!(c.partition() == candidates[0].partition()))
      throw ConfigError("verify_by_lyapunov: candidate partitions differ");
  }
  if (!L) throw ConfigError("verify_by_lyapunov: no Lyapunov field");
  if (!(params.t_step > 0.0) || !(params.t_max >= params.t_step) ||
      params.max_cells < 1)
    throw ConfigError("verify_by_lyapunov: bad check parameters");
  const Partition& part = candidates[0].partition();

  LyapunovCertificate cert;
  cert.precondition_ok = true;
  cert.constancy_ok = true;
  cert.ordering_ok = true;
  cert.decrease_ok = true;

  std::vector<double> plateau_min(candidates.size(),
                                  std::numeric_limits<double>::infinity());
  std::vector<double> plateau_max(candidates.size(),
                                  -std::numeric_limits<double>::infinity());

  for (std::uint64_t seed : seeds) {
    const NoisePath path = sample_wiener(grid, seed);

    // Precondition: candidates pairwise disjoint and invariant.
    std::vector<CellSet> sets;
    for (const auto& c : candidates) sets.push_back(c(path));
    for (std::size_t i = 0; i < sets.size() && cert.precondition_ok; ++i) {
      for (std::size_t j = i + 1; j < sets.size(); ++j) {
        if (!set_intersect(sets[i], sets[j]).is_empty()) {
          cert.precondition_ok = false;
          break;
        }
      }
    }
    if (cert.precondition_ok) {
      for (const auto& c : candidates) {
        if (!cover_invariant(c, sys, path, params.invariance_t_checks, 5)) {
          cert.precondition_ok = false;
          break;
        }
      }
    }

    // Constancy of L on each candidate set, sampled at cell centers.
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (int cell : sets[i].members()) {
        const LyapEval e = L(path, part.cell_center(cell));
        if (e.censored) {
          ++cert.censored_skipped;
          continue;
        }
        plateau_min[i] = std::min(plateau_min[i], e.value);
        plateau_max[i] = std::max(plateau_max[i], e.value);
      }
    }

    // Strict decrease along orbits launched from every off-candidate cell
    // center (strided down to at most max_cells starts per seed).
    CellSet candidate_union = CellSet::empty(part);
    for (const auto& s : sets) candidate_union = set_union(candidate_union, s);
    const CellSet off = complement(candidate_union);
    const std::size_t count = off.size();
    const std::size_t stride =
        std::max<std::size_t>(1, count / static_cast<std::size_t>(
                                             params.max_cells));
    std::size_t witnesses_this_seed = 0;
    for (std::size_t k = 0; k < count; k += stride) {
      const int cell = off.members()[k];
      FlowOrbit orbit(sys, path, part.cell_center(cell));
      LyapEval prev = L(path, orbit.position());
      if (prev.censored) {
        ++cert.censored_skipped;
        continue;
      }
      const long steps = std::lround(params.t_max / params.t_step);
      for (long j = 1; j <= steps; ++j) {
        const double t = static_cast<double>(j) * params.t_step;
        const Point y = orbit.advance_to(t);
        // The decrease claim applies off the candidate union; once the orbit
        // point lands in a candidate cell it sits on that plateau exactly
        // (a grid arrival, not a monotonicity failure), so stop checking.
        const NoisePath shifted = path.shifted(t);
        bool arrived = false;
        for (const auto& c : candidates) {
          if (c(shifted).contains(part.locate(y))) {
            arrived = true;
            break;
          }
        }
        if (arrived) break;
        const LyapEval cur = L(shifted, y);
        if (cur.censored) {
          ++cert.censored_skipped;
          break;
        }
        ++cert.decrease_checked;
        if (!(cur.value < prev.value)) {
          cert.decrease_ok = false;
          if (witnesses_this_seed <
              static_cast<std::size_t>(params.max_witnesses_per_seed)) {
            ++witnesses_this_seed;
            cert.violations.push_back(
                {seed, cell, t, prev.value, cur.value});
          }
          break;
        }
        prev = cur;
      }
    }
  }

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (plateau_min[i] > plateau_max[i]) {
      // Never sampled uncensored; report an empty plateau and fail constancy.
      cert.plateau_values.push_back(
          std::numeric_limits<double>::quiet_NaN());
      cert.constancy_ok = false;
      continue;
    }
    const double spread = plateau_max[i] - plateau_min[i];
    cert.max_spread = std::max(cert.max_spread, spread);
    if (spread > params.tol_const) cert.constancy_ok = false;
    cert.plateau_values.push_back(0.5 * (plateau_min[i] + plateau_max[i]));
  }
  for (std::size_t i = 1; i < cert.plateau_values.size(); ++i) {
    if (!(cert.plateau_values[i] > cert.plateau_values[i - 1]))
      cert.ordering_ok = false;
  }
  return cert;
}

}  // namespace morseflow
