// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned here on purpose; loosening them is a code
// change, not a flag.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "morseflow/scenario.hpp"

using namespace morseflow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// splitmix64, good enough to scatter test tuples
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::vector<std::uint64_t> seed_panel(std::uint64_t base, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(base + static_cast<std::uint64_t>(i));
  return out;
}

// ---- shared fixtures -------------------------------------------------------

const CocycleSystem kSys = CocycleSystem::exact_double_well();
const TimeGrid kGrid(-40.0, 40.0, 0.01);

SearchWindow wide_window() {
  SearchWindow s;
  s.t_lo = -30.0;
  s.t_hi = 30.0;
  s.dt = 0.05;
  s.refine_iters = 40;
  return s;
}

PullbackSchedule reference_schedule() {
  PullbackSchedule sched;
  sched.t_ladder = {5.0, 10.0, 15.0, 20.0};
  sched.samples_per_cell = 5;
  sched.stop_tol = 0.0;
  sched.time_step = 0.01;
  return sched;
}

BasinParams reference_basin() {
  BasinParams b;
  b.t_max = 20.0;
  b.t_step = 0.5;
  b.samples_per_cell = 5;
  return b;
}

// The three-level double-well decomposition on 201 cells, built once and
// shared by criteria 4, 5, 9, and 10.
struct MorseFixture {
  Partition part{StateBox(-1.0, 1.0), 201};
  Filtration filtration;
  std::vector<std::uint64_t> seeds = seed_panel(9101, 50);
  std::optional<DecompositionReport> report;
  std::optional<MorseContext> context;
  std::string error;

  MorseFixture() {
    filtration.partition = part;
    filtration.attractors = {
        SetRule::intervals(part, {{-1.0, -1.0}}, "A1"),
        SetRule::intervals(part, {{-1.0, -1.0}, {1.0, 1.0}}, "A2"),
    };
    filtration.neighborhoods = {
        SetRule::intervals(part, {{-1.0, -0.4}}, "N1"),
        SetRule::intervals(part, {{-1.0, -0.4}, {0.4, 1.0}}, "N2"),
    };
  }

  bool build() {
    if (report) return true;
    if (!error.empty()) return false;
    try {
      const std::vector<double> checks{4.0, 8.0};
      report = build_decomposition(filtration, kSys, kGrid, seeds,
                                   reference_basin(), checks);
      MorseContext ctx;
      for (std::size_t i = 0; i < filtration.attractors.size(); ++i) {
        PairContext pc;
        pc.attractor = filtration.attractors[i];
        pc.repeller = report->decomposition.repellers[i + 1];
        pc.neighborhood = filtration.neighborhoods[i];
        pc.search = wide_window();
        ctx.pairs.push_back(pc);
      }
      context = std::move(ctx);
      return true;
    } catch (const std::exception& e) {
      error = e.what();
      return false;
    }
  }
};

MorseFixture g_morse;

// ---- criteria --------------------------------------------------------------

// exact cocycle identity phi(t+s, w) = phi(t, theta_s w) . phi(s, w)
Outcome criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const TimeGrid grid(-15.0, 15.0, 0.01);
  std::vector<NoisePath> paths;
  for (std::uint64_t s = 501; s < 541; ++s)
    paths.push_back(sample_wiener(grid, s));

  Rng rng(12345);
  double max_residual = 0.0;
  const int tuples = 10000;
  for (int i = 0; i < tuples; ++i) {
    const NoisePath& w = paths[static_cast<std::size_t>(i) % paths.size()];
    const double t = rng.uniform(-5.0, 5.0);
    const double s = rng.uniform(-5.0, 5.0);
    const double x = rng.uniform(-0.99, 0.99);
    const Point direct = kSys.flow(t + s, w, make_point(x));
    const Point staged = kSys.flow(t, w.shifted(s), kSys.flow(s, w, make_point(x)));
    max_residual = std::max(max_residual, std::abs(direct[0] - staged[0]));
  }
  const double elapsed = seconds_since(t0);
  const bool pass = max_residual <= 1e-9 && elapsed < 10.0;
  return {pass, std::to_string(tuples) + " tuples, max residual " +
                    fmt(max_residual) + ", " + fmt(elapsed) + " s"};
}

// pullback omega-limit of [0.4, 1] concentrates on the cell of {1}
Outcome criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  const Partition part(StateBox(-1.0, 1.0), 200);
  const SetRule N = SetRule::intervals(part, {{0.4, 1.0}}, "N");
  const CellSet target = CellSet::from_intervals(part, {{1.0, 1.0}});
  const PullbackSchedule sched = reference_schedule();

  int ok = 0;
  const auto seeds = seed_panel(9001, 50);
  for (std::uint64_t seed : seeds) {
    const LimitResult r = omega_limit(N, kSys, sample_wiener(kGrid, seed), sched);
    if (within_cells(r.limit, target, 2) && within_cells(target, r.limit, 2))
      ++ok;
  }
  const double frac = static_cast<double>(ok) / static_cast<double>(seeds.size());
  const double elapsed = seconds_since(t0);
  const bool pass = frac >= 0.95 && elapsed < 120.0;
  return {pass, std::to_string(ok) + "/50 seeds within 2 cells of {1}, " +
                    fmt(elapsed) + " s"};
}

// basin of {1} covers (2 delta, 1]; its complement matches [-1, 0]
Outcome criterion_3() {
  const Partition part(StateBox(-1.0, 1.0), 200);
  const SetRule A = SetRule::intervals(part, {{1.0, 1.0}}, "A");
  const SetRule N = SetRule::intervals(part, {{0.4, 1.0}}, "N");
  // 2 delta = 0.04 at this grid's noise scale; the first whole cell beyond it
  // starts at 0.05
  const CellSet basin_target = CellSet::from_intervals(part, {{0.05, 1.0}});
  const CellSet repeller_target = CellSet::from_intervals(part, {{-1.0, 0.0}});
  const BasinParams bp = reference_basin();

  int ok = 0;
  const auto seeds = seed_panel(9001, 50);
  for (std::uint64_t seed : seeds) {
    const NoisePath path = sample_wiener(kGrid, seed);
    const CellSet basin = basin_estimate(A, N, kSys, path, bp.t_max, bp.t_step,
                                         bp.samples_per_cell);
    const CellSet repeller = complement(basin);
    if (subset(basin_target, basin) &&
        within_cells(repeller, repeller_target, 2) &&
        within_cells(repeller_target, repeller, 2))
      ++ok;
  }
  const double frac = static_cast<double>(ok) / static_cast<double>(seeds.size());
  return {frac >= 0.95,
          std::to_string(ok) + "/50 seeds: basin covers (0.04, 1], repeller "
                               "matches [-1, 0] within 2 cells"};
}

// the three Morse sets come out within 2 cells of {-1}, {1}, {0}
Outcome criterion_4() {
  if (!g_morse.build())
    return {false, "decomposition failed: " + g_morse.error};
  const DecompositionReport& rep = *g_morse.report;
  const Partition& part = g_morse.part;
  const CellSet targets[3] = {
      CellSet::from_intervals(part, {{-1.0, -1.0}}),
      CellSet::from_intervals(part, {{1.0, 1.0}}),
      CellSet::from_intervals(part, {{0.0, 0.0}}),
  };
  int ok = 0;
  for (const DecompositionSeedRow& row : rep.rows) {
    bool seed_ok = row.pass && row.morse_cells.size() == 3;
    for (int i = 0; seed_ok && i < 3; ++i) {
      seed_ok = within_cells(row.morse_cells[static_cast<std::size_t>(i)],
                             targets[i], 2) &&
                within_cells(targets[i],
                             row.morse_cells[static_cast<std::size_t>(i)], 2);
    }
    if (seed_ok) ++ok;
  }
  const double frac =
      static_cast<double>(ok) / static_cast<double>(rep.rows.size());
  return {frac >= 0.95,
          std::to_string(ok) + "/50 seeds reproduce M1={-1}, M2={1}, M3={0}"};
}

// weighted Lyapunov plateaus are exactly 2/3, 8/9, 26/27 on Morse cells
Outcome criterion_5() {
  if (!g_morse.build())
    return {false, "decomposition failed: " + g_morse.error};
  const double targets[3] = {2.0 / 3.0, 8.0 / 9.0, 26.0 / 27.0};
  double max_err = 0.0;
  std::size_t evaluated = 0, censored = 0;
  for (std::size_t si = 0; si < g_morse.seeds.size(); ++si) {
    const NoisePath path = sample_wiener(kGrid, g_morse.seeds[si]);
    const DecompositionSeedRow& row = g_morse.report->rows[si];
    for (int level = 0; level < 3; ++level) {
      for (int cell : row.morse_cells[static_cast<std::size_t>(level)].members()) {
        const LyapEval e = morse_lyapunov(*g_morse.context, kSys, path,
                                          g_morse.part.cell_center(cell));
        if (e.censored) {
          ++censored;
          continue;
        }
        ++evaluated;
        max_err = std::max(max_err, std::abs(e.value - targets[level]));
      }
    }
  }
  const bool pass = evaluated >= g_morse.seeds.size() * 3 && censored == 0 &&
                    max_err <= 1e-12;
  return {pass, std::to_string(evaluated) + " plateau samples, max error " +
                    fmt(max_err)};
}

// entrance-time cocycle identity tau(theta_t w, phi(t, w) x) = tau(w, x) - t
Outcome criterion_6() {
  const Partition part(StateBox(-1.0, 1.0), 200);
  PairContext ctx;
  ctx.attractor = SetRule::intervals(part, {{1.0, 1.0}}, "A");
  ctx.repeller = SetRule::intervals(part, {{-1.0, 0.0}}, "R");
  ctx.neighborhood = SetRule::intervals(part, {{0.4, 1.0}}, "N");
  ctx.search = wide_window();
  const double bound = 4.0 * ctx.search.precision();

  std::vector<NoisePath> paths;
  for (std::uint64_t s = 601; s < 641; ++s)
    paths.push_back(sample_wiener(kGrid, s));

  Rng rng(777);
  int valid = 0;
  double max_residual = 0.0;
  for (int attempt = 0; attempt < 8000 && valid < 1000; ++attempt) {
    const NoisePath& w = paths[static_cast<std::size_t>(attempt) % paths.size()];
    const double x = rng.uniform(0.05, 0.95);
    const double t = rng.uniform(-2.0, 2.0);
    const std::optional<double> r =
        tau_cocycle_residual(ctx, kSys, w, make_point(x), t);
    if (!r) continue;  // an endpoint fell on A/R cells or was censored
    ++valid;
    max_residual = std::max(max_residual, *r);
  }
  const bool pass = valid >= 1000 && max_residual <= bound;
  return {pass, std::to_string(valid) + " finite residuals, max " +
                    fmt(max_residual) + " vs bound " + fmt(bound)};
}

// L strictly decreases along orbits wherever the tau decrement is resolvable
Outcome criterion_7() {
  const Partition part(StateBox(-1.0, 1.0), 200);
  PairContext ctx;
  ctx.attractor = SetRule::intervals(part, {{1.0, 1.0}}, "A");
  ctx.repeller = SetRule::intervals(part, {{-1.0, 0.0}}, "R");
  ctx.neighborhood = SetRule::intervals(part, {{0.4, 1.0}}, "N");
  ctx.search = wide_window();
  const double noise_floor = 2.0 * ctx.search.precision();

  Rng rng(4242);
  int orbits = 0;
  std::size_t pairs_checked = 0, violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const NoisePath path =
        sample_wiener(kGrid, 701 + static_cast<std::uint64_t>(i % 25));
    const double x0 = rng.uniform(0.012, 0.988);
    ++orbits;
    const auto profile =
        monotonicity_profile(ctx, kSys, path, make_point(x0), 2.0, 0.25);
    for (std::size_t j = 1; j < profile.size(); ++j) {
      const ProfilePoint& a = profile[j - 1];
      const ProfilePoint& b = profile[j];
      if (!a.entrance.tau.is_finite() || !b.entrance.tau.is_finite()) continue;
      if (a.entrance.censor != Censor::none ||
          b.entrance.censor != Censor::none)
        continue;
      const double dtau = a.entrance.tau.value - b.entrance.tau.value;
      if (dtau <= noise_floor) continue;
      ++pairs_checked;
      if (!(b.L < a.L)) ++violations;
    }
  }
  const bool pass = violations == 0 && orbits == 1000 && pairs_checked >= 2000;
  return {pass, std::to_string(pairs_checked) + " steps checked over " +
                    std::to_string(orbits) + " orbits, " +
                    std::to_string(violations) + " violations"};
}

// zero-noise entrance time at x = 0.1 into [1/2, 1] equals (ln 33)/2
Outcome criterion_8() {
  const Partition part(StateBox(-1.0, 1.0), 200);
  PairContext ctx;
  ctx.attractor = SetRule::intervals(part, {{1.0, 1.0}}, "A");
  ctx.repeller = SetRule::intervals(part, {{-1.0, 0.0}}, "R");
  ctx.neighborhood = SetRule::intervals(part, {{0.5, 1.0}}, "N");
  ctx.search = wide_window();

  const EntranceResult er =
      entrance_time(ctx, kSys, zero_path(kGrid), make_point(0.1));
  const double expected = 0.5 * std::log(33.0);
  if (!er.tau.is_finite() || er.censor != Censor::none)
    return {false, "entrance time not finite/uncensored"};
  const double err = std::abs(er.tau.value - expected);
  return {err <= 1e-3, "tau = " + std::to_string(er.tau.value) +
                           ", analytic (ln 33)/2 = " + std::to_string(expected) +
                           ", error " + fmt(err)};
}

// union of Morse sets equals the intersection of A_i union R_i
Outcome criterion_9() {
  if (!g_morse.build())
    return {false, "decomposition failed: " + g_morse.error};
  const UnionIdentityReport rep = morse_union_identity_check(
      g_morse.report->decomposition, g_morse.filtration, kGrid, g_morse.seeds);
  return {rep.pass_fraction >= 0.95,
          fmt(rep.pass_fraction * 100.0) + "% of seeds within 2 cells, max "
                                           "discrepancy " +
              fmt(rep.max_discrepancy)};
}

// dropping {0} from the candidates must be caught at the 0-cell on every seed
Outcome criterion_10() {
  if (!g_morse.build())
    return {false, "decomposition failed: " + g_morse.error};
  const std::vector<SetRule> candidates{
      g_morse.report->decomposition.morse_sets[0],
      g_morse.report->decomposition.morse_sets[1]};
  const MorseContext& mctx = *g_morse.context;
  const LyapunovField L = [&mctx](const NoisePath& w, const Point& x) {
    return morse_lyapunov(mctx, kSys, w, x);
  };
  LyapunovCheckParams params;
  params.invariance_t_checks = {4.0};
  const LyapunovCertificate cert =
      verify_by_lyapunov(candidates, L, kSys, kGrid, g_morse.seeds, params);

  const int zero_cell = g_morse.part.locate(make_point(0.0));
  std::set<std::uint64_t> witnessed;
  for (const LyapunovWitness& w : cert.violations)
    if (w.cell == zero_cell) witnessed.insert(w.seed);
  const bool all_seeds = witnessed.size() == g_morse.seeds.size();
  return {!cert.decrease_ok && all_seeds,
          "decrease violations witnessed at the 0-cell on " +
              std::to_string(witnessed.size()) + "/" +
              std::to_string(g_morse.seeds.size()) + " seeds"};
}

// two runs of the bundled scenario write byte-identical trees
Outcome criterion_11() {
  const fs::path root = fs::temp_directory_path() / "morseflow-acceptance";
  fs::remove_all(root);
  const fs::path dirs[2] = {root / "run1", root / "run2"};
  const ScenarioConfig config =
      parse_scenario(bundled_scenario_text("double-well-morse"));
  for (const fs::path& dir : dirs) {
    ::setenv("MORSEFLOW_OUTPUT_DIR", dir.c_str(), 1);
    run_scenario(config);
  }
  ::unsetenv("MORSEFLOW_OUTPUT_DIR");

  const auto read_tree = [](const fs::path& base) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(base)) {
      if (!entry.is_regular_file()) continue;
      std::ifstream in(entry.path(), std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      out[fs::relative(entry.path(), base).generic_string()] = buf.str();
    }
    return out;
  };
  const auto tree1 = read_tree(dirs[0]);
  const auto tree2 = read_tree(dirs[1]);
  const bool pass = !tree1.empty() && tree1 == tree2;
  std::size_t bytes = 0;
  for (const auto& [path, content] : tree1) bytes += content.size();
  fs::remove_all(root);
  return {pass, std::to_string(tree1.size()) + " files, " +
                    std::to_string(bytes) + " bytes, trees " +
                    (pass ? "identical" : "differ")};
}

}  // namespace

int main() {
  struct Entry {
    int number;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> criteria = {
      {1, "cocycle identity", criterion_1},
      {2, "pullback omega-limit of [0.4, 1] is {1}", criterion_2},
      {3, "basin of {1} and repeller [-1, 0]", criterion_3},
      {4, "Morse sets {-1}, {1}, {0}", criterion_4},
      {5, "Lyapunov plateaus 2/3, 8/9, 26/27", criterion_5},
      {6, "entrance-time cocycle identity", criterion_6},
      {7, "strict Lyapunov decrease along orbits", criterion_7},
      {8, "zero-noise entrance time (ln 33)/2", criterion_8},
      {9, "Morse union identity", criterion_9},
      {10, "negative control: omitted {0} is caught", criterion_10},
      {11, "bundled scenario runs are byte-identical", criterion_11},
  };

  int failures = 0;
  for (const Entry& entry : criteria) {
    Outcome outcome;
    try {
      outcome = entry.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("[%s] criterion %d: %s — %s\n", outcome.pass ? "PASS" : "FAIL",
                entry.number, entry.title, outcome.detail.c_str());
    std::fflush(stdout);
  }
  if (failures > 0)
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  else
    std::printf("all %zu criteria passed\n", criteria.size());
  return failures == 0 ? 0 : 1;
}
