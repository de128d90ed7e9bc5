#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "morseflow/cellset.hpp"
#include "morseflow/cocycle.hpp"
#include "morseflow/errors.hpp"
#include "morseflow/lyapunov.hpp"
#include "morseflow/morse.hpp"
#include "morseflow/noise.hpp"
#include "morseflow/pullback.hpp"

namespace morseflow {

// A drift or diffusion field: either a registry name ("double-well",
// "linear-decay", "unit", "zero", "spiral-sink") or explicit monomial lists,
// one per state component.
struct FieldSpec {
  std::string named;
  std::vector<std::vector<Monomial>> components;

  bool is_named() const { return !named.empty(); }
};

struct SystemConfig {
  std::string kind;  // exact-double-well | stratonovich-sde | deterministic-flow
  FieldSpec drift;
  FieldSpec diffusion;
  StateBox box{-1.0, 1.0};
  double step = 1e-3;
};

struct NoiseConfig {
  double t_min = 0.0;
  double t_max = 0.0;
  double dt = 0.0;
};

// Named cell-set definition: a union of closed boxes (intervals in 1-D).
struct SetSpec {
  std::vector<std::pair<Point, Point>> boxes;
};

struct ScheduleConfig {
  std::vector<double> t_ladder{5.0, 10.0, 15.0, 20.0};
  double stop_tol = 0.0;
  int samples_per_cell = 5;
  double time_step = 0.0;  // 0: pick from the system/noise step
};

struct SearchConfig {
  double t_lo = -40.0;
  double t_hi = 40.0;
  double dt = 0.05;
  int refine_iters = 40;
};

// One requested analysis. `op` selects the operation; the remaining fields
// are op-specific arguments (unused ones stay empty and are not serialized).
struct AnalysisRequest {
  std::string id;
  std::string op;
  std::string set;                        // omega-limit, alpha-limit
  std::string attractor;                  // verify-attractor, basin, repeller, pair
  std::string neighborhood;               //   "
  std::string repeller;                   // pair: set name or repeller analysis id
  std::vector<std::string> attractors;    // build-decomposition
  std::vector<std::string> neighborhoods; //   "
  std::string source;                     // verify-by-lyapunov, emit
  std::vector<int> omit;                  // verify-by-lyapunov: 1-based levels to drop
  std::string kind;                       // emit: lyapunov-field | limit-history | orbit-profile
  std::vector<double> x0;                 // emit orbit-profile start point
  double t_max = 0.0;                     // emit orbit-profile horizon (0: default 2)
  double t_step = 0.0;                    // emit orbit-profile step (0: default 0.25)
  std::vector<double> t_checks;           // invariance check times (empty: {4, 8})
  bool cross_check = true;                // repeller: run the alpha-limit duality check
};

struct ScenarioConfig {
  std::string name;
  SystemConfig system;
  int cells_per_axis = 0;
  NoiseConfig noise;
  std::vector<std::uint64_t> seeds;  // materialized list
  bool seeds_as_range = false;       // true: serialize as {base, count}
  std::uint64_t seed_base = 0;
  int seed_count = 0;
  std::map<std::string, SetSpec> sets;
  ScheduleConfig schedule;
  BasinParams basin;
  SearchConfig search;
  std::string output_dir;
  std::vector<AnalysisRequest> analyses;
};

// Parses a JSON config. Structural problems (bad JSON, wrong types, unknown
// keys) are all collected and thrown together as one ConfigError.
ScenarioConfig parse_scenario(const std::string& json_text);

// Canonical JSON form (sorted keys, resolved defaults). parse . serialize is
// the identity on the canonical form.
std::string serialize_scenario(const ScenarioConfig& config);

// Semantic validation: every problem, not just the first. Empty means valid.
std::vector<std::string> validate_scenario(const ScenarioConfig& config);

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

// Scenarios compiled into the library, runnable by name.
std::vector<std::string> bundled_scenario_names();
std::string bundled_scenario_text(const std::string& name);

struct AnalysisOutcome {
  std::string id;
  std::string op;
  std::string status;  // "ok" | "finding"
  std::vector<std::string> outputs;  // paths relative to the output dir
  std::vector<std::string> warnings;
  std::string summary_json;          // deterministic op-specific numbers
  double elapsed_seconds = 0.0;      // in-memory only, never written to disk
};

struct RunReport {
  std::string scenario;
  std::string output_dir;  // resolved (after any environment override)
  std::vector<AnalysisOutcome> analyses;

  bool any_finding() const {
    for (const auto& a : analyses)
      if (a.status != "ok") return true;
    return false;
  }
};

// Executes the analyses in config order and writes the output tree
// (report.json plus one directory per analysis). The MORSEFLOW_OUTPUT_DIR
// environment variable overrides config.output_dir. Verification failures
// are findings in the report, not errors; infrastructure faults throw.
RunReport run_scenario(const ScenarioConfig& config);

}  // namespace morseflow
