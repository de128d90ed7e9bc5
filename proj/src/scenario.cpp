#include "morseflow/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "morseflow/csv.hpp"

namespace morseflow {

namespace detail {
extern const char* const kDoubleWellMorseJson;
extern const char* const kDoubleWellPairJson;
}  // namespace detail

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- parsing

struct Problems {
  std::vector<std::string> list;
  void add(std::string s) { list.push_back(std::move(s)); }
  bool ok() const { return list.empty(); }
};

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream out;
  out << "invalid scenario config (" << problems.size() << " problem"
      << (problems.size() == 1 ? "" : "s") << "):";
  for (const auto& p : problems) out << "\n  - " << p;
  return out.str();
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed, Problems& p) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) p.add(where + ": unexpected key '" + it.key() + "'");
  }
}

double num_or(const json& j, const char* key, double def,
              const std::string& where, Problems& p, bool required = false) {
  if (!j.contains(key)) {
    if (required) p.add(where + "." + key + ": missing");
    return def;
  }
  if (!j[key].is_number()) {
    p.add(where + "." + key + ": expected a number");
    return def;
  }
  return j[key].get<double>();
}

int int_or(const json& j, const char* key, int def, const std::string& where,
           Problems& p, bool required = false) {
  if (!j.contains(key)) {
    if (required) p.add(where + "." + key + ": missing");
    return def;
  }
  if (!j[key].is_number_integer()) {
    p.add(where + "." + key + ": expected an integer");
    return def;
  }
  return j[key].get<int>();
}

std::string str_or(const json& j, const char* key, const std::string& def,
                   const std::string& where, Problems& p,
                   bool required = false) {
  if (!j.contains(key)) {
    if (required) p.add(where + "." + key + ": missing");
    return def;
  }
  if (!j[key].is_string()) {
    p.add(where + "." + key + ": expected a string");
    return def;
  }
  return j[key].get<std::string>();
}

bool bool_or(const json& j, const char* key, bool def,
             const std::string& where, Problems& p) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean()) {
    p.add(where + "." + key + ": expected a boolean");
    return def;
  }
  return j[key].get<bool>();
}

std::vector<double> num_list_or(const json& j, const char* key,
                                std::vector<double> def,
                                const std::string& where, Problems& p) {
  if (!j.contains(key)) return def;
  if (!j[key].is_array()) {
    p.add(where + "." + key + ": expected an array of numbers");
    return def;
  }
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) {
      p.add(where + "." + key + ": expected an array of numbers");
      return def;
    }
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> int_list_or(const json& j, const char* key,
                             std::vector<int> def, const std::string& where,
                             Problems& p) {
  if (!j.contains(key)) return def;
  if (!j[key].is_array()) {
    p.add(where + "." + key + ": expected an array of integers");
    return def;
  }
  std::vector<int> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer()) {
      p.add(where + "." + key + ": expected an array of integers");
      return def;
    }
    out.push_back(v.get<int>());
  }
  return out;
}

std::vector<std::string> str_list_or(const json& j, const char* key,
                                     const std::string& where, Problems& p,
                                     bool required = false) {
  std::vector<std::string> out;
  if (!j.contains(key)) {
    if (required) p.add(where + "." + key + ": missing");
    return out;
  }
  if (!j[key].is_array()) {
    p.add(where + "." + key + ": expected an array of strings");
    return out;
  }
  for (const auto& v : j[key]) {
    if (!v.is_string()) {
      p.add(where + "." + key + ": expected an array of strings");
      out.clear();
      return out;
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

// A field is either a registry name or per-component monomial lists,
// each monomial a [coef, power_x, power_y] triple.
FieldSpec parse_field(const json& sysj, const char* key,
                      const std::string& where, Problems& p) {
  FieldSpec f;
  if (!sysj.contains(key)) return f;
  const json& v = sysj[key];
  if (v.is_string()) {
    f.named = v.get<std::string>();
    return f;
  }
  if (!v.is_array()) {
    p.add(where + "." + key + ": expected a field name or monomial lists");
    return f;
  }
  for (const auto& comp : v) {
    if (!comp.is_array()) {
      p.add(where + "." + key + ": each component must be a monomial list");
      return f;
    }
    std::vector<Monomial> monos;
    for (const auto& m : comp) {
      if (!m.is_array() || m.size() != 3 || !m[0].is_number() ||
          !m[1].is_number_integer() || !m[2].is_number_integer()) {
        p.add(where + "." + key +
              ": each monomial must be [coef, power_x, power_y]");
        return f;
      }
      monos.push_back({m[0].get<double>(), m[1].get<int>(), m[2].get<int>()});
    }
    f.components.push_back(std::move(monos));
  }
  return f;
}

StateBox parse_box(const json& v, const std::string& where, Problems& p) {
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return StateBox(v[0].get<double>(), v[1].get<double>());
  if (v.is_array() && v.size() == 2 && v[0].is_array() && v[1].is_array() &&
      v[0].size() == 2 && v[1].size() == 2 && v[0][0].is_number() &&
      v[0][1].is_number() && v[1][0].is_number() && v[1][1].is_number()) {
    return StateBox(make_point(v[0][0].get<double>(), v[0][1].get<double>()),
                    make_point(v[1][0].get<double>(), v[1][1].get<double>()),
                    2);
  }
  p.add(where + ": expected [lo, hi] or [[lx, ly], [ux, uy]]");
  return StateBox(-1.0, 1.0);
}

SetSpec parse_set(const json& v, const std::string& where, Problems& p) {
  SetSpec spec;
  if (!v.is_array() || v.empty()) {
    p.add(where + ": expected a nonempty array of intervals or boxes");
    return spec;
  }
  for (const auto& entry : v) {
    if (entry.is_array() && entry.size() == 2 && entry[0].is_number() &&
        entry[1].is_number()) {
      spec.boxes.emplace_back(make_point(entry[0].get<double>()),
                              make_point(entry[1].get<double>()));
      continue;
    }
    if (entry.is_array() && entry.size() == 2 && entry[0].is_array() &&
        entry[1].is_array() && entry[0].size() == 2 && entry[1].size() == 2 &&
        entry[0][0].is_number() && entry[0][1].is_number() &&
        entry[1][0].is_number() && entry[1][1].is_number()) {
      spec.boxes.emplace_back(
          make_point(entry[0][0].get<double>(), entry[0][1].get<double>()),
          make_point(entry[1][0].get<double>(), entry[1][1].get<double>()));
      continue;
    }
    p.add(where + ": each entry must be [lo, hi] or [[lx, ly], [ux, uy]]");
    break;
  }
  return spec;
}

const std::initializer_list<const char*> kTopKeys = {
    "name",   "system",   "partition", "noise",  "seeds",      "sets",
    "schedule", "basin",  "search",    "output_dir", "analyses"};

bool known_op(const std::string& op) {
  return op == "omega-limit" || op == "alpha-limit" ||
         op == "verify-attractor" || op == "basin" || op == "repeller" ||
         op == "pair" || op == "build-decomposition" ||
         op == "verify-by-lyapunov" || op == "emit";
}

AnalysisRequest parse_analysis(const json& v, std::size_t index, Problems& p) {
  AnalysisRequest req;
  const std::string where = "analyses[" + std::to_string(index) + "]";
  if (!v.is_object()) {
    p.add(where + ": expected an object");
    return req;
  }
  req.op = str_or(v, "op", "", where, p, true);
  req.id = str_or(v, "id", req.op + "-" + std::to_string(index + 1), where, p);
  if (!known_op(req.op)) {
    if (!req.op.empty()) p.add(where + ": unknown op '" + req.op + "'");
    return req;
  }
  if (req.op == "omega-limit" || req.op == "alpha-limit") {
    check_keys(v, where, {"id", "op", "set"}, p);
    req.set = str_or(v, "set", "", where, p, true);
  } else if (req.op == "verify-attractor") {
    check_keys(v, where, {"id", "op", "attractor", "neighborhood", "t_checks"},
               p);
    req.attractor = str_or(v, "attractor", "", where, p, true);
    req.neighborhood = str_or(v, "neighborhood", "", where, p, true);
    req.t_checks = num_list_or(v, "t_checks", {4.0, 8.0}, where, p);
  } else if (req.op == "basin") {
    check_keys(v, where, {"id", "op", "attractor", "neighborhood"}, p);
    req.attractor = str_or(v, "attractor", "", where, p, true);
    req.neighborhood = str_or(v, "neighborhood", "", where, p, true);
  } else if (req.op == "repeller") {
    check_keys(v, where,
               {"id", "op", "attractor", "neighborhood", "cross_check"}, p);
    req.attractor = str_or(v, "attractor", "", where, p, true);
    req.neighborhood = str_or(v, "neighborhood", "", where, p, true);
    req.cross_check = bool_or(v, "cross_check", true, where, p);
  } else if (req.op == "pair") {
    check_keys(v, where, {"id", "op", "attractor", "repeller", "neighborhood"},
               p);
    req.attractor = str_or(v, "attractor", "", where, p, true);
    req.repeller = str_or(v, "repeller", "", where, p, true);
    req.neighborhood = str_or(v, "neighborhood", "", where, p, true);
  } else if (req.op == "build-decomposition") {
    check_keys(v, where,
               {"id", "op", "attractors", "neighborhoods", "t_checks"}, p);
    req.attractors = str_list_or(v, "attractors", where, p, true);
    req.neighborhoods = str_list_or(v, "neighborhoods", where, p, true);
    req.t_checks = num_list_or(v, "t_checks", {4.0, 8.0}, where, p);
  } else if (req.op == "verify-by-lyapunov") {
    check_keys(v, where, {"id", "op", "source", "omit", "t_checks"}, p);
    req.source = str_or(v, "source", "", where, p, true);
    req.omit = int_list_or(v, "omit", {}, where, p);
    req.t_checks = num_list_or(v, "t_checks", {4.0}, where, p);
  } else if (req.op == "emit") {
    check_keys(v, where, {"id", "op", "kind", "source", "x0", "t_max",
                          "t_step"},
               p);
    req.kind = str_or(v, "kind", "", where, p, true);
    req.source = str_or(v, "source", "", where, p, true);
    req.x0 = num_list_or(v, "x0", {}, where, p);
    req.t_max = num_or(v, "t_max", req.kind == "orbit-profile" ? 2.0 : 0.0,
                       where, p);
    req.t_step = num_or(v, "t_step",
                        req.kind == "orbit-profile" ? 0.25 : 0.0, where, p);
  }
  return req;
}

json box_json(const StateBox& b) {
  if (b.dim == 1) return json::array({b.lower[0], b.upper[0]});
  return json::array({json::array({b.lower[0], b.lower[1]}),
                      json::array({b.upper[0], b.upper[1]})});
}

json field_json(const FieldSpec& f) {
  if (f.is_named()) return json(f.named);
  json comps = json::array();
  for (const auto& comp : f.components) {
    json monos = json::array();
    for (const auto& m : comp)
      monos.push_back(json::array({m.coef, m.px, m.py}));
    comps.push_back(monos);
  }
  return comps;
}

json set_json(const SetSpec& spec, int dim) {
  json out = json::array();
  for (const auto& b : spec.boxes) {
    if (dim == 1)
      out.push_back(json::array({b.first[0], b.second[0]}));
    else
      out.push_back(
          json::array({json::array({b.first[0], b.first[1]}),
                       json::array({b.second[0], b.second[1]})}));
  }
  return out;
}

json analysis_json(const AnalysisRequest& req) {
  json v;
  v["id"] = req.id;
  v["op"] = req.op;
  if (req.op == "omega-limit" || req.op == "alpha-limit") {
    v["set"] = req.set;
  } else if (req.op == "verify-attractor") {
    v["attractor"] = req.attractor;
    v["neighborhood"] = req.neighborhood;
    v["t_checks"] = req.t_checks;
  } else if (req.op == "basin") {
    v["attractor"] = req.attractor;
    v["neighborhood"] = req.neighborhood;
  } else if (req.op == "repeller") {
    v["attractor"] = req.attractor;
    v["neighborhood"] = req.neighborhood;
    v["cross_check"] = req.cross_check;
  } else if (req.op == "pair") {
    v["attractor"] = req.attractor;
    v["repeller"] = req.repeller;
    v["neighborhood"] = req.neighborhood;
  } else if (req.op == "build-decomposition") {
    v["attractors"] = req.attractors;
    v["neighborhoods"] = req.neighborhoods;
    v["t_checks"] = req.t_checks;
  } else if (req.op == "verify-by-lyapunov") {
    v["source"] = req.source;
    v["omit"] = req.omit;
    v["t_checks"] = req.t_checks;
  } else if (req.op == "emit") {
    v["kind"] = req.kind;
    v["source"] = req.source;
    if (req.kind == "orbit-profile") {
      v["x0"] = req.x0;
      v["t_max"] = req.t_max;
      v["t_step"] = req.t_step;
    }
  }
  return v;
}

CocycleSystem make_system(const SystemConfig& sc) {
  if (sc.kind == "exact-double-well") return CocycleSystem::exact_double_well();
  const int dim = sc.box.dim;
  const auto resolve = [&](const FieldSpec& f) {
    if (f.is_named()) return PolyField::named(f.named, dim);
    PolyField pf;
    pf.dim = dim;
    pf.components = f.components;
    return pf;
  };
  if (sc.kind == "stratonovich-sde")
    return CocycleSystem::stratonovich_sde(resolve(sc.drift),
                                           resolve(sc.diffusion), sc.box,
                                           sc.step);
  if (sc.kind == "deterministic-flow")
    return CocycleSystem::deterministic_flow(resolve(sc.drift), sc.box,
                                             sc.step);
  throw ConfigError("unknown system kind: " + sc.kind);
}

std::string tau_tag(const EntranceResult& er) {
  if (er.censor == Censor::low) return "censored-low";
  if (er.censor == Censor::high) return "censored-high";
  switch (er.tau.tag) {
    case ExtendedTime::Tag::neg_inf:
      return "neg-inf";
    case ExtendedTime::Tag::pos_inf:
      return "pos-inf";
    case ExtendedTime::Tag::finite:
      break;
  }
  return "finite";
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  Problems p;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  ScenarioConfig c;
  check_keys(j, "config", kTopKeys, p);
  c.name = str_or(j, "name", "", "config", p, true);

  if (j.contains("system") && j["system"].is_object()) {
    const json& s = j["system"];
    check_keys(s, "system", {"kind", "drift", "diffusion", "box", "step"}, p);
    c.system.kind = str_or(s, "kind", "", "system", p, true);
    c.system.drift = parse_field(s, "drift", "system", p);
    c.system.diffusion = parse_field(s, "diffusion", "system", p);
    if (s.contains("box")) c.system.box = parse_box(s["box"], "system.box", p);
    c.system.step = num_or(s, "step", 1e-3, "system", p);
  } else {
    p.add("system: missing or not an object");
  }

  if (j.contains("partition") && j["partition"].is_object()) {
    check_keys(j["partition"], "partition", {"cells_per_axis"}, p);
    c.cells_per_axis =
        int_or(j["partition"], "cells_per_axis", 0, "partition", p, true);
  } else {
    p.add("partition: missing or not an object");
  }

  if (j.contains("noise") && j["noise"].is_object()) {
    const json& n = j["noise"];
    check_keys(n, "noise", {"t_min", "t_max", "dt"}, p);
    c.noise.t_min = num_or(n, "t_min", 0.0, "noise", p, true);
    c.noise.t_max = num_or(n, "t_max", 0.0, "noise", p, true);
    c.noise.dt = num_or(n, "dt", 0.0, "noise", p, true);
  } else {
    p.add("noise: missing or not an object");
  }

  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    if (s.is_array()) {
      for (const auto& v : s) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          p.add("seeds: expected nonnegative integers");
          break;
        }
        c.seeds.push_back(v.get<std::uint64_t>());
      }
    } else if (s.is_object()) {
      check_keys(s, "seeds", {"base", "count"}, p);
      c.seeds_as_range = true;
      if (s.contains("base") && s["base"].is_number_integer() &&
          s["base"].get<long long>() >= 0)
        c.seed_base = s["base"].get<std::uint64_t>();
      else
        p.add("seeds.base: expected a nonnegative integer");
      c.seed_count = int_or(s, "count", 0, "seeds", p, true);
      if (c.seed_count < 0) {
        p.add("seeds.count: must be nonnegative");
        c.seed_count = 0;
      }
      for (int i = 0; i < c.seed_count; ++i)
        c.seeds.push_back(c.seed_base + static_cast<std::uint64_t>(i));
    } else {
      p.add("seeds: expected an array or {base, count}");
    }
  } else {
    p.add("seeds: missing");
  }

  if (j.contains("sets")) {
    if (!j["sets"].is_object()) {
      p.add("sets: expected an object of named sets");
    } else {
      for (auto it = j["sets"].begin(); it != j["sets"].end(); ++it)
        c.sets[it.key()] = parse_set(it.value(), "sets." + it.key(), p);
    }
  }

  if (j.contains("schedule") && j["schedule"].is_object()) {
    const json& s = j["schedule"];
    check_keys(s, "schedule",
               {"t_ladder", "stop_tol", "samples_per_cell", "time_step"}, p);
    c.schedule.t_ladder =
        num_list_or(s, "t_ladder", c.schedule.t_ladder, "schedule", p);
    c.schedule.stop_tol = num_or(s, "stop_tol", 0.0, "schedule", p);
    c.schedule.samples_per_cell =
        int_or(s, "samples_per_cell", 5, "schedule", p);
    c.schedule.time_step = num_or(s, "time_step", 0.0, "schedule", p);
  } else if (j.contains("schedule")) {
    p.add("schedule: expected an object");
  }

  if (j.contains("basin") && j["basin"].is_object()) {
    const json& b = j["basin"];
    check_keys(b, "basin", {"t_max", "t_step", "samples_per_cell"}, p);
    c.basin.t_max = num_or(b, "t_max", 20.0, "basin", p);
    c.basin.t_step = num_or(b, "t_step", 0.5, "basin", p);
    c.basin.samples_per_cell = int_or(b, "samples_per_cell", 5, "basin", p);
  } else if (j.contains("basin")) {
    p.add("basin: expected an object");
  }

  if (j.contains("search") && j["search"].is_object()) {
    const json& s = j["search"];
    check_keys(s, "search", {"t_lo", "t_hi", "dt", "refine_iters"}, p);
    c.search.t_lo = num_or(s, "t_lo", -40.0, "search", p);
    c.search.t_hi = num_or(s, "t_hi", 40.0, "search", p);
    c.search.dt = num_or(s, "dt", 0.05, "search", p);
    c.search.refine_iters = int_or(s, "refine_iters", 40, "search", p);
  } else if (j.contains("search")) {
    p.add("search: expected an object");
  }

  c.output_dir = str_or(j, "output_dir", "", "config", p, true);

  if (j.contains("analyses")) {
    if (!j["analyses"].is_array()) {
      p.add("analyses: expected an array");
    } else {
      std::size_t index = 0;
      for (const auto& v : j["analyses"])
        c.analyses.push_back(parse_analysis(v, index++, p));
    }
  }

  if (!p.ok()) throw ConfigError(join_problems(p.list));
  return c;
}

std::string serialize_scenario(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;

  json sys;
  sys["kind"] = c.system.kind;
  sys["box"] = box_json(c.system.box);
  if (c.system.kind != "exact-double-well") {
    sys["step"] = c.system.step;
    if (c.system.drift.is_named() || !c.system.drift.components.empty())
      sys["drift"] = field_json(c.system.drift);
    if (c.system.kind == "stratonovich-sde")
      sys["diffusion"] = field_json(c.system.diffusion);
  }
  j["system"] = sys;

  j["partition"] = json{{"cells_per_axis", c.cells_per_axis}};
  j["noise"] = json{
      {"t_min", c.noise.t_min}, {"t_max", c.noise.t_max}, {"dt", c.noise.dt}};
  if (c.seeds_as_range)
    j["seeds"] = json{{"base", c.seed_base}, {"count", c.seed_count}};
  else
    j["seeds"] = c.seeds;

  json sets = json::object();
  for (const auto& [name, spec] : c.sets)
    sets[name] = set_json(spec, c.system.box.dim);
  j["sets"] = sets;

  j["schedule"] = json{{"t_ladder", c.schedule.t_ladder},
                       {"stop_tol", c.schedule.stop_tol},
                       {"samples_per_cell", c.schedule.samples_per_cell},
                       {"time_step", c.schedule.time_step}};
  j["basin"] = json{{"t_max", c.basin.t_max},
                    {"t_step", c.basin.t_step},
                    {"samples_per_cell", c.basin.samples_per_cell}};
  j["search"] = json{{"t_lo", c.search.t_lo},
                     {"t_hi", c.search.t_hi},
                     {"dt", c.search.dt},
                     {"refine_iters", c.search.refine_iters}};
  j["output_dir"] = c.output_dir;

  json analyses = json::array();
  for (const auto& req : c.analyses) analyses.push_back(analysis_json(req));
  j["analyses"] = analyses;

  return j.dump(2) + "\n";
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return serialize_scenario(a) == serialize_scenario(b);
}

std::vector<std::string> validate_scenario(const ScenarioConfig& c) {
  std::vector<std::string> out;
  const auto add = [&](std::string s) { out.push_back(std::move(s)); };

  if (c.name.empty()) add("name: must be nonempty");

  const std::string& kind = c.system.kind;
  const int dim = c.system.box.dim;
  const bool kind_known = kind == "exact-double-well" ||
                          kind == "stratonovich-sde" ||
                          kind == "deterministic-flow";
  if (!kind_known) add("system.kind: unknown kind '" + kind + "'");
  if (kind == "exact-double-well") {
    if (dim != 1 || c.system.box.lower[0] != -1.0 ||
        c.system.box.upper[0] != 1.0)
      add("system.box: the exact double-well system lives on [-1, 1]");
  } else if (kind_known) {
    if (!(c.system.step > 0.0)) add("system.step: must be positive");
    const auto check_field = [&](const FieldSpec& f, const char* what,
                                 bool required) {
      if (f.is_named()) {
        try {
          (void)PolyField::named(f.named, dim);
        } catch (const std::exception&) {
          add(std::string("system.") + what + ": unknown field name '" +
              f.named + "'");
        }
        return;
      }
      if (f.components.empty()) {
        if (required) add(std::string("system.") + what + ": required");
        return;
      }
      if (static_cast<int>(f.components.size()) != dim)
        add(std::string("system.") + what +
            ": need exactly one component per dimension");
      for (const auto& comp : f.components) {
        for (const auto& m : comp) {
          if (m.px < 0 || m.py < 0)
            add(std::string("system.") + what + ": negative monomial power");
          if (dim == 1 && m.py != 0)
            add(std::string("system.") + what +
                ": y powers are meaningless in 1-D");
        }
      }
    };
    check_field(c.system.drift, "drift", true);
    if (kind == "stratonovich-sde")
      check_field(c.system.diffusion, "diffusion", true);
    else if (c.system.diffusion.is_named() ||
             !c.system.diffusion.components.empty())
      add("system.diffusion: not used by a deterministic flow");
  }

  if (c.cells_per_axis < 2) add("partition.cells_per_axis: must be at least 2");

  bool grid_ok = true;
  try {
    (void)TimeGrid(c.noise.t_min, c.noise.t_max, c.noise.dt);
  } catch (const std::exception& e) {
    grid_ok = false;
    add(std::string("noise: ") + e.what());
  }

  if (c.seeds.empty()) add("seeds: must be nonempty");

  std::optional<Partition> part;
  if (c.cells_per_axis >= 2) {
    try {
      part.emplace(c.system.box, c.cells_per_axis);
    } catch (const std::exception&) {
    }
  }
  for (const auto& [name, spec] : c.sets) {
    if (spec.boxes.empty()) {
      add("sets." + name + ": empty definition");
      continue;
    }
    bool shape_ok = true;
    for (const auto& b : spec.boxes) {
      for (int a = 0; a < dim; ++a) {
        if (!(b.first[a] <= b.second[a])) {
          add("sets." + name + ": box with lower > upper");
          shape_ok = false;
        }
      }
    }
    if (part && shape_ok) {
      try {
        if (CellSet::from_boxes(*part, spec.boxes).is_empty())
          add("sets." + name + ": no cells on this partition");
      } catch (const std::exception& e) {
        add("sets." + name + ": " + e.what());
      }
    }
  }

  if (c.schedule.t_ladder.empty()) {
    add("schedule.t_ladder: must be nonempty");
  } else {
    double prev = 0.0;
    for (double t : c.schedule.t_ladder) {
      if (!(t > prev)) {
        add("schedule.t_ladder: must be strictly increasing and positive");
        break;
      }
      prev = t;
    }
  }
  if (c.schedule.samples_per_cell < 1)
    add("schedule.samples_per_cell: must be at least 1");
  if (c.schedule.stop_tol < 0.0) add("schedule.stop_tol: must be nonnegative");
  if (c.schedule.time_step < 0.0)
    add("schedule.time_step: must be nonnegative");

  if (!(c.basin.t_step > 0.0)) add("basin.t_step: must be positive");
  if (!(c.basin.t_max >= 0.0)) add("basin.t_max: must be nonnegative");
  if (c.basin.samples_per_cell < 1)
    add("basin.samples_per_cell: must be at least 1");

  if (!(c.search.t_lo < 0.0) || !(c.search.t_hi > 0.0))
    add("search: window must straddle zero (t_lo < 0 < t_hi)");
  if (!(c.search.dt > 0.0)) add("search.dt: must be positive");
  if (c.search.refine_iters < 1) add("search.refine_iters: must be at least 1");

  if (c.output_dir.empty()) add("output_dir: must be nonempty");

  const double ladder_max =
      c.schedule.t_ladder.empty() ? 0.0 : c.schedule.t_ladder.back();
  double need_low = 0.0, need_high = 0.0;
  const auto need_below = [&](double t) { need_low = std::min(need_low, t); };
  const auto need_above = [&](double t) { need_high = std::max(need_high, t); };

  std::map<std::string, const AnalysisRequest*> earlier;
  const auto set_defined = [&](const std::string& s) {
    return c.sets.count(s) > 0;
  };
  const double kDecreaseHorizon = 2.0;  // verify-by-lyapunov orbit horizon

  for (std::size_t i = 0; i < c.analyses.size(); ++i) {
    const AnalysisRequest& req = c.analyses[i];
    const std::string where =
        "analyses[" + std::to_string(i) + "] '" + req.id + "'";
    if (req.id.empty()) add(where + ": id must be nonempty");
    if (earlier.count(req.id)) add(where + ": duplicate id");
    if (!known_op(req.op)) {
      add(where + ": unknown op '" + req.op + "'");
      earlier[req.id] = &req;
      continue;
    }
    const auto require_set = [&](const std::string& s, const char* role) {
      if (!set_defined(s))
        add(where + ": " + role + " set '" + s + "' is not defined");
    };
    const auto checks_max = [&](const std::vector<double>& ts) {
      double m = 0.0;
      for (double t : ts) {
        if (!(t > 0.0)) add(where + ": t_checks must be positive");
        m = std::max(m, t);
      }
      return m;
    };

    if (req.op == "omega-limit" || req.op == "alpha-limit") {
      require_set(req.set, "source");
      if (req.op == "omega-limit")
        need_below(-ladder_max);
      else
        need_above(ladder_max);
    } else if (req.op == "verify-attractor") {
      require_set(req.attractor, "attractor");
      require_set(req.neighborhood, "neighborhood");
      need_below(-ladder_max);
      need_above(checks_max(req.t_checks));
    } else if (req.op == "basin") {
      require_set(req.attractor, "attractor");
      require_set(req.neighborhood, "neighborhood");
      need_above(c.basin.t_max);
    } else if (req.op == "repeller") {
      require_set(req.attractor, "attractor");
      require_set(req.neighborhood, "neighborhood");
      need_above(c.basin.t_max);
      if (req.cross_check) need_above(ladder_max);
    } else if (req.op == "pair") {
      require_set(req.attractor, "attractor");
      require_set(req.neighborhood, "neighborhood");
      const bool named_set = set_defined(req.repeller);
      const auto it = earlier.find(req.repeller);
      const bool from_analysis =
          it != earlier.end() && it->second->op == "repeller";
      if (!named_set && !from_analysis)
        add(where + ": repeller '" + req.repeller +
            "' is neither a defined set nor an earlier repeller analysis");
      if (from_analysis) need_above(c.basin.t_max);
      need_below(c.search.t_lo);
      need_above(c.search.t_hi);
    } else if (req.op == "build-decomposition") {
      if (req.attractors.size() != req.neighborhoods.size())
        add(where + ": attractors and neighborhoods must pair up");
      for (const auto& s : req.attractors) require_set(s, "attractor");
      for (const auto& s : req.neighborhoods) require_set(s, "neighborhood");
      need_above(c.basin.t_max + checks_max(req.t_checks));
    } else if (req.op == "verify-by-lyapunov") {
      const auto it = earlier.find(req.source);
      int levels = 0;
      if (it == earlier.end() || it->second->op != "build-decomposition") {
        add(where + ": source '" + req.source +
            "' is not an earlier build-decomposition analysis");
      } else {
        levels = static_cast<int>(it->second->attractors.size()) + 1;
        for (int lvl : req.omit) {
          if (lvl < 1 || lvl > levels)
            add(where + ": omit level " + std::to_string(lvl) +
                " out of range 1.." + std::to_string(levels));
        }
        if (static_cast<int>(req.omit.size()) >= levels)
          add(where + ": cannot omit every level");
      }
      need_below(c.search.t_lo);
      need_above(c.search.t_hi + kDecreaseHorizon);
      need_above(c.basin.t_max + kDecreaseHorizon +
                 checks_max(req.t_checks));
    } else if (req.op == "emit") {
      const auto it = earlier.find(req.source);
      if (req.kind != "limit-history" && req.kind != "lyapunov-field" &&
          req.kind != "orbit-profile") {
        add(where + ": unknown emit kind '" + req.kind + "'");
      } else if (it == earlier.end()) {
        add(where + ": source '" + req.source +
            "' is not an earlier analysis");
      } else if (req.kind == "limit-history") {
        if (it->second->op != "omega-limit" && it->second->op != "alpha-limit")
          add(where + ": limit-history needs an omega-limit or alpha-limit "
                      "source");
      } else {
        if (it->second->op != "pair")
          add(where + ": " + req.kind + " needs a pair source");
        need_below(c.search.t_lo);
        need_above(c.search.t_hi);
        if (req.kind == "orbit-profile") {
          if (static_cast<int>(req.x0.size()) != dim)
            add(where + ": x0 must have one coordinate per dimension");
          else {
            const Point x0 = dim == 1 ? make_point(req.x0[0])
                                      : make_point(req.x0[0], req.x0[1]);
            if (!c.system.box.contains(x0))
              add(where + ": x0 lies outside the state box");
          }
          if (!(req.t_max >= 0.0)) add(where + ": t_max must be nonnegative");
          if (!(req.t_step > 0.0)) add(where + ": t_step must be positive");
          need_above(c.search.t_hi + req.t_max);
        }
      }
    }
    earlier[req.id] = &req;
  }

  if (grid_ok) {
    if (c.noise.t_min > need_low)
      add("noise.t_min: must be at most " + fmt_real(need_low) +
          " to cover the requested pullback/search lookback");
    if (c.noise.t_max < need_high)
      add("noise.t_max: must be at least " + fmt_real(need_high) +
          " to cover the requested analyses");
  }
  return out;
}

std::vector<std::string> bundled_scenario_names() {
  return {"double-well-morse", "double-well-pair"};
}

std::string bundled_scenario_text(const std::string& name) {
  if (name == "double-well-morse") return detail::kDoubleWellMorseJson;
  if (name == "double-well-pair") return detail::kDoubleWellPairJson;
  throw ConfigError("unknown bundled scenario: " + name);
}

namespace {

// In-memory results an analysis leaves behind for downstream requests.
struct Produced {
  std::string op;
  std::vector<LimitResult> limits;
  std::optional<PairContext> pair;
  std::optional<SetRule> repeller_rule;
  std::optional<Filtration> filtration;
  std::optional<DecompositionReport> decomposition;
};

void write_set_rows(CsvWriter& w, std::uint64_t seed, const CellSet& s,
                    const Partition& part) {
  if (part.dim() == 1) {
    const auto intervals = to_intervals(s);
    for (std::size_t k = 0; k < intervals.size(); ++k)
      w.write_row({std::to_string(seed), std::to_string(k),
                   fmt_real(intervals[k].first),
                   fmt_real(intervals[k].second)});
  } else {
    for (int cell : s.members()) {
      const Point ctr = part.cell_center(cell);
      w.write_row({std::to_string(seed), std::to_string(cell),
                   fmt_real(ctr[0]), fmt_real(ctr[1])});
    }
  }
}

std::vector<std::string> set_csv_header(const Partition& part) {
  if (part.dim() == 1) return {"seed", "interval_index", "lo", "hi"};
  return {"seed", "cell", "center_x", "center_y"};
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config) {
  {
    const auto problems = validate_scenario(config);
    if (!problems.empty()) throw ConfigError(join_problems(problems));
  }

  std::string out_root = config.output_dir;
  if (const char* env = std::getenv("MORSEFLOW_OUTPUT_DIR"); env && *env)
    out_root = env;
  fs::create_directories(out_root);

  const CocycleSystem sys = make_system(config.system);
  const Partition part(config.system.box, config.cells_per_axis);
  const TimeGrid grid(config.noise.t_min, config.noise.t_max, config.noise.dt);
  const std::vector<std::uint64_t>& seeds = config.seeds;

  std::map<std::string, SetRule> named;
  for (const auto& [nm, spec] : config.sets)
    named.emplace(nm,
                  SetRule::constant(CellSet::from_boxes(part, spec.boxes), nm));

  PullbackSchedule sched;
  sched.t_ladder = config.schedule.t_ladder;
  sched.samples_per_cell = config.schedule.samples_per_cell;
  sched.stop_tol = config.schedule.stop_tol;
  sched.time_step = config.schedule.time_step;

  SearchWindow search;
  search.t_lo = config.search.t_lo;
  search.t_hi = config.search.t_hi;
  search.dt = config.search.dt;
  search.refine_iters = config.search.refine_iters;

  std::map<std::string, Produced> produced;

  RunReport report;
  report.scenario = config.name;
  report.output_dir = out_root;

  for (const AnalysisRequest& req : config.analyses) {
    AnalysisOutcome out;
    out.id = req.id;
    out.op = req.op;
    out.status = "ok";
    const auto started = std::chrono::steady_clock::now();
    const fs::path dir = fs::path(out_root) / req.id;
    fs::create_directories(dir);
    json summary = json::object();
    Produced prod;
    prod.op = req.op;
    const auto add_output = [&](const std::string& file) {
      out.outputs.push_back(req.id + "/" + file);
    };

    if (req.op == "omega-limit" || req.op == "alpha-limit") {
      const SetRule& source = named.at(req.set);
      CsvWriter sets_csv((dir / "limit_sets.csv").string(),
                         set_csv_header(part));
      CsvWriter conv_csv((dir / "convergence.csv").string(),
                         {"seed", "converged", "under_resolved", "final_cells",
                          "final_step"});
      std::size_t unconverged = 0, under_resolved = 0;
      for (std::uint64_t seed : seeds) {
        const NoisePath path = sample_wiener(grid, seed);
        LimitResult r = req.op == "omega-limit"
                            ? omega_limit(source, sys, path, sched)
                            : alpha_limit(source, sys, path, sched);
        write_set_rows(sets_csv, seed, r.limit, part);
        conv_csv.write_row(
            {std::to_string(seed), std::to_string(r.converged ? 1 : 0),
             std::to_string(r.under_resolved ? 1 : 0),
             std::to_string(r.limit.size()),
             fmt_real(r.history.empty() ? 0.0
                                        : r.history.back().hausdorff_step)});
        if (!r.converged) ++unconverged;
        if (r.under_resolved) ++under_resolved;
        prod.limits.push_back(std::move(r));
      }
      add_output("limit_sets.csv");
      add_output("convergence.csv");
      summary["converged_fraction"] =
          seeds.empty() ? 0.0
                        : 1.0 - static_cast<double>(unconverged) /
                                    static_cast<double>(seeds.size());
      summary["under_resolved_count"] = under_resolved;
      if (unconverged > 0)
        out.warnings.push_back(std::to_string(unconverged) + " of " +
                               std::to_string(seeds.size()) +
                               " seeds unconverged at the ladder top");
      if (under_resolved > 0)
        out.warnings.push_back(std::to_string(under_resolved) + " of " +
                               std::to_string(seeds.size()) +
                               " seeds under-resolved (empty pullback union)");

    } else if (req.op == "verify-attractor") {
      const AttractorReport rep =
          verify_attractor(named.at(req.attractor), named.at(req.neighborhood),
                           sys, grid, seeds, sched, req.t_checks);
      CsvWriter csv((dir / "seeds.csv").string(),
                    {"seed", "converged", "under_resolved",
                     "hausdorff_to_target", "invariant", "pass"});
      for (const auto& row : rep.rows)
        csv.write_row({std::to_string(row.seed),
                       std::to_string(row.converged ? 1 : 0),
                       std::to_string(row.under_resolved ? 1 : 0),
                       fmt_real(row.hausdorff_to_target),
                       std::to_string(row.invariant ? 1 : 0),
                       std::to_string(row.pass ? 1 : 0)});
      add_output("seeds.csv");
      summary["pass_fraction"] = rep.pass_fraction;
      if (!rep.passed()) {
        out.status = "finding";
        summary["reason"] = "pass fraction below 0.95";
      }

    } else if (req.op == "basin") {
      CsvWriter csv((dir / "basin.csv").string(), set_csv_header(part));
      double total_cells = 0.0;
      for (std::uint64_t seed : seeds) {
        const NoisePath path = sample_wiener(grid, seed);
        const CellSet b = basin_estimate(
            named.at(req.attractor), named.at(req.neighborhood), sys, path,
            config.basin.t_max, config.basin.t_step,
            config.basin.samples_per_cell);
        write_set_rows(csv, seed, b, part);
        total_cells += static_cast<double>(b.size());
      }
      add_output("basin.csv");
      summary["mean_cells"] =
          seeds.empty() ? 0.0 : total_cells / static_cast<double>(seeds.size());

    } else if (req.op == "repeller") {
      const SetRule rule = repeller_of(named.at(req.attractor),
                                       named.at(req.neighborhood), sys,
                                       config.basin);
      CsvWriter csv((dir / "repeller.csv").string(), set_csv_header(part));
      for (std::uint64_t seed : seeds) {
        const NoisePath path = sample_wiener(grid, seed);
        write_set_rows(csv, seed, rule(path), part);
      }
      add_output("repeller.csv");
      if (req.cross_check) {
        PullbackSchedule cc = sched;
        // Backward flow contracts hard; a coarser pullback step is plenty
        // and keeps the duality check cheap.
        cc.time_step = std::max(cc.time_step, 0.05);
        const RepellerCheckReport rep = cross_check_repeller(
            rule, named.at(req.neighborhood), sys, grid, seeds, cc);
        CsvWriter dual((dir / "duality.csv").string(),
                       {"seed", "discrepancy", "consistent"});
        for (const auto& row : rep.rows)
          dual.write_row({std::to_string(row.seed), fmt_real(row.discrepancy),
                          std::to_string(row.consistent ? 1 : 0)});
        add_output("duality.csv");
        summary["duality_pass_fraction"] = rep.pass_fraction;
        if (!rep.consistent()) {
          out.status = "finding";
          summary["reason"] =
              "basin-complement and alpha-limit repellers disagree";
        }
      }
      prod.repeller_rule = rule;

    } else if (req.op == "pair") {
      SetRule repeller_rule;
      if (named.count(req.repeller)) {
        repeller_rule = named.at(req.repeller);
      } else {
        repeller_rule = *produced.at(req.repeller).repeller_rule;
      }
      PairContext ctx;
      ctx.attractor = named.at(req.attractor);
      ctx.repeller = repeller_rule;
      ctx.neighborhood = named.at(req.neighborhood);
      ctx.search = search;
      std::size_t loose = 0, touching = 0;
      for (std::uint64_t seed : seeds) {
        const NoisePath path = sample_wiener(grid, seed);
        if (!subset(ctx.attractor(path), erode(ctx.neighborhood(path), 1)))
          ++loose;
        if (!set_intersect(ctx.repeller(path), ctx.neighborhood(path))
                 .is_empty())
          ++touching;
      }
      summary["attractor_outside_interior_count"] = loose;
      summary["repeller_touches_neighborhood_count"] = touching;
      if (loose > 0)
        out.warnings.push_back(
            std::to_string(loose) +
            " seeds: attractor not inside the neighborhood interior");
      if (touching > 0)
        out.warnings.push_back(std::to_string(touching) +
                               " seeds: repeller intersects the neighborhood");
      prod.pair = std::move(ctx);

    } else if (req.op == "build-decomposition") {
      Filtration f;
      f.partition = part;
      for (const auto& nm : req.attractors) f.attractors.push_back(named.at(nm));
      for (const auto& nm : req.neighborhoods)
        f.neighborhoods.push_back(named.at(nm));
      DecompositionReport rep = build_decomposition(
          f, sys, grid, seeds, config.basin, req.t_checks);
      const UnionIdentityReport urep =
          morse_union_identity_check(rep.decomposition, f, grid, seeds);

      CsvWriter sets_csv((dir / "morse_sets.csv").string(),
                         part.dim() == 1
                             ? std::vector<std::string>{"seed", "level",
                                                        "interval_index", "lo",
                                                        "hi"}
                             : std::vector<std::string>{"seed", "level", "cell",
                                                        "center_x",
                                                        "center_y"});
      for (const auto& row : rep.rows) {
        for (std::size_t lvl = 0; lvl < row.morse_cells.size(); ++lvl) {
          const CellSet& m = row.morse_cells[lvl];
          if (part.dim() == 1) {
            const auto intervals = to_intervals(m);
            for (std::size_t k = 0; k < intervals.size(); ++k)
              sets_csv.write_row({std::to_string(row.seed),
                                  std::to_string(lvl + 1), std::to_string(k),
                                  fmt_real(intervals[k].first),
                                  fmt_real(intervals[k].second)});
          } else {
            for (int cell : m.members()) {
              const Point ctr = part.cell_center(cell);
              sets_csv.write_row({std::to_string(row.seed),
                                  std::to_string(lvl + 1), std::to_string(cell),
                                  fmt_real(ctr[0]), fmt_real(ctr[1])});
            }
          }
        }
      }
      add_output("morse_sets.csv");

      CsvWriter plateau_csv((dir / "plateaus.csv").string(),
                            {"level", "alpha_num", "alpha_den", "alpha"});
      for (std::size_t lvl = 0; lvl < rep.decomposition.plateaus.size(); ++lvl) {
        const Rational& a = rep.decomposition.plateaus[lvl];
        plateau_csv.write_row({std::to_string(lvl + 1), std::to_string(a.num),
                               std::to_string(a.den), fmt_real(a.to_double())});
      }
      add_output("plateaus.csv");

      CsvWriter checks_csv((dir / "checks.csv").string(),
                           {"seed", "disjoint", "grid_slack", "invariant",
                            "union_discrepancy", "union_pass", "pass"});
      for (std::size_t si = 0; si < rep.rows.size(); ++si) {
        const auto& row = rep.rows[si];
        const double disc = urep.per_seed[si];
        const bool union_pass =
            disc <= 2.0 * part.cell_diameter() + 1e-12;  // reporting aid
        checks_csv.write_row(
            {std::to_string(row.seed), std::to_string(row.disjoint ? 1 : 0),
             std::to_string(row.grid_slack ? 1 : 0),
             std::to_string(row.invariant ? 1 : 0), fmt_real(disc),
             std::to_string(union_pass ? 1 : 0),
             std::to_string(row.pass ? 1 : 0)});
      }
      add_output("checks.csv");

      summary["levels"] = rep.decomposition.levels();
      summary["pass_fraction"] = rep.pass_fraction;
      summary["union_pass_fraction"] = urep.pass_fraction;
      summary["union_max_discrepancy"] = urep.max_discrepancy;
      if (rep.pass_fraction < 0.95 || urep.pass_fraction < 0.95) {
        out.status = "finding";
        summary["reason"] = "decomposition checks below the 0.95 seed fraction";
      }
      prod.filtration = std::move(f);
      prod.decomposition = std::move(rep);

    } else if (req.op == "verify-by-lyapunov") {
      const Produced& src = produced.at(req.source);
      const Filtration& f = *src.filtration;
      const MorseDecomposition& d = src.decomposition->decomposition;
      std::vector<SetRule> candidates;
      for (int lvl = 1; lvl <= d.levels(); ++lvl) {
        if (std::find(req.omit.begin(), req.omit.end(), lvl) == req.omit.end())
          candidates.push_back(
              d.morse_sets[static_cast<std::size_t>(lvl - 1)]);
      }
      MorseContext mctx;
      for (std::size_t i = 0; i < f.attractors.size(); ++i) {
        PairContext pc;
        pc.attractor = f.attractors[i];
        pc.repeller = d.repellers[i + 1];
        pc.neighborhood = f.neighborhoods[i];
        pc.search = search;
        mctx.pairs.push_back(std::move(pc));
      }
      const CocycleSystem sys_copy = sys;
      const LyapunovField field = [mctx, sys_copy](const NoisePath& p,
                                                   const Point& x) {
        return morse_lyapunov(mctx, sys_copy, p, x);
      };
      LyapunovCheckParams params;
      params.invariance_t_checks = req.t_checks;
      const LyapunovCertificate cert =
          verify_by_lyapunov(candidates, field, sys, grid, seeds, params);

      CsvWriter cond_csv((dir / "conditions.csv").string(),
                         {"condition", "pass", "detail"});
      cond_csv.write_row({"disjoint-invariant-candidates",
                          std::to_string(cert.precondition_ok ? 1 : 0), ""});
      cond_csv.write_row({"constant-on-candidates",
                          std::to_string(cert.constancy_ok ? 1 : 0),
                          "max spread " + fmt_real(cert.max_spread)});
      cond_csv.write_row({"strictly-ordered-plateaus",
                          std::to_string(cert.ordering_ok ? 1 : 0), ""});
      cond_csv.write_row(
          {"strict-decrease-off-candidates",
           std::to_string(cert.decrease_ok ? 1 : 0),
           std::to_string(cert.violations.size()) + " witnesses, " +
               std::to_string(cert.decrease_checked) + " checks, " +
               std::to_string(cert.censored_skipped) + " censored skipped"});
      add_output("conditions.csv");

      CsvWriter wit_csv((dir / "witnesses.csv").string(),
                        {"seed", "cell", "t", "L_before", "L_after"});
      for (const auto& w : cert.violations)
        wit_csv.write_row({std::to_string(w.seed), std::to_string(w.cell),
                           fmt_real(w.t), fmt_real(w.L_before),
                           fmt_real(w.L_after)});
      add_output("witnesses.csv");

      CsvWriter plat_csv((dir / "plateaus.csv").string(),
                         {"candidate", "L"});
      for (std::size_t i = 0; i < cert.plateau_values.size(); ++i)
        plat_csv.write_row(
            {std::to_string(i + 1), fmt_real(cert.plateau_values[i])});
      add_output("plateaus.csv");

      summary["consistent"] = cert.consistent();
      summary["decrease_checked"] = cert.decrease_checked;
      summary["censored_skipped"] = cert.censored_skipped;
      summary["violation_count"] = cert.violations.size();
      if (!cert.consistent()) {
        out.status = "finding";
        summary["reason"] = "candidate family fails the Lyapunov conditions";
      }

    } else if (req.op == "emit") {
      const Produced& src = produced.at(req.source);
      if (req.kind == "limit-history") {
        CsvWriter csv((dir / "history.csv").string(),
                      {"seed", "T", "hausdorff_step", "cells"});
        for (std::size_t si = 0; si < seeds.size(); ++si) {
          for (const auto& entry : src.limits[si].history)
            csv.write_row({std::to_string(seeds[si]), fmt_real(entry.T),
                           fmt_real(entry.hausdorff_step),
                           std::to_string(entry.set.size())});
        }
        add_output("history.csv");
      } else if (req.kind == "lyapunov-field") {
        const PairContext& ctx = *src.pair;
        CsvWriter csv((dir / "field.csv").string(),
                      part.dim() == 1
                          ? std::vector<std::string>{"seed", "x", "tau_tag",
                                                     "tau_value", "L"}
                          : std::vector<std::string>{"seed", "x", "y",
                                                     "tau_tag", "tau_value",
                                                     "L"});
        for (std::uint64_t seed : seeds) {
          const NoisePath path = sample_wiener(grid, seed);
          for (long cell = 0; cell < part.cell_count(); ++cell) {
            const Point x = part.cell_center(static_cast<int>(cell));
            const EntranceResult er = entrance_time(ctx, sys, path, x);
            std::vector<std::string> row{std::to_string(seed), fmt_real(x[0])};
            if (part.dim() == 2) row.push_back(fmt_real(x[1]));
            row.push_back(tau_tag(er));
            row.push_back(fmt_real(er.tau.is_finite() ? er.tau.value : 0.0));
            row.push_back(fmt_real(lyap_value(er.tau)));
            csv.write_row(row);
          }
        }
        add_output("field.csv");
      } else {  // orbit-profile
        const PairContext& ctx = *src.pair;
        const Point x0 = part.dim() == 1 ? make_point(req.x0[0])
                                         : make_point(req.x0[0], req.x0[1]);
        CsvWriter csv((dir / "profile.csv").string(),
                      part.dim() == 1
                          ? std::vector<std::string>{"seed", "t", "x",
                                                     "tau_tag", "tau_value",
                                                     "L"}
                          : std::vector<std::string>{"seed", "t", "x", "y",
                                                     "tau_tag", "tau_value",
                                                     "L"});
        for (std::uint64_t seed : seeds) {
          const NoisePath path = sample_wiener(grid, seed);
          const auto profile = monotonicity_profile(ctx, sys, path, x0,
                                                    req.t_max, req.t_step);
          for (const auto& pt : profile) {
            std::vector<std::string> row{std::to_string(seed), fmt_real(pt.t),
                                         fmt_real(pt.x[0])};
            if (part.dim() == 2) row.push_back(fmt_real(pt.x[1]));
            row.push_back(tau_tag(pt.entrance));
            row.push_back(fmt_real(
                pt.entrance.tau.is_finite() ? pt.entrance.tau.value : 0.0));
            row.push_back(fmt_real(pt.L));
            csv.write_row(row);
          }
        }
        add_output("profile.csv");
      }
    }

    out.summary_json = summary.dump();
    out.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    produced.emplace(req.id, std::move(prod));
    report.analyses.push_back(std::move(out));
  }

  json jr;
  jr["scenario"] = report.scenario;
  json analyses = json::array();
  for (const auto& a : report.analyses) {
    json ja;
    ja["id"] = a.id;
    ja["op"] = a.op;
    ja["status"] = a.status;
    ja["outputs"] = a.outputs;
    ja["warnings"] = a.warnings;
    ja["summary"] = json::parse(a.summary_json);
    analyses.push_back(ja);
  }
  jr["analyses"] = analyses;
  std::ofstream report_file(fs::path(out_root) / "report.json",
                            std::ios::binary);
  if (!report_file)
    throw ConfigError("cannot write report.json under " + out_root);
  report_file << jr.dump(2) << "\n";
  return report;
}

}  // namespace morseflow
