#include "formlab/scenario_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "formlab/errors.hpp"
#include "json.hpp"

namespace formlab {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

// Every object is walked with an explicit key whitelist so typos surface
// as errors instead of silently falling back to defaults.
void check_keys(const json& j, const char* where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(std::string(where) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(std::string("unknown key \"") + it.key() + "\" in " + where);
  }
}

double get_num(const json& j, const char* where) {
  if (!j.is_number()) fail(std::string(where) + " must be a number");
  return j.get<double>();
}

int get_int(const json& j, const char* where) {
  if (!j.is_number_integer()) fail(std::string(where) + " must be an integer");
  return j.get<int>();
}

std::uint64_t get_seed(const json& j, const char* where) {
  if (!j.is_number_unsigned() && !j.is_number_integer())
    fail(std::string(where) + " must be a nonnegative integer");
  auto v = j.get<std::int64_t>();
  if (v < 0) fail(std::string(where) + " must be a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

std::vector<Edge> parse_edges(const json& j, const char* where, int n) {
  if (!j.is_array()) fail(std::string(where) + " must be an array of pairs");
  std::vector<Edge> edges;
  edges.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2)
      fail(std::string(where) + " entries must be [from,to] pairs");
    Edge edge{get_int(e[0], where), get_int(e[1], where)};
    if (edge.from < 1 || edge.from > n || edge.to < 1 || edge.to > n)
      fail(std::string(where) + " references an agent outside 1.." +
           std::to_string(n));
    if (edge.from == edge.to)
      fail(std::string(where) + " contains a self-loop");
    edges.push_back(edge);
  }
  return edges;
}

ObservationMode parse_obs_mode(const json& j) {
  if (!j.is_string()) fail("obs_mode must be a string");
  auto s = j.get<std::string>();
  if (s == "range_only") return ObservationMode::RangeOnly;
  if (s == "relative_position") return ObservationMode::RelativePosition;
  fail("obs_mode must be \"range_only\" or \"relative_position\"");
}

ObjectiveMode parse_obj_mode(const json& j) {
  if (!j.is_string()) fail("obj_mode must be a string");
  auto s = j.get<std::string>();
  if (s == "range_only") return ObjectiveMode::RangeOnly;
  if (s == "range_and_angle") return ObjectiveMode::RangeAndAngle;
  if (s == "full_information") return ObjectiveMode::FullInformation;
  fail("obj_mode must be \"range_only\", \"range_and_angle\" or "
       "\"full_information\"");
}

MultiPoly parse_poly(const json& j, int n_vars) {
  if (!j.is_array()) fail("edge_polys entries must be arrays of terms");
  MultiPoly p;
  p.n_vars = n_vars;
  for (const auto& t : j) {
    check_keys(t, "polynomial term", {"coeff", "exps"});
    if (!t.contains("coeff") || !t.contains("exps"))
      fail("polynomial term needs \"coeff\" and \"exps\"");
    PolyTerm term;
    term.coeff = get_num(t["coeff"], "coeff");
    if (!t["exps"].is_array()) fail("exps must be an array of integers");
    for (const auto& e : t["exps"]) {
      int v = get_int(e, "exps");
      if (v < 0) fail("exps entries must be nonnegative");
      term.exps.push_back(v);
    }
    if (static_cast<int>(term.exps.size()) != n_vars)
      fail("exps length " + std::to_string(term.exps.size()) +
           " does not match the edge variable count " + std::to_string(n_vars));
    p.terms.push_back(std::move(term));
  }
  return p;
}

ControlLaw parse_law(const json& j, const Scenario& partial) {
  check_keys(j, "law", {"kind", "gains", "edge_polys", "degree_cap"});
  if (!j.contains("kind")) fail("law.kind is required");
  if (!j["kind"].is_string()) fail("law.kind must be a string");
  auto kind = j["kind"].get<std::string>();
  ControlLaw law;
  int m = partial.h_graph.m();
  if (kind == "linear_gain") {
    law.kind = LawKind::LinearGain;
    law.gains.assign(m, 1.0);
    if (j.contains("gains")) {
      if (!j["gains"].is_array() || static_cast<int>(j["gains"].size()) != m)
        fail("law.gains must list one gain per observation edge (" +
             std::to_string(m) + ")");
      for (int e = 0; e < m; ++e) law.gains[e] = get_num(j["gains"][e], "gains");
    }
  } else if (kind == "gradient") {
    law.kind = LawKind::Gradient;
  } else if (kind == "triangle_cyclic") {
    law.kind = LawKind::TriangleCyclic;
  } else if (kind == "polynomial") {
    law.kind = LawKind::PolynomialCustom;
    if (j.contains("degree_cap")) {
      law.degree_cap = get_int(j["degree_cap"], "degree_cap");
      if (law.degree_cap < 0) fail("degree_cap must be nonnegative");
    }
    if (!j.contains("edge_polys") || !j["edge_polys"].is_array() ||
        static_cast<int>(j["edge_polys"].size()) != m)
      fail("polynomial law needs edge_polys with one entry per observation "
           "edge (" + std::to_string(m) + ")");
    for (int e = 0; e < m; ++e) {
      int nv = scenario_edge_vars(partial, e);
      law.edge_polys.push_back(parse_poly(j["edge_polys"][e], nv));
      if (law.edge_polys.back().total_degree() > law.degree_cap)
        fail("edge_polys[" + std::to_string(e) + "] exceeds degree_cap " +
             std::to_string(law.degree_cap));
    }
  } else {
    fail("law.kind must be one of linear_gain, gradient, triangle_cyclic, "
         "polynomial");
  }
  if (kind != "linear_gain" && j.contains("gains"))
    fail("law.gains only applies to linear_gain");
  if (kind != "polynomial" && (j.contains("edge_polys") || j.contains("degree_cap")))
    fail("edge_polys/degree_cap only apply to the polynomial law");
  return law;
}

IntegrationSettings parse_integration(const json& j) {
  check_keys(j, "integration", {"dt", "T", "guard_radius"});
  IntegrationSettings is;
  if (j.contains("dt")) is.dt = get_num(j["dt"], "integration.dt");
  if (j.contains("T")) is.total_time = get_num(j["T"], "integration.T");
  if (j.contains("guard_radius"))
    is.guard_radius = get_num(j["guard_radius"], "integration.guard_radius");
  if (!(is.dt > 0)) fail("integration.dt must be positive");
  if (!(is.total_time >= 0)) fail("integration.T must be nonnegative");
  if (!(is.guard_radius > 0)) fail("integration.guard_radius must be positive");
  return is;
}

void parse_bounds(const json& j, int dims, Vec2& low, Vec2& high) {
  check_keys(j, "mc.bounds", {"low", "high"});
  if (!j.contains("low") || !j.contains("high"))
    fail("mc.bounds needs \"low\" and \"high\"");
  auto read = [&](const json& a, Vec2& out, const char* which) {
    if (!a.is_array() || static_cast<int>(a.size()) != dims)
      fail(std::string("mc.bounds.") + which + " must have " +
           std::to_string(dims) + " entries");
    out = Vec2::Zero();
    for (int k = 0; k < dims; ++k) out[k] = get_num(a[k], which);
  };
  read(j["low"], low, "low");
  read(j["high"], high, "high");
  for (int k = 0; k < dims; ++k)
    if (!(low[k] < high[k])) fail("mc.bounds must satisfy low < high");
}

McSettings parse_mc(const json& j, int dims) {
  check_keys(j, "mc", {"count", "bounds", "seed"});
  McSettings mc;
  if (j.contains("count")) {
    mc.count = get_int(j["count"], "mc.count");
    if (mc.count < 1) fail("mc.count must be positive");
  }
  if (j.contains("seed")) mc.seed = get_seed(j["seed"], "mc.seed");
  if (j.contains("bounds")) parse_bounds(j["bounds"], dims, mc.low, mc.high);
  return mc;
}

PerturbationSpec parse_robustness(const json& j) {
  check_keys(j, "robustness", {"epsilon", "degree", "trials", "seed"});
  PerturbationSpec spec;
  if (j.contains("epsilon")) {
    spec.epsilon = get_num(j["epsilon"], "robustness.epsilon");
    if (!(spec.epsilon >= 0)) fail("robustness.epsilon must be nonnegative");
  }
  if (j.contains("degree")) {
    spec.basis_degree = get_int(j["degree"], "robustness.degree");
    if (spec.basis_degree < 0) fail("robustness.degree must be nonnegative");
  }
  if (j.contains("trials")) {
    spec.trials = get_int(j["trials"], "robustness.trials");
    if (spec.trials < 1) fail("robustness.trials must be positive");
  }
  if (j.contains("seed")) spec.seed = get_seed(j["seed"], "robustness.seed");
  return spec;
}

ScenarioFile parse_formation(const json& j) {
  check_keys(j, "scenario",
             {"system", "n", "target", "h_edges", "delta_edges", "obs_mode",
              "obj_mode", "law", "integration", "mc", "robustness"});
  for (const char* req : {"n", "target", "h_edges", "delta_edges", "obs_mode",
                          "obj_mode", "law"})
    if (!j.contains(req))
      fail(std::string("scenario is missing required key \"") + req + "\"");

  ScenarioFile sf;
  sf.kind = SystemKind::Formation;
  Scenario s;

  int n = get_int(j["n"], "n");
  if (n < 2) fail("n must be at least 2");
  if (!j["target"].is_array() || static_cast<int>(j["target"].size()) != n - 1)
    fail("target must list " + std::to_string(n - 1) +
         " planar points (agent 1 sits at the origin)");
  for (const auto& p : j["target"]) {
    if (!p.is_array() || p.size() != 2)
      fail("target entries must be [x,y] pairs");
    s.target.points.emplace_back(get_num(p[0], "target"),
                                 get_num(p[1], "target"));
  }

  s.h_graph.n = n;
  s.h_graph.edges = parse_edges(j["h_edges"], "h_edges", n);
  s.delta_graph.n = n;
  s.delta_graph.edges = parse_edges(j["delta_edges"], "delta_edges", n);
  s.obs_mode = parse_obs_mode(j["obs_mode"]);
  s.obj_mode = parse_obj_mode(j["obj_mode"]);
  s.law = parse_law(j["law"], s);
  if (j.contains("integration")) s.integration = parse_integration(j["integration"]);

  try {
    s.validate();
  } catch (const std::exception& ex) {
    fail(ex.what());
  }

  sf.formation = std::move(s);
  if (j.contains("mc")) sf.mc = parse_mc(j["mc"], 2);
  if (j.contains("robustness")) sf.robustness = parse_robustness(j["robustness"]);
  return sf;
}

ScenarioFile parse_scalar(const json& j) {
  check_keys(j, "scenario",
             {"system", "k", "design", "integration", "mc", "robustness"});
  ScenarioFile sf;
  sf.kind = SystemKind::ScalarCubic;
  ScalarCubicScenario sc;
  if (j.contains("k")) sc.k = get_num(j["k"], "k");
  if (j.contains("design")) {
    if (!j["design"].is_array()) fail("design must be an array of numbers");
    for (const auto& d : j["design"]) sc.design.push_back(get_num(d, "design"));
  }
  if (j.contains("integration")) sc.integration = parse_integration(j["integration"]);
  sf.scalar = std::move(sc);
  if (j.contains("mc")) sf.mc = parse_mc(j["mc"], 1);
  if (j.contains("robustness")) sf.robustness = parse_robustness(j["robustness"]);
  return sf;
}

json edges_to_json(const std::vector<Edge>& edges) {
  json a = json::array();
  for (const auto& e : edges) a.push_back({e.from, e.to});
  return a;
}

json poly_to_json(const MultiPoly& p) {
  json a = json::array();
  for (const auto& t : p.terms) {
    json term;
    term["coeff"] = t.coeff;
    term["exps"] = t.exps;
    a.push_back(term);
  }
  return a;
}

const char* stability_name(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    default: return "marginal";
  }
}

}  // namespace

ScenarioFile parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& ex) {
    fail(std::string("invalid JSON: ") + ex.what());
  }
  if (!j.is_object()) fail("scenario must be a JSON object");
  std::string system = "formation";
  if (j.contains("system")) {
    if (!j["system"].is_string()) fail("system must be a string");
    system = j["system"].get<std::string>();
  }
  if (system == "formation") return parse_formation(j);
  if (system == "scalar_cubic") return parse_scalar(j);
  fail("system must be \"formation\" or \"scalar_cubic\"");
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const ScenarioFile& sf) {
  json j;
  if (sf.kind == SystemKind::ScalarCubic) {
    const auto& sc = *sf.scalar;
    j["system"] = "scalar_cubic";
    j["k"] = sc.k;
    j["design"] = sc.design;
    j["integration"] = {{"dt", sc.integration.dt},
                        {"T", sc.integration.total_time},
                        {"guard_radius", sc.integration.guard_radius}};
    j["mc"] = {{"count", sf.mc.count},
               {"bounds", {{"low", {sf.mc.low.x()}}, {"high", {sf.mc.high.x()}}}},
               {"seed", sf.mc.seed}};
  } else {
    const auto& s = *sf.formation;
    j["system"] = "formation";
    j["n"] = s.n();
    json target = json::array();
    for (const auto& p : s.target.points) target.push_back({p.x(), p.y()});
    j["target"] = target;
    j["h_edges"] = edges_to_json(s.h_graph.edges);
    j["delta_edges"] = edges_to_json(s.delta_graph.edges);
    j["obs_mode"] = to_string(s.obs_mode);
    j["obj_mode"] = to_string(s.obj_mode);
    json law;
    law["kind"] = to_string(s.law.kind);
    if (s.law.kind == LawKind::LinearGain) law["gains"] = s.law.gains;
    if (s.law.kind == LawKind::PolynomialCustom) {
      law["degree_cap"] = s.law.degree_cap;
      json polys = json::array();
      for (const auto& p : s.law.edge_polys) polys.push_back(poly_to_json(p));
      law["edge_polys"] = polys;
    }
    j["law"] = law;
    j["integration"] = {{"dt", s.integration.dt},
                        {"T", s.integration.total_time},
                        {"guard_radius", s.integration.guard_radius}};
    j["mc"] = {{"count", sf.mc.count},
               {"bounds",
                {{"low", {sf.mc.low.x(), sf.mc.low.y()}},
                 {"high", {sf.mc.high.x(), sf.mc.high.y()}}}},
               {"seed", sf.mc.seed}};
  }
  j["robustness"] = {{"epsilon", sf.robustness.epsilon},
                     {"degree", sf.robustness.basis_degree},
                     {"trials", sf.robustness.trials},
                     {"seed", sf.robustness.seed}};
  return j.dump(2) + "\n";
}

std::string to_json(const TypeAReport& rep) {
  json j;
  j["n_samples"] = rep.n_samples;
  j["frac_to_design"] = rep.frac_to_design;
  j["frac_to_ancillary_stable"] = rep.frac_to_ancillary_stable;
  j["frac_nonconvergent"] = rep.frac_nonconvergent;
  j["feasible"] = rep.feasible;
  j["type_a"] = rep.type_a;
  j["strongly_type_a"] = rep.strongly_type_a;
  j["insufficient_convergence"] = rep.insufficient_convergence;
  if (rep.witness_ancillary) {
    json w;
    w["state"] = std::vector<double>(
        rep.witness_ancillary->state.data(),
        rep.witness_ancillary->state.data() + rep.witness_ancillary->state.size());
    w["stability"] = stability_name(rep.witness_ancillary->stability);
    j["witness_ancillary"] = w;
  } else {
    j["witness_ancillary"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string to_json(const RobustnessReport& rep) {
  json j;
  j["trials"] = rep.trials;
  j["survived"] = rep.survived;
  j["robust"] = rep.robust;
  j["max_drift"] = rep.max_drift;
  return j.dump(2) + "\n";
}

std::string to_json(const std::vector<EquilibriumRecord>& records, int agents) {
  json arr = json::array();
  for (const auto& r : records) {
    json e;
    e["state"] = std::vector<double>(r.state.data(), r.state.data() + r.state.size());
    json spec = json::array();
    for (const auto& ev : r.spectrum) spec.push_back({ev.real(), ev.imag()});
    e["spectrum"] = spec;
    e["symmetry_dims"] = r.symmetry_dims;
    e["stability"] = stability_name(r.stability);
    e["designation"] =
        r.designation == Designation::Design ? "design" : "ancillary";
    arr.push_back(e);
  }
  json j;
  j["agents"] = agents;
  j["equilibria"] = arr;
  return j.dump(2) + "\n";
}

std::string trajectory_csv(const std::vector<double>& times,
                           const std::vector<VecX>& states) {
  if (times.size() != states.size())
    throw DimensionMismatch("trajectory_csv: times and states differ in length");
  std::string out = "t";
  const int dim = states.empty() ? 0 : static_cast<int>(states.front().size());
  if (dim % 2 == 0 && dim > 0) {
    for (int i = 1; i <= dim / 2; ++i) {
      out += ",x" + std::to_string(i) + "x,x" + std::to_string(i) + "y";
    }
  } else {
    for (int i = 1; i <= dim; ++i) out += ",x" + std::to_string(i);
  }
  out += "\n";
  for (std::size_t r = 0; r < times.size(); ++r) {
    if (static_cast<int>(states[r].size()) != dim)
      throw DimensionMismatch("trajectory_csv: ragged state rows");
    out += format_double(times[r]);
    for (int k = 0; k < dim; ++k) out += "," + format_double(states[r][k]);
    out += "\n";
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::vector<VecX> flat;
  flat.reserve(traj.states.size());
  for (const auto& c : traj.states) flat.push_back(c.flat());
  return trajectory_csv(traj.times, flat);
}

void parse_trajectory_csv(const std::string& text, std::vector<double>& times,
                          std::vector<VecX>& states) {
  times.clear();
  states.clear();
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("trajectory CSV has a non-numeric cell: " + cell);
      }
    }
    if (row.size() < 2) throw ConfigError("trajectory CSV row too short");
    times.push_back(row[0]);
    VecX x(row.size() - 1);
    for (std::size_t k = 1; k < row.size(); ++k) x[k - 1] = row[k];
    states.push_back(std::move(x));
  }
}

}  // namespace formlab
