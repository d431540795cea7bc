// Command-line front end: rigidity checks, simulation, equilibrium maps,
// stability assessment, robustness probes, and SVG plots, all driven by
// scenario JSON files. Exit codes: 0 success, 1 invalid input, 2 numerical
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "formlab/dynamics.hpp"
#include "formlab/equilibria.hpp"
#include "formlab/errors.hpp"
#include "formlab/geometry.hpp"
#include "formlab/rigidity.hpp"
#include "formlab/rng.hpp"
#include "formlab/robustness.hpp"
#include "formlab/scenario_io.hpp"
#include "formlab/stability.hpp"
#include "formlab/svg_render.hpp"

namespace fs = std::filesystem;
using namespace formlab;

namespace {

struct GlobalOpts {
  std::string out = ".";
  std::optional<std::uint64_t> seed;  // overrides every seed in the file
  bool quiet = false;
};

GlobalOpts g_opts;

void say(const std::string& line) {
  if (!g_opts.quiet) std::cout << line << "\n";
}

std::string fnum(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

fs::path write_out(const std::string& name, const std::string& content) {
  fs::path dir(g_opts.out);
  fs::create_directories(dir);
  fs::path path = dir / name;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << content;
  say("wrote " + path.string());
  return path;
}

ScenarioFile load(const std::string& path) {
  ScenarioFile sf = load_scenario(path);
  if (g_opts.seed) {
    sf.mc.seed = *g_opts.seed;
    sf.robustness.seed = *g_opts.seed;
  }
  return sf;
}

const Scenario& need_formation(const ScenarioFile& sf, const char* what) {
  if (sf.kind != SystemKind::Formation) {
    throw ConfigError(std::string(what) + " needs a formation scenario");
  }
  return *sf.formation;
}

// Accepts "random:SEED" or a path to a JSON array: n [x,y] pairs for
// formation systems, a flat list for scalar ones.
VecX initial_state(const std::string& x0_arg, const ScenarioFile& sf) {
  const int dim = sf.kind == SystemKind::Formation ? 2 * sf.formation->n() : 1;
  if (x0_arg.rfind("random:", 0) == 0) {
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(x0_arg.substr(7));
    } catch (const std::exception&) {
      throw ConfigError("bad --x0 seed: " + x0_arg);
    }
    if (sf.kind == SystemKind::Formation) {
      return sample_initial(sf.formation->n(), sf.mc.low, sf.mc.high, seed, 1)[0].flat();
    }
    auto rng = make_rng(seed, 0);
    std::uniform_real_distribution<double> u(sf.mc.low.x(), sf.mc.high.x());
    VecX x(1);
    x[0] = u(rng);
    return x;
  }
  std::ifstream in(x0_arg);
  if (!in) throw ConfigError("cannot open initial state file: " + x0_arg);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad initial state JSON: ") + ex.what());
  }
  if (!j.is_array()) throw ConfigError("initial state must be a JSON array");
  VecX x(dim);
  if (sf.kind == SystemKind::Formation) {
    if (static_cast<int>(j.size()) != sf.formation->n()) {
      throw ConfigError("initial state needs one [x,y] pair per agent");
    }
    for (int i = 0; i < sf.formation->n(); ++i) {
      if (!j[i].is_array() || j[i].size() != 2 || !j[i][0].is_number() || !j[i][1].is_number()) {
        throw ConfigError("initial state entries must be [x,y] pairs");
      }
      x[2 * i] = j[i][0].get<double>();
      x[2 * i + 1] = j[i][1].get<double>();
    }
  } else {
    if (static_cast<int>(j.size()) != dim || !j[0].is_number()) {
      throw ConfigError("initial state must hold exactly one number");
    }
    x[0] = j[0].get<double>();
  }
  return x;
}

bool scalar_on_design(const ScalarCubicScenario& sc, double x) {
  for (double d : sc.design) {
    if (std::abs(x - d) <= 1e-6 * (1.0 + std::abs(d))) return true;
  }
  return false;
}

AssessProblem scalar_problem(const ScenarioFile& sf) {
  const auto& sc = *sf.scalar;
  AssessProblem p;
  p.sys = scalar_cubic_system(sc.k);
  p.low = VecX::Constant(1, sf.mc.low.x());
  p.high = VecX::Constant(1, sf.mc.high.x());
  p.is_design = [sc](const VecX& x) { return scalar_on_design(sc, x[0]); };
  for (double d : sc.design) p.design_points.push_back(VecX::Constant(1, d));
  p.sweep_seeds.push_back(VecX::Zero(1));
  p.sweep_seeds.push_back(p.low);
  p.sweep_seeds.push_back(p.high);
  for (double d : sc.design) {
    p.sweep_seeds.push_back(VecX::Constant(1, d + 0.37 * (1.0 + std::abs(d))));
    p.sweep_seeds.push_back(VecX::Constant(1, d - 0.37 * (1.0 + std::abs(d))));
  }
  p.dt = sc.integration.dt;
  return p;
}

int cmd_rigidity(const std::string& path, const std::string& graph_sel) {
  ScenarioFile sf = load(path);
  const Scenario& s = need_formation(sf, "rigidity");
  const FormationGraph& g = graph_sel == "h" ? s.h_graph : s.delta_graph;
  Framework fw{g, s.target.to_configuration()};
  const MatX rm = rigidity_matrix(fw);
  const int rank = numerical_rank(rm);
  const bool inf_rigid = is_infinitesimally_rigid(fw);
  const bool min_rigid = is_minimally_rigid(fw);
  say("graph: " + graph_sel + " (" + std::to_string(g.m()) + " edges over " +
      std::to_string(g.n) + " agents)");
  say("rank: " + std::to_string(rank) + " (rigid formations need " +
      std::to_string(2 * g.n - 3) + ")");
  say(std::string("infinitesimally_rigid: ") + (inf_rigid ? "true" : "false"));
  say(std::string("minimally_rigid: ") + (min_rigid ? "true" : "false"));
  return 0;
}

int cmd_simulate(const std::string& path, std::string x0_arg) {
  ScenarioFile sf = load(path);
  if (x0_arg.empty()) x0_arg = "random:" + std::to_string(sf.mc.seed);
  const VecX x0 = initial_state(x0_arg, sf);

  if (sf.kind == SystemKind::Formation) {
    const Scenario& s = *sf.formation;
    Trajectory traj = integrate(s, Configuration::from_flat(x0));
    write_out("trajectory.csv", trajectory_csv(traj));
    const VecX err = global_objective(s, traj.states.back());
    say("steps: " + std::to_string(traj.times.size() - 1) +
        "  final_time: " + fnum(traj.times.back()));
    say("terminal_speed: " + fnum(traj.terminal_speed));
    say("objective_residual: " + fnum(err.lpNorm<Eigen::Infinity>()));
    return 0;
  }

  const auto& sc = *sf.scalar;
  DynSystem sys = scalar_cubic_system(sc.k);
  const double dt = sc.integration.dt;
  const long steps = static_cast<long>(std::floor(sc.integration.total_time / dt));
  std::vector<double> times{0.0};
  std::vector<VecX> states{x0};
  VecX x = x0;
  detail::Rk4Work work;
  work.resize(1);
  for (long k = 1; k <= steps; ++k) {
    if (!detail::rk4_step([&sys](const VecX& v, VecX& out) { sys.f(v, out); }, x, dt,
                          sc.integration.guard_radius, work)) {
      throw NonFiniteError("simulate: trajectory left the guard box");
    }
    times.push_back(static_cast<double>(k) * dt);
    states.push_back(x);
  }
  write_out("trajectory.csv", trajectory_csv(times, states));
  VecX speed(1);
  sys.f(x, speed);
  say("steps: " + std::to_string(steps) + "  final_time: " + fnum(times.back()));
  say("terminal_speed: " + fnum(std::abs(speed[0])));
  say("final_state: " + fnum(x[0]) + (scalar_on_design(sc, x[0]) ? "  (on design)" : ""));
  return 0;
}

int cmd_equilibria(const std::string& path) {
  ScenarioFile sf = load(path);
  std::vector<EquilibriumRecord> records;
  int agents = 0;
  int dropped = 0;

  if (sf.kind == SystemKind::Formation) {
    const Scenario& s = *sf.formation;
    agents = s.n();
    auto field = std::make_shared<const ClosedLoopField>(s);
    DynSystem sys = to_system(field);
    std::vector<VecX> seeds = design_realizations(s);
    for (auto& v : formation_sweep_seeds(s)) seeds.push_back(std::move(v));
    const int extra = std::min(sf.mc.count, 64);
    for (const auto& c : sample_initial(agents, sf.mc.low, sf.mc.high, sf.mc.seed, extra)) {
      seeds.push_back(c.flat());
    }
    FindResult found = find_equilibria(sys, seeds, 1e-10);
    dropped = found.dropped;
    for (const auto& x : found.equilibria) records.push_back(classify(sys, x));
    partition(records, s);
  } else {
    const auto& sc = *sf.scalar;
    DynSystem sys = scalar_cubic_system(sc.k);
    std::vector<VecX> seeds = scalar_problem(sf).sweep_seeds;
    for (double d : sc.design) seeds.push_back(VecX::Constant(1, d));
    for (int i = 0; i < 17; ++i) {
      const double t = static_cast<double>(i) / 16.0;
      seeds.push_back(VecX::Constant(1, sf.mc.low.x() + t * (sf.mc.high.x() - sf.mc.low.x())));
    }
    FindResult found = find_equilibria(sys, seeds, 1e-12);
    dropped = found.dropped;
    for (const auto& x : found.equilibria) records.push_back(classify(sys, x));
    partition(records, [&sc](const VecX& x) { return scalar_on_design(sc, x[0]); });
  }

  say("equilibria: " + std::to_string(records.size()) +
      (dropped > 0 ? "  (failed seeds: " + std::to_string(dropped) + ")" : ""));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    double max_re = -std::numeric_limits<double>::infinity();
    for (const auto& ev : r.spectrum) max_re = std::max(max_re, ev.real());
    std::string line = "[" + std::to_string(i + 1) + "] ";
    line += r.designation == Designation::Design ? "design   " : "ancillary";
    switch (r.stability) {
      case Stability::Stable: line += " stable  "; break;
      case Stability::Unstable: line += " unstable"; break;
      default: line += " marginal"; break;
    }
    line += "  max_re=" + fnum(r.spectrum.empty() ? 0.0 : max_re);
    line += "  x=(";
    for (int k = 0; k < r.state.size(); ++k) {
      line += (k ? ", " : "") + fnum(r.state[k]);
    }
    line += ")";
    say(line);
  }
  write_out("equilibria.json", to_json(records, agents));
  return 0;
}

int cmd_typea(const std::string& path) {
  ScenarioFile sf = load(path);
  ConvSettings conv;
  TypeAReport rep;
  if (sf.kind == SystemKind::Formation) {
    conv.settle_time = sf.formation->integration.total_time;
    rep = assess(*sf.formation, sf.mc, conv);
  } else {
    conv.settle_time = sf.scalar->integration.total_time;
    rep = assess_system(scalar_problem(sf), sf.mc.count, sf.mc.seed, conv);
  }
  say("samples: " + std::to_string(rep.n_samples));
  say("frac_to_design: " + fnum(rep.frac_to_design));
  say("frac_to_ancillary_stable: " + fnum(rep.frac_to_ancillary_stable));
  say("frac_nonconvergent: " + fnum(rep.frac_nonconvergent));
  say(std::string("feasible: ") + (rep.feasible ? "true" : "false"));
  say(std::string("type_a: ") + (rep.type_a ? "true" : "false"));
  say(std::string("strongly_type_a: ") + (rep.strongly_type_a ? "true" : "false"));
  if (rep.insufficient_convergence) {
    say("warning: over half the runs failed to settle; verdicts are weak");
  }
  if (rep.witness_ancillary) {
    std::string w = "ancillary_witness: x=(";
    for (int k = 0; k < rep.witness_ancillary->state.size(); ++k) {
      w += (k ? ", " : "") + fnum(rep.witness_ancillary->state[k]);
    }
    say(w + ")");
  }
  write_out("typea.json", to_json(rep));
  return 0;
}

int cmd_robustness(const std::string& path) {
  ScenarioFile sf = load(path);
  RobustnessReport rep;
  if (sf.kind == SystemKind::Formation) {
    const Scenario& s = *sf.formation;
    auto field = std::make_shared<const ClosedLoopField>(s);
    DynSystem sys = to_system(field);
    // The anchored target comes first; when it is unstable (or not an
    // equilibrium at all, possible when the graphs differ) fall back to
    // other realizations of the same target lengths.
    std::optional<VecX> x_star;
    for (const auto& cand : design_realizations(s)) {
      VecX f(sys.dim);
      sys.f(cand, f);
      if (f.lpNorm<Eigen::Infinity>() > 1e-6) continue;
      if (classify(sys, cand).stability == Stability::Unstable) continue;
      x_star = cand;
      break;
    }
    if (!x_star) {
      throw NotAnEquilibrium(
          "no stable design realization to probe (the target shape repels)");
    }
    std::string pt = "probe_point: (";
    for (int k = 0; k < x_star->size(); ++k) pt += (k ? ", " : "") + fnum((*x_star)[k]);
    say(pt + ")");
    rep = probe(*field, *x_star, sf.robustness);
  } else {
    const auto& sc = *sf.scalar;
    if (sc.design.empty()) throw ConfigError("robustness needs at least one design value");
    rep = probe(scalar_cubic_system(sc.k), VecX::Constant(1, sc.design[0]), sf.robustness);
  }
  say("trials: " + std::to_string(rep.trials));
  say("survived: " + std::to_string(rep.survived));
  say(std::string("robust: ") + (rep.robust ? "true" : "false"));
  say("max_drift: " + fnum(rep.max_drift));
  write_out("robustness.json", to_json(rep));
  return 0;
}

int cmd_plot(const std::string& path, const std::string& traj_csv,
             const std::string& graph_sel) {
  ScenarioFile sf = load(path);
  if (traj_csv.empty()) {
    const Scenario& s = need_formation(sf, "plot");
    const FormationGraph& g = graph_sel == "delta" ? s.delta_graph : s.h_graph;
    Framework fw{g, s.target.to_configuration()};
    write_out("framework.svg", framework_svg(fw));
    return 0;
  }
  std::ifstream in(traj_csv);
  if (!in) throw ConfigError("cannot open trajectory file: " + traj_csv);
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<double> times;
  std::vector<VecX> states;
  parse_trajectory_csv(ss.str(), times, states);
  if (states.empty()) throw ConfigError("trajectory file holds no states");
  const FormationGraph* overlay = nullptr;
  if (sf.kind == SystemKind::Formation &&
      static_cast<int>(states.front().size()) == 2 * sf.formation->n()) {
    overlay = graph_sel == "delta" ? &sf.formation->delta_graph : &sf.formation->h_graph;
  }
  write_out("trajectory.svg", trajectory_svg(states, overlay));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar formation control laboratory"};
  app.require_subcommand(1);
  app.add_option("--out", g_opts.out, "Directory for generated files")->capture_default_str();
  std::uint64_t seed_val = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_val, "Override every seed in the scenario file");
  app.add_flag("--quiet", g_opts.quiet, "Suppress console output");

  std::string sc_path, graph_sel = "delta", x0_arg, traj_csv, plot_graph = "h";

  auto* rigidity = app.add_subcommand(
      "rigidity", "Rank and rigidity of a scenario graph at the target");
  rigidity->add_option("scenario", sc_path, "Scenario JSON file")->required();
  rigidity->add_option("--graph", graph_sel, "Which graph to test: delta or h")
      ->check(CLI::IsMember({"delta", "h"}))
      ->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Integrate the closed loop, write CSV");
  simulate->add_option("scenario", sc_path, "Scenario JSON file")->required();
  simulate->add_option("--x0", x0_arg, "Initial state: JSON file or random:SEED");

  auto* equilibria = app.add_subcommand(
      "equilibria", "Search, classify, and tabulate equilibria");
  equilibria->add_option("scenario", sc_path, "Scenario JSON file")->required();

  auto* typea = app.add_subcommand(
      "typea", "Monte Carlo stability assessment of the design shape");
  typea->add_option("scenario", sc_path, "Scenario JSON file")->required();

  auto* robustness = app.add_subcommand(
      "robustness", "Random control perturbations at the design equilibrium");
  robustness->add_option("scenario", sc_path, "Scenario JSON file")->required();

  auto* plot = app.add_subcommand("plot", "Render the target framework or a trajectory");
  plot->add_option("scenario", sc_path, "Scenario JSON file")->required();
  plot->add_option("--trajectory", traj_csv, "Trajectory CSV to render");
  plot->add_option("--graph", plot_graph, "Edges to draw: h or delta")
      ->check(CLI::IsMember({"delta", "h"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (seed_opt->count() > 0) g_opts.seed = seed_val;

  try {
    if (rigidity->parsed()) return cmd_rigidity(sc_path, graph_sel);
    if (simulate->parsed()) return cmd_simulate(sc_path, x0_arg);
    if (equilibria->parsed()) return cmd_equilibria(sc_path);
    if (typea->parsed()) return cmd_typea(sc_path);
    if (robustness->parsed()) return cmd_robustness(sc_path);
    if (plot->parsed()) return cmd_plot(sc_path, traj_csv, plot_graph);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DegenerateInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IndexOutOfRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
