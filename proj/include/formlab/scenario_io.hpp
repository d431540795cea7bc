#pragma once

#include <optional>
#include <string>
#include <vector>

#include "formlab/control.hpp"
#include "formlab/dynamics.hpp"
#include "formlab/equilibria.hpp"
#include "formlab/robustness.hpp"
#include "formlab/stability.hpp"

namespace formlab {

enum class SystemKind { Formation, ScalarCubic };

// One-dimensional benchmark system dx/dt = x (1 - k x^2) with an explicit
// list of on-target equilibria.
struct ScalarCubicScenario {
  double k = 4.0;
  std::vector<double> design;
  IntegrationSettings integration;
};

// Everything a scenario file carries. Exactly one of formation / scalar is
// set, according to kind. Monte Carlo bounds are a per-agent planar box for
// formation systems; scalar systems read the x components only.
struct ScenarioFile {
  SystemKind kind = SystemKind::Formation;
  std::optional<Scenario> formation;
  std::optional<ScalarCubicScenario> scalar;
  McSettings mc;
  PerturbationSpec robustness;
};

// Strict parser: unknown keys, malformed values, and inconsistent sizes all
// throw ConfigError. load_scenario reads a file; parse_scenario takes the
// raw JSON text.
ScenarioFile load_scenario(const std::string& path);
ScenarioFile parse_scenario(const std::string& json_text);

// Round-trip serialization (floating point survives bit-for-bit).
std::string scenario_to_json(const ScenarioFile& sf);

std::string to_json(const TypeAReport& rep);
std::string to_json(const RobustnessReport& rep);
std::string to_json(const std::vector<EquilibriumRecord>& records, int agents);

// CSV with header t,x1x,x1y,...; one row per recorded state, floats at
// full precision.
std::string trajectory_csv(const std::vector<double>& times,
                           const std::vector<VecX>& states);
std::string trajectory_csv(const Trajectory& traj);

// Parses the CSV format trajectory_csv writes (header and comment lines
// are skipped).
void parse_trajectory_csv(const std::string& text, std::vector<double>& times,
                          std::vector<VecX>& states);

std::string format_double(double v);  // 17 significant digits

}  // namespace formlab
