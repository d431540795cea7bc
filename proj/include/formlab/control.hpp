#pragma once

#include <string>
#include <vector>

#include "formlab/errors.hpp"
#include "formlab/graph.hpp"
#include "formlab/types.hpp"

namespace formlab {

// What each agent can measure about its out-neighbours.
enum class ObservationMode {
  RangeOnly,         // distances to observed agents
  RelativePosition,  // distances plus inner products pinning relative bearings
};

// What each agent knows about the desired shape.
enum class ObjectiveMode {
  RangeOnly,        // squared target distances over its objective out-edges
  RangeAndAngle,    // squared distances plus target inner products
  FullInformation,  // the whole anchored target configuration
};

struct PolyTerm {
  double coeff = 0.0;
  std::vector<int> exps;  // one exponent per variable
};

// Multivariate polynomial, dense in terms, evaluated by direct expansion.
struct MultiPoly {
  int n_vars = 0;
  std::vector<PolyTerm> terms;

  void validate() const;
  int total_degree() const;
  double eval(const double* v) const;
  // dv[k] += scale * dP/dv_k, evaluated at v.
  void add_gradient(const double* v, double scale, double* dv) const;
};

enum class LawKind {
  LinearGain,        // u_e = k_e * (|z_e|^2 - d_e), one gain per observation edge
  Gradient,          // u_e = |z_e| - sqrt(d_e), summed over out-edges
  TriangleCyclic,    // gradient terms on the directed 3-cycle, one per agent
  PolynomialCustom,  // u_e = P_e(objective data, observation) per out-edge
};

struct ControlLaw {
  LawKind kind = LawKind::LinearGain;
  // LinearGain: one gain per observation-graph edge, in edge order.
  std::vector<double> gains;
  // PolynomialCustom: one polynomial per observation-graph edge, in edge
  // order; P_e takes the concatenated (objective data, observation) vector
  // of the tail agent.
  std::vector<MultiPoly> edge_polys;
  int degree_cap = 4;
};

struct IntegrationSettings {
  double dt = 1e-3;
  double total_time = 50.0;
  double guard_radius = 1e6;  // any |coordinate| beyond this counts as divergence
};

// Full description of one closed-loop formation system.
struct Scenario {
  TargetConfiguration target;
  FormationGraph h_graph;      // observation edges
  FormationGraph delta_graph;  // objective edges
  ObservationMode obs_mode = ObservationMode::RangeOnly;
  ObjectiveMode obj_mode = ObjectiveMode::RangeOnly;
  ControlLaw law;
  IntegrationSettings integration;

  int n() const { return target.n_agents(); }

  // Throws ConfigError / DimensionMismatch on any inconsistency.
  void validate() const;
};

std::string to_string(ObservationMode m);
std::string to_string(ObjectiveMode m);
std::string to_string(LawKind k);

}  // namespace formlab
