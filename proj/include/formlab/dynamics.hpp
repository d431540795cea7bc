#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "formlab/control.hpp"
#include "formlab/graph.hpp"
#include "formlab/types.hpp"

namespace formlab {

// Observation available to agent i (1-based) at configuration c:
// distances to its observed agents in edge order; RelativePosition appends
// the inner products (x_l1 - x_i) . (x_lj - x_i) for j = 2..k.
VecX observe(const Scenario& s, const Configuration& c, int i);

// Objective data handed to agent i, a function of the target shape only.
// RangeOnly: squared target distances over its objective out-edges.
// RangeAndAngle: those plus target inner products in the same pattern
// observe uses. FullInformation: the flattened anchored target.
VecX objective_data(const Scenario& s, int i);

// Squared-distance errors |x_i - x_j|^2 - d_e on agent i's objective
// out-edges, in edge order.
VecX local_objective(const Scenario& s, const Configuration& c, int i);

// Stacked squared-distance errors over all objective edges. Zero exactly
// at configurations realizing the desired shape.
VecX global_objective(const Scenario& s, const Configuration& c);

// Length of the (objective data, observation) variable vector feeding the
// control on observation edge e (0-based). PolynomialCustom edge polynomials
// and perturbation polynomials take exactly this many variables.
int scenario_edge_vars(const Scenario& s, int edge_index);

// The closed-loop vector field: x_i' = sum over out-edges e = (i, l) of
// u_e(x) * (x_l - x_i). The scalar u_e depends on the law; an optional
// additive polynomial term per edge supports perturbation studies.
class ClosedLoopField {
 public:
  explicit ClosedLoopField(const Scenario& s);

  int n() const { return n_; }
  int dim() const { return 2 * n_; }
  const Scenario& scenario() const { return scenario_; }

  void eval(const VecX& x, VecX& out) const;
  VecX operator()(const VecX& x) const;

  // Exact Jacobian of the field (guarded at coincident points for the
  // norm-based laws, where the field is not differentiable).
  MatX jacobian(const VecX& x) const;

  // Scalar control on observation edge e (0-based, edge order),
  // perturbation included.
  double edge_control(const VecX& x, int edge_index) const;

  // u_e += epsilon * q_e(objective data, observation) for every edge.
  void set_perturbation(double epsilon, std::vector<MultiPoly> per_edge);
  void clear_perturbation();

  // Variable count of the (objective data, observation) vector feeding the
  // control on edge e; the shape perturbation polynomials must have.
  int edge_var_count(int edge_index) const;

 private:
  struct AgentVars;
  void agent_observation(const VecX& x, int agent0, double* h) const;
  double control_value(const VecX& x, int edge_index, const double* vars) const;
  int var_count(int agent0) const;
  void fill_vars(const VecX& x, int agent0, double* v) const;

  Scenario scenario_;
  int n_ = 0;
  std::vector<int> efrom_, eto_;       // 0-based endpoints per h-edge
  std::vector<double> dsq_, dlen_;     // target squared / plain lengths per h-edge
  std::vector<double> gains_;
  std::vector<std::vector<int>> out_targets_;  // per agent: observed agents, 0-based
  std::vector<std::vector<int>> out_edges_;    // per agent: h-edge indices
  std::vector<VecX> obj_data_;                 // per agent: objective data
  double eps_ = 0.0;
  std::vector<MultiPoly> pert_;
};

// Generic autonomous system, the interface the equilibrium and robustness
// machinery consumes. agents > 0 marks a planar formation system whose
// rigid-motion symmetry should be respected; jac may be empty.
struct DynSystem {
  int dim = 0;
  int agents = 0;
  std::function<void(const VecX&, VecX&)> f;
  std::function<MatX(const VecX&)> jac;

  VecX operator()(const VecX& x) const {
    VecX out(dim);
    f(x, out);
    return out;
  }
};

DynSystem vector_field(const Scenario& s);
DynSystem to_system(std::shared_ptr<const ClosedLoopField> field);

// dx/dt = x (1 - k x^2), the one-dimensional benchmark: equilibria at 0
// (unstable) and +-1/sqrt(k) (stable). Analytic Jacobian included.
DynSystem scalar_cubic_system(double k);

struct Trajectory {
  std::vector<double> times;
  std::vector<Configuration> states;
  double terminal_speed = 0.0;
};

// Fixed-step classical Runge-Kutta from x0 over the scenario's time grid:
// floor(T / dt) steps, every state recorded. Throws NonFiniteError when a
// coordinate leaves the guard box or stops being finite.
Trajectory integrate(const Scenario& s, const Configuration& x0);

namespace detail {

struct Rk4Work {
  VecX k1, k2, k3, k4, tmp;
  void resize(int dim) {
    k1.resize(dim); k2.resize(dim); k3.resize(dim); k4.resize(dim); tmp.resize(dim);
  }
};

// One classical RK4 step in place. Returns false when the new state has a
// non-finite coordinate or leaves the guard box.
template <class Field>
bool rk4_step(Field&& f, VecX& x, double dt, double guard, Rk4Work& w) {
  f(x, w.k1);
  w.tmp = x + (0.5 * dt) * w.k1;
  f(w.tmp, w.k2);
  w.tmp = x + (0.5 * dt) * w.k2;
  f(w.tmp, w.k3);
  w.tmp = x + dt * w.k3;
  f(w.tmp, w.k4);
  x += (dt / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
  for (int i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > guard) return false;
  }
  return true;
}

}  // namespace detail

}  // namespace formlab
