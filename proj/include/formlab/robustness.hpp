#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "formlab/control.hpp"
#include "formlab/dynamics.hpp"
#include "formlab/types.hpp"

namespace formlab {

struct PerturbationSpec {
  double epsilon = 1e-3;
  int basis_degree = 2;  // max total degree of the random polynomials
  int trials = 100;
  std::uint64_t seed = 1;
};

struct RobustnessReport {
  int trials = 0;
  int survived = 0;       // trials keeping a stable equilibrium nearby
  double max_drift = 0.0; // largest displacement among surviving trials
  bool robust = false;    // survived == trials
};

// All exponent tuples over n_vars with total degree <= max_deg, graded
// lexicographic order. The constant tuple comes first.
std::vector<std::vector<int>> monomial_basis(int n_vars, int max_deg);

// A polynomial with i.i.d. standard normal coefficients over the given
// basis, deterministic in (seed, stream).
MultiPoly random_polynomial(int n_vars, int max_deg, std::uint64_t seed,
                            std::uint64_t stream);

// f + epsilon * g with g a random polynomial vector field in the state
// variables, deterministic in (spec.seed, trial). Keeps an analytic
// Jacobian when the base system has one.
DynSystem perturb(const DynSystem& sys, const PerturbationSpec& spec, int trial);

// Per-edge control perturbation u_e -> u_e + epsilon * q_e(objective data,
// observation): the perturbed system stays a decentralized formation law.
std::shared_ptr<ClosedLoopField> perturb(const ClosedLoopField& field,
                                         const PerturbationSpec& spec, int trial);

// Persistence test at a stable (or marginal) equilibrium x_star: each trial
// perturbs the field, re-runs the equilibrium search seeded at x_star, and
// survives when a Stable equilibrium is found within locality_radius
// (negative means the default 10 * epsilon * (1 + |x_star|)). Distances are
// measured after congruence alignment for formation systems. Throws
// NotAnEquilibrium when x_star does not satisfy |f| <= equilibrium_tol.
RobustnessReport probe(const DynSystem& sys, const VecX& x_star,
                       const PerturbationSpec& spec, double locality_radius = -1.0,
                       double equilibrium_tol = 1e-6);

RobustnessReport probe(const ClosedLoopField& field, const VecX& x_star,
                       const PerturbationSpec& spec, double locality_radius = -1.0,
                       double equilibrium_tol = 1e-6);

}  // namespace formlab
