#pragma once

#include <cstdint>
#include <optional>

#include "formlab/graph.hpp"
#include "formlab/types.hpp"

namespace formlab {

// Jacobian of the half-squared edge length map at the framework's
// embedding: m x 2n, row k for edge (i, j) carries (x_i - x_j)^T in agent
// i's columns and (x_j - x_i)^T in agent j's columns.
MatX rigidity_matrix(const Framework& f);

// Singular values > rel_tol * largest singular value count toward the rank.
int numerical_rank(const MatX& m, double rel_tol = 1e-9);

// True when the rigidity matrix has rank 2n - 3: the only velocity fields
// preserving all edge lengths to first order are the rigid motions.
bool is_infinitesimally_rigid(const Framework& f, double rank_tol = 1e-9);

// Infinitesimally rigid, and deleting any single edge destroys that.
bool is_minimally_rigid(const Framework& f, double rank_tol = 1e-9);

struct RealizeOptions {
  int attempts = 32;        // random restarts
  int max_iterations = 200; // damped least-squares iterations per attempt
  std::uint64_t seed = 1;
  double residual_tol = 1e-10; // max |delta(p) - d| accepted as a solution
};

// Search for an embedding p of g whose delta(p) equals d (half-squared
// lengths, matching delta()). Levenberg-style least squares from random
// starts; returns the first embedding with residual below residual_tol,
// or nullopt when every attempt stalls (e.g. unrealizable length vectors).
std::optional<Framework> realize(const FormationGraph& g, const EdgeLengthVector& d,
                                 const RealizeOptions& opt = {});

}  // namespace formlab
