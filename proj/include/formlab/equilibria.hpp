#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "formlab/dynamics.hpp"
#include "formlab/types.hpp"

namespace formlab {

enum class Stability { Stable, Unstable, Marginal };
enum class Designation { Design, Ancillary };

struct EquilibriumRecord {
  VecX state;
  // Eigenvalues after the rigid-motion directions are projected out
  // (sorted by real part, then imaginary part).
  std::vector<std::complex<double>> spectrum;
  int symmetry_dims = 0;  // how many symmetry directions were removed
  Stability stability = Stability::Marginal;
  Designation designation = Designation::Ancillary;
};

struct FindOptions {
  int max_iterations = 200;
  // Deduplication distance; negative means automatic (diameter-relative
  // congruence for formation systems, coordinate distance otherwise).
  double dedup_tol = -1.0;
};

struct FindResult {
  std::vector<VecX> equilibria;  // deduplicated, deterministically ordered
  int dropped = 0;               // seeds whose refinement failed
};

// Damped least-squares Newton from every seed: step = -pinv(J) f with
// backtracking on |f|. A seed converges when |f|_inf <= tol. Duplicates
// merge up to congruence for formation systems (mirror images stay
// distinct); results are sorted on canonicalized coordinates.
FindResult find_equilibria(const DynSystem& sys, const std::vector<VecX>& seeds,
                           double tol = 1e-10, const FindOptions& opt = {});

// Central-difference Jacobian, step scaled per coordinate.
MatX linearize(const DynSystem& sys, const VecX& x, double fd_step = 1e-6);

// Rigid-motion generators at x (two translations plus the rotation field),
// returned as a 2n x r orthonormal basis; r < 3 when the rotation generator
// degenerates (all agents coincident).
MatX symmetry_basis(const VecX& x, int agents, double rank_tol = 1e-9);

// Spectrum and stability of the linearization at x. For formation systems
// the symmetry directions are removed first; eigenvalues within eps_eig of
// the imaginary axis make the verdict Marginal. Uses the system's analytic
// Jacobian when present, finite differences otherwise.
EquilibriumRecord classify(const DynSystem& sys, const VecX& x, double eps_eig = 1e-6);

// Mark records Design when the stacked objective residual is within tol,
// Ancillary otherwise.
void partition(std::vector<EquilibriumRecord>& records, const Scenario& s,
               double tol = 1e-6);
void partition(std::vector<EquilibriumRecord>& records,
               const std::function<bool(const VecX&)>& is_design);

}  // namespace formlab
