#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "formlab/dynamics.hpp"
#include "formlab/equilibria.hpp"
#include "formlab/types.hpp"

namespace formlab {

struct McSettings {
  int count = 1000;
  Vec2 low{-1.0, -1.0};  // sampling box, applied to every agent
  Vec2 high{1.0, 1.0};
  std::uint64_t seed = 1;
};

struct ConvSettings {
  double speed_tol = 1e-8;   // |field| at the endpoint that counts as converged
  double settle_time = 50.0; // integration horizon per sample
  double design_tol = 1e-6;  // objective residual that counts as on-target
};

// Monte Carlo basin summary plus equilibrium-sweep verdicts.
// feasible: a design equilibrium exists. type_a: every stable outcome the
// search can see is a design outcome. strongly_type_a: additionally every
// realization of the target lengths classifies Stable. The verdicts are
// sampling-based evidence, not proofs.
struct TypeAReport {
  int n_samples = 0;
  double frac_to_design = 0.0;
  double frac_to_ancillary_stable = 0.0;
  double frac_nonconvergent = 0.0;
  bool feasible = false;
  bool type_a = false;
  bool strongly_type_a = false;
  bool insufficient_convergence = false;  // over half the runs failed to settle
  std::optional<EquilibriumRecord> witness_ancillary;
};

// count i.i.d. configurations, each coordinate uniform in the box,
// deterministic in seed.
std::vector<Configuration> sample_initial(int n_agents, const Vec2& low, const Vec2& high,
                                          std::uint64_t seed, int count);

TypeAReport assess(const Scenario& s, const McSettings& mc, const ConvSettings& conv);

// The same machinery for systems that are not planar formations (or for
// formation systems with a custom design test). Sampling happens in the
// axis-aligned box [low, high]; design_points are known on-target states
// used by the feasibility and strong-stability checks; sweep_seeds are
// extra starting points for the equilibrium search.
struct AssessProblem {
  DynSystem sys;
  VecX low, high;
  std::function<bool(const VecX&)> is_design;
  std::vector<VecX> design_points;
  std::vector<VecX> sweep_seeds;
  double dt = 1e-3;
};

TypeAReport assess_system(const AssessProblem& p, int count, std::uint64_t seed,
                          const ConvSettings& conv);

// Deterministic non-sampled starting points for the equilibrium search:
// the exact target embedding, the fully superposed point, and a few
// collinear placements at the target's scale.
std::vector<VecX> formation_sweep_seeds(const Scenario& s);

// Distinct embeddings of the target edge lengths (mirror images included),
// found by the length-realization search from varied seeds. The anchored
// target itself always comes first.
std::vector<VecX> design_realizations(const Scenario& s);

}  // namespace formlab
