#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "formlab/dynamics.hpp"
#include "formlab/equilibria.hpp"
#include "formlab/errors.hpp"
#include "formlab/robustness.hpp"

using namespace formlab;

namespace {

DynSystem linear_sink() {
  DynSystem sys;
  sys.dim = 1;
  sys.f = [](const VecX& x, VecX& out) { out[0] = -x[0]; };
  sys.jac = [](const VecX&) { return MatX::Constant(1, 1, -1.0); };
  return sys;
}

// Degenerate equilibrium at the origin: vanishing derivative, so the zero
// either disappears or splits under generic perturbations.
DynSystem parabola() {
  DynSystem sys;
  sys.dim = 1;
  sys.f = [](const VecX& x, VecX& out) { out[0] = x[0] * x[0]; };
  sys.jac = [](const VecX& x) { return MatX::Constant(1, 1, 2.0 * x[0]); };
  return sys;
}

// Directed 3-cycle under the gradient law. Each inter-agent distance is
// steered by exactly one control, so independently perturbed controls still
// admit a common zero and the design fixed point persists.
Scenario gradient_cycle_triangle() {
  Scenario s;
  s.target = TargetConfiguration({Vec2(1.6, 0.0), Vec2(0.7, 1.2)});
  const std::vector<Edge> cyc{Edge(1, 2), Edge(2, 3), Edge(3, 1)};
  s.h_graph = FormationGraph(3, cyc);
  s.delta_graph = FormationGraph(3, cyc);
  s.obs_mode = ObservationMode::RangeOnly;
  s.obj_mode = ObjectiveMode::RangeOnly;
  s.law.kind = LawKind::Gradient;
  return s;
}

// Same triangle with both directions of every edge present. Now each
// distance must zero two independently perturbed controls at once, which is
// generically impossible: the fixed point dissolves into a slowly drifting
// rigid motion and the probe should report the design as not robust.
Scenario gradient_bidirectional_triangle() {
  Scenario s;
  s.target = TargetConfiguration({Vec2(1.6, 0.0), Vec2(0.7, 1.2)});
  const std::vector<Edge> both{Edge(1, 2), Edge(2, 1), Edge(2, 3),
                               Edge(3, 2), Edge(3, 1), Edge(1, 3)};
  s.h_graph = FormationGraph(3, both);
  s.delta_graph = FormationGraph(3, both);
  s.obs_mode = ObservationMode::RangeOnly;
  s.obj_mode = ObjectiveMode::RangeOnly;
  s.law.kind = LawKind::Gradient;
  return s;
}

}  // namespace

TEST_CASE("monomial basis is graded with the constant tuple first") {
  const auto basis = monomial_basis(2, 2);
  const std::vector<std::vector<int>> want{{0, 0}, {1, 0}, {0, 1},
                                           {2, 0}, {1, 1}, {0, 2}};
  CHECK(basis == want);
}

TEST_CASE("monomial basis counts follow the stars-and-bars formula") {
  CHECK(monomial_basis(1, 3).size() == 4);
  CHECK(monomial_basis(3, 2).size() == 10);
  CHECK(monomial_basis(4, 0).size() == 1);
  CHECK(monomial_basis(0, 3).empty());
}

TEST_CASE("random polynomials are deterministic per seed and stream") {
  const MultiPoly a = random_polynomial(3, 2, 7, 5);
  const MultiPoly b = random_polynomial(3, 2, 7, 5);
  REQUIRE(a.terms.size() == b.terms.size());
  CHECK(a.terms.size() == monomial_basis(3, 2).size());
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    CHECK(a.terms[i].coeff == b.terms[i].coeff);
    CHECK(a.terms[i].exps == b.terms[i].exps);
  }
  const MultiPoly c = random_polynomial(3, 2, 7, 6);
  bool same = true;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    if (a.terms[i].coeff != c.terms[i].coeff) same = false;
  }
  CHECK_FALSE(same);
}

TEST_CASE("zero epsilon perturbations change nothing") {
  const DynSystem base = linear_sink();
  PerturbationSpec spec;
  spec.epsilon = 0.0;
  const DynSystem pert = perturb(base, spec, 3);
  for (double v : {-1.0, -0.3, 0.0, 0.7, 2.0}) {
    const VecX x = VecX::Constant(1, v);
    CHECK(pert(x)[0] == base(x)[0]);
  }
}

TEST_CASE("perturbed fields are deterministic per seed and trial") {
  const DynSystem base = linear_sink();
  PerturbationSpec spec;
  spec.epsilon = 1e-3;
  spec.seed = 9;
  const DynSystem a = perturb(base, spec, 4);
  const DynSystem b = perturb(base, spec, 4);
  const DynSystem c = perturb(base, spec, 5);
  bool differs = false;
  for (double v : {-1.0, -0.2, 0.4, 1.5}) {
    const VecX x = VecX::Constant(1, v);
    CHECK(a(x)[0] == b(x)[0]);
    if (a(x)[0] != c(x)[0]) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("scalar perturbation deviation obeys the coefficient-sum bound") {
  const DynSystem base = linear_sink();
  PerturbationSpec spec;
  spec.epsilon = 1e-3;
  spec.basis_degree = 2;
  spec.seed = 13;
  for (int trial : {0, 1, 2}) {
    const DynSystem pert = perturb(base, spec, trial);
    // The trial's polynomial lives at stream trial * 4096 for coordinate 0.
    const MultiPoly g = random_polynomial(1, 2, spec.seed,
                                          static_cast<std::uint64_t>(trial) * 4096ULL);
    double coeff_sum = 0.0;
    for (const auto& t : g.terms) coeff_sum += std::abs(t.coeff);
    for (double v = -1.0; v <= 1.0; v += 0.125) {
      const VecX x = VecX::Constant(1, v);
      CHECK(std::abs(pert(x)[0] - base(x)[0]) <= spec.epsilon * coeff_sum + 1e-15);
    }
  }
}

TEST_CASE("perturbed analytic Jacobians match finite differences") {
  const DynSystem base = linear_sink();
  PerturbationSpec spec;
  spec.epsilon = 0.05;
  spec.basis_degree = 3;
  const DynSystem pert = perturb(base, spec, 2);
  REQUIRE(bool(pert.jac));
  for (double v : {-0.8, 0.1, 1.2}) {
    const VecX x = VecX::Constant(1, v);
    CHECK(std::abs(pert.jac(x)(0, 0) - linearize(pert, x)(0, 0)) <= 1e-6);
  }
}

TEST_CASE("a hyperbolic sink is robust") {
  PerturbationSpec spec;
  spec.epsilon = 1e-2;
  spec.trials = 100;
  const RobustnessReport rep = probe(linear_sink(), VecX::Zero(1), spec);
  CHECK(rep.trials == 100);
  CHECK(rep.survived == 100);
  CHECK(rep.robust);
  CHECK(rep.max_drift > 0.0);
  CHECK(rep.max_drift <= 10.0 * spec.epsilon);
}

TEST_CASE("the degenerate parabola equilibrium is not robust") {
  for (double eps : {1e-3, 1e-2}) {
    PerturbationSpec spec;
    spec.epsilon = eps;
    spec.trials = 100;
    const RobustnessReport rep = probe(parabola(), VecX::Zero(1), spec);
    CHECK(rep.survived < rep.trials);
    CHECK_FALSE(rep.robust);
  }
}

TEST_CASE("parabola survival does not improve as epsilon grows") {
  // Fixed locality radius so the three sweeps are comparable.
  const double radius = 0.03;
  PerturbationSpec spec;
  spec.trials = 200;
  spec.seed = 21;
  std::vector<double> fractions;
  for (double eps : {1e-4, 1e-3, 1e-2}) {
    spec.epsilon = eps;
    const RobustnessReport rep = probe(parabola(), VecX::Zero(1), spec, radius);
    fractions.push_back(static_cast<double>(rep.survived) / rep.trials);
  }
  CHECK(fractions[0] >= fractions[1]);
  CHECK(fractions[1] >= fractions[2]);
}

TEST_CASE("probe rejects points that are not equilibria") {
  PerturbationSpec spec;
  CHECK_THROWS_AS(probe(linear_sink(), VecX::Constant(1, 0.5), spec),
                  NotAnEquilibrium);
}

TEST_CASE("probe rejects unstable equilibria") {
  DynSystem source;
  source.dim = 1;
  source.f = [](const VecX& x, VecX& out) { out[0] = x[0]; };
  PerturbationSpec spec;
  CHECK_THROWS_AS(probe(source, VecX::Zero(1), spec), NotAnEquilibrium);
}

TEST_CASE("per-edge control perturbations keep the design equilibrium alive") {
  const Scenario s = gradient_cycle_triangle();
  const ClosedLoopField field(s);
  const VecX bar = s.target.to_configuration().flat();
  PerturbationSpec spec;
  spec.epsilon = 1e-3;
  spec.trials = 50;
  const RobustnessReport rep = probe(field, bar, spec);
  CHECK(rep.trials == 50);
  CHECK(rep.survived == 50);
  CHECK(rep.robust);
  CHECK(rep.max_drift <= 10.0 * spec.epsilon * (1.0 + bar.norm()));
}

TEST_CASE("doubled edges over-constrain the perturbed distances") {
  const Scenario s = gradient_bidirectional_triangle();
  const ClosedLoopField field(s);
  const VecX bar = s.target.to_configuration().flat();
  PerturbationSpec spec;
  spec.epsilon = 1e-3;
  spec.trials = 50;
  const RobustnessReport rep = probe(field, bar, spec);
  CHECK_FALSE(rep.robust);
  CHECK(rep.survived == 0);
}

TEST_CASE("field-level perturbation with zero epsilon is the identity") {
  const Scenario s = gradient_cycle_triangle();
  const ClosedLoopField field(s);
  PerturbationSpec spec;
  spec.epsilon = 0.0;
  const auto pert = perturb(field, spec, 0);
  const VecX x = s.target.to_configuration().flat();
  VecX a(field.dim()), b(field.dim());
  field.eval(x, a);
  pert->eval(x, b);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
}
