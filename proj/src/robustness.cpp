#include "formlab/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "formlab/equilibria.hpp"
#include "formlab/errors.hpp"
#include "formlab/geometry.hpp"
#include "formlab/parallel.hpp"
#include "formlab/rng.hpp"

namespace formlab {

namespace {

void extend_basis(std::vector<std::vector<int>>& out, std::vector<int>& tuple,
                  int pos, int remaining) {
  if (pos == static_cast<int>(tuple.size())) {
    out.push_back(tuple);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    tuple[pos] = e;
    extend_basis(out, tuple, pos + 1, remaining - e);
  }
}

}  // namespace

std::vector<std::vector<int>> monomial_basis(int n_vars, int max_deg) {
  std::vector<std::vector<int>> out;
  if (n_vars <= 0) return out;
  std::vector<int> tuple(n_vars, 0);
  for (int deg = 0; deg <= max_deg; ++deg) {
    std::vector<std::vector<int>> level;
    extend_basis(level, tuple, 0, deg);
    for (auto& t : level) {
      int total = 0;
      for (int e : t) total += e;
      if (total == deg) out.push_back(std::move(t));
    }
  }
  return out;
}

MultiPoly random_polynomial(int n_vars, int max_deg, std::uint64_t seed,
                            std::uint64_t stream) {
  MultiPoly p;
  p.n_vars = n_vars;
  auto rng = make_rng(seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& exps : monomial_basis(n_vars, max_deg)) {
    PolyTerm t;
    t.coeff = normal(rng);
    t.exps = std::move(exps);
    p.terms.push_back(std::move(t));
  }
  return p;
}

DynSystem perturb(const DynSystem& sys, const PerturbationSpec& spec, int trial) {
  const int d = sys.dim;
  auto polys = std::make_shared<std::vector<MultiPoly>>();
  polys->reserve(d);
  for (int c = 0; c < d; ++c) {
    polys->push_back(random_polynomial(
        d, spec.basis_degree, spec.seed,
        static_cast<std::uint64_t>(trial) * 4096ULL + static_cast<std::uint64_t>(c)));
  }
  const double eps = spec.epsilon;

  DynSystem out;
  out.dim = d;
  out.agents = sys.agents;
  auto base_f = sys.f;
  out.f = [base_f, polys, eps, d](const VecX& x, VecX& r) {
    base_f(x, r);
    for (int c = 0; c < d; ++c) r[c] += eps * (*polys)[c].eval(x.data());
  };
  if (sys.jac) {
    auto base_jac = sys.jac;
    out.jac = [base_jac, polys, eps, d](const VecX& x) {
      MatX j = base_jac(x);
      std::vector<double> dv(d);
      for (int c = 0; c < d; ++c) {
        std::fill(dv.begin(), dv.end(), 0.0);
        (*polys)[c].add_gradient(x.data(), eps, dv.data());
        for (int k = 0; k < d; ++k) j(c, k) += dv[k];
      }
      return j;
    };
  }
  return out;
}

std::shared_ptr<ClosedLoopField> perturb(const ClosedLoopField& field,
                                         const PerturbationSpec& spec, int trial) {
  auto out = std::make_shared<ClosedLoopField>(field);
  const int m = field.scenario().h_graph.m();
  std::vector<MultiPoly> polys;
  polys.reserve(m);
  for (int e = 0; e < m; ++e) {
    polys.push_back(random_polynomial(
        field.edge_var_count(e), spec.basis_degree, spec.seed,
        static_cast<std::uint64_t>(trial) * 4096ULL + static_cast<std::uint64_t>(e)));
  }
  out->set_perturbation(spec.epsilon, std::move(polys));
  return out;
}

namespace {

struct TrialOutcome {
  bool survived = false;
  double drift = 0.0;
};

double displacement(const VecX& a, const VecX& b, int agents) {
  if (agents > 0) {
    return alignment_residual(Configuration::from_flat(a), Configuration::from_flat(b),
                              false);
  }
  return (a - b).norm();
}

template <class MakeSystem>
RobustnessReport probe_impl(const DynSystem& base, const VecX& x_star,
                            const PerturbationSpec& spec, double radius,
                            double eq_tol, MakeSystem&& make_system) {
  VecX f0(base.dim);
  base.f(x_star, f0);
  if (!(f0.lpNorm<Eigen::Infinity>() <= eq_tol)) {
    throw NotAnEquilibrium("probe: residual above tolerance at x_star");
  }
  if (classify(base, x_star).stability == Stability::Unstable) {
    throw NotAnEquilibrium("probe: x_star is unstable for the unperturbed field");
  }
  if (radius < 0.0) radius = 10.0 * spec.epsilon * (1.0 + x_star.norm());

  std::vector<TrialOutcome> outcomes(spec.trials);
  parallel_for(spec.trials, [&](int t) {
    const DynSystem sys = make_system(t);
    const FindResult found = find_equilibria(sys, {x_star}, 1e-10);
    TrialOutcome o;
    if (found.equilibria.size() == 1) {
      const double drift = displacement(x_star, found.equilibria[0], base.agents);
      if (drift <= radius &&
          classify(sys, found.equilibria[0]).stability == Stability::Stable) {
        o.survived = true;
        o.drift = drift;
      }
    }
    outcomes[t] = o;
  });

  RobustnessReport rep;
  rep.trials = spec.trials;
  for (const auto& o : outcomes) {
    if (o.survived) {
      ++rep.survived;
      rep.max_drift = std::max(rep.max_drift, o.drift);
    }
  }
  rep.robust = rep.survived == rep.trials;
  return rep;
}

}  // namespace

RobustnessReport probe(const DynSystem& sys, const VecX& x_star,
                       const PerturbationSpec& spec, double locality_radius,
                       double equilibrium_tol) {
  return probe_impl(sys, x_star, spec, locality_radius, equilibrium_tol,
                    [&](int t) { return perturb(sys, spec, t); });
}

RobustnessReport probe(const ClosedLoopField& field, const VecX& x_star,
                       const PerturbationSpec& spec, double locality_radius,
                       double equilibrium_tol) {
  const DynSystem base = to_system(std::make_shared<ClosedLoopField>(field));
  return probe_impl(base, x_star, spec, locality_radius, equilibrium_tol, [&](int t) {
    return to_system(perturb(field, spec, t));
  });
}

}  // namespace formlab
