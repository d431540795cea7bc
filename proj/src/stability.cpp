#include "formlab/stability.hpp"

#include <algorithm>
#include <cmath>

#include "formlab/errors.hpp"
#include "formlab/geometry.hpp"
#include "formlab/parallel.hpp"
#include "formlab/rigidity.hpp"
#include "formlab/rng.hpp"

namespace formlab {

std::vector<Configuration> sample_initial(int n_agents, const Vec2& low, const Vec2& high,
                                          std::uint64_t seed, int count) {
  if (n_agents < 1) throw DegenerateInput("sample_initial: need at least one agent");
  if (!(low.x() <= high.x()) || !(low.y() <= high.y())) {
    throw DegenerateInput("sample_initial: empty box");
  }
  auto rng = make_rng(seed, 0x5A3Dull);
  std::uniform_real_distribution<double> ux(low.x(), high.x());
  std::uniform_real_distribution<double> uy(low.y(), high.y());
  std::vector<Configuration> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    Configuration c;
    c.points.reserve(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      const double x = ux(rng);
      const double y = uy(rng);
      c.points.emplace_back(x, y);
    }
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

enum class RunOutcome { Design, AncillaryStable, Nonconvergent };

struct RunResult {
  RunOutcome outcome = RunOutcome::Nonconvergent;
  VecX endpoint;
  bool converged = false;
};

// One sample: fixed-step RK4 until the horizon, with an early exit once the
// speed is far below the convergence threshold (the endpoint can no longer
// move by more than ~1e-10 over the remaining horizon, so nothing the
// report contains changes; runs stay bit-for-bit deterministic).
template <class F>
RunResult run_sample(F&& f, const VecX& x0, double dt, long steps, double guard,
                     double speed_tol, double exit_floor,
                     const std::function<bool(const VecX&)>& is_design) {
  RunResult res;
  VecX x = x0;
  const int d = static_cast<int>(x.size());
  VecX k1(d), k2(d), k3(d), k4(d), tmp(d);
  bool diverged = false;
  double speed = 0.0;
  bool early = false;
  for (long s = 0; s < steps; ++s) {
    f(x, k1);
    speed = k1.norm();
    if (!std::isfinite(speed)) { diverged = true; break; }
    if (speed <= exit_floor) { early = true; break; }
    tmp = x + (0.5 * dt) * k1;
    f(tmp, k2);
    tmp = x + (0.5 * dt) * k2;
    f(tmp, k3);
    tmp = x + dt * k3;
    f(tmp, k4);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    for (int i = 0; i < d; ++i) {
      if (!std::isfinite(x[i]) || std::abs(x[i]) > guard) { diverged = true; break; }
    }
    if (diverged) break;
  }
  if (!diverged && !early) {
    f(x, k1);
    speed = k1.norm();
  }
  res.endpoint = std::move(x);
  res.converged = !diverged && std::isfinite(speed) && speed <= speed_tol;
  if (!res.converged) res.outcome = RunOutcome::Nonconvergent;
  else res.outcome = is_design(res.endpoint) ? RunOutcome::Design : RunOutcome::AncillaryStable;
  return res;
}

struct CoreInput {
  DynSystem sys;
  std::vector<VecX> samples;
  std::function<bool(const VecX&)> is_design;
  std::vector<VecX> sweep_seeds;
  std::vector<VecX> design_points;
  double dt = 1e-3;
  double guard = 1e6;
  ConvSettings conv;
};

bool endpoints_match(const DynSystem& sys, const VecX& a, const VecX& b) {
  if (sys.agents > 0) {
    const Configuration ca = Configuration::from_flat(a);
    const Configuration cb = Configuration::from_flat(b);
    const double tol = 1e-3 * (1.0 + std::max(diameter(ca), diameter(cb)));
    return alignment_residual(ca, cb, false) <= tol;
  }
  return (a - b).lpNorm<Eigen::Infinity>() <= 1e-4 * (1.0 + a.lpNorm<Eigen::Infinity>());
}

template <class F>
TypeAReport core_assess(const CoreInput& in, F&& fast_field) {
  const int count = static_cast<int>(in.samples.size());
  const long steps = static_cast<long>(std::floor(in.conv.settle_time / in.dt));
  const double exit_floor = std::min(1e-12, in.conv.speed_tol);

  std::vector<RunResult> results(count);
  parallel_for(count, [&](int i) {
    results[i] = run_sample(fast_field, in.samples[i], in.dt, steps, in.guard,
                            in.conv.speed_tol, exit_floor, in.is_design);
  });

  TypeAReport rep;
  rep.n_samples = count;
  int n_design = 0, n_anc = 0, n_non = 0;
  for (const auto& r : results) {
    switch (r.outcome) {
      case RunOutcome::Design: ++n_design; break;
      case RunOutcome::AncillaryStable: ++n_anc; break;
      case RunOutcome::Nonconvergent: ++n_non; break;
    }
  }
  if (count > 0) {
    rep.frac_to_design = static_cast<double>(n_design) / count;
    rep.frac_to_ancillary_stable = static_cast<double>(n_anc) / count;
    rep.frac_nonconvergent = static_cast<double>(n_non) / count;
  }
  rep.insufficient_convergence = rep.frac_nonconvergent > 0.5;

  // Equilibrium sweep: refine explicit seeds plus one representative per
  // cluster of converged endpoints, then classify what survives.
  std::vector<VecX> seeds = in.sweep_seeds;
  constexpr int kMaxReps = 64;
  std::vector<VecX> reps;
  for (const auto& r : results) {
    if (!r.converged) continue;
    bool known = false;
    for (const auto& rep_state : reps) {
      if (endpoints_match(in.sys, rep_state, r.endpoint)) { known = true; break; }
    }
    if (!known) {
      reps.push_back(r.endpoint);
      if (static_cast<int>(reps.size()) >= kMaxReps) break;
    }
  }
  seeds.insert(seeds.end(), reps.begin(), reps.end());

  const FindResult found = find_equilibria(in.sys, seeds, 1e-10);
  std::vector<EquilibriumRecord> records;
  records.reserve(found.equilibria.size());
  for (const auto& e : found.equilibria) records.push_back(classify(in.sys, e));
  partition(records, in.is_design);

  bool any_design_record = false;
  const EquilibriumRecord* witness = nullptr;
  for (const auto& rec : records) {
    if (rec.designation == Designation::Design) any_design_record = true;
    if (!witness && rec.designation == Designation::Ancillary &&
        rec.stability == Stability::Stable) {
      witness = &rec;
    }
  }
  if (witness) rep.witness_ancillary = *witness;

  bool design_is_equilibrium = false;
  VecX speed(in.sys.dim);
  for (const auto& dp : in.design_points) {
    in.sys.f(dp, speed);
    if (speed.lpNorm<Eigen::Infinity>() <= std::max(1e-8, in.conv.speed_tol)) {
      design_is_equilibrium = true;
      break;
    }
  }
  rep.feasible = design_is_equilibrium || n_design > 0 || any_design_record;
  rep.type_a = rep.feasible && n_anc == 0 && !rep.witness_ancillary.has_value();

  if (rep.type_a && !in.design_points.empty()) {
    bool all_stable = true;
    for (const auto& dp : in.design_points) {
      VecX refined = dp;
      FindResult r = find_equilibria(in.sys, {dp}, 1e-10);
      if (r.equilibria.size() == 1) refined = r.equilibria[0];
      if (classify(in.sys, refined).stability != Stability::Stable) {
        all_stable = false;
        break;
      }
    }
    rep.strongly_type_a = all_stable;
  }
  return rep;
}

}  // namespace

std::vector<VecX> formation_sweep_seeds(const Scenario& s) {
  const Configuration bar = s.target.to_configuration();
  const int n = s.n();
  const double scale = std::max(1.0, diameter(bar));
  std::vector<VecX> seeds;
  seeds.push_back(bar.flat());

  Configuration superposed;
  const Vec2 mid = centroid(bar);
  superposed.points.assign(n, mid);
  seeds.push_back(superposed.flat());

  for (double angle : {0.0, 0.5, 1.1}) {
    const Vec2 dir(std::cos(angle), std::sin(angle));
    Configuration line;
    line.points.reserve(n);
    for (int i = 0; i < n; ++i) {
      line.points.push_back(dir * (scale * (0.2 + 0.37 * i)));
    }
    seeds.push_back(line.flat());
  }
  return seeds;
}

std::vector<VecX> design_realizations(const Scenario& s) {
  const Configuration bar = s.target.to_configuration();
  std::vector<VecX> points;
  points.push_back(bar.flat());
  if (s.delta_graph.m() == 0) return points;
  const EdgeLengthVector want = delta(bar, s.delta_graph.edges);
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    RealizeOptions opt;
    opt.attempts = 8;
    opt.seed = seed;
    const auto fw = realize(s.delta_graph, want, opt);
    if (!fw) continue;
    bool known = false;
    for (const auto& p : points) {
      const Configuration c = Configuration::from_flat(p);
      const double tol = 1e-6 * std::max(1.0, std::max(diameter(c), diameter(fw->config)));
      if (alignment_residual(c, fw->config, false) <= tol) { known = true; break; }
    }
    if (!known) points.push_back(fw->config.flat());
  }
  return points;
}

TypeAReport assess(const Scenario& s, const McSettings& mc, const ConvSettings& conv) {
  s.validate();
  auto field = std::make_shared<ClosedLoopField>(s);

  CoreInput in;
  in.sys = to_system(field);
  in.conv = conv;
  in.dt = s.integration.dt;
  in.guard = s.integration.guard_radius;

  const auto configs = sample_initial(s.n(), mc.low, mc.high, mc.seed, mc.count);
  in.samples.reserve(configs.size());
  for (const auto& c : configs) in.samples.push_back(c.flat());

  const Scenario* sp = &s;
  const double design_tol = conv.design_tol;
  in.is_design = [sp, design_tol](const VecX& x) {
    return global_objective(*sp, Configuration::from_flat(x)).lpNorm<Eigen::Infinity>() <=
           design_tol;
  };
  in.sweep_seeds = formation_sweep_seeds(s);
  in.design_points = design_realizations(s);

  const ClosedLoopField& f = *field;
  return core_assess(in, [&f](const VecX& x, VecX& out) { f.eval(x, out); });
}

TypeAReport assess_system(const AssessProblem& p, int count, std::uint64_t seed,
                          const ConvSettings& conv) {
  if (p.low.size() != p.sys.dim || p.high.size() != p.sys.dim) {
    throw DimensionMismatch("assess_system: box dimension != system dimension");
  }
  CoreInput in;
  in.sys = p.sys;
  in.conv = conv;
  in.dt = p.dt;
  in.guard = 1e6;
  in.is_design = p.is_design;
  in.sweep_seeds = p.sweep_seeds;
  in.design_points = p.design_points;

  auto rng = make_rng(seed, 0x5A3Dull);
  in.samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    VecX x(p.sys.dim);
    for (int k = 0; k < p.sys.dim; ++k) {
      std::uniform_real_distribution<double> u(p.low[k], p.high[k]);
      x[k] = u(rng);
    }
    in.samples.push_back(std::move(x));
  }
  const auto& f = in.sys.f;
  return core_assess(in, [&f](const VecX& x, VecX& out) { f(x, out); });
}

}  // namespace formlab
