#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "formlab/dynamics.hpp"
#include "formlab/equilibria.hpp"
#include "formlab/errors.hpp"
#include "formlab/geometry.hpp"
#include "formlab/rng.hpp"

using namespace formlab;

namespace {

Configuration make_config(std::initializer_list<std::pair<double, double>> pts) {
  Configuration c;
  for (const auto& [x, y] : pts) c.points.emplace_back(x, y);
  return c;
}

Configuration random_config(int n, std::uint64_t seed, double span = 2.0) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(-span, span);
  Configuration c;
  for (int i = 0; i < n; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    c.points.emplace_back(x, y);
  }
  return c;
}

// Four agents, two directed loops through agent 1; edge k carries z_k.
// Target edge lengths squared: (1, 2, 1, 5, 2).
Scenario two_cycles(LawKind kind = LawKind::LinearGain) {
  Scenario s;
  s.target = TargetConfiguration({Vec2(-1.0, 0.0), Vec2(0.0, -1.0), Vec2(1.0, 1.0)});
  const std::vector<Edge> edges{Edge(1, 2), Edge(2, 3), Edge(3, 1), Edge(4, 3),
                                Edge(1, 4)};
  s.h_graph = FormationGraph(4, edges);
  s.delta_graph = FormationGraph(4, edges);
  s.obs_mode = ObservationMode::RelativePosition;
  s.obj_mode = ObjectiveMode::RangeOnly;
  s.law.kind = kind;
  if (kind == LawKind::LinearGain) s.law.gains.assign(5, 1.0);
  return s;
}

Scenario triangle_cyclic() {
  Scenario s;
  s.target = TargetConfiguration({Vec2(1.6, 0.0), Vec2(0.7, 1.2)});
  const std::vector<Edge> ring{Edge(1, 2), Edge(2, 3), Edge(3, 1)};
  s.h_graph = FormationGraph(3, ring);
  s.delta_graph = FormationGraph(3, ring);
  s.obs_mode = ObservationMode::RangeOnly;
  s.obj_mode = ObjectiveMode::RangeOnly;
  s.law.kind = LawKind::TriangleCyclic;
  return s;
}

// The 5-agent example: observation and objective graphs differ.
Scenario five_agent() {
  Scenario s;
  s.target = TargetConfiguration(
      {Vec2(2.0, 0.0), Vec2(1.0, 1.5), Vec2(0.0, 1.0), Vec2(0.5, 1.0)});
  s.h_graph = FormationGraph(5, {Edge(1, 2), Edge(2, 3), Edge(2, 4), Edge(3, 1),
                                 Edge(4, 1), Edge(5, 2), Edge(5, 3)});
  s.delta_graph = FormationGraph(5, {Edge(1, 2), Edge(2, 3), Edge(2, 4), Edge(3, 5),
                                     Edge(4, 5), Edge(5, 2), Edge(5, 1)});
  s.obs_mode = ObservationMode::RelativePosition;
  s.obj_mode = ObjectiveMode::RangeOnly;
  s.law.kind = LawKind::LinearGain;
  s.law.gains.assign(7, 1.0);
  return s;
}

MultiPoly affine_poly(int n_vars) {
  MultiPoly p;
  p.n_vars = n_vars;
  PolyTerm c0;
  c0.coeff = 0.3;
  c0.exps.assign(n_vars, 0);
  p.terms.push_back(c0);
  PolyTerm lin;
  lin.coeff = -0.25;
  lin.exps.assign(n_vars, 0);
  lin.exps[0] = 1;
  p.terms.push_back(lin);
  return p;
}

Scenario two_cycles_poly() {
  Scenario s = two_cycles(LawKind::PolynomialCustom);
  for (int e = 0; e < s.h_graph.m(); ++e) {
    s.law.edge_polys.push_back(affine_poly(scenario_edge_vars(s, e)));
  }
  return s;
}

Configuration design_config(const Scenario& s) { return s.target.to_configuration(); }

// Block rotation + translation of a flat state.
VecX move_state(const VecX& x, double angle, const Vec2& t) {
  const double c = std::cos(angle), sn = std::sin(angle);
  VecX y(x.size());
  for (int i = 0; 2 * i < x.size(); ++i) {
    y[2 * i] = c * x[2 * i] - sn * x[2 * i + 1] + t.x();
    y[2 * i + 1] = sn * x[2 * i] + c * x[2 * i + 1] + t.y();
  }
  return y;
}

VecX rotate_field(const VecX& f, double angle) {
  const double c = std::cos(angle), sn = std::sin(angle);
  VecX y(f.size());
  for (int i = 0; 2 * i < f.size(); ++i) {
    y[2 * i] = c * f[2 * i] - sn * f[2 * i + 1];
    y[2 * i + 1] = sn * f[2 * i] + c * f[2 * i + 1];
  }
  return y;
}

double exact_cubic(double k, double x0, double t) {
  const double w0 = 1.0 / (x0 * x0);
  return 1.0 / std::sqrt(k + (w0 - k) * std::exp(-2.0 * t));
}

}  // namespace

TEST_CASE("observe returns distances plus the leading inner products") {
  const Scenario s = five_agent();
  const Configuration c = random_config(5, 3);
  const VecX h = observe(s, c, 2);
  REQUIRE(h.size() == 3);
  const Vec2 z3 = c.points[2] - c.points[1];
  const Vec2 z4 = c.points[3] - c.points[1];
  CHECK(h[0] == doctest::Approx(z3.norm()).epsilon(1e-14));
  CHECK(h[1] == doctest::Approx(z4.norm()).epsilon(1e-14));
  CHECK(h[2] == doctest::Approx(z3.dot(z4)).epsilon(1e-14));
}

TEST_CASE("observe is empty for an agent with no outgoing edges") {
  Scenario s;
  s.target = TargetConfiguration({Vec2(1.0, 0.0)});
  s.h_graph = FormationGraph(2, {Edge(1, 2)});
  s.delta_graph = FormationGraph(2, {Edge(1, 2)});
  s.law.gains.assign(1, 1.0);
  const VecX h = observe(s, make_config({{0.0, 0.0}, {1.0, 2.0}}), 2);
  CHECK(h.size() == 0);
}

TEST_CASE("observe for two-cycles agent 1") {
  const Scenario s = two_cycles();
  const Configuration c = random_config(4, 5);
  const VecX h = observe(s, c, 1);
  REQUIRE(h.size() == 3);
  const Vec2 z1 = c.points[1] - c.points[0];
  const Vec2 z5 = c.points[3] - c.points[0];
  CHECK(h[0] == doctest::Approx(z1.norm()).epsilon(1e-14));
  CHECK(h[1] == doctest::Approx(z5.norm()).epsilon(1e-14));
  CHECK(h[2] == doctest::Approx(z1.dot(z5)).epsilon(1e-14));
}

TEST_CASE("observe rejects bad agent ids") {
  const Scenario s = two_cycles();
  CHECK_THROWS_AS(observe(s, random_config(4, 7), 0), IndexOutOfRange);
  CHECK_THROWS_AS(observe(s, random_config(4, 7), 5), IndexOutOfRange);
}

TEST_CASE("objective data for two-cycles agent 1 is the squared target pair") {
  const Scenario s = two_cycles();
  const VecX d = objective_data(s, 1);
  REQUIRE(d.size() == 2);
  CHECK(d[0] == doctest::Approx(1.0));  // |target_2 - target_1|^2
  CHECK(d[1] == doctest::Approx(2.0));  // |target_4 - target_1|^2
}

TEST_CASE("full information objective is the flattened target") {
  Scenario s = two_cycles();
  s.obj_mode = ObjectiveMode::FullInformation;
  for (int i = 1; i <= 4; ++i) {
    const VecX d = objective_data(s, i);
    REQUIRE(d.size() == 6);
    for (int j = 0; j < 3; ++j) {
      CHECK(d[2 * j] == s.target.points[j].x());
      CHECK(d[2 * j + 1] == s.target.points[j].y());
    }
  }
}

TEST_CASE("objective data for five-agent agent 5") {
  const Scenario s = five_agent();
  const VecX d = objective_data(s, 5);
  // Out-edges (5,2) then (5,1); targets are squared distances to agents 2, 1.
  REQUIRE(d.size() == 2);
  CHECK(d[0] == doctest::Approx(3.25));
  CHECK(d[1] == doctest::Approx(1.25));
}

TEST_CASE("local objective vanishes at the design framework") {
  const Scenario s = two_cycles();
  const Configuration bar = design_config(s);
  for (int i = 1; i <= 4; ++i) {
    const VecX r = local_objective(s, bar, i);
    for (int j = 0; j < r.size(); ++j) CHECK(r[j] == 0.0);
  }
}

TEST_CASE("local objective of agent 3 is the single edge residual") {
  const Scenario s = two_cycles();
  const Configuration c = random_config(4, 9);
  const VecX r = local_objective(s, c, 3);
  REQUIRE(r.size() == 1);
  const double want = (c.points[0] - c.points[2]).squaredNorm() - 1.0;
  CHECK(r[0] == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("local objective matches direct evaluation on a random configuration") {
  const Scenario s = five_agent();
  const Configuration c = random_config(5, 13);
  const Configuration bar = design_config(s);
  for (int i = 1; i <= 5; ++i) {
    const auto idx = s.delta_graph.out_edge_indices(i);
    const VecX r = local_objective(s, c, i);
    REQUIRE(r.size() == static_cast<int>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const Edge& e = s.delta_graph.edges[idx[j]];
      const double want = (c.points[e.to - 1] - c.points[e.from - 1]).squaredNorm() -
                          (bar.points[e.to - 1] - bar.points[e.from - 1]).squaredNorm();
      CHECK(r[j] == doctest::Approx(want).epsilon(1e-14));
    }
  }
}

TEST_CASE("global objective vanishes exactly on every shape with the target lengths") {
  const Scenario s = two_cycles();
  const std::vector<Configuration> shapes{
      make_config({{0.0, 0.0}, {-1.0, 0.0}, {0.0, -1.0}, {1.0, 1.0}}),
      make_config({{0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {1.0, 1.0}}),
      make_config({{0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {-1.0, 1.0}}),
      make_config({{0.0, 0.0}, {-1.0, 0.0}, {0.0, -1.0}, {-1.0, 1.0}}),
  };
  for (const auto& c : shapes) {
    const VecX r = global_objective(s, c);
    REQUIRE(r.size() == 5);
    for (int k = 0; k < 5; ++k) CHECK(r[k] == 0.0);
  }
}

TEST_CASE("stretching one edge moves exactly one residual entry") {
  Scenario s;
  s.target = TargetConfiguration({Vec2(1.0, 0.0), Vec2(2.0, 0.0)});
  s.h_graph = FormationGraph(3, {Edge(1, 2), Edge(2, 3)});
  s.delta_graph = FormationGraph(3, {Edge(1, 2), Edge(2, 3)});
  s.law.gains.assign(2, 1.0);
  const Configuration c = make_config({{0.0, 0.0}, {1.0, 0.0}, {2.1, 0.0}});
  const VecX r = global_objective(s, c);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == doctest::Approx(1.1 * 1.1 - 1.0).epsilon(1e-14));
}

TEST_CASE("global objective is the concatenation of the local objectives") {
  for (const Scenario& s : {two_cycles(), five_agent()}) {
    const Configuration c = random_config(s.n(), 17);
    const VecX g = global_objective(s, c);
    for (int i = 1; i <= s.n(); ++i) {
      const auto idx = s.delta_graph.out_edge_indices(i);
      const VecX r = local_objective(s, c, i);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        CHECK(g[idx[j]] == r[j]);
      }
    }
  }
}

TEST_CASE("linear-gain field vanishes exactly at the design framework") {
  const Scenario s = two_cycles();
  const DynSystem sys = vector_field(s);
  const VecX f = sys(design_config(s).flat());
  for (int i = 0; i < f.size(); ++i) CHECK(f[i] == 0.0);
}

TEST_CASE("norm-based fields vanish at the design framework to machine precision") {
  for (const Scenario& s : {two_cycles(LawKind::Gradient), triangle_cyclic()}) {
    const DynSystem sys = vector_field(s);
    const VecX f = sys(design_config(s).flat());
    CHECK(f.lpNorm<Eigen::Infinity>() <= 1e-14);
  }
}

TEST_CASE("every law gives a zero field when all agents are superposed") {
  std::vector<Scenario> cases{two_cycles(LawKind::LinearGain),
                              two_cycles(LawKind::Gradient), two_cycles_poly(),
                              triangle_cyclic()};
  for (const Scenario& s : cases) {
    Configuration c;
    c.points.assign(s.n(), Vec2(0.7, -0.3));
    const VecX f = vector_field(s)(c.flat());
    for (int i = 0; i < f.size(); ++i) CHECK(f[i] == 0.0);
  }
}

TEST_CASE("two-cycles linear-gain field matches its hand transcription") {
  const Scenario s = two_cycles();
  const DynSystem sys = vector_field(s);
  const Configuration c = random_config(4, 19);
  const VecX f = sys(c.flat());

  const Vec2 z1 = c.points[1] - c.points[0];
  const Vec2 z2 = c.points[2] - c.points[1];
  const Vec2 z3 = c.points[0] - c.points[2];
  const Vec2 z4 = c.points[2] - c.points[3];
  const Vec2 z5 = c.points[3] - c.points[0];
  const double d[5] = {1.0, 2.0, 1.0, 5.0, 2.0};
  const Vec2 f1 = (z1.squaredNorm() - d[0]) * z1 + (z5.squaredNorm() - d[4]) * z5;
  const Vec2 f2 = (z2.squaredNorm() - d[1]) * z2;
  const Vec2 f3 = (z3.squaredNorm() - d[2]) * z3;
  const Vec2 f4 = (z4.squaredNorm() - d[3]) * z4;

  const Vec2 expected[4] = {f1, f2, f3, f4};
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(f[2 * i] - expected[i].x()) <= 1e-12);
    CHECK(std::abs(f[2 * i + 1] - expected[i].y()) <= 1e-12);
  }
}

TEST_CASE("cyclic triangle field matches its hand transcription") {
  const Scenario s = triangle_cyclic();
  const DynSystem sys = vector_field(s);
  const Configuration c = random_config(3, 21);
  const VecX f = sys(c.flat());

  const Configuration bar = design_config(s);
  for (int i = 0; i < 3; ++i) {
    const int next = (i + 1) % 3;
    const Vec2 z = c.points[next] - c.points[i];
    const double want = (bar.points[next] - bar.points[i]).norm();
    const Vec2 fi = (z.norm() - want) * z;
    CHECK(std::abs(f[2 * i] - fi.x()) <= 1e-12);
    CHECK(std::abs(f[2 * i + 1] - fi.y()) <= 1e-12);
  }
}

TEST_CASE("cyclic triangle law rejects other graphs") {
  Scenario s = two_cycles();
  s.law.kind = LawKind::TriangleCyclic;
  s.law.gains.clear();
  CHECK_THROWS_AS(vector_field(s), ConfigError);
}

TEST_CASE("edge variable counts agree between scenario and field") {
  for (const Scenario& s : {two_cycles(), five_agent(), two_cycles_poly()}) {
    const ClosedLoopField field(s);
    for (int e = 0; e < s.h_graph.m(); ++e) {
      CHECK(field.edge_var_count(e) == scenario_edge_vars(s, e));
    }
  }
}

TEST_CASE("analytic Jacobians agree with central differences") {
  std::vector<Scenario> cases{two_cycles(LawKind::LinearGain),
                              two_cycles(LawKind::Gradient), two_cycles_poly(),
                              triangle_cyclic(), five_agent()};
  for (const Scenario& s : cases) {
    const DynSystem sys = vector_field(s);
    REQUIRE(bool(sys.jac));
    for (std::uint64_t seed : {25u, 26u}) {
      const VecX x = random_config(s.n(), seed).flat();
      const MatX analytic = sys.jac(x);
      const MatX fd = linearize(sys, x);
      const double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
      CHECK((analytic - fd).lpNorm<Eigen::Infinity>() <= 1e-5 * scale);
    }
  }
}

TEST_CASE("every built-in law is SE(2) equivariant") {
  std::vector<Scenario> cases{two_cycles(LawKind::LinearGain),
                              two_cycles(LawKind::Gradient), two_cycles_poly(),
                              triangle_cyclic(), five_agent()};
  auto rng = make_rng(33);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const Scenario& s : cases) {
    const DynSystem sys = vector_field(s);
    const VecX x = random_config(s.n(), 35).flat();
    for (int rep = 0; rep < 4; ++rep) {
      const double angle = u(rng);
      const Vec2 t(u(rng), u(rng));
      const VecX lhs = sys(move_state(x, angle, t));
      const VecX rhs = rotate_field(sys(x), angle);
      CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
  }
}

TEST_CASE("integration from the design framework stays put") {
  Scenario s = two_cycles();
  s.integration.dt = 0.01;
  s.integration.total_time = 0.2;
  const Configuration bar = design_config(s);
  const Trajectory traj = integrate(s, bar);
  REQUIRE(traj.states.size() == 21);
  for (const auto& state : traj.states) CHECK(state == bar);
  CHECK(traj.terminal_speed == 0.0);
}

TEST_CASE("trajectory grid matches the requested step and horizon") {
  Scenario s = triangle_cyclic();
  s.integration.dt = 0.01;
  s.integration.total_time = 0.5;
  const Configuration x0 = random_config(3, 39, 1.0);
  const Trajectory traj = integrate(s, x0);
  REQUIRE(traj.states.size() == 51);
  REQUIRE(traj.times.size() == 51);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(0.5).epsilon(1e-12));
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    CHECK(traj.times[i] > traj.times[i - 1]);
  }
  CHECK(traj.states.front() == x0);
}

TEST_CASE("scalar benchmark converges from a small positive start") {
  const DynSystem sys = scalar_cubic_system(4.0);
  VecX x(1);
  x[0] = 0.1;
  detail::Rk4Work work;
  work.resize(1);
  const double dt = 1e-3;
  for (int step = 0; step < 50000; ++step) {
    REQUIRE(detail::rk4_step([&](const VecX& a, VecX& r) { sys.f(a, r); }, x, dt,
                             1e6, work));
  }
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("RK4 endpoint error shrinks by about sixteen when the step halves") {
  const double k = 4.0;
  const double x0 = 0.1;
  const double horizon = 1.0;
  const DynSystem sys = scalar_cubic_system(k);
  auto endpoint = [&](double dt) {
    VecX x(1);
    x[0] = x0;
    detail::Rk4Work work;
    work.resize(1);
    const long steps = std::lround(horizon / dt);
    for (long i = 0; i < steps; ++i) {
      detail::rk4_step([&](const VecX& a, VecX& r) { sys.f(a, r); }, x, dt, 1e6, work);
    }
    return x[0];
  };
  const double truth = exact_cubic(k, x0, horizon);
  const double e1 = std::abs(endpoint(0.01) - truth);
  const double e2 = std::abs(endpoint(0.005) - truth);
  REQUIRE(e2 > 1e-15);  // still far from the floating-point floor
  const double ratio = e1 / e2;
  CHECK(ratio >= 12.8);
  CHECK(ratio <= 19.2);
}

TEST_CASE("divergent runs trip the guard box") {
  Scenario s = two_cycles();
  for (double& g : s.law.gains) g = -1.0;  // repels instead of attracting
  s.integration.dt = 0.01;
  s.integration.total_time = 20.0;
  s.integration.guard_radius = 50.0;
  Configuration start = design_config(s);
  for (auto& p : start.points) p *= 1.5;
  CHECK_THROWS_AS(integrate(s, start), NonFiniteError);
}

TEST_CASE("collinear states form an invariant set of the two-cycles dynamics") {
  Scenario s = two_cycles();
  s.integration.dt = 1e-3;
  s.integration.total_time = 10.0;
  const Vec2 dir(std::cos(0.4), std::sin(0.4));
  const Vec2 base(0.3, -0.2);
  Configuration x0;
  for (double t : {0.2, 1.3, -0.6, 2.1}) x0.points.push_back(base + t * dir);
  REQUIRE(is_collinear(x0));
  const Trajectory traj = integrate(s, x0);
  for (std::size_t i = 0; i < traj.states.size(); i += 50) {
    CHECK(is_collinear(traj.states[i], 1e-8));
  }
  CHECK(is_collinear(traj.states.back(), 1e-8));
}
