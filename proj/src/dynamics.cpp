#include "formlab/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "formlab/errors.hpp"

namespace formlab {

namespace {

double ipow(double v, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= v;
  return r;
}

}  // namespace

void MultiPoly::validate() const {
  if (n_vars < 0) throw ConfigError("polynomial: negative variable count");
  for (const auto& t : terms) {
    if (static_cast<int>(t.exps.size()) != n_vars) {
      throw ConfigError("polynomial: exponent tuple length != variable count");
    }
    if (!std::isfinite(t.coeff)) throw ConfigError("polynomial: non-finite coefficient");
    for (int e : t.exps) {
      if (e < 0) throw ConfigError("polynomial: negative exponent");
    }
  }
}

int MultiPoly::total_degree() const {
  int deg = 0;
  for (const auto& t : terms) {
    int d = 0;
    for (int e : t.exps) d += e;
    deg = std::max(deg, d);
  }
  return deg;
}

double MultiPoly::eval(const double* v) const {
  double sum = 0.0;
  for (const auto& t : terms) {
    double prod = t.coeff;
    for (int k = 0; k < n_vars; ++k) {
      if (t.exps[k] != 0) prod *= ipow(v[k], t.exps[k]);
    }
    sum += prod;
  }
  return sum;
}

void MultiPoly::add_gradient(const double* v, double scale, double* dv) const {
  for (const auto& t : terms) {
    for (int k = 0; k < n_vars; ++k) {
      const int ek = t.exps[k];
      if (ek == 0) continue;
      double prod = t.coeff * ek * ipow(v[k], ek - 1);
      for (int j = 0; j < n_vars; ++j) {
        if (j != k && t.exps[j] != 0) prod *= ipow(v[j], t.exps[j]);
      }
      dv[k] += scale * prod;
    }
  }
}

std::string to_string(ObservationMode m) {
  return m == ObservationMode::RangeOnly ? "range_only" : "relative_position";
}

std::string to_string(ObjectiveMode m) {
  switch (m) {
    case ObjectiveMode::RangeOnly: return "range_only";
    case ObjectiveMode::RangeAndAngle: return "range_and_angle";
    default: return "full_information";
  }
}

std::string to_string(LawKind k) {
  switch (k) {
    case LawKind::LinearGain: return "linear_gain";
    case LawKind::Gradient: return "gradient";
    case LawKind::TriangleCyclic: return "triangle_cyclic";
    default: return "polynomial";
  }
}

namespace {

// Length of the observation vector of agent i (1-based).
int obs_len(const Scenario& s, int i) {
  const int k = outvalence(s.h_graph, i);
  if (s.obs_mode == ObservationMode::RangeOnly) return k;
  return k + std::max(0, k - 1);
}

int obj_len(const Scenario& s, int i) {
  if (s.obj_mode == ObjectiveMode::FullInformation) return 2 * (s.n() - 1);
  const int k = outvalence(s.delta_graph, i);
  if (s.obj_mode == ObjectiveMode::RangeOnly) return k;
  return k + std::max(0, k - 1);
}

}  // namespace

void Scenario::validate() const {
  const int agents = n();
  if (agents < 2) throw ConfigError("scenario: need at least two agents");
  for (const auto& p : target.points) {
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) {
      throw ConfigError("scenario: non-finite target coordinate");
    }
  }
  if (h_graph.n != agents) throw DimensionMismatch("scenario: observation graph size != n");
  if (delta_graph.n != agents) throw DimensionMismatch("scenario: objective graph size != n");
  h_graph.validate();
  delta_graph.validate();

  switch (law.kind) {
    case LawKind::LinearGain:
      if (static_cast<int>(law.gains.size()) != h_graph.m()) {
        throw ConfigError("scenario: one gain per observation edge required");
      }
      for (double g : law.gains) {
        if (!std::isfinite(g)) throw ConfigError("scenario: non-finite gain");
      }
      break;
    case LawKind::Gradient:
      break;
    case LawKind::TriangleCyclic: {
      if (agents != 3 || h_graph.m() != 3) {
        throw ConfigError("scenario: cyclic triangle law needs 3 agents on a 3-cycle");
      }
      auto has = [&](int a, int b) {
        return std::find(h_graph.edges.begin(), h_graph.edges.end(), Edge(a, b)) !=
               h_graph.edges.end();
      };
      if (!has(1, 2) || !has(2, 3) || !has(3, 1)) {
        throw ConfigError("scenario: cyclic triangle law needs edges 1->2, 2->3, 3->1");
      }
      break;
    }
    case LawKind::PolynomialCustom: {
      if (static_cast<int>(law.edge_polys.size()) != h_graph.m()) {
        throw ConfigError("scenario: one polynomial per observation edge required");
      }
      for (int e = 0; e < h_graph.m(); ++e) {
        const MultiPoly& p = law.edge_polys[e];
        p.validate();
        const int agent = h_graph.edges[e].from;
        const int want = obj_len(*this, agent) + obs_len(*this, agent);
        if (p.n_vars != want) {
          throw ConfigError("scenario: polynomial variable count != objective+observation length");
        }
        if (p.total_degree() > law.degree_cap) {
          throw ConfigError("scenario: polynomial degree above cap");
        }
      }
      break;
    }
  }
  if (!(integration.dt > 0.0) || !(integration.total_time >= 0.0) ||
      !(integration.guard_radius > 0.0)) {
    throw ConfigError("scenario: integration settings must be positive");
  }
}

VecX observe(const Scenario& s, const Configuration& c, int i) {
  if (c.n() != s.n()) throw DimensionMismatch("observe: configuration size != n");
  if (i < 1 || i > s.n()) throw IndexOutOfRange("observe: agent id outside [1, n]");
  const auto idx = s.h_graph.out_edge_indices(i);
  const int k = static_cast<int>(idx.size());
  VecX h(obs_len(s, i));
  const Vec2 xi = c.points[i - 1];
  for (int j = 0; j < k; ++j) {
    h[j] = (c.points[s.h_graph.edges[idx[j]].to - 1] - xi).norm();
  }
  if (s.obs_mode == ObservationMode::RelativePosition && k >= 2) {
    const Vec2 first = c.points[s.h_graph.edges[idx[0]].to - 1] - xi;
    for (int j = 1; j < k; ++j) {
      h[k + j - 1] = first.dot(c.points[s.h_graph.edges[idx[j]].to - 1] - xi);
    }
  }
  return h;
}

VecX objective_data(const Scenario& s, int i) {
  if (i < 1 || i > s.n()) throw IndexOutOfRange("objective_data: agent id outside [1, n]");
  if (s.obj_mode == ObjectiveMode::FullInformation) {
    VecX v(2 * (s.n() - 1));
    for (std::size_t j = 0; j < s.target.points.size(); ++j) {
      v[2 * j] = s.target.points[j].x();
      v[2 * j + 1] = s.target.points[j].y();
    }
    return v;
  }
  const Configuration bar = s.target.to_configuration();
  const auto idx = s.delta_graph.out_edge_indices(i);
  const int k = static_cast<int>(idx.size());
  VecX v(obj_len(s, i));
  const Vec2 xi = bar.points[i - 1];
  for (int j = 0; j < k; ++j) {
    v[j] = (bar.points[s.delta_graph.edges[idx[j]].to - 1] - xi).squaredNorm();
  }
  if (s.obj_mode == ObjectiveMode::RangeAndAngle && k >= 2) {
    const Vec2 first = bar.points[s.delta_graph.edges[idx[0]].to - 1] - xi;
    for (int j = 1; j < k; ++j) {
      v[k + j - 1] = first.dot(bar.points[s.delta_graph.edges[idx[j]].to - 1] - xi);
    }
  }
  return v;
}

VecX local_objective(const Scenario& s, const Configuration& c, int i) {
  if (c.n() != s.n()) throw DimensionMismatch("local_objective: configuration size != n");
  if (i < 1 || i > s.n()) throw IndexOutOfRange("local_objective: agent id outside [1, n]");
  const Configuration bar = s.target.to_configuration();
  const auto idx = s.delta_graph.out_edge_indices(i);
  VecX r(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const Edge& e = s.delta_graph.edges[idx[j]];
    const double want = (bar.points[e.to - 1] - bar.points[e.from - 1]).squaredNorm();
    r[j] = (c.points[e.to - 1] - c.points[e.from - 1]).squaredNorm() - want;
  }
  return r;
}

VecX global_objective(const Scenario& s, const Configuration& c) {
  if (c.n() != s.n()) throw DimensionMismatch("global_objective: configuration size != n");
  const Configuration bar = s.target.to_configuration();
  VecX r(s.delta_graph.m());
  for (int k = 0; k < s.delta_graph.m(); ++k) {
    const Edge& e = s.delta_graph.edges[k];
    const double want = (bar.points[e.to - 1] - bar.points[e.from - 1]).squaredNorm();
    r[k] = (c.points[e.to - 1] - c.points[e.from - 1]).squaredNorm() - want;
  }
  return r;
}

int scenario_edge_vars(const Scenario& s, int edge_index) {
  if (edge_index < 0 || edge_index >= s.h_graph.m()) {
    throw IndexOutOfRange("scenario_edge_vars: edge index");
  }
  const int agent = s.h_graph.edges[edge_index].from;
  return obj_len(s, agent) + obs_len(s, agent);
}

ClosedLoopField::ClosedLoopField(const Scenario& s) : scenario_(s) {
  scenario_.validate();
  n_ = scenario_.n();
  const Configuration bar = scenario_.target.to_configuration();
  const int m = scenario_.h_graph.m();
  efrom_.resize(m);
  eto_.resize(m);
  dsq_.resize(m);
  dlen_.resize(m);
  for (int e = 0; e < m; ++e) {
    const Edge& edge = scenario_.h_graph.edges[e];
    efrom_[e] = edge.from - 1;
    eto_[e] = edge.to - 1;
    dsq_[e] = (bar.points[edge.to - 1] - bar.points[edge.from - 1]).squaredNorm();
    dlen_[e] = std::sqrt(dsq_[e]);
  }
  gains_ = scenario_.law.gains;
  out_targets_.resize(n_);
  out_edges_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    for (int idx : scenario_.h_graph.out_edge_indices(i + 1)) {
      out_targets_[i].push_back(eto_[idx]);
      out_edges_[i].push_back(idx);
    }
  }
  obj_data_.resize(n_);
  for (int i = 0; i < n_; ++i) obj_data_[i] = objective_data(scenario_, i + 1);
}

int ClosedLoopField::var_count(int agent0) const {
  const int k = static_cast<int>(out_targets_[agent0].size());
  const int hl = (scenario_.obs_mode == ObservationMode::RangeOnly)
                     ? k
                     : k + std::max(0, k - 1);
  return static_cast<int>(obj_data_[agent0].size()) + hl;
}

void ClosedLoopField::agent_observation(const VecX& x, int agent0, double* h) const {
  const auto& tg = out_targets_[agent0];
  const int k = static_cast<int>(tg.size());
  const double xi = x[2 * agent0], yi = x[2 * agent0 + 1];
  for (int j = 0; j < k; ++j) {
    const double zx = x[2 * tg[j]] - xi;
    const double zy = x[2 * tg[j] + 1] - yi;
    h[j] = std::sqrt(zx * zx + zy * zy);
  }
  if (scenario_.obs_mode == ObservationMode::RelativePosition && k >= 2) {
    const double fx = x[2 * tg[0]] - xi;
    const double fy = x[2 * tg[0] + 1] - yi;
    for (int j = 1; j < k; ++j) {
      h[k + j - 1] = fx * (x[2 * tg[j]] - xi) + fy * (x[2 * tg[j] + 1] - yi);
    }
  }
}

void ClosedLoopField::fill_vars(const VecX& x, int agent0, double* v) const {
  const VecX& od = obj_data_[agent0];
  for (int j = 0; j < od.size(); ++j) v[j] = od[j];
  agent_observation(x, agent0, v + od.size());
}

double ClosedLoopField::control_value(const VecX& x, int e, const double* vars) const {
  const double zx = x[2 * eto_[e]] - x[2 * efrom_[e]];
  const double zy = x[2 * eto_[e] + 1] - x[2 * efrom_[e] + 1];
  double u = 0.0;
  switch (scenario_.law.kind) {
    case LawKind::LinearGain:
      u = gains_[e] * (zx * zx + zy * zy - dsq_[e]);
      break;
    case LawKind::Gradient:
    case LawKind::TriangleCyclic:
      u = std::sqrt(zx * zx + zy * zy) - dlen_[e];
      break;
    case LawKind::PolynomialCustom:
      u = scenario_.law.edge_polys[e].eval(vars);
      break;
  }
  if (eps_ != 0.0) u += eps_ * pert_[e].eval(vars);
  return u;
}

void ClosedLoopField::eval(const VecX& x, VecX& out) const {
  out.setZero();
  const bool needs_vars =
      scenario_.law.kind == LawKind::PolynomialCustom || eps_ != 0.0;
  if (!needs_vars) {
    const int m = static_cast<int>(efrom_.size());
    if (scenario_.law.kind == LawKind::LinearGain) {
      for (int e = 0; e < m; ++e) {
        const int f = efrom_[e], t = eto_[e];
        const double zx = x[2 * t] - x[2 * f];
        const double zy = x[2 * t + 1] - x[2 * f + 1];
        const double u = gains_[e] * (zx * zx + zy * zy - dsq_[e]);
        out[2 * f] += u * zx;
        out[2 * f + 1] += u * zy;
      }
    } else {
      for (int e = 0; e < m; ++e) {
        const int f = efrom_[e], t = eto_[e];
        const double zx = x[2 * t] - x[2 * f];
        const double zy = x[2 * t + 1] - x[2 * f + 1];
        const double u = std::sqrt(zx * zx + zy * zy) - dlen_[e];
        out[2 * f] += u * zx;
        out[2 * f + 1] += u * zy;
      }
    }
    return;
  }
  std::vector<double> vars;
  for (int i = 0; i < n_; ++i) {
    if (out_edges_[i].empty()) continue;
    vars.assign(var_count(i), 0.0);
    fill_vars(x, i, vars.data());
    for (int e : out_edges_[i]) {
      const double zx = x[2 * eto_[e]] - x[2 * i];
      const double zy = x[2 * eto_[e] + 1] - x[2 * i + 1];
      const double u = control_value(x, e, vars.data());
      out[2 * i] += u * zx;
      out[2 * i + 1] += u * zy;
    }
  }
}

VecX ClosedLoopField::operator()(const VecX& x) const {
  VecX out(dim());
  eval(x, out);
  return out;
}

double ClosedLoopField::edge_control(const VecX& x, int e) const {
  if (e < 0 || e >= static_cast<int>(efrom_.size())) {
    throw IndexOutOfRange("edge_control: edge index");
  }
  const bool needs_vars =
      scenario_.law.kind == LawKind::PolynomialCustom || eps_ != 0.0;
  if (!needs_vars) return control_value(x, e, nullptr);
  std::vector<double> vars(var_count(efrom_[e]), 0.0);
  fill_vars(x, efrom_[e], vars.data());
  return control_value(x, e, vars.data());
}

void ClosedLoopField::set_perturbation(double epsilon, std::vector<MultiPoly> per_edge) {
  if (static_cast<int>(per_edge.size()) != scenario_.h_graph.m()) {
    throw DimensionMismatch("set_perturbation: one polynomial per observation edge");
  }
  for (int e = 0; e < scenario_.h_graph.m(); ++e) {
    per_edge[e].validate();
    if (per_edge[e].n_vars != var_count(efrom_[e])) {
      throw DimensionMismatch("set_perturbation: polynomial variable count");
    }
  }
  eps_ = epsilon;
  pert_ = std::move(per_edge);
}

void ClosedLoopField::clear_perturbation() {
  eps_ = 0.0;
  pert_.clear();
}

int ClosedLoopField::edge_var_count(int edge_index) const {
  if (edge_index < 0 || edge_index >= static_cast<int>(efrom_.size())) {
    throw IndexOutOfRange("edge_var_count: edge index");
  }
  return var_count(efrom_[edge_index]);
}

MatX ClosedLoopField::jacobian(const VecX& x) const {
  const int d = dim();
  MatX jac = MatX::Zero(d, d);
  VecX grad(d);
  std::vector<double> vars, dv;
  const bool poly_law = scenario_.law.kind == LawKind::PolynomialCustom;

  for (int i = 0; i < n_; ++i) {
    if (out_edges_[i].empty()) continue;
    const bool needs_vars = poly_law || eps_ != 0.0;
    const auto& tg = out_targets_[i];
    const int k = static_cast<int>(tg.size());
    const int nobj = static_cast<int>(obj_data_[i].size());
    if (needs_vars) {
      vars.assign(var_count(i), 0.0);
      fill_vars(x, i, vars.data());
    }
    for (int e : out_edges_[i]) {
      const int t = eto_[e];
      const double zx = x[2 * t] - x[2 * i];
      const double zy = x[2 * t + 1] - x[2 * i + 1];
      const double u = control_value(x, e, needs_vars ? vars.data() : nullptr);

      // u * d(z_e)/dx
      jac(2 * i, 2 * i) -= u;
      jac(2 * i + 1, 2 * i + 1) -= u;
      jac(2 * i, 2 * t) += u;
      jac(2 * i + 1, 2 * t + 1) += u;

      // z_e * (grad u)^T
      grad.setZero();
      switch (scenario_.law.kind) {
        case LawKind::LinearGain: {
          const double c = 2.0 * gains_[e];
          grad[2 * i] -= c * zx;
          grad[2 * i + 1] -= c * zy;
          grad[2 * t] += c * zx;
          grad[2 * t + 1] += c * zy;
          break;
        }
        case LawKind::Gradient:
        case LawKind::TriangleCyclic: {
          const double r = std::sqrt(zx * zx + zy * zy);
          if (r > 0.0) {
            grad[2 * i] -= zx / r;
            grad[2 * i + 1] -= zy / r;
            grad[2 * t] += zx / r;
            grad[2 * t + 1] += zy / r;
          }
          break;
        }
        case LawKind::PolynomialCustom:
          break;
      }
      if (needs_vars) {
        dv.assign(vars.size(), 0.0);
        if (poly_law) scenario_.law.edge_polys[e].add_gradient(vars.data(), 1.0, dv.data());
        if (eps_ != 0.0) pert_[e].add_gradient(vars.data(), eps_, dv.data());
        // Chain rule through the observation entries (objective entries are
        // constants). Norm entry j: |x_a - x_i|; inner entry: (x_l1 - x_i).(x_lj - x_i).
        for (int j = 0; j < k; ++j) {
          const double w = dv[nobj + j];
          if (w == 0.0) continue;
          const int a = tg[j];
          const double wx = x[2 * a] - x[2 * i];
          const double wy = x[2 * a + 1] - x[2 * i + 1];
          const double r = std::sqrt(wx * wx + wy * wy);
          if (r == 0.0) continue;
          grad[2 * a] += w * wx / r;
          grad[2 * a + 1] += w * wy / r;
          grad[2 * i] -= w * wx / r;
          grad[2 * i + 1] -= w * wy / r;
        }
        if (scenario_.obs_mode == ObservationMode::RelativePosition && k >= 2) {
          const int l1 = tg[0];
          const double fx = x[2 * l1] - x[2 * i];
          const double fy = x[2 * l1 + 1] - x[2 * i + 1];
          for (int j = 1; j < k; ++j) {
            const double w = dv[nobj + k + j - 1];
            if (w == 0.0) continue;
            const int lj = tg[j];
            const double gx = x[2 * lj] - x[2 * i];
            const double gy = x[2 * lj + 1] - x[2 * i + 1];
            grad[2 * l1] += w * gx;
            grad[2 * l1 + 1] += w * gy;
            grad[2 * lj] += w * fx;
            grad[2 * lj + 1] += w * fy;
            grad[2 * i] -= w * (gx + fx);
            grad[2 * i + 1] -= w * (gy + fy);
          }
        }
      }
      jac.row(2 * i) += zx * grad.transpose();
      jac.row(2 * i + 1) += zy * grad.transpose();
    }
  }
  return jac;
}

DynSystem vector_field(const Scenario& s) {
  return to_system(std::make_shared<ClosedLoopField>(s));
}

DynSystem to_system(std::shared_ptr<const ClosedLoopField> field) {
  DynSystem sys;
  sys.dim = field->dim();
  sys.agents = field->n();
  sys.f = [field](const VecX& x, VecX& out) { field->eval(x, out); };
  sys.jac = [field](const VecX& x) { return field->jacobian(x); };
  return sys;
}

DynSystem scalar_cubic_system(double k) {
  DynSystem sys;
  sys.dim = 1;
  sys.agents = 0;
  sys.f = [k](const VecX& x, VecX& out) { out[0] = x[0] * (1.0 - k * x[0] * x[0]); };
  sys.jac = [k](const VecX& x) {
    MatX j(1, 1);
    j(0, 0) = 1.0 - 3.0 * k * x[0] * x[0];
    return j;
  };
  return sys;
}

Trajectory integrate(const Scenario& s, const Configuration& x0) {
  if (x0.n() != s.n()) throw DimensionMismatch("integrate: initial configuration size != n");
  ClosedLoopField field(s);
  const double dt = s.integration.dt;
  const long steps = static_cast<long>(std::floor(s.integration.total_time / dt));

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  VecX x = x0.flat();
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  detail::Rk4Work work;
  work.resize(field.dim());
  for (long k = 1; k <= steps; ++k) {
    if (!detail::rk4_step([&field](const VecX& v, VecX& out) { field.eval(v, out); }, x,
                          dt, s.integration.guard_radius, work)) {
      throw NonFiniteError("integrate: trajectory left the guard box");
    }
    traj.times.push_back(static_cast<double>(k) * dt);
    traj.states.push_back(Configuration::from_flat(x));
  }
  VecX speed(field.dim());
  field.eval(x, speed);
  traj.terminal_speed = speed.norm();
  return traj;
}

}  // namespace formlab
