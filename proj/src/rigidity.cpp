#include "formlab/rigidity.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "formlab/errors.hpp"
#include "formlab/geometry.hpp"
#include "formlab/rng.hpp"

namespace formlab {

MatX rigidity_matrix(const Framework& f) {
  f.graph.validate();
  const int n = f.graph.n;
  if (f.config.n() != n) throw DimensionMismatch("rigidity_matrix: graph/configuration size");
  if (n < 2) throw DegenerateInput("rigidity_matrix: need at least two agents");
  const int m = f.graph.m();
  MatX j = MatX::Zero(m, 2 * n);
  for (int k = 0; k < m; ++k) {
    const Edge& e = f.graph.edges[k];
    const Vec2 z = f.config.points[e.from - 1] - f.config.points[e.to - 1];
    j(k, 2 * (e.from - 1)) = z.x();
    j(k, 2 * (e.from - 1) + 1) = z.y();
    j(k, 2 * (e.to - 1)) = -z.x();
    j(k, 2 * (e.to - 1) + 1) = -z.y();
  }
  return j;
}

int numerical_rank(const MatX& m, double rel_tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<MatX> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] > rel_tol * s[0]) ++rank;
  }
  return rank;
}

bool is_infinitesimally_rigid(const Framework& f, double rank_tol) {
  const int n = f.graph.n;
  return numerical_rank(rigidity_matrix(f), rank_tol) == 2 * n - 3;
}

bool is_minimally_rigid(const Framework& f, double rank_tol) {
  if (!is_infinitesimally_rigid(f, rank_tol)) return false;
  for (int k = 0; k < f.graph.m(); ++k) {
    Framework sub = f;
    sub.graph.edges.erase(sub.graph.edges.begin() + k);
    if (is_infinitesimally_rigid(sub, rank_tol)) return false;
  }
  return true;
}

namespace {

// Residual delta(p) - d and its Jacobian (the rigidity matrix at p).
void realize_residual(const FormationGraph& g, const EdgeLengthVector& d,
                      const VecX& x, VecX& r) {
  for (int k = 0; k < g.m(); ++k) {
    const Edge& e = g.edges[k];
    const double dx = x[2 * (e.from - 1)] - x[2 * (e.to - 1)];
    const double dy = x[2 * (e.from - 1) + 1] - x[2 * (e.to - 1) + 1];
    r[k] = 0.5 * (dx * dx + dy * dy) - d.values[k];
  }
}

}  // namespace

std::optional<Framework> realize(const FormationGraph& g, const EdgeLengthVector& d,
                                 const RealizeOptions& opt) {
  g.validate();
  if (d.size() != g.m()) throw DimensionMismatch("realize: length vector vs edge count");
  for (double v : d.values) {
    if (v < 0.0) throw DegenerateInput("realize: negative target length");
  }
  const int n = g.n;
  const int m = g.m();
  if (n < 2 || m == 0) throw DegenerateInput("realize: need agents and edges");

  double span = 1.0;
  for (double v : d.values) span = std::max(span, std::sqrt(2.0 * v));

  VecX x(2 * n), r(m), rt(m), step;
  auto rng = make_rng(opt.seed, 0x7EA11ECULL);
  std::uniform_real_distribution<double> box(-span, span);

  for (int attempt = 0; attempt < opt.attempts; ++attempt) {
    for (int i = 0; i < 2 * n; ++i) x[i] = box(rng);
    double lambda = 1e-3;
    realize_residual(g, d, x, r);
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
      if (r.lpNorm<Eigen::Infinity>() <= opt.residual_tol) {
        return Framework(g, Configuration::from_flat(x));
      }
      Framework fw(g, Configuration::from_flat(x));
      const MatX j = rigidity_matrix(fw);
      const MatX jtj = j.transpose() * j;
      const VecX jtr = j.transpose() * r;
      bool accepted = false;
      for (int tries = 0; tries < 16; ++tries) {
        MatX damped = jtj;
        damped.diagonal().array() += lambda;
        step = damped.ldlt().solve(jtr);
        VecX xt = x - step;
        realize_residual(g, d, xt, rt);
        if (rt.squaredNorm() < r.squaredNorm()) {
          x = xt;
          r = rt;
          lambda = std::max(lambda * 0.25, 1e-12);
          accepted = true;
          break;
        }
        lambda *= 8.0;
      }
      if (!accepted) break;
    }
    if (r.lpNorm<Eigen::Infinity>() <= opt.residual_tol) {
      return Framework(g, Configuration::from_flat(x));
    }
  }
  return std::nullopt;
}

}  // namespace formlab
