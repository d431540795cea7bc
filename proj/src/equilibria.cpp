#include "formlab/equilibria.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "formlab/errors.hpp"
#include "formlab/geometry.hpp"

namespace formlab {

namespace {

bool finite(const VecX& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

// Newton refinement of one seed. Returns true on convergence.
bool refine(const DynSystem& sys, VecX& x, double tol, int max_iter) {
  VecX r(sys.dim), rt(sys.dim);
  sys.f(x, r);
  if (!finite(r)) return false;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (r.lpNorm<Eigen::Infinity>() <= tol) return true;
    const MatX j = sys.jac ? sys.jac(x) : linearize(sys, x);
    Eigen::JacobiSVD<MatX> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    const VecX step = svd.solve(r);
    if (!finite(step)) return false;
    const double base = r.norm();
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-10) {
      VecX xt = x - alpha * step;
      sys.f(xt, rt);
      if (finite(rt) && rt.norm() <= (1.0 - 1e-4 * alpha) * base) {
        x = xt;
        r = rt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return false;
  }
  return r.lpNorm<Eigen::Infinity>() <= tol;
}

// Sort key: canonical coordinates for formations (so congruent copies at
// different poses order identically), raw coordinates otherwise.
VecX sort_key(const DynSystem& sys, const VecX& x) {
  if (sys.agents > 0) {
    Configuration c = Configuration::from_flat(x);
    try {
      return canonicalize(c).flat();
    } catch (const DegenerateInput&) {
      const Vec2 mid = centroid(c);
      for (auto& p : c.points) p -= mid;
      return c.flat();
    }
  }
  return x;
}

bool key_less(const VecX& a, const VecX& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

bool same_equilibrium(const DynSystem& sys, const VecX& a, const VecX& b,
                      double dedup_tol) {
  if (sys.agents > 0) {
    const Configuration ca = Configuration::from_flat(a);
    const Configuration cb = Configuration::from_flat(b);
    double tol = dedup_tol;
    if (tol < 0.0) {
      const double scale = std::max(diameter(ca), diameter(cb));
      tol = std::max(1e-6 * scale, 1e-9 * (1.0 + a.lpNorm<Eigen::Infinity>()));
    }
    return alignment_residual(ca, cb, false) <= tol;
  }
  double tol = dedup_tol;
  if (tol < 0.0) tol = 1e-8 * (1.0 + a.lpNorm<Eigen::Infinity>());
  return (a - b).lpNorm<Eigen::Infinity>() <= tol;
}

}  // namespace

FindResult find_equilibria(const DynSystem& sys, const std::vector<VecX>& seeds,
                           double tol, const FindOptions& opt) {
  FindResult out;
  for (const VecX& seed : seeds) {
    if (seed.size() != sys.dim) throw DimensionMismatch("find_equilibria: seed dimension");
    VecX x = seed;
    if (!refine(sys, x, tol, opt.max_iterations)) {
      ++out.dropped;
      continue;
    }
    bool dup = false;
    for (const VecX& got : out.equilibria) {
      if (same_equilibrium(sys, got, x, opt.dedup_tol)) {
        dup = true;
        break;
      }
    }
    if (!dup) out.equilibria.push_back(std::move(x));
  }
  std::vector<std::pair<VecX, VecX>> keyed;
  keyed.reserve(out.equilibria.size());
  for (auto& e : out.equilibria) keyed.emplace_back(sort_key(sys, e), std::move(e));
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return key_less(a.first, b.first); });
  for (std::size_t i = 0; i < keyed.size(); ++i) out.equilibria[i] = std::move(keyed[i].second);
  return out;
}

MatX linearize(const DynSystem& sys, const VecX& x, double fd_step) {
  MatX j(sys.dim, sys.dim);
  VecX xp = x, xm = x, fp(sys.dim), fm(sys.dim);
  for (int k = 0; k < sys.dim; ++k) {
    const double h = fd_step * (1.0 + std::abs(x[k]));
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    sys.f(xp, fp);
    sys.f(xm, fm);
    j.col(k) = (fp - fm) / (2.0 * h);
    xp[k] = x[k];
    xm[k] = x[k];
  }
  return j;
}

MatX symmetry_basis(const VecX& x, int agents, double rank_tol) {
  const int d = 2 * agents;
  if (x.size() != d) throw DimensionMismatch("symmetry_basis: state dimension");
  MatX gen = MatX::Zero(d, 3);
  for (int i = 0; i < agents; ++i) {
    gen(2 * i, 0) = 1.0;
    gen(2 * i + 1, 1) = 1.0;
    gen(2 * i, 2) = -x[2 * i + 1];
    gen(2 * i + 1, 2) = x[2 * i];
  }
  Eigen::ColPivHouseholderQR<MatX> qr(gen);
  qr.setThreshold(rank_tol);
  const int rank = static_cast<int>(qr.rank());
  MatX q = qr.householderQ();
  return q.leftCols(rank);
}

EquilibriumRecord classify(const DynSystem& sys, const VecX& x, double eps_eig) {
  EquilibriumRecord rec;
  rec.state = x;
  const MatX j = sys.jac ? sys.jac(x) : linearize(sys, x);
  MatX reduced;
  if (sys.agents > 0) {
    const MatX basis = symmetry_basis(x, sys.agents);
    rec.symmetry_dims = static_cast<int>(basis.cols());
    // At an equilibrium the generators are right null vectors, so the
    // matrix is block triangular in [basis, complement] coordinates and
    // the complement block carries exactly the non-symmetry spectrum.
    Eigen::HouseholderQR<MatX> qr(basis);
    MatX q = qr.householderQ();
    const MatX comp = q.rightCols(sys.dim - rec.symmetry_dims);
    reduced = comp.transpose() * j * comp;
  } else {
    reduced = j;
  }
  Eigen::EigenSolver<MatX> es(reduced);
  rec.spectrum.resize(reduced.rows());
  for (int i = 0; i < reduced.rows(); ++i) rec.spectrum[i] = es.eigenvalues()[i];
  std::sort(rec.spectrum.begin(), rec.spectrum.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              if (a.real() != b.real()) return a.real() < b.real();
              return a.imag() < b.imag();
            });
  bool any_pos = false, any_marginal = false;
  for (const auto& ev : rec.spectrum) {
    if (ev.real() > eps_eig) any_pos = true;
    else if (ev.real() >= -eps_eig) any_marginal = true;
  }
  if (any_pos) rec.stability = Stability::Unstable;
  else if (any_marginal) rec.stability = Stability::Marginal;
  else rec.stability = Stability::Stable;
  return rec;
}

void partition(std::vector<EquilibriumRecord>& records, const Scenario& s, double tol) {
  for (auto& rec : records) {
    const Configuration c = Configuration::from_flat(rec.state);
    const bool on_target = global_objective(s, c).lpNorm<Eigen::Infinity>() <= tol;
    rec.designation = on_target ? Designation::Design : Designation::Ancillary;
  }
}

void partition(std::vector<EquilibriumRecord>& records,
               const std::function<bool(const VecX&)>& is_design) {
  for (auto& rec : records) {
    rec.designation = is_design(rec.state) ? Designation::Design : Designation::Ancillary;
  }
}

}  // namespace formlab
