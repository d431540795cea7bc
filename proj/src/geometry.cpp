#include "formlab/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "formlab/errors.hpp"

namespace formlab {

Configuration canonicalize(const Configuration& c) {
  if (c.n() < 2) throw DegenerateInput("canonicalize: need at least two points");
  const Vec2 p0 = c.points[0];
  const Vec2 d = c.points[1] - p0;
  if (d.x() == 0.0 && d.y() == 0.0) {
    throw DegenerateInput("canonicalize: first two points coincide");
  }
  // Already canonical: return the input bit-for-bit so the map is idempotent.
  if (p0.x() == 0.0 && p0.y() == 0.0 && d.y() == 0.0 && d.x() > 0.0) {
    return c;
  }
  const double r = d.norm();
  const double cs = d.x() / r;
  const double sn = d.y() / r;
  Configuration out;
  out.points.reserve(c.points.size());
  for (const auto& p : c.points) {
    const Vec2 q = p - p0;
    // Rotation by -atan2(sn, cs): maps d onto the positive x-axis.
    out.points.emplace_back(cs * q.x() + sn * q.y(), -sn * q.x() + cs * q.y());
  }
  // The rotation leaves the pinned coordinates a rounding error away from
  // their exact values; snap them so a second pass hits the early return.
  out.points[0] = Vec2(0.0, 0.0);
  out.points[1] = Vec2(r, 0.0);
  return out;
}

EdgeLengthVector delta(const Configuration& c, const std::vector<Edge>& edges) {
  EdgeLengthVector d;
  d.values.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.from < 1 || e.from > c.n() || e.to < 1 || e.to > c.n()) {
      throw IndexOutOfRange("delta: edge endpoint outside configuration");
    }
    const Vec2 z = c.points[e.from - 1] - c.points[e.to - 1];
    d.values.push_back(0.5 * z.squaredNorm());
  }
  return d;
}

double alignment_residual(const Configuration& a, const Configuration& b,
                          bool allow_reflection) {
  if (a.n() != b.n()) throw DimensionMismatch("alignment_residual: point counts differ");
  const int n = a.n();
  if (n == 0) return 0.0;
  const Vec2 ca = centroid(a);
  const Vec2 cb = centroid(b);
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    m += (b.points[i] - cb) * (a.points[i] - ca).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d r = svd.matrixU() * svd.matrixV().transpose();
  if (!allow_reflection && r.determinant() < 0.0) {
    Eigen::Matrix2d flip = Eigen::Matrix2d::Identity();
    flip(1, 1) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec2 err = r * (a.points[i] - ca) - (b.points[i] - cb);
    worst = std::max(worst, err.norm());
  }
  return worst;
}

bool congruent(const Configuration& a, const Configuration& b,
               bool allow_reflection, double tol) {
  return alignment_residual(a, b, allow_reflection) <= tol;
}

bool is_collinear(const Configuration& c, double tol) {
  const int n = c.n();
  if (n < 3) return true;
  const Vec2 mid = centroid(c);
  MatX m(2, n);
  for (int i = 0; i < n; ++i) m.col(i) = c.points[i] - mid;
  Eigen::JacobiSVD<MatX> svd(m);
  const double s0 = svd.singularValues()[0];
  const double s1 = svd.singularValues()[1];
  return s1 <= tol * (s0 + std::numeric_limits<double>::min());
}

Vec2 centroid(const Configuration& c) {
  if (c.n() == 0) throw DegenerateInput("centroid: empty configuration");
  Vec2 s(0.0, 0.0);
  for (const auto& p : c.points) s += p;
  return s / static_cast<double>(c.n());
}

double diameter(const Configuration& c) {
  double best = 0.0;
  for (int i = 0; i < c.n(); ++i) {
    for (int j = i + 1; j < c.n(); ++j) {
      best = std::max(best, (c.points[i] - c.points[j]).norm());
    }
  }
  return best;
}

Configuration rigid_motion(const Configuration& c, double angle, const Vec2& t,
                           bool reflect) {
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  Configuration out;
  out.points.reserve(c.points.size());
  for (auto p : c.points) {
    if (reflect) p.y() = -p.y();
    out.points.emplace_back(cs * p.x() - sn * p.y() + t.x(),
                            sn * p.x() + cs * p.y() + t.y());
  }
  return out;
}

}  // namespace formlab
