#pragma once

#include <Eigen/Core>
#include <vector>

namespace formlab {

using Vec2 = Eigen::Vector2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Planar positions of n agents. points[i] holds agent i+1 (agent ids are
// 1-based everywhere they appear in graphs, files, and printed output).
struct Configuration {
  std::vector<Vec2> points;

  Configuration() = default;
  explicit Configuration(std::vector<Vec2> pts) : points(std::move(pts)) {}

  int n() const { return static_cast<int>(points.size()); }

  // Flat state [x1, y1, x2, y2, ...] used by the dynamics and equilibrium code.
  VecX flat() const {
    VecX v(2 * points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      v[2 * i] = points[i].x();
      v[2 * i + 1] = points[i].y();
    }
    return v;
  }

  static Configuration from_flat(const VecX& v) {
    Configuration c;
    c.points.resize(v.size() / 2);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      c.points[i] = Vec2(v[2 * i], v[2 * i + 1]);
    }
    return c;
  }

  bool operator==(const Configuration& o) const { return points == o.points; }
};

// Desired shape, anchored: agent 1 sits at the origin and points[i] is the
// desired position of agent i+2. Rigid motions of this shape are equally
// acceptable outcomes; the anchoring only removes the trivial ambiguity.
struct TargetConfiguration {
  std::vector<Vec2> points;

  TargetConfiguration() = default;
  explicit TargetConfiguration(std::vector<Vec2> pts) : points(std::move(pts)) {}

  int n_agents() const { return static_cast<int>(points.size()) + 1; }

  Configuration to_configuration() const {
    Configuration c;
    c.points.reserve(points.size() + 1);
    c.points.emplace_back(0.0, 0.0);
    for (const auto& p : points) c.points.push_back(p);
    return c;
  }
};

// One scalar per edge of a graph, in the same units delta() produces
// (half the squared edge length). Plain squared lengths convert by * 0.5.
struct EdgeLengthVector {
  std::vector<double> values;

  EdgeLengthVector() = default;
  explicit EdgeLengthVector(std::vector<double> v) : values(std::move(v)) {}

  int size() const { return static_cast<int>(values.size()); }
};

}  // namespace formlab
