#pragma once

#include "formlab/graph.hpp"
#include "formlab/types.hpp"

namespace formlab {

// Translate agent 1 to the origin and rotate agent 2 onto the positive
// x-axis. Throws DegenerateInput when n < 2 or the first two points
// coincide. A configuration that is already canonical is returned
// unchanged, so the map is exactly idempotent.
Configuration canonicalize(const Configuration& c);

// Half squared edge lengths, one entry per edge, in edge-list order:
// delta_k = 0.5 * |x_i - x_j|^2 for edge k = (i, j).
EdgeLengthVector delta(const Configuration& c, const std::vector<Edge>& edges);

// Smallest max-pointwise distance between a and b over rigid motions
// (rotations + translations; reflections too when allow_reflection).
// Solved in closed form: center both at their centroids, then align with
// the best orthogonal map from the SVD of the cross-covariance.
double alignment_residual(const Configuration& a, const Configuration& b,
                          bool allow_reflection);

// True when some rigid motion maps a onto b with max pointwise error <= tol.
// tol is absolute; a diameter-relative choice like 1e-6 * diameter(a) is the
// usual calling convention. Reflections count only when allow_reflection.
bool congruent(const Configuration& a, const Configuration& b,
               bool allow_reflection, double tol);

// True when all points lie on one line: the second singular value of the
// centered coordinate matrix is <= tol * (first singular value + tiny).
// Fewer than three points are always collinear.
bool is_collinear(const Configuration& c, double tol = 1e-9);

Vec2 centroid(const Configuration& c);

// Largest pairwise distance. Zero for n < 2.
double diameter(const Configuration& c);

// Rotate by angle, then translate; mirror across the x-axis first when
// reflect is set. Handy for building congruence fixtures.
Configuration rigid_motion(const Configuration& c, double angle, const Vec2& t,
                           bool reflect = false);

}  // namespace formlab
