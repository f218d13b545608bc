#pragma once

#include <vector>

#include "coretri/types.hpp"

namespace coretri {

// Signed depth of x in front of the camera, P3 * [x; 1].
inline double depth(const CameraMatrix& P, const Vec3& x) {
  return P.row(2).head<3>().dot(x) + P(2, 3);
}

// Pinhole projection (P^{1:2} x~) / (P^3 x~). Throws CheiralityViolation when
// the depth is not strictly positive.
Vec2 project(const CameraMatrix& P, const Vec3& x);

// Affine cone data of one (camera, observation) pair under the given norm.
ConeForm to_cone_form(const CameraMatrix& P, const Observation& obs, Norm p);

// p-norm reprojection error ||u - project(P, x)||_p, evaluated through the
// cone form so there is a single source of residual algebra.
double residual(const CameraMatrix& P, const Observation& obs, const Vec3& x, Norm p);

// Image-plane shift ||project(P, x_new) - project(P, x_old)||_2. Always the
// Euclidean image metric, for every residual norm setting.
double displacement_k(const CameraMatrix& P, const Vec3& x_new, const Vec3& x_old);

// True when the angle at project(P, x_star) between the observation and
// project(P, x) is obtuse, tested through the cosine-rule inequality
//   residual(x)^2 >= displacement^2 + delta_at_star^2
// with relative slack. Coincident projections with no residual growth count
// as not obtuse.
bool obtuse_test(const CameraMatrix& P, const Observation& obs, const Vec3& x_star,
                 const Vec3& x, double delta_at_star, Norm p);

// DLT-style linear triangulation over a subset of observations: least-squares
// solution of the stacked constraints u_k (P^3 x~) - P^(k) x~ = 0 with the
// homogeneous coordinate fixed to 1. No cheirality guarantee.
Vec3 linear_initial_estimate(const TriangulationInstance& instance,
                             const std::vector<int>& subset);

Vec3 camera_center(const CameraMatrix& P);
Vec3 principal_axis(const CameraMatrix& P);

// Centroid of the subset's camera centers pushed one unit along the average
// principal axis. Last-resort start point when the linear estimate fails.
Vec3 fallback_start(const TriangulationInstance& instance, const std::vector<int>& subset);

}  // namespace coretri
