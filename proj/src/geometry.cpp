#include "coretri/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "coretri/errors.hpp"

namespace coretri {

const char* norm_name(Norm p) {
  switch (p) {
    case Norm::L1:
      return "1";
    case Norm::LInf:
      return "inf";
    case Norm::L2:
    default:
      return "2";
  }
}

std::optional<Norm> norm_from_name(const std::string& s) {
  if (s == "1") return Norm::L1;
  if (s == "2") return Norm::L2;
  if (s == "inf" || s == "Inf" || s == "INF") return Norm::LInf;
  return std::nullopt;
}

void TriangulationInstance::validate() const {
  if (observations.empty()) throw DomainError("instance has no observations");
  for (size_t i = 0; i < observations.size(); ++i) {
    const Observation& o = observations[i];
    if (o.camera_index < 0 || o.camera_index >= static_cast<int>(cameras.size()))
      throw DomainError("observation " + std::to_string(i) + ": camera index out of range");
    if (!o.point2.allFinite())
      throw DomainError("observation " + std::to_string(i) + ": non-finite coordinates");
  }
  for (size_t c = 0; c < cameras.size(); ++c) {
    const CameraMatrix& P = cameras[c];
    if (!P.allFinite()) throw DomainError("camera " + std::to_string(c) + ": non-finite entries");
    if (P.row(2).norm() == 0.0)
      throw DomainError("camera " + std::to_string(c) + ": zero third row");
  }
  if (ground_truth) {
    for (const Observation& o : observations) {
      if (depth(cameras[o.camera_index], *ground_truth) <= 0.0)
        throw DomainError("ground truth behind camera " + std::to_string(o.camera_index));
    }
  }
  if (inlier_mask && inlier_mask->size() != observations.size())
    throw DomainError("inlier mask length mismatch");
}

Vec2 project(const CameraMatrix& P, const Vec3& x) {
  const double w = depth(P, x);
  if (!(w > 0.0)) throw CheiralityViolation("point not in front of camera");
  return (P.topRows<2>().leftCols<3>() * x + P.topRows<2>().col(3)) / w;
}

ConeForm to_cone_form(const CameraMatrix& P, const Observation& obs, Norm p) {
  ConeForm cf;
  for (int k = 0; k < 2; ++k) {
    cf.A.row(k) = obs.point2[k] * P.row(2).head<3>() - P.row(k).head<3>();
    cf.b[k] = obs.point2[k] * P(2, 3) - P(k, 3);
  }
  cf.c = P.row(2).head<3>();
  cf.d = P(2, 3);
  cf.norm_p = p;
  return cf;
}

double residual(const CameraMatrix& P, const Observation& obs, const Vec3& x, Norm p) {
  const ConeForm cf = to_cone_form(P, obs, p);
  const double g = cf.depth(x);
  if (!(g > 0.0)) throw CheiralityViolation("point not in front of camera");
  return cf.numerator(x) / g;
}

double displacement_k(const CameraMatrix& P, const Vec3& x_new, const Vec3& x_old) {
  return (project(P, x_new) - project(P, x_old)).norm();
}

bool obtuse_test(const CameraMatrix& P, const Observation& obs, const Vec3& x_star,
                 const Vec3& x, double delta_at_star, Norm p) {
  const double r = residual(P, obs, x, p);
  const double k = displacement_k(P, x, x_star);
  const double r2 = r * r;
  const double k2 = k * k;
  const double d2 = delta_at_star * delta_at_star;
  const double tol = 1e-9 * (1.0 + r2);
  // Degenerate: the two projections coincide and the residual did not grow,
  // so no angle is formed.
  if (k2 <= tol && r2 <= d2 + tol) return false;
  return r2 >= k2 + d2 - tol;
}

Vec3 linear_initial_estimate(const TriangulationInstance& instance,
                             const std::vector<int>& subset) {
  const int m = static_cast<int>(subset.size());
  Eigen::MatrixXd A(2 * m, 3);
  Eigen::VectorXd rhs(2 * m);
  for (int i = 0; i < m; ++i) {
    const Observation& o = instance.observations[subset[i]];
    const CameraMatrix& P = instance.cameras[o.camera_index];
    for (int k = 0; k < 2; ++k) {
      A.row(2 * i + k) = o.point2[k] * P.row(2).head<3>() - P.row(k).head<3>();
      rhs(2 * i + k) = P(k, 3) - o.point2[k] * P(2, 3);
    }
  }
  const Mat3 N = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(N);
  const double lmin = eig.eigenvalues()(0);
  const double lmax = eig.eigenvalues()(2);
  if (!(lmin > 0.0) || lmax / lmin > 1e12)
    throw DegenerateGeometry("observing rays do not constrain the point");
  return N.ldlt().solve(A.transpose() * rhs);
}

Vec3 camera_center(const CameraMatrix& P) {
  const Mat3 M = P.leftCols<3>();
  Eigen::FullPivLU<Mat3> lu(M);
  if (!lu.isInvertible()) {
    // Camera at infinity; fall back to the least-squares null direction.
    Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return -svd.solve(P.col(3));
  }
  return -lu.solve(P.col(3));
}

Vec3 principal_axis(const CameraMatrix& P) {
  const Mat3 M = P.leftCols<3>();
  Vec3 axis = M.determinant() >= 0.0 ? Vec3(M.row(2)) : Vec3(-M.row(2));
  const double n = axis.norm();
  if (n > 0.0) axis /= n;
  return axis;
}

Vec3 fallback_start(const TriangulationInstance& instance, const std::vector<int>& subset) {
  Vec3 centroid = Vec3::Zero();
  Vec3 axis = Vec3::Zero();
  for (int i : subset) {
    const CameraMatrix& P = instance.cameras[instance.observations[i].camera_index];
    centroid += camera_center(P);
    axis += principal_axis(P);
  }
  centroid /= static_cast<double>(subset.size());
  const double n = axis.norm();
  if (n > 0.0) axis /= n;
  return centroid + axis;
}

}  // namespace coretri
