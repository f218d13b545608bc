#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coretri {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat23 = Eigen::Matrix<double, 2, 3>;

// 3x4 projective camera, row-major semantics P = [M | p4].
using CameraMatrix = Mat34;

enum class Norm { L1, L2, LInf };

const char* norm_name(Norm p);
std::optional<Norm> norm_from_name(const std::string& s);

inline double pnorm(const Vec2& v, Norm p) {
  switch (p) {
    case Norm::L1:
      return std::abs(v[0]) + std::abs(v[1]);
    case Norm::LInf:
      return std::max(std::abs(v[0]), std::abs(v[1]));
    case Norm::L2:
    default:
      return v.norm();
  }
}

struct Observation {
  int camera_index = 0;
  Vec2 point2 = Vec2::Zero();
};

// Cameras plus 2D observations of a single scene point.
struct TriangulationInstance {
  std::vector<CameraMatrix> cameras;
  std::vector<Observation> observations;
  std::optional<Vec3> ground_truth;
  // 1 = datum drew inlier-level noise when synthesised; absent for real data.
  std::optional<std::vector<uint8_t>> inlier_mask;
  // Free-form generator echo, preserved across save/load.
  std::vector<std::pair<std::string, std::string>> meta;

  int n() const { return static_cast<int>(observations.size()); }
  // Throws on any structural invariant breach (indices, finiteness, cheirality
  // of the ground truth).
  void validate() const;
};

// Per-observation affine data (A, b, c, d) with
//   residual(x) = ||A x + b||_p / (c'x + d)
// wherever the denominator (the depth) is positive.
struct ConeForm {
  Mat23 A;
  Vec2 b;
  Vec3 c;
  double d = 0.0;
  Norm norm_p = Norm::L2;

  double depth(const Vec3& x) const { return c.dot(x) + d; }
  double numerator(const Vec3& x) const { return pnorm(A * x + b, norm_p); }
  double ratio(const Vec3& x) const { return numerator(x) / depth(x); }
};

}  // namespace coretri
