#include "coretri/synth.hpp"

#include <Eigen/Geometry>
#include <cmath>

#include "coretri/errors.hpp"
#include "coretri/geometry.hpp"
#include "coretri/rng.hpp"

namespace coretri {

namespace {

constexpr int kMaxRetries = 1000;
constexpr double kDeg = 0.017453292519943295;

Vec3 unit_sphere(Rng& rng) {
  while (true) {
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Vec3 unit_orthogonal(Rng& rng, const Vec3& n) {
  while (true) {
    const Vec3 v = unit_sphere(rng);
    const Vec3 d = v - v.dot(n) * n;
    const double len = d.norm();
    if (len > 1e-6) return d / len;
  }
}

Mat3 random_rotation(Rng& rng) {
  // Uniform rotation from a normalized Gaussian quaternion.
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

Mat3 look_at(const Vec3& center, const Vec3& target) {
  const Vec3 z = (target - center).normalized();
  Vec3 up(0.0, 1.0, 0.0);
  if (std::abs(up.dot(z)) > 0.99) up = Vec3(1.0, 0.0, 0.0);
  const Vec3 x = up.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.row(0) = x;
  R.row(1) = y;
  R.row(2) = z;
  return R;
}

Mat3 jitter_rotation(Rng& rng, const Mat3& R, double jitter_deg) {
  const double a = rng.uniform(-jitter_deg, jitter_deg) * kDeg;
  const double b = rng.uniform(-jitter_deg, jitter_deg) * kDeg;
  const double c = rng.uniform(-jitter_deg, jitter_deg) * kDeg;
  const Mat3 J(Eigen::AngleAxisd(a, Vec3::UnitX()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
               Eigen::AngleAxisd(c, Vec3::UnitZ()));
  return J * R;
}

CameraMatrix assemble(const SyntheticConfig& cfg, const Mat3& R, const Vec3& center) {
  Mat3 K = Mat3::Identity();
  K(0, 0) = K(1, 1) = cfg.focal;
  K(0, 2) = cfg.principal_point[0];
  K(1, 2) = cfg.principal_point[1];
  CameraMatrix P;
  P.leftCols<3>() = K * R;
  P.col(3) = -(K * R) * center;
  return P;
}

// The whole sampling cube must be observable: in front of the camera and
// projecting inside the nominal sensor (twice the principal point in each
// axis), so every orientation is roughly toward the scene.
bool sees_scene(const SyntheticConfig& cfg, const CameraMatrix& P, double half_side) {
  const double width = 2.0 * cfg.principal_point[0];
  const double height = 2.0 * cfg.principal_point[1];
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 c(half_side * ((corner & 1) ? 1.0 : -1.0),
                 half_side * ((corner & 2) ? 1.0 : -1.0),
                 half_side * ((corner & 4) ? 1.0 : -1.0));
    const double w = depth(P, c);
    if (w <= 0.0) return false;
    const Vec2 u = project(P, c);
    if (u[0] < 0.0 || u[0] > width || u[1] < 0.0 || u[1] > height) return false;
  }
  return true;
}

std::vector<CameraMatrix> build_rig(const SyntheticConfig& cfg, Rng& rng) {
  const int n = cfg.n_views;
  const double R = cfg.rig_radius();
  const double half = 0.5 * cfg.scene_scale;
  std::vector<CameraMatrix> cams;
  cams.reserve(n);

  auto oriented_toward_scene = [&](const Vec3& center) {
    CameraMatrix P =
        assemble(cfg, jitter_rotation(rng, look_at(center, Vec3::Zero()),
                                      cfg.orientation_jitter_deg),
                 center);
    if (!sees_scene(cfg, P, half))
      throw GeometryRetryExhausted("jittered camera lost sight of the scene");
    return P;
  };

  auto randomly_oriented = [&](const Vec3& center) {
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
      const CameraMatrix P = assemble(cfg, random_rotation(rng), center);
      if (sees_scene(cfg, P, half)) return P;
    }
    throw GeometryRetryExhausted("no orientation keeps the scene observable");
  };

  switch (cfg.distribution) {
    case CameraDistribution::LineA: {
      const Vec3 offset_dir = unit_sphere(rng);
      const Vec3 line_dir = unit_orthogonal(rng, offset_dir);
      for (int i = 0; i < n; ++i) {
        const double s = n > 1 ? static_cast<double>(i) / (n - 1) - 0.5 : 0.0;
        cams.push_back(oriented_toward_scene(R * offset_dir + s * R * line_dir));
      }
      break;
    }
    case CameraDistribution::CircleC: {
      const Vec3 normal = unit_sphere(rng);
      const Vec3 e1 = unit_orthogonal(rng, normal);
      const Vec3 e2 = normal.cross(e1);
      for (int i = 0; i < n; ++i) {
        const double a = 6.283185307179586 * i / n;
        cams.push_back(oriented_toward_scene(R * (std::cos(a) * e1 + std::sin(a) * e2)));
      }
      break;
    }
    case CameraDistribution::RandomB: {
      for (int i = 0; i < n; ++i) cams.push_back(randomly_oriented(R * unit_sphere(rng)));
      break;
    }
    case CameraDistribution::StereoD: {
      while (static_cast<int>(cams.size()) < n) {
        const Vec3 base = R * unit_sphere(rng);
        const Vec3 lateral = unit_sphere(rng);
        const Vec3 c0 = base - 0.5 * cfg.stereo_baseline * lateral;
        const Vec3 c1 = base + 0.5 * cfg.stereo_baseline * lateral;
        // The stereo pair shares one orientation.
        for (int attempt = 0;; ++attempt) {
          if (attempt >= kMaxRetries)
            throw GeometryRetryExhausted("no observable stereo orientation");
          const Mat3 rot = random_rotation(rng);
          const CameraMatrix P0 = assemble(cfg, rot, c0);
          const CameraMatrix P1 = assemble(cfg, rot, c1);
          if (sees_scene(cfg, P0, half) && sees_scene(cfg, P1, half)) {
            cams.push_back(P0);
            if (static_cast<int>(cams.size()) < n) cams.push_back(P1);
            break;
          }
        }
      }
      break;
    }
  }
  return cams;
}

}  // namespace

const char* distribution_name(CameraDistribution d) {
  switch (d) {
    case CameraDistribution::LineA:
      return "A";
    case CameraDistribution::RandomB:
      return "B";
    case CameraDistribution::CircleC:
      return "C";
    case CameraDistribution::StereoD:
    default:
      return "D";
  }
}

std::optional<CameraDistribution> distribution_from_name(const std::string& s) {
  if (s == "A" || s == "a") return CameraDistribution::LineA;
  if (s == "B" || s == "b") return CameraDistribution::RandomB;
  if (s == "C" || s == "c") return CameraDistribution::CircleC;
  if (s == "D" || s == "d") return CameraDistribution::StereoD;
  return std::nullopt;
}

std::vector<TriangulationInstance> generate_instances(const SyntheticConfig& cfg) {
  if (cfg.n_views < 2) throw DomainError("need at least two views");
  if (cfg.n_points < 1) throw DomainError("need at least one point");
  if (cfg.noise_sigma < 0 || cfg.outlier_sigma < 0) throw DomainError("negative sigma");
  if (cfg.outlier_fraction < 0 || cfg.outlier_fraction >= 1)
    throw DomainError("outlier fraction must lie in [0, 1)");
  if (cfg.focal <= 0) throw DomainError("focal must be positive");
  if (cfg.distribution == CameraDistribution::StereoD && cfg.stereo_baseline <= 0)
    throw DomainError("stereo baseline must be positive");

  Rng rig_rng(derive_seed(cfg.rng_seed, 0));
  const std::vector<CameraMatrix> cams = build_rig(cfg, rig_rng);
  const int n = cfg.n_views;
  const double half = 0.5 * cfg.scene_scale;

  std::vector<TriangulationInstance> out;
  out.reserve(cfg.n_points);
  for (int pt = 0; pt < cfg.n_points; ++pt) {
    Rng rng(derive_seed(cfg.rng_seed, 1 + pt));

    Vec3 x = Vec3::Zero();
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
      x = Vec3(rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half));
      placed = true;
      for (const CameraMatrix& P : cams)
        if (depth(P, x) <= 0.0) {
          placed = false;
          break;
        }
      if (placed) break;
    }
    if (!placed) throw GeometryRetryExhausted("no cheirality-consistent scene point found");

    // Outlier subset first, then per-observation noise in index order.
    const int n_out = static_cast<int>(std::ceil(cfg.outlier_fraction * n));
    std::vector<uint8_t> inlier(n, 1);
    if (n_out > 0) {
      std::vector<int> idx(n);
      for (int i = 0; i < n; ++i) idx[i] = i;
      rng.shuffle(idx);
      for (int i = 0; i < n_out; ++i) inlier[idx[i]] = 0;
    }

    TriangulationInstance inst;
    inst.cameras = cams;
    inst.observations.resize(n);
    for (int i = 0; i < n; ++i) {
      const double sigma = inlier[i] ? cfg.noise_sigma : cfg.outlier_sigma;
      const Vec2 proj = project(cams[i], x);
      inst.observations[i].camera_index = i;
      inst.observations[i].point2 = proj + Vec2(rng.normal(sigma), rng.normal(sigma));
    }
    inst.ground_truth = x;
    inst.inlier_mask = std::move(inlier);
    inst.meta = {{"generator", "synthetic"},
                 {"type", distribution_name(cfg.distribution)},
                 {"noise_sigma", std::to_string(cfg.noise_sigma)},
                 {"outlier_fraction", std::to_string(cfg.outlier_fraction)},
                 {"outlier_sigma", std::to_string(cfg.outlier_sigma)},
                 {"defaults_note", "intrinsics and rig scales are artifact defaults"}};
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<bool> true_inlier_mask(const TriangulationInstance& instance) {
  if (!instance.inlier_mask) throw MissingMetadata("instance carries no inlier labels");
  std::vector<bool> mask(instance.inlier_mask->begin(), instance.inlier_mask->end());
  return mask;
}

}  // namespace coretri
