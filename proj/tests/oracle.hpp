#pragma once

// Brute-force reference for the min-max reprojection problem: dense grid
// around the ground truth followed by compass-search refinement. Residuals
// are computed straight from (P, u), independent of the cone-form route the
// library uses.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "coretri/rng.hpp"
#include "coretri/types.hpp"

namespace coretri::testing {

inline double direct_residual(const CameraMatrix& P, const Vec2& u, const Vec3& x, Norm p) {
  const double w = P.row(2).head<3>().dot(x) + P(2, 3);
  if (!(w > 0.0)) return std::numeric_limits<double>::infinity();
  const Vec2 proj = (P.topRows<2>().leftCols<3>() * x + P.topRows<2>().col(3)) / w;
  return pnorm(u - proj, p);
}

inline double direct_max_residual(const TriangulationInstance& inst,
                                  const std::vector<int>& subset, const Vec3& x, Norm p) {
  double m = 0.0;
  for (int i : subset) {
    const Observation& o = inst.observations[i];
    m = std::max(m, direct_residual(inst.cameras[o.camera_index], o.point2, x, p));
  }
  return m;
}

struct OracleResult {
  Vec3 x;
  double delta;
};

// Min-norm point of the convex hull of a few vectors, by enumerating affine
// supports and solving each KKT system exactly.
inline Vec3 hull_min_point(const std::vector<Vec3>& g) {
  const int n = static_cast<int>(g.size());
  Vec3 best = g[0];
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> sel;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) sel.push_back(i);
    const int m = static_cast<int>(sel.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) K(a, b) = g[sel[a]].dot(g[sel[b]]);
    for (int a = 0; a < m; ++a) K(a, m) = K(m, a) = 1.0;
    rhs(m) = 1.0;
    const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
    bool feasible = true;
    Vec3 v = Vec3::Zero();
    for (int a = 0; a < m; ++a) {
      if (!(sol(a) > -1e-12)) feasible = false;
      v += sol(a) * g[sel[a]];
    }
    if (feasible && v.norm() < best.norm()) best = v;
  }
  return best;
}

// Zooming grid around the current best point. A 21^3 grid covers the box;
// the box halves whenever the best cell is interior and re-centers without
// shrinking when it sits on the boundary (so long flat valleys are walked
// along instead of cut off). A 26-direction compass polish finishes.
inline OracleResult oracle_minmax(const TriangulationInstance& inst,
                                  const std::vector<int>& subset, Norm p, const Vec3& center,
                                  double half_width = 1.0) {
  auto f = [&](const Vec3& x) { return direct_max_residual(inst, subset, x, p); };

  Vec3 best = center;
  double best_v = f(center);
  const int g = 21;

  auto zoom_phase = [&](double w) {
  for (int round = 0; round < 200 && w > 1e-7; ++round) {
    const Vec3 origin = best;
    bool on_boundary = false;
    for (int ix = 0; ix < g; ++ix)
      for (int iy = 0; iy < g; ++iy)
        for (int iz = 0; iz < g; ++iz) {
          const Vec3 x = origin + w * Vec3(2.0 * ix / (g - 1) - 1.0, 2.0 * iy / (g - 1) - 1.0,
                                           2.0 * iz / (g - 1) - 1.0);
          const double v = f(x);
          if (v < best_v) {
            best_v = v;
            best = x;
            on_boundary = ix == 0 || ix == g - 1 || iy == 0 || iy == g - 1 || iz == 0 ||
                          iz == g - 1;
          }
        }
    if (!on_boundary) w *= 0.5;
  }
  };

  std::vector<Vec3> dirs;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        dirs.push_back(Vec3(dx, dy, dz).normalized());
      }
  // Hooke-Jeeves style polish: compass sweeps plus pattern moves along the
  // last successful displacement (follows curved valleys), and seeded random
  // directions when the fixed set misses a narrow descent cone.
  Rng dir_rng(0x0c0ffee);
  auto compass_phase = [&]() {
  double h = 1e-2 * half_width;
  while (h > 1e-8) {
    Vec3 before = best;
    bool moved = false;
    auto try_step = [&](const Vec3& d) {
      const Vec3 x = best + h * d;
      const double v = f(x);
      if (v < best_v) {
        best_v = v;
        best = x;
        moved = true;
      }
    };
    for (const Vec3& d : dirs) try_step(d);
    if (!moved) {
      for (int k = 0; k < 128 && !moved; ++k) {
        Vec3 d(dir_rng.normal(), dir_rng.normal(), dir_rng.normal());
        const double n = d.norm();
        if (n > 1e-12) try_step(d / n);
      }
    }
    if (moved) {
      Vec3 step = best - before;
      while (true) {
        const Vec3 x = best + step;
        const double v = f(x);
        if (v < best_v) {
          best_v = v;
          best = x;
          step *= 1.5;
        } else {
          break;
        }
      }
    } else {
      h *= 0.5;
    }
  }
  };

  // Active-set descent: the hull of the near-maximal residual gradients
  // (finite differences) gives the steepest feasible direction even when it
  // lies in a cone too narrow for sampled directions.
  auto fd_grad = [&](int i, const Vec3& x) {
    const Observation& o = inst.observations[i];
    const CameraMatrix& P = inst.cameras[o.camera_index];
    Vec3 grad;
    const double step = 1e-7;
    for (int k = 0; k < 3; ++k) {
      Vec3 dx = Vec3::Zero();
      dx[k] = step;
      grad[k] = (direct_residual(P, o.point2, x + dx, p) -
                 direct_residual(P, o.point2, x - dx, p)) /
                (2 * step);
    }
    return grad;
  };
  auto hull_phase = [&]() {
  double h2 = 1e-3 * half_width;
  for (int iter = 0; iter < 4000 && h2 > 1e-11 * half_width; ++iter) {
    std::vector<double> res;
    double rmax = 0.0;
    double gscale = 1.0;
    for (int i : subset) {
      const Observation& o = inst.observations[i];
      res.push_back(direct_residual(inst.cameras[o.camera_index], o.point2, best, p));
      rmax = std::max(rmax, res.back());
    }
    std::vector<Vec3> grads;
    for (size_t k = 0; k < subset.size(); ++k)
      if (res[k] >= rmax - 1e-12) gscale = std::max(gscale, fd_grad(subset[k], best).norm());
    const double band = 2.0 * gscale * h2 + 1e-12;
    for (size_t k = 0; k < subset.size(); ++k)
      if (res[k] >= rmax - band && grads.size() < 10) grads.push_back(fd_grad(subset[k], best));
    const Vec3 z = hull_min_point(grads);
    if (z.norm() <= 1e-9 * gscale) break;
    const Vec3 d = -z.normalized();
    double t = h2;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      const double v = f(best + t * d);
      if (v < best_v - 1e-15) {
        best = best + t * d;
        best_v = v;
        ok = true;
        if (ls == 0) h2 = std::min(2.0 * h2, 1e-2 * half_width);
        break;
      }
      t *= 0.5;
    }
    if (!ok) h2 *= 0.5;
  }
  };

  zoom_phase(half_width);
  compass_phase();
  hull_phase();
  for (int cycle = 0; cycle < 8; ++cycle) {
    const double before = best_v;
    zoom_phase(1e-3 * half_width);
    compass_phase();
    hull_phase();
    if (best_v > before - 1e-12) break;
  }
  return {best, best_v};
}

}  // namespace coretri::testing
