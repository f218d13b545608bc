#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coretri/types.hpp"

namespace coretri {

enum class CameraDistribution { LineA, RandomB, CircleC, StereoD };

const char* distribution_name(CameraDistribution d);
std::optional<CameraDistribution> distribution_from_name(const std::string& s);

struct SyntheticConfig {
  CameraDistribution distribution = CameraDistribution::RandomB;
  int n_views = 100;
  int n_points = 1;  // one instance per scene point, all sharing the rig
  double noise_sigma = 10.0;     // pixels, per axis
  double outlier_fraction = 0.0;
  double outlier_sigma = 30.0;   // pixels, per axis
  double focal = 1000.0;         // pixels
  Vec2 principal_point = Vec2(512.0, 384.0);
  double scene_scale = 2.0;      // side of the point sampling cube
  double stereo_baseline = 0.5;  // world units, Type D
  double orientation_jitter_deg = 5.0;  // Types A and C
  uint64_t rng_seed = 0;

  // Camera ring/line/shell radius: ~5x the scene cube, so the baseline to
  // depth ratio stays representative.
  double rig_radius() const { return 5.0 * scene_scale; }
};

// One camera rig per config, n_points ground-truth points in the scene cube,
// each projected into all views and corrupted with per-axis Gaussian noise.
// A seeded fraction of observations draws outlier-level noise instead; the
// instances carry the true labels. Deterministic per seed.
std::vector<TriangulationInstance> generate_instances(const SyntheticConfig& config);

// Labels recorded at generation time: true where the datum received
// inlier-level noise. Throws MissingMetadata when the instance has none.
std::vector<bool> true_inlier_mask(const TriangulationInstance& instance);

}  // namespace coretri
