#pragma once

#include <cstdint>
#include <vector>

#include "coretri/coreset.hpp"

namespace coretri {

enum class RemovalMode { ExactSupport, CoresetTop4 };

const char* removal_mode_name(RemovalMode m);
std::optional<RemovalMode> removal_mode_from_name(const std::string& s);

struct OutlierConfig {
  double inlier_threshold = 10.0;  // pixels
  RemovalMode mode = RemovalMode::ExactSupport;
  double epsilon = 0.4;  // coreset mode approximation level
  SolveOptions solver;
  uint64_t rng_seed = 0;
};

struct OutlierResult {
  std::vector<int> inliers;  // surviving observation indices, ascending
  Solution final_solution;   // exact solve on the survivors
  int rounds = 0;
};

// Recursive trimming: solve min-max on the remaining data, stop once the max
// residual is under the threshold, otherwise drop the support set (exact
// mode) or the four largest residuals above the threshold (coreset mode).
OutlierResult remove_outliers(const TriangulationInstance& instance,
                              const OutlierConfig& config);

}  // namespace coretri
