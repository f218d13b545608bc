#include "coretri/outliers.hpp"

#include <algorithm>

#include "coretri/errors.hpp"
#include "coretri/geometry.hpp"
#include "coretri/rng.hpp"

namespace coretri {

const char* removal_mode_name(RemovalMode m) {
  return m == RemovalMode::ExactSupport ? "exact" : "coreset";
}

std::optional<RemovalMode> removal_mode_from_name(const std::string& s) {
  if (s == "exact") return RemovalMode::ExactSupport;
  if (s == "coreset") return RemovalMode::CoresetTop4;
  return std::nullopt;
}

namespace {

// Sub-instance over the remaining observation indices; positions map back
// through `remaining`.
TriangulationInstance slice(const TriangulationInstance& inst,
                            const std::vector<int>& remaining) {
  TriangulationInstance s;
  s.cameras = inst.cameras;
  s.observations.reserve(remaining.size());
  for (int i : remaining) s.observations.push_back(inst.observations[i]);
  s.ground_truth = inst.ground_truth;
  return s;
}

}  // namespace

OutlierResult remove_outliers(const TriangulationInstance& instance,
                              const OutlierConfig& config) {
  if (config.inlier_threshold <= 0.0) throw DomainError("inlier threshold must be positive");
  if (config.mode == RemovalMode::CoresetTop4 &&
      (config.epsilon <= 0.0 || config.epsilon > 1.0))
    throw DomainError("coreset mode needs epsilon in (0, 1]");

  std::vector<int> remaining(instance.n());
  for (int i = 0; i < instance.n(); ++i) remaining[i] = i;

  OutlierResult out;
  uint64_t round_seed = config.rng_seed;

  while (true) {
    if (static_cast<int>(remaining.size()) < 2)
      throw Exhausted("fewer than two measurements left before meeting the threshold");

    Vec3 estimate;
    std::vector<int> support;  // global indices
    if (config.mode == RemovalMode::ExactSupport) {
      const Solution sol = solve_subset(instance, remaining, config.solver);
      estimate = sol.x;
      support = sol.support;
    } else {
      const TriangulationInstance sub = slice(instance, remaining);
      CoresetConfig cc;
      cc.epsilon = config.epsilon;
      cc.solver = config.solver;
      cc.rng_seed = derive_seed(round_seed, out.rounds);
      cc.record_trace = false;
      const CoresetResult cr = run_coreset(sub, cc);
      estimate = cr.x_s;
    }

    // Residuals of the remaining data at this round's estimate.
    const ConeSet cs = make_cone_set(instance, remaining, config.solver.norm_p);
    std::vector<double> res(remaining.size());
    double worst = 0.0;
    for (size_t k = 0; k < remaining.size(); ++k) {
      const ConeForm& cf = cs.cones[k];
      const double g = cf.depth(estimate);
      res[k] = g > 0.0 ? cf.numerator(estimate) / g
                       : std::numeric_limits<double>::infinity();
      worst = std::max(worst, res[k]);
    }

    if (worst <= config.inlier_threshold) break;

    std::vector<int> drop;  // positions into `remaining`
    if (config.mode == RemovalMode::ExactSupport) {
      for (size_t k = 0; k < remaining.size(); ++k)
        if (std::find(support.begin(), support.end(), remaining[k]) != support.end())
          drop.push_back(static_cast<int>(k));
    } else {
      // Four largest residuals, but never an index already under the
      // threshold; ties resolve to the lower index.
      std::vector<int> order;
      for (size_t k = 0; k < remaining.size(); ++k)
        if (res[k] > config.inlier_threshold) order.push_back(static_cast<int>(k));
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (res[a] != res[b]) return res[a] > res[b];
        return a < b;
      });
      if (order.size() > 4) order.resize(4);
      drop = order;
    }
    if (drop.empty()) break;  // numerically clean already

    std::sort(drop.begin(), drop.end());
    std::vector<int> next;
    next.reserve(remaining.size() - drop.size());
    size_t di = 0;
    for (size_t k = 0; k < remaining.size(); ++k) {
      if (di < drop.size() && static_cast<int>(k) == drop[di]) {
        ++di;
        continue;
      }
      next.push_back(remaining[k]);
    }
    remaining = std::move(next);
    ++out.rounds;
  }

  // The final answer is always an exact batch solve on the survivors, so the
  // returned delta is a true subset optimum.
  out.final_solution = solve_subset(instance, remaining, config.solver);
  out.inliers = std::move(remaining);
  return out;
}

}  // namespace coretri
