#pragma once

#include <optional>
#include <vector>

#include "coretri/inner_solver.hpp"

namespace coretri {

enum class Method { Bisection, Dinkelbach };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& s);

struct SolveOptions {
  Norm norm_p = Norm::L2;
  Method method = Method::Bisection;
  double tol_delta = 1e-9;    // relative, on the minimized max residual
  double tol_support = 1e-6;  // relative, residual-equals-delta threshold
  double tol_inner = 1e-9;    // absolute, inner subproblem value
  int max_inner_evals = 20000;
  int max_outer_iters = 200;
  Exec exec = Exec::Auto;
};

struct Solution {
  Vec3 x = Vec3::Zero();
  double delta = 0.0;        // max residual over the solved subset at x
  std::vector<int> support;  // observation indices attaining delta
  int solver_iters = 0;
};

// First start candidate with positive depth in every subset camera:
// caller hint, then the linear estimate, then the camera-centroid fallback.
// Throws CheiralityCollapse when none qualifies.
Vec3 choose_start(const TriangulationInstance& instance, const std::vector<int>& subset,
                  const std::optional<Vec3>& hint, Norm p);

// Globally optimal min-max solve on a subset by level bisection with convex
// feasibility probes.
Solution solve_bisection(const TriangulationInstance& instance, const std::vector<int>& subset,
                         const SolveOptions& opts, const std::optional<Vec3>& start = {});

// Same optimum via Dinkelbach's parametric iteration; the internal level
// sequence is non-increasing.
Solution solve_dinkelbach(const TriangulationInstance& instance, const std::vector<int>& subset,
                          const SolveOptions& opts, const std::optional<Vec3>& start = {});

Solution solve_subset(const TriangulationInstance& instance, const std::vector<int>& subset,
                      const SolveOptions& opts, const std::optional<Vec3>& start = {});

// Observation indices whose residual at solution.x is within tol_support of
// delta. Below delta = 1e-9 every index qualifies (degenerate noiseless case).
std::vector<int> extract_support(const TriangulationInstance& instance,
                                 const std::vector<int>& subset, const Solution& solution,
                                 const SolveOptions& opts);

}  // namespace coretri
