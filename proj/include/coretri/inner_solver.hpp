#pragma once

#include <optional>

#include "coretri/kernels.hpp"

namespace coretri {

// Parametric convex subproblem
//   min_x  max_i [ ||A_i x + b_i||_p - gamma (c_i'x + d_i) ]
// over the cheirality region {x : c_i'x + d_i >= eta}. Both batch solvers
// reduce to this.
struct InnerProblem {
  const ConeSet* cones = nullptr;
  double gamma = 0.0;
  Vec3 start = Vec3::Zero();
  double tol_inner = 1e-9;
  int max_evals = 20000;
  Exec exec = Exec::Auto;
  // Stop as soon as an iterate pushes the smoothed objective below this
  // level (the smoothed value upper-bounds the hard one, so the iterate is
  // a certified witness). Used by bisection feasibility probes.
  std::optional<double> early_exit_below;
};

struct InnerResult {
  Vec3 x = Vec3::Zero();
  double value = 0.0;  // hard objective recomputed at x
  int evals = 0;
  bool converged = false;
};

// Smoothing-continuation minimizer: anneals (tau, mu) over a fixed schedule,
// warm-starting each stage, with gradient descent plus backtracking line
// search (Barzilai-Borwein trial steps) inside a stage. Deterministic.
InnerResult minimize_maxcone(const InnerProblem& problem);

// True when the gamma-sublevel set is (numerically) nonempty: the minimized
// value is <= +tol.
bool feasible_at_level(const ConeSet& cones, double gamma, const Vec3& start, double tol);

}  // namespace coretri
