#pragma once

#include <limits>
#include <vector>

#include "coretri/types.hpp"

namespace coretri {

// Execution policy for the data-parallel scans. Auto switches to the
// OpenMP path purely on problem size, so results are a function of the
// input only (never of the machine's thread count).
enum class Exec { Serial, Parallel, Auto };

// Packed cone forms for one instance (or a subset of it).
struct ConeSet {
  std::vector<ConeForm> cones;
  std::vector<int> source_index;  // observation index per cone
  Norm p = Norm::L2;

  int size() const { return static_cast<int>(cones.size()); }
};

ConeSet make_cone_set(const TriangulationInstance& instance, Norm p);
ConeSet make_cone_set(const TriangulationInstance& instance, const std::vector<int>& subset,
                      Norm p);

struct WorstDatum {
  int pos = -1;      // position within the ConeSet
  double value = 0;  // residual; +inf when the point is behind that camera
};

// Largest residual over the set at x. Ties resolve to the smallest position,
// so serial and parallel runs agree bit for bit.
WorstDatum worst_residual_serial(const ConeSet& cs, const Vec3& x);
WorstDatum worst_residual_parallel(const ConeSet& cs, const Vec3& x);
WorstDatum worst_residual(const ConeSet& cs, const Vec3& x, Exec exec = Exec::Auto);

double min_depth(const ConeSet& cs, const Vec3& x);

// Exact max_i [ ||A_i x + b_i||_p - gamma (c_i'x + d_i) ].
double hard_maxcone(const ConeSet& cs, double gamma, const Vec3& x);

struct SmoothEval {
  double value = 0;
  Vec3 grad = Vec3::Zero();
};

struct SmoothEvalH {
  double value = 0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
};

// Temperature-smoothed version of hard_maxcone: the max is replaced by a
// scaled log-sum-exp (temperature tau) and the norm kinks by sqrt(s^2 + mu^2)
// terms. The parallel path accumulates fixed-size chunk partials and combines
// them in chunk order, so its result does not depend on the thread count.
SmoothEval smooth_maxcone_serial(const ConeSet& cs, double gamma, const Vec3& x, double tau,
                                 double mu);
SmoothEval smooth_maxcone_parallel(const ConeSet& cs, double gamma, const Vec3& x, double tau,
                                   double mu);
SmoothEval smooth_maxcone(const ConeSet& cs, double gamma, const Vec3& x, double tau, double mu,
                          Exec exec = Exec::Auto);

// Same objective with its analytic 3x3 Hessian, for the Newton stages of the
// inner solver. Accumulation follows the same deterministic chunk order.
SmoothEvalH smooth_maxcone_hess_serial(const ConeSet& cs, double gamma, const Vec3& x,
                                       double tau, double mu);
SmoothEvalH smooth_maxcone_hess_parallel(const ConeSet& cs, double gamma, const Vec3& x,
                                         double tau, double mu);
SmoothEvalH smooth_maxcone_hess(const ConeSet& cs, double gamma, const Vec3& x, double tau,
                                double mu, Exec exec = Exec::Auto);

// Size at which Auto switches to the OpenMP kernels.
inline constexpr int kParallelCutoff = 4096;

}  // namespace coretri
