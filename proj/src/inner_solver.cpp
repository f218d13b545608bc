#include "coretri/inner_solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "coretri/errors.hpp"

namespace coretri {

namespace {

constexpr int kStages = 10;  // tau, mu: 1e-1 ... 1e-10, factor 10 per stage
constexpr double kTau0 = 1e-1;
constexpr int kMaxItersPerStage = 80;
constexpr double kArmijo = 1e-4;

// Newton step on the smoothed model. The LSE Hessian is positive
// semidefinite but nearly singular where the objective is close to
// piecewise linear (L1 and L-inf norms away from their kinks); the ridge
// escalation keeps the direction finite and descending there.
Vec3 newton_step(const SmoothEvalH& e) {
  const double ridge = 1e-12 * (1.0 + e.hess.trace() / 3.0);
  Mat3 H = e.hess;
  for (int k = 0; k < 3; ++k) H(k, k) += ridge;
  for (int attempt = 0; attempt < 6; ++attempt) {
    const Eigen::LLT<Mat3> llt(H);
    if (llt.info() == Eigen::Success) {
      const Vec3 p = llt.solve(-e.grad);
      if (p.allFinite() && e.grad.dot(p) < 0.0) return p;
    }
    for (int k = 0; k < 3; ++k) H(k, k) += ridge * std::pow(10.0, attempt + 2);
  }
  return -e.grad;  // steepest descent fallback
}

}  // namespace

InnerResult minimize_maxcone(const InnerProblem& problem) {
  const ConeSet& cs = *problem.cones;
  if (cs.size() < 1) throw DomainError("inner problem has no cones");
  if (!std::isfinite(problem.gamma)) throw DomainError("level must be finite");

  Vec3 x = problem.start;
  const double d0 = min_depth(cs, x);
  if (!(d0 > 0.0)) throw CheiralityCollapse("start point violates cheirality");
  const double eta = std::min(1e-9 * (1.0 + d0), 0.5 * d0);

  InnerResult out;
  out.x = x;
  out.value = hard_maxcone(cs, problem.gamma, x);
  out.evals = 1;

  if (problem.early_exit_below && out.value <= *problem.early_exit_below) {
    out.converged = true;
    return out;
  }

  const int budget = problem.max_evals;
  bool exhausted = false;

  for (int stage = 0; stage < kStages && !exhausted; ++stage) {
    const double tau = kTau0 * std::pow(10.0, -stage);
    const double mu = tau;
    const double vtol = 1e-3 * tau + 0.01 * problem.tol_inner;

    if (out.evals >= budget) {
      exhausted = true;
      break;
    }
    SmoothEvalH e = smooth_maxcone_hess(cs, problem.gamma, x, tau, mu, problem.exec);
    ++out.evals;

    int small_improves = 0;
    double alpha_warm = 1.0;

    for (int iter = 0; iter < kMaxItersPerStage && out.evals < budget; ++iter) {
      Vec3 p = newton_step(e);
      const double step_cap = 100.0 * (1.0 + x.norm());
      if (p.norm() > step_cap) p *= step_cap / p.norm();
      const double slope = e.grad.dot(p);  // negative
      if (!(slope < 0.0) || 0.5 * (-slope) <= vtol) break;

      // Line search along p: warm-started trial scale, interpolating
      // backtracking, and doubling expansion while the value keeps falling.
      // Expansion is what crosses long nearly-linear valleys quickly.
      double alpha = std::min(1.0, 4.0 * alpha_warm);
      bool accepted = false;
      Vec3 x_best;
      double v_best = 0.0;
      while (out.evals < budget) {
        const Vec3 xt = x + alpha * p;
        if (min_depth(cs, xt) < eta) {
          alpha *= 0.5;
          if (alpha < 1e-18) break;
          continue;
        }
        const double vt = smooth_maxcone(cs, problem.gamma, xt, tau, mu, problem.exec).value;
        ++out.evals;
        if (vt <= e.value + kArmijo * alpha * slope) {
          accepted = true;
          x_best = xt;
          v_best = vt;
          break;
        }
        const double denom = vt - e.value - slope * alpha;
        double next = denom > 0.0 ? -0.5 * slope * alpha * alpha / denom : 0.5 * alpha;
        alpha = std::clamp(next, 0.05 * alpha, 0.7 * alpha);
        if (alpha < 1e-18) break;
      }
      if (!accepted) break;  // pinned against the cheirality floor or flat

      double grow = 2.0 * alpha;
      while (out.evals < budget && grow <= 1e6) {
        const Vec3 xg = x + grow * p;
        if (min_depth(cs, xg) < eta) break;
        const double vg = smooth_maxcone(cs, problem.gamma, xg, tau, mu, problem.exec).value;
        ++out.evals;
        if (vg >= v_best) break;
        v_best = vg;
        x_best = xg;
        alpha = grow;
        grow *= 2.0;
      }

      alpha_warm = alpha;
      const double improve = e.value - v_best;
      x = x_best;
      if (out.evals >= budget) {
        exhausted = true;
        break;
      }
      e = smooth_maxcone_hess(cs, problem.gamma, x, tau, mu, problem.exec);
      ++out.evals;

      if (problem.early_exit_below && e.value <= *problem.early_exit_below) {
        out.x = x;
        out.value = hard_maxcone(cs, problem.gamma, x);
        out.converged = true;
        return out;
      }
      if (improve <= vtol) {
        if (++small_improves >= 2) break;
      } else {
        small_improves = 0;
      }
    }
    if (out.evals >= budget) exhausted = true;

    const double hard = hard_maxcone(cs, problem.gamma, x);
    ++out.evals;
    if (hard < out.value) {
      out.value = hard;
      out.x = x;
    }
  }

  out.converged = !exhausted;
  return out;
}

bool feasible_at_level(const ConeSet& cones, double gamma, const Vec3& start, double tol) {
  InnerProblem p;
  p.cones = &cones;
  p.gamma = gamma;
  p.start = start;
  p.tol_inner = tol;
  p.early_exit_below = 0.0;
  const InnerResult r = minimize_maxcone(p);
  return r.value <= tol;
}

}  // namespace coretri
