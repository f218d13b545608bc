#include "coretri/linf_solver.hpp"

#include <algorithm>
#include <cmath>

#include "coretri/errors.hpp"
#include "coretri/geometry.hpp"

namespace coretri {

namespace {

double max_ratio(const ConeSet& cs, const Vec3& x) { return worst_residual(cs, x).value; }

std::vector<int> support_at(const ConeSet& cs, const Vec3& x, double delta,
                            double tol_support) {
  const double thr = delta > 1e-9 ? delta * (1.0 - tol_support) : delta - 1e-9;
  std::vector<int> support;
  for (int i = 0; i < cs.size(); ++i) {
    const ConeForm& cf = cs.cones[i];
    const double g = cf.depth(x);
    if (!(g > 0.0)) continue;
    if (cf.numerator(x) / g >= thr) support.push_back(cs.source_index[i]);
  }
  return support;
}

Solution finish(const ConeSet& cs, const Vec3& x, int iters, const SolveOptions& opts) {
  Solution s;
  s.x = x;
  s.delta = max_ratio(cs, x);
  s.solver_iters = iters;
  s.support = support_at(cs, x, s.delta, opts.tol_support);
  return s;
}

}  // namespace

const char* method_name(Method m) {
  return m == Method::Bisection ? "bisection" : "dinkelbach";
}

std::optional<Method> method_from_name(const std::string& s) {
  if (s == "bisection") return Method::Bisection;
  if (s == "dinkelbach") return Method::Dinkelbach;
  return std::nullopt;
}

Vec3 choose_start(const TriangulationInstance& instance, const std::vector<int>& subset,
                  const std::optional<Vec3>& hint, Norm p) {
  const ConeSet cs = make_cone_set(instance, subset, p);
  auto feasible = [&](const Vec3& x) { return min_depth(cs, x) > 0.0; };

  if (hint && feasible(*hint)) return *hint;
  try {
    const Vec3 x = linear_initial_estimate(instance, subset);
    if (feasible(x)) return x;
  } catch (const DegenerateGeometry&) {
  }
  const Vec3 x = fallback_start(instance, subset);
  if (feasible(x)) return x;
  throw CheiralityCollapse("no start point in front of all subset cameras");
}

Solution solve_bisection(const TriangulationInstance& instance, const std::vector<int>& subset,
                         const SolveOptions& opts, const std::optional<Vec3>& start) {
  if (subset.empty()) throw DomainError("empty subset");
  const ConeSet cs = make_cone_set(instance, subset, opts.norm_p);
  Vec3 x_best = choose_start(instance, subset, start, opts.norm_p);

  double hi = max_ratio(cs, x_best);
  double lo = 0.0;
  int iters = 0;
  const double eps = opts.tol_delta;

  while (hi - lo > eps * (1.0 + hi) && hi > 0.0) {
    if (++iters > opts.max_outer_iters)
      throw BudgetExhausted("bisection level budget exhausted");
    const double mid = 0.5 * (lo + hi);
    InnerProblem ip;
    ip.cones = &cs;
    ip.gamma = mid;
    ip.start = x_best;
    ip.tol_inner = opts.tol_inner;
    ip.max_evals = opts.max_inner_evals;
    ip.exec = opts.exec;
    ip.early_exit_below = 0.0;
    const InnerResult r = minimize_maxcone(ip);
    if (r.value <= opts.tol_inner) {
      x_best = r.x;
      hi = std::min(mid, max_ratio(cs, x_best));
    } else {
      lo = mid;
    }
  }

  if (hi > 0.0) {
    // Full solve at the converged level; its minimizer recovers the optimal
    // residual profile, which feasibility witnesses do not.
    InnerProblem fp;
    fp.cones = &cs;
    fp.gamma = hi;
    fp.start = x_best;
    fp.tol_inner = opts.tol_inner;
    fp.max_evals = opts.max_inner_evals;
    fp.exec = opts.exec;
    const InnerResult r = minimize_maxcone(fp);
    if (max_ratio(cs, r.x) <= max_ratio(cs, x_best)) x_best = r.x;
  }

  return finish(cs, x_best, iters, opts);
}

Solution solve_dinkelbach(const TriangulationInstance& instance, const std::vector<int>& subset,
                          const SolveOptions& opts, const std::optional<Vec3>& start) {
  if (subset.empty()) throw DomainError("empty subset");
  const ConeSet cs = make_cone_set(instance, subset, opts.norm_p);
  Vec3 x = choose_start(instance, subset, start, opts.norm_p);
  double delta = max_ratio(cs, x);
  int iters = 0;

  while (delta > 0.0) {
    if (++iters > opts.max_outer_iters)
      throw BudgetExhausted("dinkelbach iteration budget exhausted");
    InnerProblem ip;
    ip.cones = &cs;
    ip.gamma = delta;
    ip.start = x;
    ip.tol_inner = opts.tol_inner;
    ip.max_evals = opts.max_inner_evals;
    ip.exec = opts.exec;
    const InnerResult r = minimize_maxcone(ip);
    if (r.value >= -opts.tol_delta * (1.0 + delta)) break;

    const double next = max_ratio(cs, r.x);
    if (next > delta * (1.0 + 1e-12)) break;  // inner tolerance floor reached
    const double drop = delta - next;
    x = r.x;
    delta = next;
    if (drop < 1e-12 * delta) break;
  }

  return finish(cs, x, iters, opts);
}

Solution solve_subset(const TriangulationInstance& instance, const std::vector<int>& subset,
                      const SolveOptions& opts, const std::optional<Vec3>& start) {
  return opts.method == Method::Bisection ? solve_bisection(instance, subset, opts, start)
                                          : solve_dinkelbach(instance, subset, opts, start);
}

std::vector<int> extract_support(const TriangulationInstance& instance,
                                 const std::vector<int>& subset, const Solution& solution,
                                 const SolveOptions& opts) {
  const ConeSet cs = make_cone_set(instance, subset, opts.norm_p);
  return support_at(cs, solution.x, solution.delta, opts.tol_support);
}

}  // namespace coretri
