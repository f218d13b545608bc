#include "coretri/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "coretri/errors.hpp"
#include "coretri/geometry.hpp"
#include "coretri/rng.hpp"

namespace coretri {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int counter_cap(double epsilon, int n) {
  if (epsilon > 0.0) return static_cast<int>(std::ceil(2.0 / epsilon));
  // Run-to-global sentinel. The cap is N - 3 (all data can be inserted), but
  // at least 2 so the global check always executes.
  return std::max(n - 3, 2);
}

}  // namespace

std::vector<int> shuffled_indices(int n, uint64_t seed) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  return idx;
}

Classification classify_condition(const TriangulationInstance& instance,
                                  const std::vector<int>& support_prev, const Vec3& x_prev,
                                  const Vec3& x_cand, int q, Norm p) {
  const Observation& oq = instance.observations[q];
  const CameraMatrix& Pq = instance.cameras[oq.camera_index];
  // A previous estimate behind q's camera moved arbitrarily far in that
  // image; force the conservative branch.
  const double kq =
      depth(Pq, x_prev) > 0.0 ? displacement_k(Pq, x_cand, x_prev) : kInf;

  double best_k = -1.0;
  int best_j = -1;
  double best_k_any = -1.0;
  int best_j_any = -1;
  for (int j : support_prev) {
    const Observation& oj = instance.observations[j];
    const CameraMatrix& Pj = instance.cameras[oj.camera_index];
    const double r_prev = residual(Pj, oj, x_prev, p);
    const double kj = displacement_k(Pj, x_cand, x_prev);
    if (kj > best_k_any) {
      best_k_any = kj;
      best_j_any = j;
    }
    if (obtuse_test(Pj, oj, x_prev, x_cand, r_prev, p) && kj > best_k) {
      best_k = kj;
      best_j = j;
    }
  }

  Classification cls;
  cls.fallback = best_j < 0;
  if (cls.fallback) {
    // The obtuse member is only guaranteed at the exact optimum; take the
    // largest-displacement support member so the counter still advances.
    best_j = best_j_any;
    best_k = best_k_any;
  }
  cls.j = best_j;
  cls.condition2 = !(best_k >= kq);
  return cls;
}

double backtrack_bound(int t) {
  if (t < 2) throw DomainError("backtrack bound requires t >= 2");
  return 1.0 + 2.0 / static_cast<double>(t);
}

double error_ratio(const TriangulationInstance& instance, const Vec3& x, double delta_star,
                   Norm p) {
  const ConeSet all = make_cone_set(instance, p);
  const double num = worst_residual(all, x).value;
  if (delta_star <= 1e-9) {
    if (num <= 1e-6) return 1.0;  // noiseless 0/0 convention
    throw DomainError("error ratio undefined: zero optimum, nonzero residual");
  }
  return num / delta_star;
}

std::vector<std::pair<int, double>> anytime_ratios(const CoresetResult& result,
                                                   double delta_star) {
  // Worst residual of the first traversal at each counter label (that entry
  // evaluates the final estimate of the previous counter), plus running
  // minima over everything seen up to a label.
  std::map<int, double> first_rho;
  std::map<int, double> prefix_min;
  double running = std::numeric_limits<double>::infinity();
  for (const CoresetTraceEntry& e : result.trace) {
    if (!first_rho.count(e.t)) first_rho[e.t] = e.worst_residual;
    running = std::min(running, e.worst_residual);
    prefix_min[e.t] = running;
  }
  std::vector<std::pair<int, double>> out;
  double upto = std::numeric_limits<double>::infinity();
  auto it = prefix_min.begin();
  for (int t = 2; t <= result.final_counter; ++t) {
    while (it != prefix_min.end() && it->first <= t) upto = it++->second;
    const auto next = first_rho.find(t + 1);
    if (next == first_rho.end()) continue;
    const double incumbent = std::min(upto, next->second);
    double ratio;
    if (delta_star <= 1e-9) {
      if (incumbent > 1e-6)
        throw DomainError("anytime ratio undefined: zero optimum, nonzero incumbent");
      ratio = 1.0;
    } else {
      ratio = incumbent / delta_star;
    }
    out.emplace_back(t, ratio);
  }
  return out;
}

void audit_result(const TriangulationInstance& instance, const CoresetConfig& config,
                  const CoresetResult& result) {
  const int n = instance.n();
  const int cap = counter_cap(config.epsilon, n);
  auto fail = [](const std::string& what) { throw DomainError("result audit: " + what); };

  if (result.final_counter - 1 + result.condition2_count != result.loop_traversals)
    fail("counter accounting broken");
  if (result.final_coreset_size - std::min(n, 4) != result.loop_traversals)
    fail("growth accounting broken");
  if (result.final_coreset_size > std::min(n, cap + 3 + result.condition2_count))
    fail("coreset exceeds its size budget");
  const double expected_alpha =
      result.loop_traversals > 0
          ? static_cast<double>(result.condition2_count) / result.loop_traversals
          : 0.0;
  if (std::abs(result.alpha - expected_alpha) > 1e-12) fail("alpha inconsistent");
  double prev = 0.0;
  for (const CoresetTraceEntry& e : result.trace) {
    if (e.delta_t < prev * (1.0 - 1e-9)) fail("trace deltas decreased");
    prev = std::max(prev, e.delta_t);
  }
  if (std::isfinite(result.gamma)) {
    const ConeSet all = make_cone_set(instance, config.solver.norm_p);
    const double worst = worst_residual(all, result.x_s).value;
    if (std::abs(worst - result.gamma) > 1e-9 * (1.0 + worst))
      fail("gamma does not match the incumbent's residual");
    if (result.global_opt && worst > result.delta_s * (1.0 + 1e-6) + 1e-9)
      fail("global flag set but the incumbent does not cover the data");
  }
}

CoresetResult run_coreset(const TriangulationInstance& instance, const CoresetConfig& config) {
  const int n = instance.n();
  if (n < 1) throw DomainError("instance has no observations");
  if (config.epsilon < 0.0 || config.epsilon > 1.0)
    throw DomainError("epsilon must lie in [0, 1]");

  const std::vector<int> perm = shuffled_indices(n, config.rng_seed);
  const ConeSet all = make_cone_set(instance, config.solver.norm_p);
  const int cap = counter_cap(config.epsilon, n);

  std::vector<int> coreset(perm.begin(), perm.begin() + std::min(n, 4));
  Solution cur = solve_subset(instance, coreset, config.solver);

  CoresetResult res;
  res.coreset = coreset;
  res.x_s = cur.x;
  res.delta_s = cur.delta;

  std::vector<bool> member(n, false);
  for (int i : coreset) member[i] = true;

  auto push_trace = [&](TraceKind kind, int t, int q, double rq, bool cond2, bool inc,
                        bool fb) {
    if (!config.record_trace) return;
    CoresetTraceEntry e;
    e.kind = kind;
    e.t = t;
    e.coreset_size = static_cast<int>(coreset.size());
    e.delta_t = cur.delta;
    e.worst_index = q;
    e.worst_residual = rq;
    e.condition2 = cond2;
    e.incumbent_updated = inc;
    e.incumbent_gamma = res.gamma;
    e.classify_fallback = fb;
    res.trace.push_back(e);
  };

  auto take_incumbent = [&]() {
    res.coreset = coreset;
    res.x_s = cur.x;
    res.delta_s = cur.delta;
  };

  int t = 2;
  while (t <= cap) {
    const WorstDatum w = worst_residual(all, cur.x, config.solver.exec);
    const int q = all.source_index[w.pos];
    const double rq = w.value;

    if (rq <= cur.delta * (1.0 + 1e-9) + 1e-12) {
      res.global_opt = true;
      res.gamma = std::min(res.gamma, rq);
      take_incumbent();
      push_trace(TraceKind::GlobalExit, t, q, rq, false, true, false);
      break;
    }
    if (member[q]) {
      // The subset optimum already covers q; the check above can only have
      // failed through solver tolerance. Treat as global convergence.
      res.global_opt = true;
      res.duplicate_worst_exit = true;
      res.gamma = std::min(res.gamma, rq);
      take_incumbent();
      push_trace(TraceKind::GlobalExit, t, q, rq, false, true, false);
      break;
    }

    bool incumbent_updated = false;
    if (rq < res.gamma) {
      res.gamma = rq;
      take_incumbent();
      incumbent_updated = true;
    }

    std::vector<int> grown = coreset;
    grown.push_back(q);
    const Solution cand = solve_subset(instance, grown, config.solver, cur.x);
    const Classification cls = classify_condition(instance, cur.support, cur.x, cand.x, q,
                                                  config.solver.norm_p);

    coreset = std::move(grown);
    member[q] = true;
    cur = cand;
    ++res.loop_traversals;

    if (cls.condition2) {
      ++res.condition2_count;
      push_trace(TraceKind::Insert, t, q, rq, true, incumbent_updated, cls.fallback);
    } else {
      push_trace(TraceKind::Insert, t, q, rq, false, incumbent_updated, cls.fallback);
      ++t;
    }
  }

  if (!res.global_opt) {
    // Post-loop refinement: give the last estimate a chance to become the
    // incumbent. The anytime bound requires this evaluation.
    const WorstDatum w = worst_residual(all, cur.x, config.solver.exec);
    const int q = all.source_index[w.pos];
    const double rq = w.value;
    bool inc = false;
    if (rq < res.gamma) {
      res.gamma = rq;
      take_incumbent();
      inc = true;
    }
    push_trace(TraceKind::Refine, t, q, rq, false, inc, false);
  }

  res.final_coreset_size = static_cast<int>(coreset.size());
  res.final_counter = t - 1;
  res.alpha = res.loop_traversals > 0
                  ? static_cast<double>(res.condition2_count) / res.loop_traversals
                  : 0.0;
  return res;
}

}  // namespace coretri
