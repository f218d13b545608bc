#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "coretri/coreset.hpp"
#include "coretri/errors.hpp"
#include "coretri/geometry.hpp"
#include "test_support.hpp"

using namespace coretri;
using namespace coretri::testing;

namespace {

CoresetConfig config_for(double epsilon, uint64_t seed) {
  CoresetConfig cfg;
  cfg.epsilon = epsilon;
  cfg.rng_seed = seed;
  return cfg;
}

double batch_delta(const TriangulationInstance& inst) {
  SolveOptions opts;
  return solve_subset(inst, all_indices(inst), opts).delta;
}

// Incumbent ratio after completing counter t and refreshing with x_t, as it
// would stand had the run been capped at t.
std::map<int, double> post_refinement_ratios(const CoresetResult& r, double delta_star) {
  std::map<int, double> first_rho;   // worst residual of the first entry at each counter
  std::map<int, double> prefix_min;  // min over entries with counter <= t
  double running = std::numeric_limits<double>::infinity();
  for (const CoresetTraceEntry& e : r.trace) {
    if (!first_rho.count(e.t)) first_rho[e.t] = e.worst_residual;
    running = std::min(running, e.worst_residual);
    prefix_min[e.t] = running;
  }
  std::map<int, double> ratios;
  for (int t = 2; t <= r.final_counter; ++t) {
    if (!first_rho.count(t + 1)) continue;
    double inc = first_rho[t + 1];
    for (auto& [tt, v] : prefix_min)
      if (tt <= t) inc = std::min(inc, v);
    ratios[t] = inc / delta_star;
  }
  return ratios;
}

}  // namespace

TEST_CASE("four observations exit globally at the first check") {
  const TriangulationInstance inst =
      synthetic_instance(CameraDistribution::RandomB, 4, 10.0, 42);
  const CoresetResult r = run_coreset(inst, config_for(0.0, 1));
  CHECK(r.global_opt);
  CHECK(r.final_coreset_size == 4);
  CHECK(r.loop_traversals == 0);
  CHECK(std::abs(r.delta_s - batch_delta(inst)) <= 1e-6 * (1.0 + r.delta_s));
}

TEST_CASE("epsilon zero reproduces the batch optimum") {
  for (int trial = 0; trial < 16; ++trial) {
    const int n = trial % 2 == 0 ? 20 : 50;
    const TriangulationInstance inst =
        synthetic_instance(type_by_index(trial), n, 10.0, 5200 + trial);
    const CoresetResult r = run_coreset(inst, config_for(0.0, 77 + trial));
    const double ref = batch_delta(inst);
    CHECK(r.global_opt);
    CHECK(std::abs(r.delta_s - ref) <= 1e-6 * (1.0 + ref));
  }
}

TEST_CASE("epsilon 0.01 satisfies the approximation guarantee") {
  const TriangulationInstance inst =
      synthetic_instance(CameraDistribution::RandomB, 100, 10.0, 314);
  const CoresetConfig cfg = config_for(0.01, 9);
  const CoresetResult r = run_coreset(inst, cfg);
  const double ref = batch_delta(inst);
  const double ratio = error_ratio(inst, r.x_s, ref, Norm::L2);
  CHECK(ratio <= 1.01 + 1e-6);
  CHECK(ratio >= 1.0 - 1e-9);
}

TEST_CASE("trace deltas are non-decreasing and growth accounting holds") {
  for (int trial = 0; trial < 12; ++trial) {
    const TriangulationInstance inst =
        synthetic_instance(type_by_index(trial), 60, 10.0, 6300 + trial);
    const CoresetResult r = run_coreset(inst, config_for(trial % 2 ? 0.2 : 0.0, trial));
    double prev = 0.0;
    int inserts = 0;
    int cond2 = 0;
    std::set<int> seen;
    for (const CoresetTraceEntry& e : r.trace) {
      CHECK(e.delta_t >= prev * (1.0 - 1e-9));
      prev = std::max(prev, e.delta_t);
      if (e.kind == TraceKind::Insert) {
        ++inserts;
        if (e.condition2) ++cond2;
        CHECK(!seen.count(e.worst_index));
        seen.insert(e.worst_index);
      }
    }
    CHECK(inserts == r.loop_traversals);
    CHECK(cond2 == r.condition2_count);
    CHECK(r.final_coreset_size - std::min(4, inst.n()) == r.loop_traversals);
    CHECK(r.final_counter - 1 + r.condition2_count == r.loop_traversals);
    CHECK(r.final_coreset_size <= inst.n());
    CHECK(r.alpha >= 0.0);
    CHECK(r.alpha <= 1.0);
    if (r.global_opt) {
      CHECK(error_ratio(inst, r.x_s, batch_delta(inst), Norm::L2) <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("per-counter incumbents respect the anytime bound") {
  // Runs often reach the global optimum within a few counter values, which
  // leaves no effective t >= 2 to check; the batch must still produce some.
  int checked = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const TriangulationInstance inst =
        synthetic_instance(type_by_index(trial), 100, 10.0, 8800 + trial);
    const CoresetResult r = run_coreset(inst, config_for(0.05, trial));
    const double ref = batch_delta(inst);
    const auto independent = post_refinement_ratios(r, ref);
    const auto library = anytime_ratios(r, ref);
    CHECK(library.size() == independent.size());
    for (const auto& [t, ratio] : library) {
      REQUIRE(independent.count(t));
      CHECK(ratio == doctest::Approx(independent.at(t)).epsilon(1e-14));
      CHECK(ratio <= backtrack_bound(t) + 1e-6);
      CHECK(ratio >= 1.0 - 1e-9);
      ++checked;
    }
    audit_result(inst, config_for(0.05, trial), r);
  }
  CHECK(checked >= 4);
}

TEST_CASE("run-to-global agrees with batch under every residual norm") {
  for (int trial = 0; trial < 6; ++trial) {
    const TriangulationInstance inst =
        synthetic_instance(type_by_index(trial), 30, 10.0, 12100 + trial);
    for (const Norm p : {Norm::L1, Norm::LInf}) {
      CoresetConfig cfg = config_for(0.0, 31 + trial);
      cfg.solver.norm_p = p;
      const CoresetResult r = run_coreset(inst, cfg);
      SolveOptions opts;
      opts.norm_p = p;
      const double ref = solve_subset(inst, all_indices(inst), opts).delta;
      CHECK(r.global_opt);
      CHECK(std::abs(r.delta_s - ref) <= 1e-6 * (1.0 + ref));
    }
  }
}

TEST_CASE("budget exits still satisfy the epsilon guarantee") {
  int budget_exits = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const TriangulationInstance inst =
        synthetic_instance(type_by_index(trial), 100, 10.0, 9900 + trial);
    const CoresetResult r = run_coreset(inst, config_for(1.0, 555 + trial));
    if (r.global_opt) continue;
    ++budget_exits;
    const double ratio = error_ratio(inst, r.x_s, batch_delta(inst), Norm::L2);
    CHECK(ratio <= 2.0 + 1e-6);  // 1 + epsilon at epsilon = 1
    CHECK(ratio >= 1.0 - 1e-9);
  }
  CHECK(budget_exits >= 3);
}

TEST_CASE("backtrack bound formula") {
  CHECK(backtrack_bound(2) == 2.0);
  CHECK(backtrack_bound(200) == doctest::Approx(1.01).epsilon(1e-15));
  CHECK_THROWS_AS(backtrack_bound(1), DomainError);
}

TEST_CASE("error ratio conventions") {
  const TriangulationInstance noisy =
      synthetic_instance(CameraDistribution::CircleC, 20, 10.0, 17);
  SolveOptions opts;
  const Solution s = solve_subset(noisy, all_indices(noisy), opts);
  CHECK(error_ratio(noisy, s.x, s.delta, Norm::L2) == doctest::Approx(1.0).epsilon(1e-9));

  const TriangulationInstance clean =
      synthetic_instance(CameraDistribution::CircleC, 20, 0.0, 18);
  CHECK(error_ratio(clean, *clean.ground_truth, 0.0, Norm::L2) == 1.0);
  CHECK_THROWS_AS(error_ratio(clean, *clean.ground_truth + Vec3(0.1, 0, 0), 0.0, Norm::L2),
                  DomainError);
}

TEST_CASE("classification of a stationary step is condition one") {
  const TriangulationInstance inst =
      synthetic_instance(CameraDistribution::RandomB, 10, 10.0, 5);
  SolveOptions opts;
  std::vector<int> subset = {0, 1, 2, 3};
  const Solution s = solve_subset(inst, subset, opts);
  const Classification cls = classify_condition(inst, s.support, s.x, s.x, 7, Norm::L2);
  CHECK_FALSE(cls.condition2);
}

TEST_CASE("classification of a symmetric constructed step") {
  // Support camera and inserted camera share the geometry, so both image
  // displacements are equal and the step counts as condition one.
  TriangulationInstance inst;
  inst.cameras = {identity_camera(), identity_camera()};
  inst.observations = {{0, Vec2(1, 0)}, {1, Vec2(1, 0)}};
  const Vec3 x_prev(0, 0, 1);
  const Vec3 x_cand(-1, 0, 1);
  const Classification cls = classify_condition(inst, {0}, x_prev, x_cand, 1, Norm::L2);
  CHECK_FALSE(cls.condition2);
  CHECK(cls.j == 0);
}

TEST_CASE("fixed seeds reproduce runs and the permutation is seeded") {
  const TriangulationInstance inst =
      synthetic_instance(CameraDistribution::StereoD, 40, 10.0, 23);
  const CoresetResult a = run_coreset(inst, config_for(0.1, 99));
  const CoresetResult b = run_coreset(inst, config_for(0.1, 99));
  CHECK(a.x_s == b.x_s);
  CHECK(a.delta_s == b.delta_s);
  CHECK(a.coreset == b.coreset);
  CHECK(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].worst_index == b.trace[i].worst_index);
    CHECK(a.trace[i].delta_t == b.trace[i].delta_t);
  }
  CHECK(shuffled_indices(10, 1) != shuffled_indices(10, 2));
  std::vector<int> sorted = shuffled_indices(10, 1);
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("incumbent gamma matches the best full-data residual of the estimate") {
  const TriangulationInstance inst =
      synthetic_instance(CameraDistribution::LineA, 80, 10.0, 12);
  const CoresetResult r = run_coreset(inst, config_for(0.5, 3));
  REQUIRE(std::isfinite(r.gamma));
  const ConeSet all = make_cone_set(inst, Norm::L2);
  CHECK(worst_residual(all, r.x_s).value == doctest::Approx(r.gamma).epsilon(1e-12));
  CHECK(r.final_coreset_size <=
        std::min(inst.n(), static_cast<int>(std::ceil(2.0 / 0.5)) + 3 + r.condition2_count));
}
