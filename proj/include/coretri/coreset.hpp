#pragma once

#include <cstdint>
#include <vector>

#include "coretri/linf_solver.hpp"

namespace coretri {

struct CoresetConfig {
  // Target approximation error in (0, 1]; 0 means run to the global optimum
  // (counter cap N - 3, per the finite-convergence condition).
  double epsilon = 0.1;
  SolveOptions solver;
  uint64_t rng_seed = 0;
  bool record_trace = true;
};

enum class TraceKind { Insert, GlobalExit, Refine };

struct CoresetTraceEntry {
  TraceKind kind = TraceKind::Insert;
  int t = 0;                  // counter value at the traversal
  int coreset_size = 0;       // after any insertion
  double delta_t = 0.0;       // subset optimum after any solve
  int worst_index = -1;       // q, observation index
  double worst_residual = 0;  // full-data max residual of the held estimate
  bool condition2 = false;    // inserted without incrementing the counter
  bool incumbent_updated = false;
  double incumbent_gamma = 0.0;  // gamma after this traversal
  bool classify_fallback = false;  // no support member passed the obtuse test
};

struct CoresetResult {
  std::vector<int> coreset;  // C_s, the incumbent's index set
  Vec3 x_s = Vec3::Zero();
  double delta_s = 0.0;
  // Best full-data max residual seen (inf until first evaluated).
  double gamma = std::numeric_limits<double>::infinity();
  bool global_opt = false;   // g
  int condition2_count = 0;  // V
  int loop_traversals = 0;   // inserting traversals
  double alpha = 0.0;        // V / loop_traversals
  int final_coreset_size = 0;
  int final_counter = 0;  // last counter value with a solved estimate
  // Set when the worst datum was already in the coreset but the global check
  // missed by solver tolerance; treated as global convergence.
  bool duplicate_worst_exit = false;
  std::vector<CoresetTraceEntry> trace;
};

// Seeded random permutation of {0, ..., n-1}; the coreset initialises from
// the first four entries. Exposed so batch baselines can share the start.
std::vector<int> shuffled_indices(int n, uint64_t seed);

// The coreset meta-algorithm: accumulate the most violating datum, track the
// best incumbent over the full data, and skip the counter increment whenever
// the support displacement test classifies the step as Condition 2.
CoresetResult run_coreset(const TriangulationInstance& instance, const CoresetConfig& config);

struct Classification {
  bool condition2 = false;
  int j = -1;  // selected support member
  bool fallback = false;
};

// Select j among the previous support by largest image displacement among
// members passing the obtuse test, then compare against the displacement of
// the inserted datum q.
Classification classify_condition(const TriangulationInstance& instance,
                                  const std::vector<int>& support_prev, const Vec3& x_prev,
                                  const Vec3& x_cand, int q, Norm p);

// Anytime ratio bound 1 + 2/t for effective counter t >= 2.
double backtrack_bound(int t);

// Replay of the trace: for every effective counter t >= 2, the incumbent
// ratio as it would stand had the run been capped at t (the estimate from
// counter t included via the refresh evaluation). Pairs (t, ratio).
std::vector<std::pair<int, double>> anytime_ratios(const CoresetResult& result,
                                                   double delta_star);

// Consistency audit of a finished run against its instance and config;
// throws DomainError on any breach. Report writers call this before
// emitting rows.
void audit_result(const TriangulationInstance& instance, const CoresetConfig& config,
                  const CoresetResult& result);

// max_i residual(x) / delta_star, with the 0/0 noiseless convention of 1.0.
double error_ratio(const TriangulationInstance& instance, const Vec3& x, double delta_star,
                   Norm p);

}  // namespace coretri
