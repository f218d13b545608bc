#pragma once

#include <string>
#include <vector>

#include "coretri/coreset.hpp"
#include "coretri/linf_solver.hpp"
#include "coretri/types.hpp"

namespace coretri {

// Line-oriented text format, versioned header, 17 significant digits so that
// save -> load is value-identical:
//
//   coretri-instance v1
//   cameras <K>
//   camera <12 row-major entries>        (x K)
//   observations <N>
//   obs <camera_index> <u> <v>           (x N)
//   ground_truth <x> <y> <z>             (optional)
//   inlier_mask <N zeros/ones>           (optional)
//   meta <key> <value...>                (optional, repeatable)
TriangulationInstance load_instance(const std::string& path);
void save_instance(const TriangulationInstance& instance, const std::string& path);

TriangulationInstance parse_instance(const std::string& text);
std::string format_instance(const TriangulationInstance& instance);

// Exact decimal formatting used across all text outputs.
std::string format_double(double v);

// Headered comma-separated report; columns are fixed at construction and
// every row is checked against them.
class ReportWriter {
 public:
  explicit ReportWriter(std::vector<std::string> columns);
  void add_row(const std::vector<std::string>& values);
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// JSON records for CLI result files. Wall times are reported in microseconds
// and carried separately so deterministic fields can be compared bit-for-bit.
std::string solution_to_json(const Solution& solution, const std::string& solver,
                             Norm norm_p, int64_t wall_us,
                             const std::vector<int>& initial_subset = {});
std::string coreset_result_to_json(const CoresetResult& result, const std::string& solver,
                                   Norm norm_p, double epsilon, int64_t wall_us,
                                   const std::vector<int>& initial_subset = {});

}  // namespace coretri
