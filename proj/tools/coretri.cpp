// Command-line front end: synthetic instance generation, batch/coreset
// solving, anytime-bound validation, coreset-vs-batch benchmarking, and
// recursive outlier removal.
//
// Exit status: 0 success, 1 validation failure (bound violation),
// 2 input error, 3 solver failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coretri/coreset.hpp"
#include "coretri/errors.hpp"
#include "coretri/geometry.hpp"
#include "coretri/instance_io.hpp"
#include "coretri/outliers.hpp"
#include "coretri/rng.hpp"
#include "coretri/synth.hpp"

namespace fs = std::filesystem;
using namespace coretri;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

uint64_t default_seed() {
  if (const char* env = std::getenv("CORETRI_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

Norm parse_norm(const std::string& s) {
  const auto p = norm_from_name(s);
  if (!p) throw DomainError("unknown norm '" + s + "' (expected 1, 2 or inf)");
  return *p;
}

CameraDistribution parse_type(const std::string& s) {
  const auto d = distribution_from_name(s);
  if (!d) throw DomainError("unknown camera distribution '" + s + "' (expected A, B, C or D)");
  return *d;
}

Method parse_method(const std::string& s) {
  const auto m = method_from_name(s);
  if (!m) throw DomainError("unknown solver '" + s + "'");
  return *m;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_error_record(const std::string& path, const std::string& kind,
                        const std::string& message) {
  if (path.empty()) return;
  json j;
  j["error"] = kind;
  j["message"] = message;
  write_text(path, j.dump(2) + "\n");
}

std::vector<std::string> list_instance_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".cti")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .cti instances under '" + dir + "'");
  return files;
}

// Seeded subsample; fraction 1 keeps everything.
std::vector<std::string> sample_files(std::vector<std::string> files, double fraction,
                                      uint64_t seed) {
  if (fraction >= 1.0) return files;
  const size_t keep = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(fraction * static_cast<double>(files.size()))));
  Rng rng(derive_seed(seed, 0x5a));
  rng.shuffle(files);
  files.resize(keep);
  std::sort(files.begin(), files.end());
  return files;
}

// Shared start for batch/coreset comparisons: the seeded initial four-view
// subset is solved once and its estimate handed to the batch solver.
struct SharedStart {
  std::vector<int> subset;
  Vec3 x1;
};

SharedStart initial_estimate(const TriangulationInstance& inst, const SolveOptions& opts,
                             uint64_t seed) {
  const std::vector<int> perm = shuffled_indices(inst.n(), seed);
  SharedStart s;
  s.subset.assign(perm.begin(), perm.begin() + std::min<size_t>(4, perm.size()));
  s.x1 = solve_subset(inst, s.subset, opts).x;
  return s;
}

std::vector<int> full_subset(const TriangulationInstance& inst) {
  std::vector<int> subset(inst.n());
  for (int i = 0; i < inst.n(); ++i) subset[i] = i;
  return subset;
}

int cmd_generate(const std::string& type, int views, int points, double noise,
                 double outlier_fraction, double outlier_noise, uint64_t seed,
                 const std::string& out_dir) {
  SyntheticConfig cfg;
  cfg.distribution = parse_type(type);
  cfg.n_views = views;
  cfg.n_points = points;
  cfg.noise_sigma = noise;
  cfg.outlier_fraction = outlier_fraction;
  cfg.outlier_sigma = outlier_noise;
  cfg.rng_seed = seed;

  fs::create_directories(out_dir);
  const auto instances = generate_instances(cfg);
  std::string manifest = "coretri-manifest v1\n";
  manifest += "type " + std::string(distribution_name(cfg.distribution)) + "\n";
  manifest += "views " + std::to_string(views) + "\n";
  manifest += "points " + std::to_string(points) + "\n";
  manifest += "noise_sigma " + format_double(noise) + "\n";
  manifest += "outlier_fraction " + format_double(outlier_fraction) + "\n";
  manifest += "outlier_sigma " + format_double(outlier_noise) + "\n";
  manifest += "seed " + std::to_string(seed) + "\n";
  manifest += std::string("noiseless ") +
              (noise == 0.0 && outlier_fraction == 0.0 ? "1" : "0") + "\n";
  for (size_t i = 0; i < instances.size(); ++i) {
    char name[40];
    std::snprintf(name, sizeof(name), "inst_%05zu.cti", i);
    save_instance(instances[i], (fs::path(out_dir) / name).string());
    manifest += std::string("file ") + name + "\n";
  }
  write_text((fs::path(out_dir) / "manifest.txt").string(), manifest);
  std::printf("wrote %zu instances to %s\n", instances.size(), out_dir.c_str());
  return 0;
}

int cmd_solve(const std::string& input, const std::string& mode, const std::string& solver,
              const std::string& norm, double epsilon, uint64_t seed,
              const std::string& out_file) {
  const TriangulationInstance inst = load_instance(input);
  SolveOptions opts;
  opts.method = parse_method(solver);
  opts.norm_p = parse_norm(norm);

  std::string payload;
  if (mode == "batch") {
    const SharedStart start = initial_estimate(inst, opts, seed);
    const int64_t t0 = now_us();
    const Solution sol = solve_subset(inst, full_subset(inst), opts, start.x1);
    const int64_t wall = now_us() - t0;
    payload = solution_to_json(sol, solver, opts.norm_p, wall, start.subset);
  } else if (mode == "coreset") {
    CoresetConfig cfg;
    cfg.epsilon = epsilon;
    cfg.solver = opts;
    cfg.rng_seed = seed;
    const int64_t t0 = now_us();
    const CoresetResult result = run_coreset(inst, cfg);
    const int64_t wall = now_us() - t0;
    audit_result(inst, cfg, result);
    const std::vector<int> perm = shuffled_indices(inst.n(), seed);
    const std::vector<int> initial(perm.begin(),
                                   perm.begin() + std::min<size_t>(4, perm.size()));
    payload =
        coreset_result_to_json(result, solver, opts.norm_p, epsilon, wall, initial);
  } else {
    throw DomainError("unknown mode '" + mode + "' (expected batch or coreset)");
  }
  if (out_file.empty())
    std::fputs(payload.c_str(), stdout);
  else
    write_text(out_file, payload);
  return 0;
}

int cmd_validate_bound(const std::string& dir, double epsilon, uint64_t seed,
                       const std::string& out_file, double sample_fraction) {
  const std::vector<std::string> files =
      sample_files(list_instance_files(dir), sample_fraction, seed);

  ReportWriter report({"instance", "t", "ratio", "bound", "violation"});
  int violations = 0;
  for (size_t idx = 0; idx < files.size(); ++idx) {
    const TriangulationInstance inst = load_instance(files[idx]);
    SolveOptions batch;
    batch.method = Method::Bisection;
    batch.tol_delta = 1e-9;
    const double delta_star = solve_subset(inst, full_subset(inst), batch).delta;

    CoresetConfig cfg;
    cfg.epsilon = epsilon;
    cfg.rng_seed = derive_seed(seed, idx);
    const CoresetResult result = run_coreset(inst, cfg);
    audit_result(inst, cfg, result);

    const std::string stem = fs::path(files[idx]).filename().string();
    for (const auto& [t, ratio] : anytime_ratios(result, delta_star)) {
      const double bound = backtrack_bound(t);
      const bool violated = ratio > bound + 1e-6;
      violations += violated ? 1 : 0;
      report.add_row({stem, std::to_string(t), format_double(ratio), format_double(bound),
                      violated ? "1" : "0"});
    }
  }
  if (out_file.empty())
    std::fputs(report.str().c_str(), stdout);
  else
    report.write(out_file);
  if (violations > 0) {
    std::fprintf(stderr, "%d bound violations\n", violations);
    return kExitValidation;
  }
  return 0;
}

template <typename T>
std::vector<T> parse_csv_list(const std::string& csv, T (*conv)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(conv(tok));
  return out;
}

int cmd_bench(const std::string& types_csv, const std::string& views_csv, int points,
              const std::string& eps_csv, const std::string& solver, const std::string& norm,
              uint64_t seed, const std::string& out_file, double sample_fraction,
              const std::string& runs_out_file) {
  const auto types = parse_csv_list<CameraDistribution>(types_csv, parse_type);
  const auto views_list = parse_csv_list<int>(
      views_csv, +[](const std::string& s) { return std::stoi(s); });
  const auto eps_list = parse_csv_list<double>(
      eps_csv, +[](const std::string& s) { return std::stod(s); });
  if (types.empty() || views_list.empty() || eps_list.empty())
    throw DomainError("bench needs at least one type, view count and epsilon");

  SolveOptions opts;
  opts.method = parse_method(solver);
  opts.norm_p = parse_norm(norm);

  ReportWriter report({"type", "n_views", "epsilon", "solver", "norm", "instances",
                       "batch_mean_us", "coreset_mean_us", "speedup", "mean_coreset_size",
                       "max_coreset_size", "mean_alpha", "mean_condition2", "global_rate"});
  // Per-instance records, one row per (instance, mode); mode-specific
  // columns stay empty on batch rows.
  ReportWriter runs({"instance", "n_views", "mode", "solver", "norm", "epsilon", "delta",
                     "error_ratio", "coreset_size", "condition2_count", "alpha", "global",
                     "loop_traversals", "wall_us"});

  for (const CameraDistribution type : types) {
    for (const int n_views : views_list) {
      SyntheticConfig gen;
      gen.distribution = type;
      gen.n_views = n_views;
      gen.n_points = points;
      gen.noise_sigma = 10.0;
      gen.rng_seed = derive_seed(seed, 0x100 + 10 * static_cast<int>(type) + n_views);
      std::vector<TriangulationInstance> instances = generate_instances(gen);
      if (sample_fraction < 1.0) {
        const size_t keep = std::max<size_t>(
            1, static_cast<size_t>(std::ceil(sample_fraction * instances.size())));
        instances.resize(keep);
      }

      for (const double epsilon : eps_list) {
        double batch_total = 0.0;
        double coreset_total = 0.0;
        double size_total = 0.0;
        int size_max = 0;
        double alpha_total = 0.0;
        double v_total = 0.0;
        int globals = 0;
        for (size_t k = 0; k < instances.size(); ++k) {
          const TriangulationInstance& inst = instances[k];
          const uint64_t run_seed = derive_seed(seed, 0x9000 + k);
          const SharedStart start = initial_estimate(inst, opts, run_seed);
          const int64_t b0 = now_us();
          const Solution batch = solve_subset(inst, full_subset(inst), opts, start.x1);
          const int64_t batch_us = now_us() - b0;
          batch_total += static_cast<double>(batch_us);

          CoresetConfig cfg;
          cfg.epsilon = epsilon;
          cfg.solver = opts;
          cfg.rng_seed = run_seed;
          const int64_t c0 = now_us();
          const CoresetResult result = run_coreset(inst, cfg);
          const int64_t coreset_us = now_us() - c0;
          coreset_total += static_cast<double>(coreset_us);
          audit_result(inst, cfg, result);
          size_total += result.final_coreset_size;
          size_max = std::max(size_max, result.final_coreset_size);
          alpha_total += result.alpha;
          v_total += result.condition2_count;
          globals += result.global_opt ? 1 : 0;

          char ident[48];
          std::snprintf(ident, sizeof(ident), "%s_%d_%zu", distribution_name(type), n_views,
                        k);
          const double ratio = error_ratio(inst, result.x_s, batch.delta, opts.norm_p);
          runs.add_row({ident, std::to_string(n_views), "batch", solver, norm,
                        format_double(epsilon), format_double(batch.delta), "1", "", "", "",
                        "", "", std::to_string(batch_us)});
          runs.add_row({ident, std::to_string(n_views), "coreset", solver, norm,
                        format_double(epsilon), format_double(result.delta_s),
                        format_double(ratio), std::to_string(result.final_coreset_size),
                        std::to_string(result.condition2_count), format_double(result.alpha),
                        result.global_opt ? "1" : "0",
                        std::to_string(result.loop_traversals),
                        std::to_string(coreset_us)});
        }
        const double m = static_cast<double>(instances.size());
        report.add_row({distribution_name(type), std::to_string(n_views),
                        format_double(epsilon), solver, norm, std::to_string(instances.size()),
                        format_double(batch_total / m), format_double(coreset_total / m),
                        format_double(batch_total / std::max(coreset_total, 1.0)),
                        format_double(size_total / m), std::to_string(size_max),
                        format_double(alpha_total / m), format_double(v_total / m),
                        format_double(globals / m)});
      }
    }
  }
  if (out_file.empty())
    std::fputs(report.str().c_str(), stdout);
  else
    report.write(out_file);
  if (!runs_out_file.empty()) runs.write(runs_out_file);
  return 0;
}

int cmd_remove_outliers(const std::string& input, double threshold, const std::string& mode,
                        double epsilon, const std::string& solver, uint64_t seed,
                        const std::string& out_file) {
  const TriangulationInstance inst = load_instance(input);
  OutlierConfig cfg;
  const auto m = removal_mode_from_name(mode);
  if (!m) throw DomainError("unknown mode '" + mode + "' (expected exact or coreset)");
  cfg.mode = *m;
  cfg.inlier_threshold = threshold;
  cfg.epsilon = epsilon;
  cfg.solver.method = parse_method(solver);
  cfg.rng_seed = seed;

  const int64_t t0 = now_us();
  const OutlierResult result = remove_outliers(inst, cfg);
  const int64_t wall = now_us() - t0;

  json j;
  j["mode"] = mode;
  j["threshold"] = threshold;
  j["inliers"] = result.inliers;
  j["n_inliers"] = result.inliers.size();
  j["rounds"] = result.rounds;
  j["delta"] = result.final_solution.delta;
  j["x"] = json::array({result.final_solution.x[0], result.final_solution.x[1],
                        result.final_solution.x[2]});
  j["wall_us"] = wall;
  if (inst.inlier_mask) {
    const std::vector<bool> truth = true_inlier_mask(inst);
    int kept_true = 0;
    int total_true = 0;
    for (const bool b : truth) total_true += b ? 1 : 0;
    for (const int i : result.inliers) kept_true += truth[i] ? 1 : 0;
    j["precision"] = result.inliers.empty()
                         ? 1.0
                         : static_cast<double>(kept_true) / result.inliers.size();
    j["recall"] = total_true == 0 ? 1.0 : static_cast<double>(kept_true) / total_true;
  }
  const std::string payload = j.dump(2) + "\n";
  if (out_file.empty())
    std::fputs(payload.c_str(), stdout);
  else
    write_text(out_file, payload);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"globally optimal min-max triangulation with coreset acceleration"};
  app.require_subcommand(1);

  std::string type = "B", mode = "coreset", solver = "bisection", norm = "2";
  std::string input, out, dir;
  int views = 100, points = 1;
  double noise = 10.0, outlier_fraction = 0.0, outlier_noise = 30.0;
  double epsilon = 0.1, threshold = 10.0, sample_fraction = 1.0;
  uint64_t seed = default_seed();
  std::string types_csv = "A,B,C,D", views_csv = "100", eps_csv = "0.1";
  std::string runs_out;

  auto* gen = app.add_subcommand("generate", "write synthetic triangulation instances");
  gen->add_option("--type", type, "camera distribution A|B|C|D");
  gen->add_option("--views", views, "observations per instance")->check(CLI::PositiveNumber);
  gen->add_option("--points", points, "number of instances")->check(CLI::PositiveNumber);
  gen->add_option("--noise", noise, "pixel noise sigma")->check(CLI::NonNegativeNumber);
  gen->add_option("--outlier-fraction", outlier_fraction, "fraction drawing outlier noise");
  gen->add_option("--outlier-noise", outlier_noise, "outlier sigma in pixels");
  gen->add_option("--seed", seed, "rng seed");
  gen->add_option("--out", dir, "output directory")->required();

  auto* solve = app.add_subcommand("solve", "solve one instance");
  solve->add_option("--input", input, "instance file")->required();
  solve->add_option("--mode", mode, "coreset|batch");
  solve->add_option("--solver", solver, "bisection|dinkelbach");
  solve->add_option("--norm", norm, "residual norm 1|2|inf");
  solve->add_option("--epsilon", epsilon, "approximation factor (coreset mode; 0 = global)");
  solve->add_option("--seed", seed, "rng seed");
  solve->add_option("--out", out, "result file (stdout when omitted)");

  auto* validate =
      app.add_subcommand("validate-bound", "check anytime ratios against 1 + 2/t");
  validate->add_option("--instances", dir, "directory of .cti files")->required();
  validate->add_option("--epsilon", epsilon, "approximation factor");
  validate->add_option("--seed", seed, "rng seed");
  validate->add_option("--out", out, "report file (stdout when omitted)");
  validate->add_option("--sample-fraction", sample_fraction, "instance subsample fraction");

  auto* bench = app.add_subcommand("bench", "coreset vs batch timing sweep");
  bench->add_option("--types", types_csv, "comma list of A,B,C,D");
  bench->add_option("--views-list", views_csv, "comma list of view counts");
  bench->add_option("--points", points, "instances per cell")->check(CLI::PositiveNumber);
  bench->add_option("--epsilon-list", eps_csv, "comma list of epsilons (0 = global)");
  bench->add_option("--solver", solver, "bisection|dinkelbach");
  bench->add_option("--norm", norm, "residual norm 1|2|inf");
  bench->add_option("--seed", seed, "rng seed");
  bench->add_option("--out", out, "per-cell summary report (stdout when omitted)");
  bench->add_option("--runs-out", runs_out, "per-instance record file (optional)");
  bench->add_option("--sample-fraction", sample_fraction, "instance subsample fraction");

  auto* removal = app.add_subcommand("remove-outliers", "recursive min-max trimming");
  removal->add_option("--input", input, "instance file")->required();
  removal->add_option("--threshold", threshold, "inlier threshold in pixels");
  removal->add_option("--mode", mode, "exact|coreset");
  removal->add_option("--epsilon", epsilon, "coreset approximation factor");
  removal->add_option("--solver", solver, "bisection|dinkelbach");
  removal->add_option("--seed", seed, "rng seed");
  removal->add_option("--out", out, "result file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_generate(type, views, points, noise, outlier_fraction, outlier_noise, seed,
                          dir);
    if (solve->parsed()) return cmd_solve(input, mode, solver, norm, epsilon, seed, out);
    if (validate->parsed()) return cmd_validate_bound(dir, epsilon, seed, out, sample_fraction);
    if (bench->parsed())
      return cmd_bench(types_csv, views_csv, points, eps_csv, solver, norm, seed, out,
                       sample_fraction, runs_out);
    if (removal->parsed())
      return cmd_remove_outliers(input, threshold, mode, epsilon, solver, seed, out);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    write_error_record(out, "parse", e.what());
    return kExitInput;
  } catch (const IoError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    write_error_record(out, "io", e.what());
    return kExitInput;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    write_error_record(out, "domain", e.what());
    return kExitInput;
  } catch (const Error& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    write_error_record(out, "solver", e.what());
    return kExitSolver;
  }
  return 0;
}
