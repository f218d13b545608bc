// End-to-end checks of the command-line interface: subcommands, file
// formats, exit codes, and byte determinism. Receives the binary path as
// argv[1].

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::cerr << "FAILED: " << what << "\n";
  }
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc < 0 ? rc : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Timing fields differ between runs; everything else must not.
std::string strip_wall(std::string text) {
  return std::regex_replace(text, std::regex("\"wall_us\": [0-9]+"), "\"wall_us\": X");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <coretri-binary>\n";
    return 2;
  }
  const std::string bin = argv[1];
  const fs::path work = fs::temp_directory_path() / "coretri_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string W = work.string();
  const std::string quiet = " > " + W + "/stdout.txt 2> " + W + "/stderr.txt";

  // generate: determinism and manifest marks
  check(run(bin + " generate --type B --views 30 --points 3 --noise 10 --seed 1 --out " + W +
            "/gen_a" + quiet) == 0,
        "generate exits 0");
  check(run(bin + " generate --type B --views 30 --points 3 --noise 10 --seed 1 --out " + W +
            "/gen_b" + quiet) == 0,
        "generate twice exits 0");
  check(slurp(work / "gen_a" / "inst_00000.cti") == slurp(work / "gen_b" / "inst_00000.cti"),
        "generated instances are byte-identical per seed");
  check(slurp(work / "gen_a" / "manifest.txt") == slurp(work / "gen_b" / "manifest.txt"),
        "manifests are byte-identical per seed");
  check(run(bin + " generate --type C --views 10 --points 1 --noise 0 --seed 2 --out " + W +
            "/gen_clean" + quiet) == 0,
        "noiseless generate exits 0");
  check(slurp(work / "gen_clean" / "manifest.txt").find("noiseless 1") != std::string::npos,
        "noiseless marked in manifest");

  // solve: batch vs coreset epsilon 0 agreement, wall-stripped determinism
  const std::string inst = W + "/gen_a/inst_00000.cti";
  check(run(bin + " solve --input " + inst + " --mode batch --solver bisection --seed 7 --out " +
            W + "/batch.json" + quiet) == 0,
        "batch solve exits 0");
  check(run(bin + " solve --input " + inst +
            " --mode coreset --epsilon 0 --solver bisection --seed 7 --out " + W +
            "/coreset.json" + quiet) == 0,
        "coreset solve exits 0");
  {
    const std::string batch = slurp(work / "batch.json");
    const std::string coreset = slurp(work / "coreset.json");
    std::smatch mb, mc;
    check(std::regex_search(batch, mb, std::regex("\"delta\": ([0-9.eE+-]+)")),
          "batch result carries delta");
    check(std::regex_search(coreset, mc, std::regex("\"delta_s\": ([0-9.eE+-]+)")),
          "coreset result carries delta_s");
    if (!mb.empty() && !mc.empty()) {
      const double db = std::stod(mb[1]);
      const double dc = std::stod(mc[1]);
      check(std::abs(db - dc) <= 1e-6 * (1.0 + db), "epsilon-zero coreset matches batch");
    }
    check(coreset.find("\"initial_subset\"") != std::string::npos,
          "coreset result records the initial subset");
    check(run(bin + " solve --input " + inst +
              " --mode coreset --epsilon 0 --solver bisection --seed 7 --out " + W +
              "/coreset2.json" + quiet) == 0,
          "coreset rerun exits 0");
    check(strip_wall(slurp(work / "coreset2.json")) == strip_wall(coreset),
          "coreset rerun identical apart from timing");
  }

  // solve on a noiseless instance reaches delta ~ 0 in both modes
  const std::string clean = W + "/gen_clean/inst_00000.cti";
  for (const std::string mode : {std::string("batch"), std::string("coreset")}) {
    const std::string out = W + "/clean_" + mode + ".json";
    check(run(bin + " solve --input " + clean + " --mode " + mode +
              " --solver dinkelbach --epsilon 0.1 --seed 3 --out " + out + quiet) == 0,
          "noiseless solve exits 0 (" + mode + ")");
    std::smatch m;
    const std::string text = slurp(out);
    check(std::regex_search(text, m, std::regex("\"delta(_s)?\": ([0-9.eE+-]+)")),
          "noiseless result carries delta");
    if (!m.empty()) check(std::stod(m[2]) <= 1e-8, "noiseless delta is zero (" + mode + ")");
  }

  // validate-bound over the generated directory
  check(run(bin + " validate-bound --instances " + W + "/gen_a --epsilon 0.2 --seed 5 --out " +
            W + "/bound.csv" + quiet) == 0,
        "validate-bound exits 0");
  {
    const std::string csv = slurp(work / "bound.csv");
    check(csv.rfind("instance,t,ratio,bound,violation", 0) == 0,
          "bound report carries the fixed header");
    check(csv.find(",1\n") == std::string::npos, "no bound violations flagged");
  }

  // bench: tiny sweep with per-instance records
  check(run(bin + " bench --types B --views-list 30 --points 2 --epsilon-list 0.5"
            " --solver dinkelbach --seed 11 --out " + W + "/bench.csv --runs-out " + W +
            "/bench_runs.csv" + quiet) == 0,
        "bench exits 0");
  check(slurp(work / "bench.csv").rfind("type,n_views,epsilon,solver,norm,instances", 0) == 0,
        "bench report carries the fixed header");
  {
    const std::string runs = slurp(work / "bench_runs.csv");
    check(runs.rfind("instance,n_views,mode,solver,norm,epsilon,delta,error_ratio", 0) == 0,
          "per-instance report carries the fixed header");
    // one batch and one coreset row per instance
    check(std::count(runs.begin(), runs.end(), '\n') == 5, "two rows per instance plus header");
  }

  // remove-outliers on a contaminated instance
  check(run(bin + " generate --type B --views 40 --points 1 --noise 5 --outlier-fraction 0.1"
            " --outlier-noise 30 --seed 21 --out " + W + "/gen_out" + quiet) == 0,
        "contaminated generate exits 0");
  check(run(bin + " remove-outliers --input " + W + "/gen_out/inst_00000.cti" +
            " --threshold 10 --mode coreset --epsilon 0.4 --solver dinkelbach --seed 1 --out " +
            W + "/removal.json" + quiet) == 0,
        "remove-outliers exits 0");
  {
    const std::string text = slurp(work / "removal.json");
    check(text.find("\"n_inliers\"") != std::string::npos, "removal reports inlier count");
    check(text.find("\"recall\"") != std::string::npos, "removal reports recall");
  }

  // exit codes: missing file -> 2; malformed instance -> 2
  check(run(bin + " solve --input " + W + "/nope.cti --mode batch" + quiet) == 2,
        "missing input exits 2");
  {
    std::ofstream bad(work / "bad.cti");
    bad << "coretri-instance v1\ncameras 1\ncamera 1 0 0 0 0 1 0 0 0 0 1\n";
  }
  check(run(bin + " solve --input " + W + "/bad.cti --mode batch --out " + W + "/bad.json" +
            quiet) == 2,
        "malformed input exits 2");
  check(slurp(work / "bad.json").find("\"error\"") != std::string::npos,
        "machine-readable error record written");

  // environment seed fallback
  check(run("CORETRI_SEED=1 " + bin + " generate --type B --views 30 --points 1 --noise 10"
            " --out " + W + "/gen_env" + quiet) == 0,
        "env seed generate exits 0");
  check(slurp(work / "gen_env" / "inst_00000.cti") == slurp(work / "gen_a" / "inst_00000.cti"),
        "CORETRI_SEED matches --seed");

  if (failures == 0) std::printf("cli checks passed\n");
  return failures == 0 ? 0 : 1;
}
