#include "coretri/instance_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coretri/errors.hpp"

namespace coretri {

namespace {

using nlohmann::json;

struct LineReader {
  std::istringstream in;
  int line_number = 0;
  std::string line;

  explicit LineReader(const std::string& text) : in(text) {}

  bool next() {
    while (std::getline(in, line)) {
      ++line_number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }
};

std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, int line, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(what + ": bad number '" + tok + "'", line);
  return v;
}

long parse_count(const std::string& tok, int line, const std::string& what) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || v < 0)
    throw ParseError(what + ": bad count '" + tok + "'", line);
  return v;
}

json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

TriangulationInstance parse_instance(const std::string& text) {
  LineReader r(text);
  if (!r.next() || r.line != "coretri-instance v1")
    throw ParseError("expected header 'coretri-instance v1'", r.line_number == 0 ? 1 : r.line_number);

  TriangulationInstance inst;
  long n_cameras = -1;
  long n_obs = -1;

  while (r.next()) {
    const std::vector<std::string> tok = tokens(r.line);
    const std::string& key = tok[0];
    if (key == "cameras") {
      if (tok.size() != 2) throw ParseError("cameras: expected one count", r.line_number);
      n_cameras = parse_count(tok[1], r.line_number, "cameras");
      inst.cameras.reserve(n_cameras);
    } else if (key == "camera") {
      const size_t index = inst.cameras.size();
      if (tok.size() != 13)
        throw ParseError("camera " + std::to_string(index) + ": expected 12 entries, got " +
                             std::to_string(tok.size() - 1),
                         r.line_number);
      CameraMatrix P;
      for (int k = 0; k < 12; ++k)
        P(k / 4, k % 4) =
            parse_number(tok[1 + k], r.line_number, "camera " + std::to_string(index));
      inst.cameras.push_back(P);
    } else if (key == "observations") {
      if (tok.size() != 2) throw ParseError("observations: expected one count", r.line_number);
      n_obs = parse_count(tok[1], r.line_number, "observations");
      inst.observations.reserve(n_obs);
    } else if (key == "obs") {
      const size_t index = inst.observations.size();
      if (tok.size() != 4)
        throw ParseError("obs " + std::to_string(index) + ": expected camera index and 2 values",
                         r.line_number);
      Observation o;
      o.camera_index =
          static_cast<int>(parse_count(tok[1], r.line_number, "obs " + std::to_string(index)));
      o.point2[0] = parse_number(tok[2], r.line_number, "obs " + std::to_string(index));
      o.point2[1] = parse_number(tok[3], r.line_number, "obs " + std::to_string(index));
      if (o.camera_index >= static_cast<int>(inst.cameras.size()))
        throw ParseError("obs " + std::to_string(index) + ": camera index out of range (" +
                             tok[1] + " of " + std::to_string(inst.cameras.size()) + ")",
                         r.line_number);
      inst.observations.push_back(o);
    } else if (key == "ground_truth") {
      if (tok.size() != 4) throw ParseError("ground_truth: expected 3 values", r.line_number);
      Vec3 g;
      for (int k = 0; k < 3; ++k) g[k] = parse_number(tok[1 + k], r.line_number, "ground_truth");
      inst.ground_truth = g;
    } else if (key == "inlier_mask") {
      std::vector<uint8_t> mask;
      mask.reserve(tok.size() - 1);
      for (size_t k = 1; k < tok.size(); ++k) {
        if (tok[k] != "0" && tok[k] != "1")
          throw ParseError("inlier_mask: entries must be 0 or 1", r.line_number);
        mask.push_back(tok[k] == "1" ? 1 : 0);
      }
      inst.inlier_mask = std::move(mask);
    } else if (key == "meta") {
      if (tok.size() < 2) throw ParseError("meta: expected a key", r.line_number);
      std::string value;
      for (size_t k = 2; k < tok.size(); ++k) {
        if (k > 2) value += ' ';
        value += tok[k];
      }
      inst.meta.emplace_back(tok[1], value);
    } else {
      throw ParseError("unknown record '" + key + "'", r.line_number);
    }
  }

  if (n_cameras >= 0 && n_cameras != static_cast<long>(inst.cameras.size()))
    throw ParseError("declared " + std::to_string(n_cameras) + " cameras, found " +
                         std::to_string(inst.cameras.size()),
                     r.line_number);
  if (n_obs >= 0 && n_obs != static_cast<long>(inst.observations.size()))
    throw ParseError("declared " + std::to_string(n_obs) + " observations, found " +
                         std::to_string(inst.observations.size()),
                     r.line_number);
  if (inst.inlier_mask && inst.inlier_mask->size() != inst.observations.size())
    throw ParseError("inlier_mask length does not match observations", r.line_number);
  inst.validate();
  return inst;
}

std::string format_instance(const TriangulationInstance& inst) {
  std::string out = "coretri-instance v1\n";
  out += "cameras " + std::to_string(inst.cameras.size()) + "\n";
  for (const CameraMatrix& P : inst.cameras) {
    out += "camera";
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) out += " " + format_double(P(r, c));
    out += "\n";
  }
  out += "observations " + std::to_string(inst.observations.size()) + "\n";
  for (const Observation& o : inst.observations) {
    out += "obs " + std::to_string(o.camera_index) + " " + format_double(o.point2[0]) + " " +
           format_double(o.point2[1]) + "\n";
  }
  if (inst.ground_truth) {
    out += "ground_truth";
    for (int k = 0; k < 3; ++k) out += " " + format_double((*inst.ground_truth)[k]);
    out += "\n";
  }
  if (inst.inlier_mask) {
    out += "inlier_mask";
    for (uint8_t m : *inst.inlier_mask) out += m ? " 1" : " 0";
    out += "\n";
  }
  for (const auto& [key, value] : inst.meta) out += "meta " + key + " " + value + "\n";
  return out;
}

TriangulationInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

void save_instance(const TriangulationInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << format_instance(instance);
  if (!out) throw IoError("write failed for '" + path + "'");
}

ReportWriter::ReportWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void ReportWriter::add_row(const std::vector<std::string>& values) {
  if (values.size() != columns_.size())
    throw DomainError("report row has " + std::to_string(values.size()) + " values, expected " +
                      std::to_string(columns_.size()));
  rows_.push_back(values);
}

std::string ReportWriter::str() const {
  std::string out;
  for (size_t c = 0; c < columns_.size(); ++c) {
    if (c) out += ',';
    out += columns_[c];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += row[c];
    }
    out += '\n';
  }
  return out;
}

void ReportWriter::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << str();
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string solution_to_json(const Solution& solution, const std::string& solver, Norm norm_p,
                             int64_t wall_us, const std::vector<int>& initial_subset) {
  json j;
  j["mode"] = "batch";
  j["solver"] = solver;
  j["norm"] = norm_name(norm_p);
  j["delta"] = solution.delta;
  j["x"] = vec3_json(solution.x);
  j["support"] = solution.support;
  j["solver_iters"] = solution.solver_iters;
  if (!initial_subset.empty()) j["initial_subset"] = initial_subset;
  j["wall_us"] = wall_us;
  return j.dump(2) + "\n";
}

std::string coreset_result_to_json(const CoresetResult& result, const std::string& solver,
                                   Norm norm_p, double epsilon, int64_t wall_us,
                                   const std::vector<int>& initial_subset) {
  json j;
  j["mode"] = "coreset";
  j["solver"] = solver;
  j["norm"] = norm_name(norm_p);
  j["epsilon"] = epsilon;
  j["delta_s"] = result.delta_s;
  j["x_s"] = vec3_json(result.x_s);
  j["coreset"] = result.coreset;
  j["gamma"] = std::isfinite(result.gamma) ? json(result.gamma) : json("inf");
  j["global"] = result.global_opt;
  j["condition2_count"] = result.condition2_count;
  j["loop_traversals"] = result.loop_traversals;
  j["alpha"] = result.alpha;
  j["final_coreset_size"] = result.final_coreset_size;
  j["final_counter"] = result.final_counter;
  j["duplicate_worst_exit"] = result.duplicate_worst_exit;
  if (!initial_subset.empty()) j["initial_subset"] = initial_subset;
  json trace = json::array();
  for (const CoresetTraceEntry& e : result.trace) {
    json te;
    te["kind"] = e.kind == TraceKind::Insert ? "insert"
                 : e.kind == TraceKind::GlobalExit ? "global_exit"
                                                   : "refine";
    te["t"] = e.t;
    te["coreset_size"] = e.coreset_size;
    te["delta_t"] = e.delta_t;
    te["worst_index"] = e.worst_index;
    te["worst_residual"] =
        std::isfinite(e.worst_residual) ? json(e.worst_residual) : json("inf");
    te["condition2"] = e.condition2;
    te["incumbent_updated"] = e.incumbent_updated;
    te["incumbent_gamma"] =
        std::isfinite(e.incumbent_gamma) ? json(e.incumbent_gamma) : json("inf");
    te["classify_fallback"] = e.classify_fallback;
    trace.push_back(te);
  }
  j["trace"] = trace;
  j["wall_us"] = wall_us;
  return j.dump(2) + "\n";
}

}  // namespace coretri
