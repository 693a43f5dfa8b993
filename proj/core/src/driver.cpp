#include "sdgrad/driver.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sdgrad/dump.hpp"
#include "sdgrad/error.hpp"

namespace sdg {

namespace {

double leaf_sum(const Value& v) {
  if (v.is_real() || v.is_int()) return v.as_number();
  double s = 0;
  for_each_leaf(v, [&](const std::vector<std::int64_t>&, double x) { s += x; });
  return s;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw TransformError("cannot write '" + p.string() + "'");
  out << text;
}

}  // namespace

std::string GradientSetup::function_name() const { return kernel->name + "_wrt_" + wrt; }

KernelSignature GradientSetup::signature() const {
  return make_signature(function_name(), specs, pipeline.physical_env, pipeline.result_type);
}

GradientSetup prepare_gradient(const KernelEntry& k, const std::string& wrt, const std::string& specs,
                               const PipelineOptions& base) {
  GradientSetup g;
  g.kernel = &k;
  g.wrt = wrt.empty() ? k.wrt : wrt;
  PipelineOptions o = base;
  o.wrt = g.wrt;
  o.storage = parse_storage_specs(specs.empty() ? k.default_specs : specs);
  g.pipeline = run_pipeline(k.term(), k.env(), o);
  g.specs = g.pipeline.storage;
  return g;
}

std::vector<std::int64_t> wrt_shape(const KernelEntry& k, const std::string& wrt,
                                    const std::map<std::string, std::int64_t>& dims) {
  for (const auto& in : k.inputs) {
    if (in.name != wrt) continue;
    std::vector<std::int64_t> shape;
    for (const auto& d : in.shape) {
      auto it = dims.find(d);
      shape.push_back(it == dims.end() ? 8 : it->second);
    }
    return shape;
  }
  throw TransformError("kernel " + k.name + " has no input '" + wrt + "'");
}

VerifyReport verify_gradient(const GradientSetup& g, const KernelInstance& inst,
                             const std::vector<std::int64_t>& shape, const VerifyOptions& opts) {
  VerifyReport r;
  r.gradient = eval(inst.physical, g.pipeline.physical());
  r.logical = eval(inst.logical, g.pipeline.logical());
  FiniteDiffOptions fd;
  fd.eps = opts.eps;
  if (opts.dense_support && !shape.empty()) fd.dense_shape = shape;
  r.oracle = finite_diff(g.kernel->term(), g.wrt, inst.logical, fd);
  ValueDiff a = compare_values(r.gradient, r.oracle, opts.abs_tol, opts.rel_tol);
  ValueDiff b = compare_values(r.logical, r.oracle, opts.abs_tol, opts.rel_tol);
  r.diff.max_abs = std::max(a.max_abs, b.max_abs);
  r.diff.max_rel = std::max(a.max_rel, b.max_rel);
  r.diff.ok = a.ok && b.ok;
  r.pass = r.diff.ok;
  return r;
}

std::vector<BenchResult> bench_command(const KernelEntry& k, const std::vector<BenchCell>& sweep,
                                       const BenchOptions& opts) {
  std::vector<BenchResult> out;
  for (const auto& cell : sweep) {
    GradientSetup g = prepare_gradient(k, "", opts.specs);
    KernelInstance inst = make_instance(k, g.specs, cell.dims, cell.density, opts.seed);
    BenchResult r;
    r.kernel = k.name;
    r.dims = cell.dims;
    r.density = cell.density;
    r.nnz = inst.nnz;
    for (const auto& s : g.pipeline.stages) r.stage_ms.emplace_back(s.name, s.millis);
    Value grad;
    for (int i = 0; i < std::max(1, opts.repeats); ++i) {
      EvalStats stats;
      auto start = std::chrono::steady_clock::now();
      grad = eval(inst.physical, g.pipeline.physical(), &stats);
      auto stop = std::chrono::steady_clock::now();
      r.run_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
      r.ops = stats;
    }
    std::vector<double> sorted = r.run_ms;
    std::sort(sorted.begin(), sorted.end());
    std::size_t n = sorted.size();
    r.median_ms = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    r.checksum = leaf_sum(grad);
    if (opts.verify) {
      auto rep = verify_gradient(g, inst, wrt_shape(k, g.wrt, cell.dims), opts.verify_opts);
      r.oracle_max_abs = rep.diff.max_abs;
      r.oracle_max_rel = rep.diff.max_rel;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string bench_json(const std::vector<BenchResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j;
    j["kernel"] = r.kernel;
    j["dims"] = r.dims;
    j["density"] = r.density;
    j["nnz"] = r.nnz;
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& [name, ms] : r.stage_ms) stages[name] = ms;
    j["stage_ms"] = stages;
    j["run_ms"] = r.run_ms;
    j["median_ms"] = r.median_ms;
    j["ops"] = {{"binding_visits", r.ops.binding_visits},
                {"accumulations", r.ops.accumulations},
                {"lookups", r.ops.lookups},
                {"total", r.ops.total()}};
    j["checksum"] = r.checksum;
    if (r.oracle_max_abs) {
      j["oracle_max_abs"] = *r.oracle_max_abs;
      j["oracle_max_rel"] = *r.oracle_max_rel;
    }
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

std::vector<std::string> emit_runtime_fixtures(const FixtureOptions& opts) {
  namespace fs = std::filesystem;
  fs::path dir(opts.dir);
  fs::create_directories(dir);
  std::vector<std::string> written;
  for (const char* name : {"VVD", "SMVM", "BATAX"}) {
    const KernelEntry& k = *find_kernel(name);
    GradientSetup g = prepare_gradient(k);
    Kernel kernel = lower_dps(g.pipeline.physical(), g.signature());
    EmitOptions eo;
    eo.with_main = true;
    fs::path src = dir / (g.function_name() + ".cpp");
    write_text(src, emit_source({kernel}, eo));
    written.push_back(src.string());
    for (int i = 0; i < opts.count; ++i) {
      KernelInstance inst = make_instance(k, g.specs, opts.dims, opts.density, opts.seed + i);
      std::string stem = g.function_name() + "_" + std::to_string(i);
      fs::path dump = dir / (stem + ".sdg1");
      write_dump_file(dump.string(), inst.physical);
      fs::path expected = dir / (stem + ".expected");
      write_text(expected, to_string(eval(inst.physical, g.pipeline.physical())) + "\n");
      written.push_back(dump.string());
      written.push_back(expected.string());
    }
  }
  const char* pairs[][2] = {
      {"2.0", "3.5"},
      {"{0 -> 1.0}", "{0 -> 2.0, 1 -> 3.0}"},
      {"{0 -> 1.5, 2 -> -1.0}", "{2 -> 1.0}"},
      {"{0 -> {1 -> 2.0}}", "{0 -> {1 -> 1.0, 2 -> 4.0}, 3 -> {0 -> 1.0}}"},
      {"{ }", "{1 -> 2.0}"},
  };
  std::string lines;
  for (const auto& [a, b] : pairs) {
    Value va = parse_value(a), vb = parse_value(b);
    lines += std::string("add\t") + a + "\t" + b + "\t" + to_string(semiring_add(va, vb)) + "\n";
  }
  const char* scale[][2] = {{"{0 -> 1.0, 1 -> 2.0}", "0.5"}, {"{0 -> {1 -> 2.0}}", "0.0"}, {"3.0", "2.0"}};
  for (const auto& [a, b] : scale) {
    Value va = parse_value(a), vb = parse_value(b);
    lines += std::string("mul\t") + a + "\t" + b + "\t" + to_string(semiring_mul(va, vb)) + "\n";
  }
  fs::path sv = dir / "semiring_vectors.txt";
  write_text(sv, lines);
  written.push_back(sv.string());
  return written;
}

}  // namespace sdg
