#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "sdgrad/autodiff.hpp"
#include "sdgrad/driver.hpp"
#include "sdgrad/optimizer.hpp"
#include "sdgrad/parser.hpp"
#include "sdgrad/printer.hpp"
#include "support/fuzz.hpp"

using namespace sdg;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;
std::string only;

void run(const std::string& name, const std::function<Outcome()>& f) {
  if (!only.empty() && name.find(only) == std::string::npos) return;
  auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << std::fixed << std::setprecision(2) << s
            << " s): " << o.detail << std::endl;
}

// Golden listings write the tangent of `x` as `x'`.
ExprPtr P(std::string s) {
  for (auto pos = s.find('\''); pos != std::string::npos; pos = s.find('\'', pos)) s.replace(pos, 1, "$d");
  return parse_internal(s);
}

std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(4) << v;
  return o.str();
}

// ---- golden listings --------------------------------------------------------

Outcome golden_transformations() {
  auto start = std::chrono::steady_clock::now();
  TypeEnv env{{"V1", Type::tensor(1)}, {"V2", Type::tensor(1)}};
  ExprPtr dot = parse("sum(<i,a> in V2) V1(i) * a");
  std::vector<std::string> bad;
  auto check = [&](const char* what, const ExprPtr& got, const std::string& want) {
    if (!alpha_equal(got, P(want))) bad.push_back(std::string(what) + " got " + pretty(got));
  };

  const std::string paired = "sum(<i,a> in V2) let <i',a'> = <0.0, V2'(i)> in V1(i) * a' + V1'(i) * a";
  check("scalar", fad_scalar(dot, env, DualContext::from_env(env), false), paired);

  FadConfig cfg;
  cfg.tau = Type::tensor(1);
  cfg.require_anf = false;
  ExprPtr tensorized = fad_tensor(cfg, dot, env, DualContext::from_env(env));
  check("tensorized", tensorized, paired);
  TypeEnv tenv = env;
  tenv.push(tangent_name("V1"), Type::tensor(2));
  tenv.push(tangent_name("V2"), Type::tensor(2));
  if (typecheck(tenv, tensorized) != Type::tensor(1)) bad.push_back("tensorized type");

  check("gradient", expand_gradient(parse("sum(<i, a> in V1) a * V2(i)"), "V2", env),
        "let V1' = { } in let V2' = sum(<i,_> in V2) {i -> {i -> 1.0}} in "
        "sum(<i, a> in V1) let <i', a'> = <0.0, V1'(i)> in a * V2'(i) + a' * V2(i)");

  PipelineOptions o;
  o.wrt = "V1";
  o.storage = parse_storage_specs("V1 = dense, V2 = coo(len=V2_len, row=V2_row, val=V2_val)");
  PipelineResult r = run_pipeline(dot, env, o);
  check("sparsity", r.stage("sparsity").term,
        "let V1' = sum(<i, a> in V1) {i -> {i -> 1.0}} in sum(<i, a> in V2) V1'(i) * a");
  check("storage", r.stage("storage").term, "sum(<_, i> in (0:V2_len)) { V2_row(i) -> V2_val(i) }");

  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (s >= 1.0) bad.push_back("took " + fmt(s) + " s");
  if (!bad.empty()) return {false, bad.front()};
  return {true, "scalar, tensorized, gradient, sparsity and storage listings match in " + fmt(s) + " s"};
}

Outcome golden_batax() {
  GradientSetup g = prepare_gradient(*find_kernel("BATAX"));
  const ExprPtr& post = g.pipeline.logical();
  if (!alpha_equal(post, P("beta * (sum(<i, r> in A) r * r)"))) return {false, "post-ad " + pretty(post)};
  if (!only_scalar_mults(g.pipeline.physical(), g.pipeline.physical_env)) {
    return {false, "normalized form keeps a tensor product: " + pretty(g.pipeline.physical())};
  }
  return {true, "post-ad " + pretty(post) + "; normalized multiplications are scalar"};
}

// ---- oracle ----------------------------------------------------------------

Outcome oracle_suite() {
  const double densities[] = {1.0, 0.25, 0.0625};
  std::mt19937_64 rng(2024);
  int checked = 0;
  double worst_rel = 0, worst_abs = 0;
  std::string first_failure;
  for (const auto& k : kernel_catalog()) {
    GradientSetup g = prepare_gradient(k);
    bool matrix = false;
    for (const auto& in : k.inputs) matrix = matrix || in.shape.size() == 2;
    std::uniform_int_distribution<std::int64_t> dim(2, matrix ? 20 : 64);
    for (int i = 0; i < 20; ++i) {
      std::map<std::string, std::int64_t> dims{{"n", dim(rng)}, {"m", dim(rng)}, {"k", dim(rng)}};
      KernelInstance inst = make_instance(k, g.specs, dims, densities[i % 3], 1000 + static_cast<std::uint64_t>(i));
      VerifyReport rep = verify_gradient(g, inst, wrt_shape(k, g.wrt, dims));
      ++checked;
      worst_rel = std::max(worst_rel, rep.diff.max_rel);
      worst_abs = std::max(worst_abs, rep.diff.max_abs);
      if (!rep.pass && first_failure.empty()) first_failure = k.name + " instance " + std::to_string(i);
    }
  }
  std::string detail = std::to_string(checked) + " instances, max rel " + fmt(worst_rel) + ", max abs " + fmt(worst_abs);
  if (!first_failure.empty()) return {false, detail + "; first failure " + first_failure};
  return {true, detail};
}

// ---- fuzzing ---------------------------------------------------------------

struct Corpus {
  std::vector<ExprPtr> terms;
  std::vector<Type> types;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus c;
    fuzz::TermGen gen(7);
    std::mt19937_64 rng(11);
    TypeEnv env = fuzz::fuzz_env();
    while (c.terms.size() < 1000) {
      int order = static_cast<int>(rng() % 3);
      int depth = 1 + static_cast<int>(rng() % 4);
      ExprPtr e = gen.term(order, depth);
      c.terms.push_back(e);
      c.types.push_back(typecheck(env, e));
    }
    return c;
  }();
  return c;
}

TypeEnv tangent_env(const TypeEnv& env, const Type& tau) {
  TypeEnv out = env;
  for (const auto& [n, t] : env.entries()) out.push(tangent_name(n), tangent_type(t, tau));
  return out;
}

Outcome type_soundness() {
  TypeEnv env = fuzz::fuzz_env();
  const Type taus[] = {Type::real(), Type::tensor(1), Type::tensor(2)};
  int ok = 0, total = 0;
  std::string first;
  for (std::size_t i = 0; i < corpus().terms.size(); ++i) {
    ExprPtr a = to_anf(corpus().terms[i]);
    for (const Type& tau : taus) {
      ++total;
      FadConfig cfg;
      cfg.tau = tau;
      try {
        ExprPtr f = fad_tensor(cfg, a, env, DualContext::from_env(env));
        Type got = typecheck(tangent_env(env, tau), f);
        if (got == tangent_type(corpus().types[i], tau)) {
          ++ok;
          continue;
        }
        if (first.empty()) first = pretty(corpus().terms[i]) + " gave " + got.str();
      } catch (const std::exception& e) {
        if (first.empty()) first = pretty(corpus().terms[i]) + ": " + e.what();
      }
    }
  }
  std::string detail = std::to_string(ok) + "/" + std::to_string(total) + " differentiated terms typecheck at F_tau[T]";
  if (ok != total) return {false, detail + "; first: " + first};
  return {true, detail};
}

Outcome coherence() {
  TypeEnv env = fuzz::fuzz_env();
  int ok = 0;
  std::string first;
  for (const auto& e : corpus().terms) {
    ExprPtr a = to_anf(e);
    FadConfig cfg;
    ExprPtr t = fad_tensor(cfg, a, env, DualContext::from_env(env));
    ExprPtr s = fad_scalar(a, env, DualContext::from_env(env));
    if (alpha_equal(t, s)) {
      ++ok;
    } else if (first.empty()) {
      first = pretty(e);
    }
  }
  std::string detail = std::to_string(ok) + "/" + std::to_string(corpus().terms.size()) + " terms agree";
  if (ok != static_cast<int>(corpus().terms.size())) return {false, detail + "; first: " + first};
  return {true, detail};
}

Outcome rewrite_soundness() {
  TypeEnv env = fuzz::fuzz_env();
  std::mt19937_64 rng(99);
  int violations = 0, evaluations = 0;
  std::string first;
  const std::vector<std::string> logical = {"pre-sat", "anf", "sparsity", "post-ad"};
  const std::vector<std::string> physical = {"storage", "normalize", "anf-final"};
  for (const auto& e : corpus().terms) {
    std::vector<StorageSpec> specs = fuzz::random_formats(rng, env);
    std::vector<std::string> dense;
    for (const auto& s : specs) {
      if (s.format == Format::VectorDense || s.format == Format::MatrixDenseRow ||
          s.format == Format::MatrixDenseCol) {
        dense.push_back(s.tensor);
      }
    }
    PipelineOptions o;
    o.storage = specs;
    PipelineResult r = run_pipeline(e, env, o);
    ExprPtr norm = fuse_loops(normalize_mult(r.stage("post-ad").term, env));
    for (int k = 0; k < 10; ++k) {
      Env vals = fuzz::random_env(rng, env, dense);
      Env phys = fuzz::physical_inputs(vals, env, r.storage);
      Value want = eval(vals, e);
      auto same = [&](const std::string& stage, const Env& in, const ExprPtr& t) {
        ++evaluations;
        Value got;
        try {
          got = eval(in, t);
        } catch (const std::exception& ex) {
          ++violations;
          if (first.empty()) first = stage + " threw " + ex.what() + " on " + pretty(e);
          return;
        }
        if (!approx_equal(got, want, 1e-8, 1e-8)) {
          ++violations;
          if (first.empty()) first = stage + " changed " + pretty(e);
        }
      };
      for (const auto& s : logical) same(s, vals, r.stage(s).term);
      same("normalize (logical)", vals, norm);
      for (const auto& s : physical) same(s, phys, r.stage(s).term);
    }
  }
  std::string detail = std::to_string(evaluations) + " stage evaluations over " +
                       std::to_string(corpus().terms.size()) + " terms, " + std::to_string(violations) +
                       " violations";
  if (violations) return {false, detail + "; first: " + first};
  return {true, detail};
}

// ---- scaling ---------------------------------------------------------------

/// Exactly `nnz` coordinates drawn uniformly from a tensor of shape `dims`.
SparseInstance exact_nnz(const std::vector<std::int64_t>& dims, std::int64_t nnz, std::uint64_t seed) {
  double volume = 1;
  for (auto d : dims) volume *= static_cast<double>(d);
  SparseInstance t = gen_sparse(dims, std::min(1.0, 1.5 * static_cast<double>(nnz) / volume), seed);
  std::vector<std::size_t> idx(t.coords.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed + 1);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(nnz));
  std::sort(idx.begin(), idx.end());
  SparseInstance out;
  out.dims = dims;
  for (auto i : idx) {
    out.coords.push_back(t.coords[i]);
    out.vals.push_back(t.vals[i]);
  }
  return out;
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return syy == 0 ? 1.0 : sxy * sxy / (sxx * syy);
}

std::int64_t op_count(const GradientSetup& g, const KernelEntry& k, const std::string& sparse,
                      const std::vector<std::int64_t>& dims, std::int64_t nnz) {
  std::map<std::string, std::int64_t> d{{"n", dims[0]}, {"m", dims.back()}};
  std::map<std::string, SparseInstance> given{{sparse, exact_nnz(dims, nnz, static_cast<std::uint64_t>(nnz))}};
  KernelInstance inst = make_instance(k, g.specs, d, 1.0, 3, given);
  EvalStats stats;
  eval(inst.physical, g.pipeline.physical(), &stats);
  return stats.total();
}

Outcome sparsity_scaling() {
  const std::int64_t dim = 1 << 16;
  struct Case {
    const char* kernel;
    const char* specs;
    const char* sparse;
    int order;
  };
  const Case cases[] = {{"VVD", "V1 = dense, V2 = coo", "V2", 1}, {"SMVM", "A = coo, X = dense", "A", 2}};
  std::string detail;
  bool pass = true;
  for (const auto& c : cases) {
    const KernelEntry& k = *find_kernel(c.kernel);
    GradientSetup g = prepare_gradient(k, "", c.specs);
    std::vector<double> xs, ys;
    for (int e = 8; e <= 14; ++e) {
      std::vector<std::int64_t> dims(static_cast<std::size_t>(c.order), dim);
      xs.push_back(std::ldexp(1.0, e));
      ys.push_back(static_cast<double>(op_count(g, k, c.sparse, dims, std::int64_t{1} << e)));
    }
    double r2 = r_squared(xs, ys);
    std::vector<double> at_fixed;
    for (int e : {12, 14, 16}) {
      std::vector<std::int64_t> dims(static_cast<std::size_t>(c.order), std::int64_t{1} << e);
      at_fixed.push_back(static_cast<double>(op_count(g, k, c.sparse, dims, 1 << 10)));
    }
    auto [lo, hi] = std::minmax_element(at_fixed.begin(), at_fixed.end());
    double mean = std::accumulate(at_fixed.begin(), at_fixed.end(), 0.0) / static_cast<double>(at_fixed.size());
    double variation = (*hi - *lo) / mean;
    pass = pass && r2 > 0.99 && variation < 0.10;
    if (!detail.empty()) detail += "; ";
    detail += std::string(c.kernel) + " R^2 " + fmt(r2) + ", ops/nnz " + fmt(ys.back() / xs.back()) +
              ", dimension variation " + fmt(100 * variation) + "%";
  }
  return {pass, detail};
}

Outcome dps_structure() {
  std::string detail;
  bool pass = true;
  for (const auto& k : kernel_catalog()) {
    GradientSetup g = prepare_gradient(k);
    LowerOptions on, off;
    off.dps = false;
    int a = in_loop_dict_decls(lower_dps(g.pipeline.physical(), g.signature(), on).body);
    int b = in_loop_dict_decls(lower_dps(g.pipeline.physical(), g.signature(), off).body);
    pass = pass && a == 0;
    if (k.name == "BATAX") pass = pass && b >= 1;
    if (!detail.empty()) detail += ", ";
    detail += k.name + " " + std::to_string(a) + "/" + std::to_string(b);
  }
  return {pass, "in-loop dictionary declarations on/off: " + detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) only = argv[1];
  run("golden transformations", golden_transformations);
  run("golden BATAX", golden_batax);
  run("oracle gradient suite", oracle_suite);
  run("type-soundness fuzz", type_soundness);
  run("rewrite soundness", rewrite_soundness);
  run("scalar/tensor coherence", coherence);
  run("sparsity scaling", sparsity_scaling);
  run("DPS structural check", dps_structure);
  return failures ? 1 : 0;
}
