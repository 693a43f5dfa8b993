#include "sdgrad/pipeline.hpp"

#include <chrono>

#include "sdgrad/autodiff.hpp"
#include "sdgrad/error.hpp"
#include "sdgrad/optimizer.hpp"

namespace sdg {

namespace {

bool dense_format(Format f) {
  return f == Format::VectorDense || f == Format::MatrixDenseRow || f == Format::MatrixDenseCol;
}

class Timer {
 public:
  double lap() {
    auto now = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"input",   "pre-sat", "anf",       "ad",       "sparsity",
                                                 "post-ad", "storage", "normalize", "anf-final"};
  return names;
}

const Stage& PipelineResult::stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return s;
  }
  throw Error("unknown pipeline stage '" + name + "'");
}

PipelineResult run_pipeline(const ExprPtr& e, const TypeEnv& env, const PipelineOptions& opts) {
  PipelineResult res;
  res.logical_env = env;
  typecheck(env, e);
  if (!is_logical(e)) throw TransformError("pipeline input must be a logical term");

  std::set<std::string> dense;
  std::vector<StorageSpec> storage;
  if (opts.storage) {
    storage = resolve_storage(*opts.storage, env);
    for (const auto& s : storage) {
      if (dense_format(s.format)) dense.insert(s.tensor);
    }
  } else if (!opts.wrt.empty()) {
    dense.insert(opts.wrt);
  }
  if (opts.dense) dense = *opts.dense;

  Timer timer;
  auto push = [&](const std::string& name, ExprPtr t, std::optional<bool> sat = std::nullopt) {
    res.stages.push_back({name, std::move(t), timer.lap(), sat});
    return res.stages.back().term;
  };
  auto sat = [&](const ExprPtr& t, const TypeEnv& tenv, std::set<std::string> d) {
    SaturationOptions so = opts.saturation;
    so.dense = std::move(d);
    return saturate(t, tenv, so);
  };

  ExprPtr cur = push("input", e);
  if (opts.pre_saturate) {
    auto r = sat(cur, env, dense);
    cur = push("pre-sat", r.term, r.saturated);
  } else {
    cur = push("pre-sat", cur);
  }
  cur = push("anf", to_anf(cur));
  if (!opts.wrt.empty()) cur = expand_gradient(cur, opts.wrt, env);
  cur = push("ad", cur);
  cur = push("sparsity", inline_lets(propagate_sparsity(cur, env)));
  {
    auto r = sat(cur, env, dense);
    cur = push("post-ad", r.term, r.saturated);
  }
  res.result_type = typecheck(env, cur);

  TypeEnv tenv = env;
  if (opts.storage) {
    res.storage = storage;
    res.physical_env = physical_env(storage);
    tenv = res.physical_env;
    std::set<std::string> arrays;
    for (const auto& [name, t] : tenv.entries()) {
      if (t.is_dict()) arrays.insert(name);
    }
    ExprPtr composed = compose_storage(cur, env, storage);
    auto r = sat(composed, tenv, arrays);
    cur = push("storage", strip_unique(r.term), r.saturated);
  } else {
    res.physical_env = env;
    cur = push("storage", cur);
  }
  cur = push("normalize", fuse_loops(normalize_mult(cur, tenv)));
  push("anf-final", to_anf(cur));
  return res;
}

}  // namespace sdg
