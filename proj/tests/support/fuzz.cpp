#include "fuzz.hpp"

#include <algorithm>

namespace sdg::fuzz {

TypeEnv fuzz_env() {
  return {{"x", Type::real()},      {"y", Type::real()},      {"V", Type::tensor(1)},
          {"W", Type::tensor(1)},   {"A", Type::tensor(2)},   {"B", Type::tensor(2)}};
}

ExprPtr TermGen::term(int order, int depth) {
  scope_.clear();
  return gen(order, depth);
}

ExprPtr TermGen::key() {
  std::vector<std::string> keys;
  for (const auto& s : scope_) {
    if (s.order < 0) keys.push_back(s.name);
  }
  if (!keys.empty() && pick(3) > 0) return ex::var(keys[static_cast<std::size_t>(pick(static_cast<int>(keys.size())))]);
  return ex::int_(pick(static_cast<int>(kFuzzDim)));
}

ExprPtr TermGen::leaf(int order) {
  std::vector<std::string> names;
  for (const auto& s : scope_) {
    if (s.order == order) names.push_back(s.name);
  }
  static const char* globals[3][2] = {{"x", "y"}, {"V", "W"}, {"A", "B"}};
  names.push_back(globals[order][0]);
  names.push_back(globals[order][1]);
  if (order == 0) {
    int c = pick(8);
    if (c == 0) return ex::real(0.5 + pick(4) * 0.5);
    if (c == 1) return ex::real(0.0);
  }
  if (order > 0 && pick(10) == 0) return ex::empty();
  return ex::var(names[static_cast<std::size_t>(pick(static_cast<int>(names.size())))]);
}

/// sum(<k, v> in R) body, with R of `range_order`. When `keyed` the body is
/// `{k -> ...}` around a term of order `body_order - 1`.
ExprPtr TermGen::sum_over(int body_order, int depth, int range_order, bool keyed) {
  ExprPtr range = gen(range_order, depth - 1);
  std::string k = fresh("i"), v = fresh(range_order == 1 ? "a" : "r");
  std::size_t mark = scope_.size();
  scope_.push_back({k, -1});
  scope_.push_back({v, range_order - 1});
  ExprPtr body = keyed ? ex::singleton(ex::var(k), gen(body_order - 1, depth - 1)) : gen(body_order, depth - 1);
  scope_.resize(mark);
  return ex::sum(k, v, range, body);
}

ExprPtr TermGen::gen(int order, int depth) {
  if (depth <= 0) return leaf(order);
  auto let = [&]() {
    int bo = pick(3);
    ExprPtr bound = gen(bo, depth - 1);
    std::string x = fresh("t");
    scope_.push_back({x, bo});
    ExprPtr body = gen(order, depth - 1);
    scope_.pop_back();
    return ex::let(x, bound, body);
  };
  auto cond = [&]() {
    ExprPtr c = ex::eq(key(), key());
    if (pick(3) == 0) c = ex::not_(c);
    return ex::if_(c, gen(order, depth - 1));
  };
  switch (order) {
    case 0:
      switch (pick(10)) {
        case 0: return leaf(0);
        case 1: return ex::add(gen(0, depth - 1), gen(0, depth - 1));
        case 2:
        case 3: return ex::mul(gen(0, depth - 1), gen(0, depth - 1));
        case 4: {
          static const char* ops[] = {"sin", "cos", "exp"};
          return ex::unary(ops[pick(3)], gen(0, depth - 1));
        }
        case 5: return ex::lookup(gen(1, depth - 1), key());
        case 6: return sum_over(0, depth, 1, false);
        case 7: return sum_over(0, depth, 2, false);
        case 8: return let();
        default: return cond();
      }
    case 1:
      switch (pick(10)) {
        case 0: return leaf(1);
        case 1: return ex::add(gen(1, depth - 1), gen(1, depth - 1));
        case 2: return ex::mul(gen(0, depth - 1), gen(1, depth - 1));
        case 3: return ex::mul(gen(1, depth - 1), gen(0, depth - 1));
        case 4: return ex::singleton(key(), gen(0, depth - 1));
        case 5: return sum_over(1, depth, 1, true);
        case 6: return sum_over(1, depth, 2, false);
        case 7: return ex::lookup(gen(2, depth - 1), key());
        case 8: return let();
        default: return cond();
      }
    default:
      switch (pick(9)) {
        case 0: return leaf(2);
        case 1: return ex::add(gen(2, depth - 1), gen(2, depth - 1));
        case 2: return ex::mul(gen(0, depth - 1), gen(2, depth - 1));
        case 3: return ex::mul(gen(1, depth - 1), gen(1, depth - 1));
        case 4: return ex::singleton(key(), gen(1, depth - 1));
        case 5: return sum_over(2, depth, 2, true);
        case 6: return sum_over(2, depth, 1, true);
        case 7: return let();
        default: return cond();
      }
  }
}

Env random_env(std::mt19937_64& rng, const TypeEnv& env, const std::vector<std::string>& dense) {
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::bernoulli_distribution present(0.6);
  Env out;
  for (const auto& [name, t] : env.entries()) {
    bool full = std::find(dense.begin(), dense.end(), name) != dense.end();
    auto entry = [&]() {
      double v = val(rng);
      return v == 0.0 ? 0.25 : v;
    };
    if (!t.is_dict()) {
      out.bind(name, Value::real(entry()));
    } else if (t.order() == 1) {
      Value::Map m;
      for (std::int64_t i = 0; i < kFuzzDim; ++i) {
        if (full || present(rng)) m.emplace(i, Value::real(entry()));
      }
      out.bind(name, Value::dict(std::move(m)));
    } else {
      Value::Map m;
      for (std::int64_t i = 0; i < kFuzzDim; ++i) {
        Value::Map row;
        for (std::int64_t j = 0; j < kFuzzDim; ++j) {
          if (full || present(rng)) row.emplace(j, Value::real(entry()));
        }
        if (!row.empty()) m.emplace(i, Value::dict(std::move(row)));
      }
      out.bind(name, Value::dict(std::move(m)));
    }
  }
  return out;
}

std::vector<StorageSpec> random_formats(std::mt19937_64& rng, const TypeEnv& env) {
  static const Format vectors[] = {Format::VectorDense, Format::VectorCOO};
  static const Format matrices[] = {Format::MatrixCSR, Format::MatrixCSC, Format::MatrixCOO,
                                    Format::MatrixDenseRow, Format::MatrixDenseCol};
  std::vector<StorageSpec> specs;
  for (const auto& [name, t] : env.entries()) {
    if (!t.is_dict()) {
      specs.push_back(default_spec(name, Format::Scalar));
    } else if (t.order() == 1) {
      specs.push_back(default_spec(name, vectors[std::uniform_int_distribution<int>(0, 1)(rng)]));
    } else {
      specs.push_back(default_spec(name, matrices[std::uniform_int_distribution<int>(0, 4)(rng)]));
    }
  }
  return specs;
}

Env physical_inputs(const Env& values, const TypeEnv& env, const std::vector<StorageSpec>& specs) {
  Env out;
  for (const auto& s : specs) {
    auto t = env.find(s.tensor);
    std::vector<std::int64_t> dims(static_cast<std::size_t>(t->is_dict() ? t->order() : 0), kFuzzDim);
    Env arrays = backing_arrays(from_value(*values.find(s.tensor), dims), s);
    for (const auto& [n, v] : arrays.entries()) out.bind(n, v);
  }
  return out;
}

}  // namespace sdg::fuzz
