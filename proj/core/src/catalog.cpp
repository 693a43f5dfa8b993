#include "sdgrad/catalog.hpp"

#include <algorithm>
#include <cctype>

#include "sdgrad/error.hpp"
#include "sdgrad/parser.hpp"

namespace sdg {

namespace {

std::vector<KernelEntry> build() {
  std::vector<KernelEntry> k;
  k.push_back({"BATAX",
               "sum(<i,r> in A) sum(<j,v1> in r) sum(<k,v2> in r) { j -> ((beta * v1) * v2) * X(k) }",
               "X",
               {{"A", {"n", "m"}}, {"X", {"m"}}, {"beta", {}}},
               "A = csr, X = dense",
               {{"beta", 1.5}},
               1});
  k.push_back({"SMMM",
               "sum(<i,row> in A) sum(<k,a> in row) sum(<j,b> in B(k)) a * b",
               "B",
               {{"A", {"n", "k"}}, {"B", {"k", "m"}}},
               "A = csr, B = dense",
               {},
               0});
  k.push_back({"SMVM",
               "sum(<i,row> in A) sum(<j,a> in row) a * X(j)",
               "X",
               {{"A", {"n", "m"}}, {"X", {"m"}}},
               "A = csr, X = dense",
               {},
               0});
  k.push_back({"VVA", "V1 + V2", "V1", {{"V1", {"n"}}, {"V2", {"n"}}}, "V1 = dense, V2 = coo", {}, 1});
  k.push_back({"VVD",
               "sum(<i, a> in V2) V1(i) * a",
               "V1",
               {{"V1", {"n"}}, {"V2", {"n"}}},
               "V1 = dense, V2 = coo",
               {},
               0});
  k.push_back({"VSM",
               "sum(<i, v> in V) { i -> v * s * s }",
               "s",
               {{"V", {"n"}}, {"s", {}}},
               "V = coo",
               {},
               1});
  for (const auto& e : k) {
    Type t = typecheck(e.env(), e.term());
    int order = t.is_real() ? 0 : t.order();
    if (order != e.result_order) {
      throw TransformError("catalog kernel " + e.name + " has type " + t.str());
    }
  }
  return k;
}

}  // namespace

TypeEnv KernelEntry::env() const {
  TypeEnv env;
  for (const auto& in : inputs) {
    env.push(in.name, in.shape.empty() ? Type::real() : Type::tensor(static_cast<int>(in.shape.size())));
  }
  return env;
}

ExprPtr KernelEntry::term() const { return parse(source); }

const std::vector<KernelEntry>& kernel_catalog() {
  static const std::vector<KernelEntry> catalog = build();
  return catalog;
}

const KernelEntry* find_kernel(const std::string& name) {
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  for (const auto& e : kernel_catalog()) {
    if (lower(e.name) == lower(name)) return &e;
  }
  return nullptr;
}

KernelEntry user_kernel(const std::string& name, const std::string& source, const TypeEnv& env,
                        const std::string& wrt) {
  KernelEntry k;
  k.name = name;
  k.source = source;
  k.wrt = wrt;
  std::string specs;
  for (const auto& [n, t] : env.entries()) {
    TensorDecl d{n, {}};
    if (t.is_dict()) {
      d.shape.assign(static_cast<std::size_t>(t.order()), "n");
      if (!specs.empty()) specs += ", ";
      specs += n + " = " + (n == wrt ? "dense" : t.order() == 1 ? "coo" : "csr");
    }
    k.inputs.push_back(d);
  }
  k.default_specs = specs;
  Type t = typecheck(env, k.term());
  k.result_order = t.is_dict() ? t.order() : 0;
  return k;
}

}  // namespace sdg
