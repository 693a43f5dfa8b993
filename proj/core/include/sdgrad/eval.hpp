#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdgrad/expr.hpp"
#include "sdgrad/value.hpp"

namespace sdg {

/// Variable bindings; later bindings shadow earlier ones.
class Env {
 public:
  Env() = default;
  Env(std::initializer_list<std::pair<std::string, Value>> init) : entries_(init) {}

  void bind(const std::string& name, Value v) { entries_.emplace_back(name, std::move(v)); }
  void pop() { entries_.pop_back(); }
  std::size_t size() const { return entries_.size(); }
  void truncate(std::size_t n) { entries_.resize(n); }

  const Value* find(const std::string& name) const;
  /// Replaces the innermost binding of `name` (or adds one).
  void set(const std::string& name, Value v);

  const std::vector<std::pair<std::string, Value>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Value>> entries_;
};

/// Operation counters of an instrumented evaluation.
struct EvalStats {
  /// Key/value pairs bound by `sum` iterations.
  std::int64_t binding_visits = 0;
  /// Entries merged into sum accumulators.
  std::int64_t accumulations = 0;
  /// Dictionary and array lookups.
  std::int64_t lookups = 0;

  std::int64_t total() const { return binding_visits + accumulations + lookups; }
};

/// Evaluates `e`. Throws EvalError on unbound variables and ill-formed values.
Value eval(const Env& env, const ExprPtr& e, EvalStats* stats = nullptr);

struct FiniteDiffOptions {
  double eps = 1e-5;
  /// When set, every index of this shape is perturbed instead of only the
  /// stored coordinates of the variable.
  std::optional<std::vector<std::int64_t>> dense_shape;
};

/// Central-difference Jacobian of `e` with respect to `wrt`, laid out as
/// (type of e) ⊗ (type of wrt).
Value finite_diff(const ExprPtr& e, const std::string& wrt, const Env& env,
                  const FiniteDiffOptions& opts = {});

}  // namespace sdg
