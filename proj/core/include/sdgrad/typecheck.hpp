#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdgrad/expr.hpp"
#include "sdgrad/type.hpp"

namespace sdg {

/// Ordered variable typing context. Later bindings shadow earlier ones.
class TypeEnv {
 public:
  TypeEnv() = default;
  TypeEnv(std::initializer_list<std::pair<std::string, Type>> init) : entries_(init) {}

  void push(const std::string& name, const Type& t) { entries_.emplace_back(name, t); }
  void pop() { entries_.pop_back(); }
  std::size_t size() const { return entries_.size(); }
  void truncate(std::size_t n) { entries_.resize(n); }

  std::optional<Type> find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name).has_value(); }

  const std::vector<std::pair<std::string, Type>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Type>> entries_;
};

/// Type of `e` under `env`. Throws TypeError.
Type typecheck(const TypeEnv& env, const ExprPtr& e);

/// Like typecheck but returns nullopt instead of throwing.
std::optional<Type> try_typecheck(const TypeEnv& env, const ExprPtr& e);

/// Additive zero literal of a type: `0.0` for real, `0` for int, `{ }` for
/// dictionaries (annotated with the type).
ExprPtr zero_of(const Type& t);

}  // namespace sdg
