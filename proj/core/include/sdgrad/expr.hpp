#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include "sdgrad/type.hpp"

namespace sdg {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

namespace ast {

/// `sum(<key, val> in range) body`
struct Sum {
  std::string key;
  std::string val;
  ExprPtr range;
  ExprPtr body;
};
/// `{ key -> val }`
struct Singleton {
  ExprPtr key;
  ExprPtr val;
};
/// `{ }`; the annotation is filled in by transformations that know the type.
struct EmptyDict {
  std::optional<Type> type;
};
/// `dict(key)`
struct Lookup {
  ExprPtr dict;
  ExprPtr key;
};
struct Let {
  std::string var;
  ExprPtr bound;
  ExprPtr body;
};
struct Var {
  std::string name;
};
struct Not {
  ExprPtr arg;
};
/// `if cond then then_`: yields the zero of the branch type when false.
struct If {
  ExprPtr cond;
  ExprPtr then_;
};
struct Add {
  ExprPtr lhs;
  ExprPtr rhs;
};
struct Mul {
  ExprPtr lhs;
  ExprPtr rhs;
};
struct ConstInt {
  std::int64_t value;
};
struct ConstReal {
  double value;
};
struct ConstBool {
  bool value;
};
struct Unary {
  std::string op;
  ExprPtr arg;
};
struct Eq {
  ExprPtr lhs;
  ExprPtr rhs;
};
/// `(start:end)`, physical only.
struct Range {
  ExprPtr start;
  ExprPtr end;
};
/// `arr(start:end)`, physical only.
struct SubArray {
  ExprPtr arr;
  ExprPtr start;
  ExprPtr end;
};
/// `unique(e)`: promise that keys produced through `e` are pairwise distinct.
struct Unique {
  ExprPtr arg;
};

}  // namespace ast

using ExprNode =
    std::variant<ast::Sum, ast::Singleton, ast::EmptyDict, ast::Lookup, ast::Let, ast::Var,
                 ast::Not, ast::If, ast::Add, ast::Mul, ast::ConstInt, ast::ConstReal,
                 ast::ConstBool, ast::Unary, ast::Eq, ast::Range, ast::SubArray, ast::Unique>;

struct Expr {
  ExprNode node;

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }

  /// Name of the production, e.g. "Sum", "Lookup".
  const char* kind_name() const;
};

/// Node constructors.
namespace ex {
ExprPtr sum(std::string key, std::string val, ExprPtr range, ExprPtr body);
ExprPtr singleton(ExprPtr key, ExprPtr val);
ExprPtr empty(std::optional<Type> type = std::nullopt);
ExprPtr lookup(ExprPtr dict, ExprPtr key);
ExprPtr let(std::string var, ExprPtr bound, ExprPtr body);
ExprPtr var(std::string name);
ExprPtr not_(ExprPtr arg);
ExprPtr if_(ExprPtr cond, ExprPtr then_);
ExprPtr add(ExprPtr lhs, ExprPtr rhs);
ExprPtr mul(ExprPtr lhs, ExprPtr rhs);
ExprPtr int_(std::int64_t value);
ExprPtr real(double value);
ExprPtr bool_(bool value);
ExprPtr unary(std::string op, ExprPtr arg);
ExprPtr eq(ExprPtr lhs, ExprPtr rhs);
ExprPtr range(ExprPtr start, ExprPtr end);
ExprPtr subarray(ExprPtr arr, ExprPtr start, ExprPtr end);
ExprPtr unique(ExprPtr arg);
}  // namespace ex

/// Structural equality. Empty-dictionary annotations are ignored and reals
/// compare bitwise-equal (so -0.0 and 0.0 differ, NaN equals NaN).
bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

/// Equality up to consistent renaming of bound variables.
bool alpha_equal(const ExprPtr& a, const ExprPtr& b);

std::set<std::string> free_vars(const ExprPtr& e);
bool occurs_free(const ExprPtr& e, const std::string& name);
/// Number of free occurrences of `name`.
int count_free(const ExprPtr& e, const std::string& name);
/// Every identifier mentioned anywhere (bound or free).
std::set<std::string> all_names(const ExprPtr& e);

/// Node count.
std::size_t expr_size(const ExprPtr& e);

/// True when the tree contains no Range, SubArray or Unique node.
bool is_logical(const ExprPtr& e);

/// Removes every `unique(...)` annotation.
ExprPtr strip_unique(const ExprPtr& e);

/// True for variables and numeric/boolean constants.
bool is_atom(const ExprPtr& e);

/// Zero literal of the additive monoid: `0.0` or `{ }`.
bool is_zero_literal(const ExprPtr& e);

/// Children of a node in evaluation order.
template <typename F>
void for_each_child(const Expr& e, F&& f);

/// Rebuilds `e` with every direct child replaced by `f(child)`. Returns `e`
/// itself when no child changed.
ExprPtr map_children(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& f);

/// Capture-avoiding substitution of free occurrences of `name`.
ExprPtr substitute(const ExprPtr& e, const std::string& name, const ExprPtr& repl);

/// Simultaneous capture-avoiding substitution.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& repl);

/// Renames every binder so that no two binders share a name and no binder
/// shadows a free variable. Fresh names are `base$N`.
ExprPtr rename_binders_unique(const ExprPtr& e);

}  // namespace sdg

#include "sdgrad/detail/expr_children.hpp"
