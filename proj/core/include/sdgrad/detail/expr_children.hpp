#pragma once

#include <type_traits>

namespace sdg {

template <typename F>
void for_each_child(const Expr& e, F&& f) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ast::Sum>) {
          f(n.range);
          f(n.body);
        } else if constexpr (std::is_same_v<T, ast::Singleton>) {
          f(n.key);
          f(n.val);
        } else if constexpr (std::is_same_v<T, ast::Lookup>) {
          f(n.dict);
          f(n.key);
        } else if constexpr (std::is_same_v<T, ast::Let>) {
          f(n.bound);
          f(n.body);
        } else if constexpr (std::is_same_v<T, ast::Not> || std::is_same_v<T, ast::Unary> ||
                             std::is_same_v<T, ast::Unique>) {
          f(n.arg);
        } else if constexpr (std::is_same_v<T, ast::If>) {
          f(n.cond);
          f(n.then_);
        } else if constexpr (std::is_same_v<T, ast::Add> || std::is_same_v<T, ast::Mul> ||
                             std::is_same_v<T, ast::Eq>) {
          f(n.lhs);
          f(n.rhs);
        } else if constexpr (std::is_same_v<T, ast::Range>) {
          f(n.start);
          f(n.end);
        } else if constexpr (std::is_same_v<T, ast::SubArray>) {
          f(n.arr);
          f(n.start);
          f(n.end);
        }
      },
      e.node);
}

}  // namespace sdg
