#pragma once

#include <string>

#include "sdgrad/expr.hpp"

namespace sdg {

enum class Fragment { Logical, Physical };

struct ParseOptions {
  Fragment mode = Fragment::Logical;
  /// Accept identifiers containing the reserved character, and `x'` as a
  /// spelling of the tangent of `x`. Also accepts `?name` pattern variables.
  /// Used for fixtures written against compiler output and rewrite rules.
  bool allow_internal_names = false;
};

/// Parses one expression. Throws ParseError on syntax errors and
/// FragmentError when a physical construct appears in logical mode.
ExprPtr parse(const std::string& source, const ParseOptions& opts = {});

inline ExprPtr parse_physical(const std::string& source) {
  return parse(source, {Fragment::Physical, false});
}

/// Physical mode with internal names.
inline ExprPtr parse_internal(const std::string& source) {
  return parse(source, {Fragment::Physical, true});
}

}  // namespace sdg
