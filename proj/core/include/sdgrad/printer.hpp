#pragma once

#include <string>

#include "sdgrad/expr.hpp"

namespace sdg {

/// Single-line concrete syntax; `parse(pretty(e))` is structurally equal to e.
std::string pretty(const ExprPtr& e);

/// Shortest decimal text that reads back to the same double, always with a
/// fractional part or exponent so it lexes as a real.
std::string format_real(double v);

/// JSON tree with one object per node, each carrying a `kind` field.
std::string to_json(const ExprPtr& e, int indent = 2);

}  // namespace sdg
