#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sdgrad/expr.hpp"

namespace sdg {

struct UnaryOpInfo {
  std::string name;
  std::function<double(double)> eval;
  /// Name of the derivative operation. Empty when the derivative is only
  /// expressible as a composition (see `derivative_expr`).
  std::string derivative;
};

/// Looks up an operation; nullptr when unknown.
const UnaryOpInfo* find_unary_op(const std::string& name);

/// All registered operations in a fixed order.
const std::vector<UnaryOpInfo>& unary_ops();

/// Name of the derivative of `op`. Throws Error for unknown or composite ones.
const std::string& derivative_op(const std::string& op);

/// Expression computing `op'(arg)`. For most operations this is the
/// derivative operation applied to `arg`; `neg_recip_sq` and `neg` are
/// built from other table entries and constants.
ExprPtr derivative_expr(const std::string& op, const ExprPtr& arg);

}  // namespace sdg
