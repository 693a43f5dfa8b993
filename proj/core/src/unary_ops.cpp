#include "sdgrad/unary_ops.hpp"

#include <cmath>

#include "sdgrad/error.hpp"

namespace sdg {

const std::vector<UnaryOpInfo>& unary_ops() {
  static const std::vector<UnaryOpInfo> table = {
      {"sin", [](double x) { return std::sin(x); }, "cos"},
      {"cos", [](double x) { return std::cos(x); }, "neg_sin"},
      {"neg_sin", [](double x) { return -std::sin(x); }, "neg_cos"},
      {"neg_cos", [](double x) { return -std::cos(x); }, "sin"},
      {"exp", [](double x) { return std::exp(x); }, "exp"},
      {"log", [](double x) { return std::log(x); }, "recip"},
      {"recip", [](double x) { return 1.0 / x; }, "neg_recip_sq"},
      {"neg_recip_sq", [](double x) { return -1.0 / (x * x); }, ""},
      {"neg", [](double x) { return -x; }, ""},
  };
  return table;
}

const UnaryOpInfo* find_unary_op(const std::string& name) {
  for (const auto& op : unary_ops()) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

const std::string& derivative_op(const std::string& op) {
  const UnaryOpInfo* info = find_unary_op(op);
  if (!info) throw Error("unknown unary operation '" + op + "'");
  if (info->derivative.empty()) {
    throw Error("derivative of '" + op + "' is a composition, not a single operation");
  }
  return info->derivative;
}

ExprPtr derivative_expr(const std::string& op, const ExprPtr& arg) {
  if (!find_unary_op(op)) throw Error("unknown unary operation '" + op + "'");
  if (op == "neg") return ex::real(-1.0);
  if (op == "neg_recip_sq") {
    // d/dx (-1/x^2) = 2/x^3
    auto r = ex::unary("recip", arg);
    return ex::mul(ex::real(2.0), ex::mul(r, ex::mul(r, r)));
  }
  return ex::unary(derivative_op(op), arg);
}

}  // namespace sdg
