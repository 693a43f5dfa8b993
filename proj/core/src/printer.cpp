#include "sdgrad/printer.hpp"

#include <charconv>
#include <cmath>

#include "json.hpp"

namespace sdg {

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

int level(const Expr& e) {
  if (e.is<ast::Sum>() || e.is<ast::Let>() || e.is<ast::If>()) return 0;
  if (e.is<ast::Eq>()) return 1;
  if (e.is<ast::Add>()) return 2;
  if (e.is<ast::Mul>()) return 3;
  if (e.is<ast::Not>()) return 4;
  return 5;
}

void print(const ExprPtr& e, int min_level, std::string& out);

void print_node(const Expr& e, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ast::Sum>) {
          out += "sum(<" + n.key + ", " + n.val + "> in ";
          print(n.range, 0, out);
          out += ") ";
          print(n.body, 0, out);
        } else if constexpr (std::is_same_v<T, ast::Singleton>) {
          out += "{ ";
          print(n.key, 0, out);
          out += " -> ";
          print(n.val, 0, out);
          out += " }";
        } else if constexpr (std::is_same_v<T, ast::EmptyDict>) {
          out += "{ }";
        } else if constexpr (std::is_same_v<T, ast::Lookup>) {
          print(n.dict, 5, out);
          out += "(";
          print(n.key, 0, out);
          out += ")";
        } else if constexpr (std::is_same_v<T, ast::Let>) {
          out += "let " + n.var + " = ";
          print(n.bound, 0, out);
          out += " in ";
          print(n.body, 0, out);
        } else if constexpr (std::is_same_v<T, ast::Var>) {
          out += n.name;
        } else if constexpr (std::is_same_v<T, ast::Not>) {
          out += "not ";
          print(n.arg, 4, out);
        } else if constexpr (std::is_same_v<T, ast::If>) {
          out += "if ";
          print(n.cond, 0, out);
          out += " then ";
          print(n.then_, 0, out);
        } else if constexpr (std::is_same_v<T, ast::Add>) {
          print(n.lhs, 2, out);
          out += " + ";
          print(n.rhs, 3, out);
        } else if constexpr (std::is_same_v<T, ast::Mul>) {
          print(n.lhs, 3, out);
          out += " * ";
          print(n.rhs, 4, out);
        } else if constexpr (std::is_same_v<T, ast::Eq>) {
          print(n.lhs, 1, out);
          out += " = ";
          print(n.rhs, 2, out);
        } else if constexpr (std::is_same_v<T, ast::ConstInt>) {
          out += std::to_string(n.value);
        } else if constexpr (std::is_same_v<T, ast::ConstReal>) {
          out += format_real(n.value);
        } else if constexpr (std::is_same_v<T, ast::ConstBool>) {
          out += n.value ? "true" : "false";
        } else if constexpr (std::is_same_v<T, ast::Unary>) {
          out += n.op + "(";
          print(n.arg, 0, out);
          out += ")";
        } else if constexpr (std::is_same_v<T, ast::Range>) {
          out += "(";
          print(n.start, 0, out);
          out += ":";
          print(n.end, 0, out);
          out += ")";
        } else if constexpr (std::is_same_v<T, ast::SubArray>) {
          print(n.arr, 5, out);
          out += "(";
          print(n.start, 0, out);
          out += ":";
          print(n.end, 0, out);
          out += ")";
        } else if constexpr (std::is_same_v<T, ast::Unique>) {
          out += "unique(";
          print(n.arg, 0, out);
          out += ")";
        }
      },
      e.node);
}

void print(const ExprPtr& e, int min_level, std::string& out) {
  if (level(*e) < min_level) {
    out += "(";
    print_node(*e, out);
    out += ")";
  } else {
    print_node(*e, out);
  }
}

nlohmann::json json_of(const ExprPtr& e) {
  nlohmann::json j;
  j["kind"] = e->kind_name();
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ast::Sum>) {
          j["key"] = n.key;
          j["val"] = n.val;
          j["range"] = json_of(n.range);
          j["body"] = json_of(n.body);
        } else if constexpr (std::is_same_v<T, ast::Singleton>) {
          j["key"] = json_of(n.key);
          j["val"] = json_of(n.val);
        } else if constexpr (std::is_same_v<T, ast::EmptyDict>) {
          if (n.type) j["type"] = n.type->str();
        } else if constexpr (std::is_same_v<T, ast::Lookup>) {
          j["dict"] = json_of(n.dict);
          j["key"] = json_of(n.key);
        } else if constexpr (std::is_same_v<T, ast::Let>) {
          j["var"] = n.var;
          j["bound"] = json_of(n.bound);
          j["body"] = json_of(n.body);
        } else if constexpr (std::is_same_v<T, ast::Var>) {
          j["name"] = n.name;
        } else if constexpr (std::is_same_v<T, ast::Not> || std::is_same_v<T, ast::Unique>) {
          j["arg"] = json_of(n.arg);
        } else if constexpr (std::is_same_v<T, ast::If>) {
          j["cond"] = json_of(n.cond);
          j["then"] = json_of(n.then_);
        } else if constexpr (std::is_same_v<T, ast::Add> || std::is_same_v<T, ast::Mul> ||
                             std::is_same_v<T, ast::Eq>) {
          j["lhs"] = json_of(n.lhs);
          j["rhs"] = json_of(n.rhs);
        } else if constexpr (std::is_same_v<T, ast::ConstInt> || std::is_same_v<T, ast::ConstBool>) {
          j["value"] = n.value;
        } else if constexpr (std::is_same_v<T, ast::ConstReal>) {
          if (std::isfinite(n.value)) {
            j["value"] = n.value;
          } else {
            j["value"] = format_real(n.value);
          }
        } else if constexpr (std::is_same_v<T, ast::Unary>) {
          j["op"] = n.op;
          j["arg"] = json_of(n.arg);
        } else if constexpr (std::is_same_v<T, ast::Range>) {
          j["start"] = json_of(n.start);
          j["end"] = json_of(n.end);
        } else if constexpr (std::is_same_v<T, ast::SubArray>) {
          j["arr"] = json_of(n.arr);
          j["start"] = json_of(n.start);
          j["end"] = json_of(n.end);
        }
      },
      e->node);
  return j;
}

}  // namespace

std::string pretty(const ExprPtr& e) {
  std::string out;
  print(e, 0, out);
  return out;
}

std::string to_json(const ExprPtr& e, int indent) { return json_of(e).dump(indent); }

}  // namespace sdg
