#include "sdgrad/backend.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "sdgrad/error.hpp"
#include "sdgrad/names.hpp"
#include "sdgrad/printer.hpp"

namespace sdg {

namespace {

bool is_scalar(const Type& t) { return t.is_real() || t.is_index() || t.is_bool(); }

ExprPtr zero_value(const Type& t) {
  if (t.is_int()) return ex::int_(0);
  if (t.is_bool()) return ex::bool_(false);
  return ex::real(0.0);
}

bool is_zero_constant(const ExprPtr& e) {
  if (e->is<ast::EmptyDict>()) return true;
  if (const auto* r = e->as<ast::ConstReal>()) return r->value == 0.0;
  return false;
}

bool is_one(const ExprPtr& e) {
  const auto* r = e->as<ast::ConstReal>();
  return r && r->value == 1.0;
}

class Lowerer {
 public:
  Lowerer(const KernelSignature& sig, const LowerOptions& opts, const ExprPtr& e)
      : opts_(opts), names_(all_names(e)) {
    for (const auto& p : sig.params) {
      if (p.kind != Param::Kind::Result) env_.push(p.name, p.type);
      names_.reserve(p.name);
    }
  }

  ir::Block run(const ExprPtr& e, const std::string& result) {
    ir::Block b;
    lower(e, {result, {}}, b, true);
    return b;
  }

 private:
  struct Dest {
    std::string name;
    std::vector<ExprPtr> path;
  };

  Type type_of(const ExprPtr& e) {
    try {
      return typecheck(env_, e);
    } catch (const TypeError& err) {
      throw TransformError(std::string("cannot lower: ") + err.what());
    }
  }

  std::string binder(const std::string& name, const char* base) {
    return name == "_" ? names_.fresh(base) : name;
  }

  void push(ir::Block& b, auto node) { b.push_back(ir::Stmt{std::move(node)}); }

  void lower(const ExprPtr& e, const Dest& d, ir::Block& b, bool direct) {
    if (is_zero_constant(e)) return;
    if (const auto* s = e->as<ast::Sum>()) {
      Type t = type_of(e);
      if (!opts_.dps && !direct && depth_ > 0 && t.is_dict()) {
        std::string tmp = names_.fresh("tmp");
        push(b, ir::DeclDict{tmp, t});
        env_.push(tmp, t);
        lower(e, {tmp, {}}, b, true);
        push(b, ir::AccumAdd{d.name, d.path, ex::var(tmp)});
        return;
      }
      sum(*s, d, b);
      return;
    }
    if (const auto* s = e->as<ast::Singleton>()) {
      Dest inner = d;
      inner.path.push_back(scalar(s->key, b));
      lower(s->val, inner, b, false);
      return;
    }
    if (const auto* l = e->as<ast::Let>()) {
      declare(l->var, l->bound, b);
      lower(l->body, d, b, direct);
      return;
    }
    if (const auto* a = e->as<ast::Add>()) {
      lower(a->lhs, d, b, direct);
      lower(a->rhs, d, b, direct);
      return;
    }
    if (const auto* i = e->as<ast::If>()) {
      ir::IfThen node{scalar(i->cond, b), {}};
      std::size_t mark = env_.size();
      lower(i->then_, d, node.body, direct);
      env_.truncate(mark);
      push(b, std::move(node));
      return;
    }
    if (const auto* u = e->as<ast::Unique>()) {
      lower(u->arg, d, b, direct);
      return;
    }
    ExprPtr v = scalar(e, b);
    if (!is_zero_constant(v)) push(b, ir::AccumAdd{d.name, d.path, v});
  }

  void sum(const ast::Sum& s, const Dest& d, ir::Block& b) {
    Type rt = type_of(s.range);
    Type vt = rt.is_dict() ? rt.value() : Type::unknown();
    bool range = s.range->is<ast::Range>();
    std::string key = binder(range && s.key == "_" ? s.val : s.key, "i");
    std::string val = s.val;
    ir::Block body;
    std::size_t mark = env_.size();
    auto enter = [&]() {
      env_.push(key, Type::integer());
      env_.push(val, vt);
      ++depth_;
      ExprPtr inner = s.body;
      if (key != s.key) inner = substitute(inner, s.key, ex::var(key));
      lower(inner, d, body, false);
      --depth_;
      env_.truncate(mark);
    };
    if (const auto* r = s.range->as<ast::Range>()) {
      ExprPtr lo = scalar(r->start, b), hi = scalar(r->end, b);
      if (val == "_") val = key;
      enter();
      push(b, ir::ForRange{key, val, lo, hi, nullptr, std::move(body)});
      return;
    }
    if (const auto* a = s.range->as<ast::SubArray>()) {
      ExprPtr arr = dict_ref(a->arr, b);
      ExprPtr lo = scalar(a->start, b), hi = scalar(a->end, b);
      val = binder(val, "v");
      enter();
      push(b, ir::ForRange{key, val, lo, hi, arr, std::move(body)});
      return;
    }
    ExprPtr dict = dict_ref(s.range, b);
    val = binder(val, "v");
    enter();
    push(b, ir::ForEach{key, val, dict, rt, std::move(body)});
  }

  void declare(const std::string& x, const ExprPtr& bound, ir::Block& b) {
    Type t = type_of(bound);
    if (is_scalar(t)) {
      ExprPtr init = scalar(bound, b);
      push(b, ir::DeclScalar{x, t, init});
    } else {
      push(b, ir::DeclDict{x, t});
      lower(bound, {x, {}}, b, true);
    }
    env_.push(x, t);
  }

  /// Variable or lookup chain naming a dictionary; other terms are built
  /// into a temporary first.
  ExprPtr dict_ref(const ExprPtr& e, ir::Block& b) {
    if (e->is<ast::Var>()) return e;
    if (const auto* l = e->as<ast::Lookup>()) {
      if (l->dict->is<ast::Var>() || l->dict->is<ast::Lookup>()) {
        return ex::lookup(dict_ref(l->dict, b), scalar(l->key, b));
      }
    }
    if (const auto* u = e->as<ast::Unique>()) return dict_ref(u->arg, b);
    if (e->is<ast::Range>() || e->is<ast::SubArray>()) {
      throw TransformError("cannot lower a range outside a loop: " + pretty(e));
    }
    return materialize(e, b);
  }

  ExprPtr materialize(const ExprPtr& e, ir::Block& b) {
    Type t = type_of(e);
    std::string tmp = names_.fresh(t.is_dict() ? "tmp" : "acc");
    if (t.is_dict()) {
      push(b, ir::DeclDict{tmp, t});
    } else {
      push(b, ir::DeclScalar{tmp, t, zero_value(t)});
    }
    env_.push(tmp, t);
    lower(e, {tmp, {}}, b, true);
    return ex::var(tmp);
  }

  /// Side-effect-free expression for `e`; loops and lets it needs are
  /// emitted into `b` first.
  ExprPtr scalar(const ExprPtr& e, ir::Block& b) {
    if (e->is<ast::Var>() || e->is<ast::ConstInt>() || e->is<ast::ConstReal>() ||
        e->is<ast::ConstBool>()) {
      return e;
    }
    if (const auto* l = e->as<ast::Lookup>()) {
      return ex::lookup(dict_ref(l->dict, b), scalar(l->key, b));
    }
    if (const auto* l = e->as<ast::Let>()) {
      declare(l->var, l->bound, b);
      return scalar(l->body, b);
    }
    if (const auto* u = e->as<ast::Unique>()) return scalar(u->arg, b);
    Type t = type_of(e);
    if (t.is_dict()) {
      if (e->is<ast::Mul>()) {
        throw TransformError("residual tensor product: " + pretty(e));
      }
      return materialize(e, b);
    }
    if (const auto* m = e->as<ast::Mul>()) {
      ExprPtr l = scalar(m->lhs, b), r = scalar(m->rhs, b);
      if (is_one(r)) return l;
      if (is_one(l)) return r;
      return ex::mul(l, r);
    }
    if (const auto* a = e->as<ast::Add>()) return ex::add(scalar(a->lhs, b), scalar(a->rhs, b));
    if (const auto* q = e->as<ast::Eq>()) return ex::eq(scalar(q->lhs, b), scalar(q->rhs, b));
    if (const auto* n = e->as<ast::Not>()) return ex::not_(scalar(n->arg, b));
    if (const auto* u = e->as<ast::Unary>()) return ex::unary(u->op, scalar(u->arg, b));
    if (const auto* i = e->as<ast::If>()) return ex::if_(scalar(i->cond, b), scalar(i->then_, b));
    if (e->is<ast::EmptyDict>()) return zero_value(t);
    if (e->is<ast::Sum>()) return materialize(e, b);
    throw TransformError("cannot lower: " + pretty(e));
  }

  LowerOptions opts_;
  TypeEnv env_;
  NameGen names_;
  int depth_ = 0;
};

int count_decls(const ir::Block& b, int depth) {
  int n = 0;
  for (const auto& s : b) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ir::ForRange> || std::is_same_v<T, ir::ForEach>) {
            n += count_decls(x.body, depth + 1);
          } else if constexpr (std::is_same_v<T, ir::IfThen>) {
            n += count_decls(x.body, depth);
          } else if constexpr (std::is_same_v<T, ir::DeclDict>) {
            if (depth > 0) ++n;
          }
        },
        s.node);
  }
  return n;
}

// ---- names -----------------------------------------------------------------

void collect_names(const ir::Block& b, std::set<std::string>& out) {
  auto expr = [&](const ExprPtr& e) {
    if (e) {
      auto n = all_names(e);
      out.insert(n.begin(), n.end());
    }
  };
  for (const auto& s : b) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ir::ForRange>) {
            out.insert(x.key);
            out.insert(x.val);
            expr(x.lo);
            expr(x.hi);
            expr(x.arr);
            collect_names(x.body, out);
          } else if constexpr (std::is_same_v<T, ir::ForEach>) {
            out.insert(x.key);
            out.insert(x.val);
            expr(x.dict);
            collect_names(x.body, out);
          } else if constexpr (std::is_same_v<T, ir::DeclDict>) {
            out.insert(x.name);
          } else if constexpr (std::is_same_v<T, ir::DeclScalar>) {
            out.insert(x.name);
            expr(x.init);
          } else if constexpr (std::is_same_v<T, ir::AccumAdd>) {
            out.insert(x.dest);
            for (const auto& p : x.path) expr(p);
            expr(x.value);
          } else if constexpr (std::is_same_v<T, ir::IfThen>) {
            expr(x.cond);
            collect_names(x.body, out);
          }
        },
        s.node);
  }
}

bool uses(const ir::Block& b, const std::string& name) {
  std::set<std::string> n;
  collect_names(b, n);
  return n.count(name) > 0;
}

const std::set<std::string>& cpp_keywords() {
  static const std::set<std::string> k = {
      "auto",   "bool",  "break",  "case",   "char",     "const", "continue", "default",
      "delete", "do",    "double", "else",   "enum",     "float", "for",      "goto",
      "if",     "int",   "long",   "new",    "return",   "short", "signed",   "sizeof",
      "static", "struct", "switch", "this",  "unsigned", "void",  "while",    "std",
      "main",   "size_t"};
  return k;
}

/// C++ identifiers for IR names: the reserved character becomes `_`, and
/// clashes get a numeric suffix.
std::map<std::string, std::string> cpp_names(const Kernel& k) {
  std::set<std::string> all;
  for (const auto& p : k.sig.params) all.insert(p.name);
  collect_names(k.body, all);
  std::map<std::string, std::string> out;
  std::set<std::string> taken;
  for (const auto& n : all) {
    if (n.find(kReservedChar) == std::string::npos && !cpp_keywords().count(n)) {
      out[n] = n;
      taken.insert(n);
    }
  }
  for (const auto& n : all) {
    if (out.count(n)) continue;
    std::string base = n;
    std::replace(base.begin(), base.end(), kReservedChar, '_');
    if (cpp_keywords().count(base)) base += "_";
    std::string c = base_name(n);
    if (c.empty() || cpp_keywords().count(c) || all.count(c)) c = base;
    for (int i = 1; taken.count(c); ++i) c = base + "_" + std::to_string(i);
    out[n] = c;
    taken.insert(c);
  }
  return out;
}

// ---- emission --------------------------------------------------------------

class Emitter {
 public:
  Emitter(const Kernel& k) : k_(k), names_(cpp_names(k)) {}

  std::string function() {
    std::ostringstream o;
    o << "void " << k_.sig.name << "(\n";
    std::string group;
    const auto& params = k_.sig.params;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Param& p = params[i];
      std::string g = comment(p);
      if (g != group) {
        if (i > 0) o << "\n";
        o << "  // " << g << "\n  ";
        group = g;
      } else {
        o << " ";
      }
      o << param_decl(p) << (i + 1 < params.size() ? "," : ") {\n");
    }
    block(o, k_.body, 1);
    o << "}\n";
    return o.str();
  }

  std::string main_function() {
    std::ostringstream o;
    o << "int main(int argc, char** argv) {\n";
    o << "  if(argc < 2) {\n";
    o << "    std::fprintf(stderr, \"usage: %s <inputs.sdg1>\\n\", argv[0]);\n";
    o << "    return 1;\n";
    o << "  }\n";
    o << "  sdg_rt::dump in(argv[1]);\n";
    std::vector<std::string> args;
    for (const auto& p : k_.sig.params) {
      std::string n = name(p.name);
      args.push_back(n);
      switch (p.kind) {
        case Param::Kind::Scalar:
          o << "  " << (p.type.is_int() ? "size_t " : "double ") << n << " = in."
            << (p.type.is_int() ? "index" : "real") << "(\"" << p.name << "\");\n";
          break;
        case Param::Kind::Length:
          o << "  size_t " << n << " = in.index(\"" << p.name << "\");\n";
          break;
        case Param::Kind::IndexArray:
          o << "  " << cpp_type(p.type) << " " << n << " = in.index_array(\"" << p.name << "\");\n";
          break;
        case Param::Kind::ValueArray:
          o << "  " << cpp_type(p.type) << " " << n << " = in.real_array(\"" << p.name << "\");\n";
          break;
        case Param::Kind::Result:
          if (p.type.is_dict()) {
            o << "  " << cpp_type(p.type) << " " << n << ";\n";
          } else {
            o << "  " << cpp_type(p.type) << " " << n << " = 0;\n";
          }
          break;
      }
    }
    o << "  " << k_.sig.name << "(";
    for (std::size_t i = 0; i < args.size(); ++i) o << (i ? ", " : "") << args[i];
    o << ");\n";
    o << "  sdg_rt::print(std::cout, " << name(k_.sig.result().name) << ");\n";
    o << "  std::cout << \"\\n\";\n";
    o << "  return 0;\n";
    o << "}\n";
    return o.str();
  }

 private:
  static std::string comment(const Param& p) {
    switch (p.kind) {
      case Param::Kind::Result: return p.type.is_dict() ? "destination dictionary" : "destination scalar";
      case Param::Kind::Scalar: return "input scalar";
      default: break;
    }
    std::string what;
    switch (p.format) {
      case Format::VectorDense: what = "the dense vector "; break;
      case Format::VectorCOO: what = "the sparse vector "; break;
      case Format::MatrixCSR: what = "the CSR matrix "; break;
      case Format::MatrixCSC: what = "the CSC matrix "; break;
      case Format::MatrixCOO: what = "the COO matrix "; break;
      case Format::MatrixDenseRow: what = "the dense row-major matrix "; break;
      case Format::MatrixDenseCol: what = "the dense column-major matrix "; break;
      case Format::Scalar: what = "the scalar "; break;
    }
    return "inputs for " + what + p.tensor;
  }

  std::string param_decl(const Param& p) {
    std::string n = name(p.name);
    switch (p.kind) {
      case Param::Kind::Scalar:
        return p.type.is_int() ? "size_t " + n : cpp_type(p.type) + "& " + n;
      case Param::Kind::Length: return "size_t " + n;
      default: return cpp_type(p.type) + "& " + n;
    }
  }

  std::string name(const std::string& n) const {
    auto it = names_.find(n);
    return it == names_.end() ? n : it->second;
  }

  static void indent(std::ostringstream& o, int depth) {
    for (int i = 0; i < depth; ++i) o << "  ";
  }

  void block(std::ostringstream& o, const ir::Block& b, int depth) {
    for (const auto& s : b) {
      std::visit([&](const auto& x) { stmt(o, x, depth); }, s.node);
    }
  }

  void stmt(std::ostringstream& o, const ir::ForRange& s, int d) {
    std::string k = name(s.key);
    indent(o, d);
    o << "for(size_t " << k << " = " << expr(s.lo, false) << "; " << k << " < " << expr(s.hi, false)
      << "; " << k << "++) {\n";
    if (s.val != s.key && uses(s.body, s.val)) {
      indent(o, d + 1);
      if (s.arr) {
        o << elem_type(s.arr) << " " << name(s.val) << " = " << expr(s.arr, true) << "[" << k << "];\n";
      } else {
        o << "size_t " << name(s.val) << " = " << k << ";\n";
      }
    }
    block(o, s.body, d + 1);
    indent(o, d);
    o << "}\n";
  }

  void stmt(std::ostringstream& o, const ir::ForEach& s, int d) {
    indent(o, d);
    const Type& t = s.dict_type;
    bool array = t.is_dict() && t.key().kind() == Type::Kind::DenseInt;
    std::string k = name(s.key);
    if (array) {
      o << "for(size_t " << k << " = 0; " << k << " < " << expr(s.dict, true) << ".size(); " << k
        << "++) {\n";
      if (uses(s.body, s.val)) {
        indent(o, d + 1);
        o << cpp_type(t.value()) << " " << name(s.val) << " = " << expr(s.dict, true) << "[" << k
          << "];\n";
      }
    } else {
      std::string kv = "kv_" + k;
      o << "for(auto& " << kv << " : " << expr(s.dict, true) << ") {\n";
      if (uses(s.body, s.key)) {
        indent(o, d + 1);
        o << "size_t " << k << " = " << kv << ".first;\n";
      }
      if (uses(s.body, s.val)) {
        indent(o, d + 1);
        if (t.is_dict() && t.value().is_dict()) {
          o << "auto& " << name(s.val) << " = " << kv << ".second;\n";
        } else {
          o << cpp_type(t.is_dict() ? t.value() : Type::real()) << " " << name(s.val) << " = " << kv
            << ".second;\n";
        }
      }
    }
    block(o, s.body, d + 1);
    indent(o, d);
    o << "}\n";
  }

  void stmt(std::ostringstream& o, const ir::DeclDict& s, int d) {
    indent(o, d);
    o << cpp_type(s.type) << " " << name(s.name) << ";\n";
  }

  void stmt(std::ostringstream& o, const ir::DeclScalar& s, int d) {
    indent(o, d);
    o << cpp_type(s.type) << " " << name(s.name) << " = " << expr(s.init, false) << ";\n";
  }

  void stmt(std::ostringstream& o, const ir::AccumAdd& s, int d) {
    indent(o, d);
    o << name(s.dest);
    for (const auto& p : s.path) o << "[" << expr(p, true) << "]";
    o << " += " << expr(s.value, false) << ";\n";
  }

  void stmt(std::ostringstream& o, const ir::IfThen& s, int d) {
    indent(o, d);
    o << "if(" << expr(s.cond, false) << ") {\n";
    block(o, s.body, d + 1);
    indent(o, d);
    o << "}\n";
  }

  std::string elem_type(const ExprPtr& arr) {
    if (const auto* v = arr->as<ast::Var>()) {
      for (const auto& p : k_.sig.params) {
        if (p.name == v->name && p.type.is_dict()) return cpp_type(p.type.value());
      }
    }
    return "auto";
  }

  /// `nested` wraps binary operators in parentheses.
  std::string expr(const ExprPtr& e, bool nested) {
    auto wrap = [&](const std::string& s) { return nested ? "(" + s + ")" : s; };
    if (const auto* v = e->as<ast::Var>()) return name(v->name);
    if (const auto* c = e->as<ast::ConstReal>()) return format_real(c->value);
    if (const auto* c = e->as<ast::ConstInt>()) return std::to_string(c->value);
    if (const auto* c = e->as<ast::ConstBool>()) return c->value ? "true" : "false";
    if (const auto* l = e->as<ast::Lookup>()) return expr(l->dict, true) + "[" + expr(l->key, true) + "]";
    if (const auto* a = e->as<ast::Add>()) return wrap(expr(a->lhs, true) + " + " + expr(a->rhs, true));
    if (const auto* m = e->as<ast::Mul>()) return wrap(expr(m->lhs, true) + " * " + expr(m->rhs, true));
    if (const auto* q = e->as<ast::Eq>()) return wrap(expr(q->lhs, true) + " == " + expr(q->rhs, true));
    if (const auto* n = e->as<ast::Not>()) return "!" + expr(n->arg, true);
    if (const auto* i = e->as<ast::If>()) {
      return "(" + expr(i->cond, true) + " ? " + expr(i->then_, true) + " : 0)";
    }
    if (const auto* u = e->as<ast::Unary>()) {
      std::string a = expr(u->arg, false);
      if (u->op == "neg_sin") return "(-std::sin(" + a + "))";
      if (u->op == "neg_cos") return "(-std::cos(" + a + "))";
      if (u->op == "recip") return "(1.0 / " + expr(u->arg, true) + ")";
      if (u->op == "neg_recip_sq") {
        std::string x = expr(u->arg, true);
        return "(-1.0 / (" + x + " * " + x + "))";
      }
      if (u->op == "neg") return "(-" + expr(u->arg, true) + ")";
      return "std::" + u->op + "(" + a + ")";
    }
    throw TransformError("cannot emit " + pretty(e));
  }

  const Kernel& k_;
  std::map<std::string, std::string> names_;
};

// ---- interpretation --------------------------------------------------------

class Machine {
 public:
  explicit Machine(const Env& inputs) {
    for (const auto& [n, v] : inputs.entries()) frame_.emplace_back(n, v);
  }

  void bind(const std::string& n, Value v) { frame_.emplace_back(n, std::move(v)); }

  Value& slot(const std::string& n) {
    for (auto it = frame_.rbegin(); it != frame_.rend(); ++it) {
      if (it->first == n) return it->second;
    }
    throw EvalError("unbound variable '" + n + "'");
  }

  void block(const ir::Block& b) {
    std::size_t mark = frame_.size();
    for (const auto& s : b) std::visit([&](const auto& x) { stmt(x); }, s.node);
    frame_.resize(mark);
  }

 private:
  Value eval_expr(const ExprPtr& e) {
    if (const auto* v = e->as<ast::Var>()) return slot(v->name);
    Env env;
    auto n = free_vars(e);
    for (const auto& name : n) env.bind(name, slot(name));
    return eval(env, e);
  }

  void stmt(const ir::ForRange& s) {
    std::int64_t lo = eval_expr(s.lo).as_index();
    std::int64_t hi = eval_expr(s.hi).as_index();
    Value arr = s.arr ? eval_expr(s.arr) : Value();
    for (std::int64_t p = lo; p < hi; ++p) {
      std::size_t mark = frame_.size();
      bind(s.key, Value::integer(p));
      if (s.val != s.key) bind(s.val, s.arr ? arr.at(p) : Value::integer(p));
      block(s.body);
      frame_.resize(mark);
    }
  }

  void stmt(const ir::ForEach& s) {
    Value d = eval_expr(s.dict);
    d.for_each([&](std::int64_t k, const Value& v) {
      std::size_t mark = frame_.size();
      bind(s.key, Value::integer(k));
      bind(s.val, v);
      block(s.body);
      frame_.resize(mark);
    });
  }

  void stmt(const ir::DeclDict& s) { bind(s.name, Value()); }

  void stmt(const ir::DeclScalar& s) { bind(s.name, eval_expr(s.init)); }

  void stmt(const ir::AccumAdd& s) {
    std::vector<std::int64_t> path;
    for (const auto& p : s.path) path.push_back(eval_expr(p).as_index());
    Value v = eval_expr(s.value);
    Value& dst = slot(s.dest);
    if (path.empty()) {
      add_into(dst, std::move(v));
    } else {
      add_into(dst, singleton_path(path, v));
    }
  }

  void stmt(const ir::IfThen& s) {
    if (eval_expr(s.cond).as_bool()) block(s.body);
  }

  std::vector<std::pair<std::string, Value>> frame_;
};

void dump_block(std::ostringstream& o, const ir::Block& b, int d) {
  auto ind = [&](int n) {
    for (int i = 0; i < n; ++i) o << "  ";
  };
  for (const auto& s : b) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          ind(d);
          if constexpr (std::is_same_v<T, ir::ForRange>) {
            o << "for " << x.key << " in [" << pretty(x.lo) << ", " << pretty(x.hi) << ")";
            if (x.arr) o << " with " << x.val << " = " << pretty(x.arr) << "[" << x.key << "]";
            o << "\n";
            dump_block(o, x.body, d + 1);
          } else if constexpr (std::is_same_v<T, ir::ForEach>) {
            o << "foreach <" << x.key << ", " << x.val << "> in " << pretty(x.dict) << "\n";
            dump_block(o, x.body, d + 1);
          } else if constexpr (std::is_same_v<T, ir::DeclDict>) {
            o << "dict " << x.name << " : " << x.type.str() << "\n";
          } else if constexpr (std::is_same_v<T, ir::DeclScalar>) {
            o << "scalar " << x.name << " : " << x.type.str() << " = " << pretty(x.init) << "\n";
          } else if constexpr (std::is_same_v<T, ir::AccumAdd>) {
            o << x.dest;
            for (const auto& p : x.path) o << "[" << pretty(p) << "]";
            o << " += " << pretty(x.value) << "\n";
          } else if constexpr (std::is_same_v<T, ir::IfThen>) {
            o << "if " << pretty(x.cond) << "\n";
            dump_block(o, x.body, d + 1);
          }
        },
        s.node);
  }
}

}  // namespace

KernelSignature make_signature(const std::string& name, const std::vector<StorageSpec>& specs,
                               const TypeEnv& env, const Type& result_type) {
  KernelSignature sig;
  sig.name = name;
  std::set<std::string> covered;
  for (const auto& s : specs) {
    covered.insert(s.tensor);
    std::vector<Param> lengths;
    for (const auto& [role, arr] : s.arrays) {
      Param p;
      p.name = arr;
      p.type = role_type(s.format, role);
      p.tensor = s.tensor;
      p.format = s.format;
      covered.insert(arr);
      if (s.format == Format::Scalar) {
        p.kind = Param::Kind::Scalar;
      } else if (p.type.is_int()) {
        p.kind = Param::Kind::Length;
        lengths.push_back(p);
        continue;
      } else {
        p.kind = p.type.value().is_int() ? Param::Kind::IndexArray : Param::Kind::ValueArray;
      }
      sig.params.push_back(p);
    }
    for (auto& p : lengths) sig.params.push_back(p);
  }
  for (const auto& [n, t] : env.entries()) {
    if (covered.count(n)) continue;
    Param p;
    p.name = n;
    p.type = t;
    p.tensor = n;
    if (t.is_dict() && t.key().kind() == Type::Kind::DenseInt) {
      p.kind = t.value().is_int() ? Param::Kind::IndexArray : Param::Kind::ValueArray;
    } else if (t.is_dict()) {
      throw TransformError("input '" + n + "' has no storage format");
    }
    sig.params.push_back(p);
  }
  Param r;
  r.name = "result";
  r.type = result_type;
  r.kind = Param::Kind::Result;
  sig.params.push_back(r);
  return sig;
}

Kernel lower_dps(const ExprPtr& e, const KernelSignature& sig, const LowerOptions& opts) {
  ExprPtr term = rename_binders_unique(e);
  Kernel k;
  k.sig = sig;
  for (const auto& v : free_vars(term)) {
    bool found = false;
    for (const auto& p : sig.params) found = found || (p.name == v && p.kind != Param::Kind::Result);
    if (!found) throw TransformError("unbound variable '" + v + "' in kernel " + sig.name);
  }
  Lowerer l(sig, opts, term);
  k.body = l.run(term, sig.result().name);
  return k;
}

int in_loop_dict_decls(const ir::Block& b) { return count_decls(b, 0); }

std::string dump_ir(const Kernel& k) {
  std::ostringstream o;
  o << k.sig.name << "(";
  for (std::size_t i = 0; i < k.sig.params.size(); ++i) {
    o << (i ? ", " : "") << k.sig.params[i].name << " : " << k.sig.params[i].type.str();
  }
  o << ")\n";
  dump_block(o, k.body, 1);
  return o.str();
}

std::string cpp_type(const Type& t) {
  if (t.is_real()) return "double";
  if (t.is_int()) return "size_t";
  if (t.is_bool()) return "bool";
  if (t.is_dict()) {
    if (t.key().kind() == Type::Kind::DenseInt) return "arr_type<" + cpp_type(t.value()) + ">";
    return "dict_type<size_t, " + cpp_type(t.value()) + ">";
  }
  return "double";
}

std::string emit_kernel(const Kernel& k) { return Emitter(k).function(); }

std::string emit_source(const std::vector<Kernel>& kernels, const EmitOptions& opts) {
  std::ostringstream o;
  if (opts.with_main) {
    o << "#include <cstdio>\n#include <iostream>\n";
  }
  o << "#include \"" << opts.runtime_header << "\"\n";
  for (const auto& k : kernels) o << "\n" << emit_kernel(k);
  if (opts.with_main && !kernels.empty()) o << "\n" << Emitter(kernels.front()).main_function();
  return o.str();
}

Value run_kernel(const Kernel& k, const Env& inputs) {
  Machine m(inputs);
  const Param& r = k.sig.result();
  if (r.type.is_real()) {
    m.bind(r.name, Value::real(0.0));
  } else if (r.type.is_int()) {
    m.bind(r.name, Value::integer(0));
  } else {
    m.bind(r.name, Value());
  }
  m.block(k.body);
  return m.slot(r.name);
}

}  // namespace sdg
