#include "sdgrad/expr.hpp"

#include <cstring>
#include <vector>

#include "sdgrad/names.hpp"

namespace sdg {

namespace {

template <typename T>
ExprPtr make(T node) {
  return std::make_shared<const Expr>(Expr{ExprNode(std::move(node))});
}

}  // namespace

const char* Expr::kind_name() const {
  static const char* const names[] = {"Sum",   "Singleton", "EmptyDict", "Lookup",   "Let",
                                      "Var",   "Not",       "If",        "Add",      "Mul",
                                      "ConstInt", "ConstReal", "ConstBool", "UnaryOp", "Eq",
                                      "Range", "SubArray",  "Unique"};
  return names[node.index()];
}

namespace ex {
ExprPtr sum(std::string key, std::string val, ExprPtr range, ExprPtr body) {
  return make(ast::Sum{std::move(key), std::move(val), std::move(range), std::move(body)});
}
ExprPtr singleton(ExprPtr key, ExprPtr val) {
  return make(ast::Singleton{std::move(key), std::move(val)});
}
ExprPtr empty(std::optional<Type> type) { return make(ast::EmptyDict{std::move(type)}); }
ExprPtr lookup(ExprPtr dict, ExprPtr key) {
  return make(ast::Lookup{std::move(dict), std::move(key)});
}
ExprPtr let(std::string var, ExprPtr bound, ExprPtr body) {
  return make(ast::Let{std::move(var), std::move(bound), std::move(body)});
}
ExprPtr var(std::string name) { return make(ast::Var{std::move(name)}); }
ExprPtr not_(ExprPtr arg) { return make(ast::Not{std::move(arg)}); }
ExprPtr if_(ExprPtr cond, ExprPtr then_) { return make(ast::If{std::move(cond), std::move(then_)}); }
ExprPtr add(ExprPtr lhs, ExprPtr rhs) { return make(ast::Add{std::move(lhs), std::move(rhs)}); }
ExprPtr mul(ExprPtr lhs, ExprPtr rhs) { return make(ast::Mul{std::move(lhs), std::move(rhs)}); }
ExprPtr int_(std::int64_t value) { return make(ast::ConstInt{value}); }
ExprPtr real(double value) { return make(ast::ConstReal{value}); }
ExprPtr bool_(bool value) { return make(ast::ConstBool{value}); }
ExprPtr unary(std::string op, ExprPtr arg) { return make(ast::Unary{std::move(op), std::move(arg)}); }
ExprPtr eq(ExprPtr lhs, ExprPtr rhs) { return make(ast::Eq{std::move(lhs), std::move(rhs)}); }
ExprPtr range(ExprPtr start, ExprPtr end) { return make(ast::Range{std::move(start), std::move(end)}); }
ExprPtr subarray(ExprPtr arr, ExprPtr start, ExprPtr end) {
  return make(ast::SubArray{std::move(arr), std::move(start), std::move(end)});
}
ExprPtr unique(ExprPtr arg) { return make(ast::Unique{std::move(arg)}); }
}  // namespace ex

namespace {

// Compares the payload of two nodes of the same alternative, ignoring
// children and binder names.
bool same_head(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (auto x = a.as<ast::Var>()) return x->name == b.as<ast::Var>()->name;
  if (auto x = a.as<ast::ConstInt>()) return x->value == b.as<ast::ConstInt>()->value;
  if (auto x = a.as<ast::ConstBool>()) return x->value == b.as<ast::ConstBool>()->value;
  if (auto x = a.as<ast::ConstReal>()) {
    double y = b.as<ast::ConstReal>()->value;
    return std::memcmp(&x->value, &y, sizeof y) == 0;
  }
  if (auto x = a.as<ast::Unary>()) return x->op == b.as<ast::Unary>()->op;
  return true;
}

std::vector<ExprPtr> children(const Expr& e) {
  std::vector<ExprPtr> out;
  for_each_child(e, [&](const ExprPtr& c) { out.push_back(c); });
  return out;
}

bool struct_eq(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!same_head(*a, *b)) return false;
  if (auto s = a->as<ast::Sum>()) {
    auto t = b->as<ast::Sum>();
    if (s->key != t->key || s->val != t->val) return false;
  } else if (auto l = a->as<ast::Let>()) {
    if (l->var != b->as<ast::Let>()->var) return false;
  }
  auto ca = children(*a);
  auto cb = children(*b);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (!struct_eq(ca[i], cb[i])) return false;
  }
  return true;
}

// De Bruijn-style comparison: each environment maps a name to the depth of
// its binder; free names compare by identity.
struct AlphaEnv {
  std::vector<std::pair<std::string, int>> a, b;
  int depth = 0;

  static int find(const std::vector<std::pair<std::string, int>>& v, const std::string& n) {
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
      if (it->first == n) return it->second;
    }
    return -1;
  }
};

bool alpha_eq(const ExprPtr& a, const ExprPtr& b, AlphaEnv& env) {
  if (a->node.index() != b->node.index()) return false;
  if (auto x = a->as<ast::Var>()) {
    const auto& yn = b->as<ast::Var>()->name;
    int da = AlphaEnv::find(env.a, x->name);
    int db = AlphaEnv::find(env.b, yn);
    if (da < 0 && db < 0) return x->name == yn;
    return da == db;
  }
  if (!same_head(*a, *b)) return false;
  if (auto s = a->as<ast::Sum>()) {
    auto t = b->as<ast::Sum>();
    if (!alpha_eq(s->range, t->range, env)) return false;
    auto sa = env.a.size(), sb = env.b.size();
    env.a.emplace_back(s->key, env.depth);
    env.b.emplace_back(t->key, env.depth++);
    env.a.emplace_back(s->val, env.depth);
    env.b.emplace_back(t->val, env.depth++);
    bool ok = alpha_eq(s->body, t->body, env);
    env.a.resize(sa);
    env.b.resize(sb);
    env.depth -= 2;
    return ok;
  }
  if (auto l = a->as<ast::Let>()) {
    auto m = b->as<ast::Let>();
    if (!alpha_eq(l->bound, m->bound, env)) return false;
    auto sa = env.a.size(), sb = env.b.size();
    env.a.emplace_back(l->var, env.depth);
    env.b.emplace_back(m->var, env.depth++);
    bool ok = alpha_eq(l->body, m->body, env);
    env.a.resize(sa);
    env.b.resize(sb);
    env.depth -= 1;
    return ok;
  }
  auto ca = children(*a);
  auto cb = children(*b);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (!alpha_eq(ca[i], cb[i], env)) return false;
  }
  return true;
}

void collect_free(const ExprPtr& e, std::vector<std::string>& bound, std::set<std::string>& out) {
  if (auto v = e->as<ast::Var>()) {
    for (const auto& b : bound) {
      if (b == v->name) return;
    }
    out.insert(v->name);
    return;
  }
  if (auto s = e->as<ast::Sum>()) {
    collect_free(s->range, bound, out);
    bound.push_back(s->key);
    bound.push_back(s->val);
    collect_free(s->body, bound, out);
    bound.resize(bound.size() - 2);
    return;
  }
  if (auto l = e->as<ast::Let>()) {
    collect_free(l->bound, bound, out);
    bound.push_back(l->var);
    collect_free(l->body, bound, out);
    bound.pop_back();
    return;
  }
  for_each_child(*e, [&](const ExprPtr& c) { collect_free(c, bound, out); });
}

int count_occ(const ExprPtr& e, const std::string& name) {
  if (auto v = e->as<ast::Var>()) return v->name == name ? 1 : 0;
  if (auto s = e->as<ast::Sum>()) {
    int n = count_occ(s->range, name);
    if (s->key != name && s->val != name) n += count_occ(s->body, name);
    return n;
  }
  if (auto l = e->as<ast::Let>()) {
    int n = count_occ(l->bound, name);
    if (l->var != name) n += count_occ(l->body, name);
    return n;
  }
  int n = 0;
  for_each_child(*e, [&](const ExprPtr& c) { n += count_occ(c, name); });
  return n;
}

void collect_names(const ExprPtr& e, std::set<std::string>& out) {
  if (auto v = e->as<ast::Var>()) out.insert(v->name);
  if (auto s = e->as<ast::Sum>()) {
    out.insert(s->key);
    out.insert(s->val);
  }
  if (auto l = e->as<ast::Let>()) out.insert(l->var);
  for_each_child(*e, [&](const ExprPtr& c) { collect_names(c, out); });
}

class Substituter {
 public:
  Substituter(const std::map<std::string, ExprPtr>& repl, std::set<std::string> avoid)
      : repl_(repl), avoid_(std::move(avoid)) {
    for (const auto& [n, r] : repl_) {
      auto fv = free_vars(r);
      repl_fv_.insert(fv.begin(), fv.end());
    }
    avoid_.insert(repl_fv_.begin(), repl_fv_.end());
  }

  ExprPtr run(const ExprPtr& e, const std::map<std::string, ExprPtr>& active) {
    if (active.empty()) return e;
    if (auto v = e->as<ast::Var>()) {
      auto it = active.find(v->name);
      return it == active.end() ? e : it->second;
    }
    if (auto s = e->as<ast::Sum>()) {
      ExprPtr range = run(s->range, active);
      auto inner = active;
      inner.erase(s->key);
      inner.erase(s->val);
      std::string k = s->key, v = s->val;
      ExprPtr body = s->body;
      if (!inner.empty()) {
        body = rebind(body, k, inner);
        body = rebind(body, v, inner);
      }
      body = run(body, inner);
      if (range == s->range && body == s->body && k == s->key && v == s->val) return e;
      return ex::sum(k, v, range, body);
    }
    if (auto l = e->as<ast::Let>()) {
      ExprPtr bound = run(l->bound, active);
      auto inner = active;
      inner.erase(l->var);
      std::string x = l->var;
      ExprPtr body = l->body;
      if (!inner.empty()) body = rebind(body, x, inner);
      body = run(body, inner);
      if (bound == l->bound && body == l->body && x == l->var) return e;
      return ex::let(x, bound, body);
    }
    return map_children(e, [&](const ExprPtr& c) { return run(c, active); });
  }

 private:
  // If binder `name` would capture a free variable of a replacement that is
  // still live in `body`, renames it (in place) and returns the renamed body.
  ExprPtr rebind(const ExprPtr& body, std::string& name, const std::map<std::string, ExprPtr>& active) {
    if (!repl_fv_.count(name)) return body;
    bool live = false;
    for (const auto& [n, r] : active) {
      if (occurs_free(body, n) && occurs_free(r, name)) live = true;
    }
    if (!live) return body;
    std::set<std::string> local = avoid_;
    collect_names(body, local);
    std::string fresh = fresh_name(name, local);
    avoid_.insert(fresh);
    ExprPtr renamed = Substituter({{name, ex::var(fresh)}}, avoid_).run(body, {{name, ex::var(fresh)}});
    name = fresh;
    return renamed;
  }

  const std::map<std::string, ExprPtr>& repl_;
  std::set<std::string> avoid_;
  std::set<std::string> repl_fv_;
};

class UniqueRenamer {
 public:
  explicit UniqueRenamer(const ExprPtr& root) {
    used_ = all_names(root);
    for (const auto& n : free_vars(root)) seen_.insert(n);
  }

  ExprPtr run(const ExprPtr& e, std::map<std::string, std::string>& env) {
    if (auto v = e->as<ast::Var>()) {
      auto it = env.find(v->name);
      if (it == env.end() || it->second == v->name) return e;
      return ex::var(it->second);
    }
    if (auto s = e->as<ast::Sum>()) {
      ExprPtr range = run(s->range, env);
      std::string k = pick(s->key, s->body);
      std::string v = pick(s->val, s->body);
      auto saved = env;
      env[s->key] = k;
      env[s->val] = v;
      ExprPtr body = run(s->body, env);
      env = std::move(saved);
      return ex::sum(k, v, range, body);
    }
    if (auto l = e->as<ast::Let>()) {
      ExprPtr bound = run(l->bound, env);
      std::string x = pick(l->var, l->body);
      auto saved = env;
      env[l->var] = x;
      ExprPtr body = run(l->body, env);
      env = std::move(saved);
      return ex::let(x, bound, body);
    }
    return map_children(e, [&](const ExprPtr& c) { return run(c, env); });
  }

 private:
  std::string pick(const std::string& name, const ExprPtr& body) {
    if (name == "_" || !occurs_free(body, name)) return "_";
    if (seen_.insert(name).second) return name;
    std::string fresh = fresh_name(name, used_);
    used_.insert(fresh);
    seen_.insert(fresh);
    return fresh;
  }

  std::set<std::string> used_;
  std::set<std::string> seen_;
};

}  // namespace

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) { return struct_eq(a, b); }

bool alpha_equal(const ExprPtr& a, const ExprPtr& b) {
  AlphaEnv env;
  return alpha_eq(a, b, env);
}

std::set<std::string> free_vars(const ExprPtr& e) {
  std::set<std::string> out;
  std::vector<std::string> bound;
  collect_free(e, bound, out);
  return out;
}

bool occurs_free(const ExprPtr& e, const std::string& name) { return count_occ(e, name) > 0; }

int count_free(const ExprPtr& e, const std::string& name) { return count_occ(e, name); }

std::set<std::string> all_names(const ExprPtr& e) {
  std::set<std::string> out;
  collect_names(e, out);
  return out;
}

std::size_t expr_size(const ExprPtr& e) {
  std::size_t n = 1;
  for_each_child(*e, [&](const ExprPtr& c) { n += expr_size(c); });
  return n;
}

bool is_logical(const ExprPtr& e) {
  if (e->is<ast::Range>() || e->is<ast::SubArray>() || e->is<ast::Unique>()) return false;
  bool ok = true;
  for_each_child(*e, [&](const ExprPtr& c) { ok = ok && is_logical(c); });
  return ok;
}

ExprPtr strip_unique(const ExprPtr& e) {
  if (auto u = e->as<ast::Unique>()) return strip_unique(u->arg);
  return map_children(e, strip_unique);
}

bool is_atom(const ExprPtr& e) {
  return e->is<ast::Var>() || e->is<ast::ConstInt>() || e->is<ast::ConstReal>() ||
         e->is<ast::ConstBool>();
}

bool is_zero_literal(const ExprPtr& e) {
  if (e->is<ast::EmptyDict>()) return true;
  auto r = e->as<ast::ConstReal>();
  return r && r->value == 0.0;
}

ExprPtr map_children(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& f) {
  return std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ast::Sum>) {
          auto r = f(n.range), b = f(n.body);
          if (r == n.range && b == n.body) return e;
          return ex::sum(n.key, n.val, r, b);
        } else if constexpr (std::is_same_v<T, ast::Singleton>) {
          auto k = f(n.key), v = f(n.val);
          if (k == n.key && v == n.val) return e;
          return ex::singleton(k, v);
        } else if constexpr (std::is_same_v<T, ast::Lookup>) {
          auto d = f(n.dict), k = f(n.key);
          if (d == n.dict && k == n.key) return e;
          return ex::lookup(d, k);
        } else if constexpr (std::is_same_v<T, ast::Let>) {
          auto b = f(n.bound), body = f(n.body);
          if (b == n.bound && body == n.body) return e;
          return ex::let(n.var, b, body);
        } else if constexpr (std::is_same_v<T, ast::Not>) {
          auto a = f(n.arg);
          return a == n.arg ? e : ex::not_(a);
        } else if constexpr (std::is_same_v<T, ast::Unary>) {
          auto a = f(n.arg);
          return a == n.arg ? e : ex::unary(n.op, a);
        } else if constexpr (std::is_same_v<T, ast::Unique>) {
          auto a = f(n.arg);
          return a == n.arg ? e : ex::unique(a);
        } else if constexpr (std::is_same_v<T, ast::If>) {
          auto c = f(n.cond), t = f(n.then_);
          if (c == n.cond && t == n.then_) return e;
          return ex::if_(c, t);
        } else if constexpr (std::is_same_v<T, ast::Add>) {
          auto l = f(n.lhs), r = f(n.rhs);
          if (l == n.lhs && r == n.rhs) return e;
          return ex::add(l, r);
        } else if constexpr (std::is_same_v<T, ast::Mul>) {
          auto l = f(n.lhs), r = f(n.rhs);
          if (l == n.lhs && r == n.rhs) return e;
          return ex::mul(l, r);
        } else if constexpr (std::is_same_v<T, ast::Eq>) {
          auto l = f(n.lhs), r = f(n.rhs);
          if (l == n.lhs && r == n.rhs) return e;
          return ex::eq(l, r);
        } else if constexpr (std::is_same_v<T, ast::Range>) {
          auto s = f(n.start), t = f(n.end);
          if (s == n.start && t == n.end) return e;
          return ex::range(s, t);
        } else if constexpr (std::is_same_v<T, ast::SubArray>) {
          auto a = f(n.arr), s = f(n.start), t = f(n.end);
          if (a == n.arr && s == n.start && t == n.end) return e;
          return ex::subarray(a, s, t);
        } else {
          return e;
        }
      },
      e->node);
}

ExprPtr substitute(const ExprPtr& e, const std::string& name, const ExprPtr& repl) {
  std::map<std::string, ExprPtr> m{{name, repl}};
  return substitute(e, m);
}

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& repl) {
  Substituter s(repl, all_names(e));
  return s.run(e, repl);
}

ExprPtr rename_binders_unique(const ExprPtr& e) {
  UniqueRenamer r(e);
  std::map<std::string, std::string> env;
  return r.run(e, env);
}

}  // namespace sdg
