#include "sdgrad/autodiff.hpp"

#include <vector>

#include "sdgrad/error.hpp"
#include "sdgrad/printer.hpp"
#include "sdgrad/unary_ops.hpp"

namespace sdg {

namespace {

bool is_anf_atom(const ExprPtr& e) { return is_atom(e) || e->is<ast::EmptyDict>(); }

// ---------------------------------------------------------------------------
// A-normal form

class AnfBuilder {
 public:
  explicit AnfBuilder(const ExprPtr& root) : names_(all_names(root)) {}

  ExprPtr block(const ExprPtr& e) {
    std::vector<std::pair<std::string, ExprPtr>> bs;
    ExprPtr tail = compound(e, bs);
    if (!is_anf_atom(tail)) {
      std::string t = names_.fresh("t");
      bs.emplace_back(t, tail);
      tail = ex::var(t);
    }
    for (auto it = bs.rbegin(); it != bs.rend(); ++it) tail = ex::let(it->first, it->second, tail);
    return tail;
  }

 private:
  using Bindings = std::vector<std::pair<std::string, ExprPtr>>;

  ExprPtr atom(const ExprPtr& e, Bindings& bs) {
    ExprPtr c = compound(e, bs);
    if (is_anf_atom(c)) return c;
    std::string t = names_.fresh("t");
    bs.emplace_back(t, c);
    return ex::var(t);
  }

  // Returns an atom or a single operation over atoms, emitting the bindings
  // it depends on.
  ExprPtr compound(const ExprPtr& e, Bindings& bs) {
    if (is_anf_atom(e)) return e;
    if (auto l = e->as<ast::Let>()) {
      ExprPtr b = compound(l->bound, bs);
      bs.emplace_back(l->var, b);
      return compound(l->body, bs);
    }
    if (auto s = e->as<ast::Sum>()) {
      ExprPtr r = atom(s->range, bs);
      return ex::sum(s->key, s->val, r, block(s->body));
    }
    if (auto i = e->as<ast::If>()) {
      ExprPtr c = atom(i->cond, bs);
      return ex::if_(c, block(i->then_));
    }
    return map_children(e, [&](const ExprPtr& c) { return atom(c, bs); });
  }

  NameGen names_;
};

bool anf_simple(const ExprPtr& e);

bool anf_block(const ExprPtr& e) {
  ExprPtr cur = e;
  while (auto l = cur->as<ast::Let>()) {
    if (!anf_simple(l->bound)) return false;
    cur = l->body;
  }
  return is_anf_atom(cur);
}

bool anf_simple(const ExprPtr& e) {
  if (is_anf_atom(e)) return true;
  if (auto s = e->as<ast::Sum>()) return is_anf_atom(s->range) && anf_block(s->body);
  if (auto i = e->as<ast::If>()) return is_anf_atom(i->cond) && anf_block(i->then_);
  if (e->is<ast::Let>()) return false;
  bool ok = true;
  for_each_child(*e, [&](const ExprPtr& c) { ok = ok && is_anf_atom(c); });
  return ok;
}

// ---------------------------------------------------------------------------
// Forward-mode differentiation

struct Diff {
  ExprPtr tangent;
  Type type;
};

bool discrete(const Type& t) { return t.is_index() || t.is_bool(); }

class Differentiator {
 public:
  Differentiator(const TypeEnv& env, const DualContext& ctx, Type tau, bool tensorized,
                 std::shared_ptr<NameGen> names)
      : env_(env), ctx_(ctx), tau_(std::move(tau)), tensorized_(tensorized), names_(std::move(names)) {}

  Diff run(const ExprPtr& e) {
    Diff d = std::visit([&](const auto& n) { return go(n, e); }, e->node);
    if (discrete(d.type)) d.tangent = ex::real(0.0);
    return d;
  }

 private:
  [[noreturn]] static void physical(const ExprPtr& e) {
    throw TransformError("cannot differentiate physical construct in '" + pretty(e) + "'");
  }

  ExprPtr zero_tangent(const Type& t) const { return zero_of(tangent_type(t, tau_)); }

  Diff go(const ast::Var& n, const ExprPtr&) {
    auto t = env_.find(n.name);
    if (!t) throw TypeError("unbound variable '" + n.name + "'");
    if (discrete(*t)) return {ex::real(0.0), *t};
    auto it = ctx_.tangent.find(n.name);
    if (it == ctx_.tangent.end()) {
      throw TransformError("no tangent for free variable '" + n.name + "'");
    }
    return {ex::var(it->second), *t};
  }

  Diff go(const ast::ConstReal&, const ExprPtr&) { return {zero_of(tau_), Type::real()}; }
  Diff go(const ast::ConstInt&, const ExprPtr&) { return {ex::real(0.0), Type::integer()}; }
  Diff go(const ast::ConstBool&, const ExprPtr&) { return {ex::real(0.0), Type::boolean()}; }

  Diff go(const ast::EmptyDict& n, const ExprPtr&) {
    if (!n.type) return {ex::empty(), Type::unknown()};
    return {zero_tangent(*n.type), *n.type};
  }

  Diff go(const ast::Singleton& n, const ExprPtr& e) {
    Type kt = typecheck(env_, n.key);
    Diff v = run(n.val);
    if (!kt.is_index()) throw TypeError("key not an index type in '" + pretty(e) + "'");
    return {ex::singleton(n.key, v.tangent), Type::dict(Type::integer(), v.type)};
  }

  Diff go(const ast::Lookup& n, const ExprPtr& e) {
    Diff d = run(n.dict);
    typecheck(env_, n.key);
    Type t;
    if (d.type.is_unknown()) {
      t = d.type;
    } else if (d.type.is_dict()) {
      t = d.type.value();
    } else {
      throw TypeError("lookup on non-dictionary in '" + pretty(e) + "'");
    }
    return {ex::lookup(d.tangent, n.key), t};
  }

  Diff go(const ast::Sum& n, const ExprPtr& e) {
    Diff r = run(n.range);
    Type vt = Type::unknown();
    if (r.type.is_dict()) {
      vt = r.type.value();
    } else if (!r.type.is_unknown()) {
      throw TypeError("sum over non-dictionary in '" + pretty(e) + "'");
    }
    std::string key = n.key;
    if (key == "_") key = names_ ? names_->fresh("k") : fresh_name("k", all_names(e));
    std::size_t mark = env_.size();
    auto saved = ctx_.tangent;
    env_.push(key, Type::integer());
    env_.push(n.val, vt);
    std::string kd = tangent_name(key), vd = tangent_name(n.val);
    ctx_.tangent[key] = kd;
    ctx_.tangent[n.val] = vd;
    env_.push(kd, Type::real());
    env_.push(vd, tangent_type(vt, tau_));
    Diff body = run(n.body);
    env_.truncate(mark);
    ctx_.tangent = std::move(saved);
    ExprPtr prelude = ex::let(kd, ex::real(0.0),
                              ex::let(vd, ex::lookup(r.tangent, ex::var(key)), body.tangent));
    return {ex::sum(key, n.val, n.range, prelude), body.type};
  }

  Diff go(const ast::Let& n, const ExprPtr&) {
    Diff b = run(n.bound);
    std::size_t mark = env_.size();
    auto saved = ctx_.tangent;
    std::string xd = tangent_name(n.var);
    env_.push(n.var, b.type);
    env_.push(xd, tangent_type(b.type, tau_));
    ctx_.tangent[n.var] = xd;
    Diff body = run(n.body);
    env_.truncate(mark);
    ctx_.tangent = std::move(saved);
    return {ex::let(n.var, n.bound, ex::let(xd, b.tangent, body.tangent)), body.type};
  }

  Diff go(const ast::Not& n, const ExprPtr&) {
    typecheck(env_, n.arg);
    return {ex::real(0.0), Type::boolean()};
  }

  Diff go(const ast::Eq&, const ExprPtr& e) { return {ex::real(0.0), typecheck(env_, e)}; }

  Diff go(const ast::If& n, const ExprPtr&) {
    typecheck(env_, n.cond);
    Diff t = run(n.then_);
    return {ex::if_(n.cond, t.tangent), t.type};
  }

  Diff go(const ast::Add& n, const ExprPtr&) {
    Diff a = run(n.lhs);
    Diff b = run(n.rhs);
    Type t = (a.type.is_int() && b.type.is_int()) ? a.type : unify(a.type, b.type);
    return {ex::add(a.tangent, b.tangent), t};
  }

  Diff go(const ast::Mul& n, const ExprPtr& e) {
    Diff a = run(n.lhs);
    Diff b = run(n.rhs);
    if (a.type.is_int() && b.type.is_int()) return {ex::real(0.0), a.type};
    if (!a.type.is_tensor() || !b.type.is_tensor()) {
      throw TypeError("⊗ undefined in '" + pretty(e) + "'");
    }
    Type t = otimes(a.type, b.type);
    ExprPtr left = ex::mul(n.lhs, b.tangent);
    ExprPtr right = tensorized_ ? odot(a.tangent, a.type, n.rhs, b.type) : ex::mul(a.tangent, n.rhs);
    return {ex::add(left, right), t};
  }

  // F[e1] ⊙τ e2
  ExprPtr odot(const ExprPtr& fe1, const Type& t1, const ExprPtr& e2, const Type& t2) {
    if (tau_.is_real() || t2.is_real()) return ex::mul(fe1, e2);
    if (t1.is_real()) return ex::mul(e2, fe1);
    if (t1.is_unknown() || is_zero_literal(fe1)) {
      return zero_of(tangent_type(otimes(t1, t2), tau_));
    }
    int m = t1.depth();
    std::vector<std::string> keys;
    for (int i = 0; i < m; ++i) keys.push_back(names_->prefer("i"));
    std::string v = names_->prefer("v");
    ExprPtr path = ex::real(1.0);
    for (int i = m; i-- > 0;) path = ex::singleton(ex::var(keys[i]), path);
    ExprPtr body = ex::mul(ex::mul(path, e2), ex::var(v));
    // Nested iteration over the first m levels of F[e1].
    std::vector<std::string> rows;
    for (int i = 1; i < m; ++i) rows.push_back(names_->prefer("r"));
    for (int i = m; i-- > 0;) {
      std::string val = (i == m - 1) ? v : rows[i];
      ExprPtr range = (i == 0) ? fe1 : ex::var(rows[i - 1]);
      body = ex::sum(keys[i], val, range, body);
    }
    return body;
  }

  Diff go(const ast::Unary& n, const ExprPtr& e) {
    Diff a = run(n.arg);
    if (!a.type.is_real()) throw TypeError("unary operation on non-real in '" + pretty(e) + "'");
    return {ex::mul(derivative_expr(n.op, n.arg), a.tangent), Type::real()};
  }

  Diff go(const ast::Range&, const ExprPtr& e) { physical(e); }
  Diff go(const ast::SubArray&, const ExprPtr& e) { physical(e); }
  Diff go(const ast::Unique&, const ExprPtr& e) { physical(e); }

  TypeEnv env_;
  DualContext ctx_;
  Type tau_;
  bool tensorized_;
  std::shared_ptr<NameGen> names_;
};

void check_anf(const ExprPtr& e) {
  if (!is_anf(e)) throw TransformError("input is not in A-normal form: " + pretty(e));
}

TypeEnv with_tangents(const TypeEnv& env, const DualContext& ctx, const Type& tau) {
  TypeEnv out = env;
  for (const auto& [name, t] : env.entries()) {
    auto it = ctx.tangent.find(name);
    if (it != ctx.tangent.end()) out.push(it->second, tangent_type(t, tau));
  }
  return out;
}

}  // namespace

ExprPtr to_anf(const ExprPtr& e) {
  ExprPtr r = rename_binders_unique(e);
  return AnfBuilder(r).block(r);
}

bool is_anf(const ExprPtr& e) { return anf_block(e); }

DualContext DualContext::from_env(const TypeEnv& env) {
  DualContext ctx;
  for (const auto& [name, t] : env.entries()) ctx.add(name);
  return ctx;
}

Type tangent_type(const Type& t, const Type& tau) {
  if (discrete(t)) return Type::real();
  if (t.is_unknown()) return t;
  return otimes(t, tau);
}

ExprPtr fad_scalar(const ExprPtr& e, const TypeEnv& env, const DualContext& ctx, bool require_anf) {
  if (require_anf) check_anf(e);
  auto names = std::make_shared<NameGen>(all_names(e));
  Differentiator d(with_tangents(env, ctx, Type::real()), ctx, Type::real(), false, names);
  return d.run(e).tangent;
}

ExprPtr fad_tensor(const FadConfig& cfg, const ExprPtr& e, const TypeEnv& env, const DualContext& ctx) {
  if (!cfg.tau.is_tensor() || cfg.tau.is_unknown()) {
    throw TransformError("tangent type must be a tensor type, got " + cfg.tau.str());
  }
  if (cfg.require_anf) check_anf(e);
  auto names = cfg.names;
  if (!names) {
    names = std::make_shared<NameGen>(all_names(e));
    for (const auto& [n, t] : env.entries()) names->reserve(n);
  }
  Differentiator d(with_tangents(env, ctx, cfg.tau), ctx, cfg.tau, true, names);
  return d.run(e).tangent;
}

ExprPtr onehot(const Type& t, const std::string& x, NameGen& names) {
  if (t.is_real()) return ex::real(1.0);
  int n = t.order();
  if (n <= 0) throw TransformError("onehot needs a tensor type, got " + t.str());
  std::vector<std::string> keys;
  for (int i = 0; i < n; ++i) keys.push_back(names.prefer(i == 0 ? "i" : (i == 1 ? "j" : "k")));
  std::vector<std::string> rows;
  for (int i = 1; i < n; ++i) rows.push_back(names.prefer("v"));
  ExprPtr diag = ex::real(1.0);
  for (int i = n; i-- > 0;) diag = ex::singleton(ex::var(keys[i]), diag);
  ExprPtr body = diag;
  for (int i = n; i-- > 0;) {
    std::string val = (i == n - 1) ? "_" : rows[i];
    ExprPtr range = (i == 0) ? ex::var(x) : ex::var(rows[i - 1]);
    body = ex::sum(keys[i], val, range, ex::singleton(ex::var(keys[i]), body));
  }
  return body;
}

ExprPtr expand_gradient(const ExprPtr& e, const std::string& wrt, const TypeEnv& env) {
  auto fv = free_vars(e);
  if (!fv.count(wrt)) throw TransformError("'" + wrt + "' is not free in the expression");
  auto tau = env.find(wrt);
  if (!tau) throw TypeError("unbound variable '" + wrt + "'");
  if (!tau->is_tensor() || tau->is_unknown() || tau->order() < 0) {
    throw TransformError("cannot differentiate with respect to '" + wrt + "' of type " + tau->str());
  }
  TypeEnv fenv;
  DualContext ctx;
  for (const auto& v : fv) {
    auto t = env.find(v);
    if (!t) throw TypeError("unbound variable '" + v + "'");
    fenv.push(v, *t);
    ctx.add(v);
  }
  auto names = std::make_shared<NameGen>(all_names(e));
  for (const auto& v : fv) names->reserve(tangent_name(v));
  FadConfig cfg;
  cfg.tau = *tau;
  cfg.names = names;
  cfg.require_anf = false;
  ExprPtr body = fad_tensor(cfg, e, fenv, ctx);
  for (auto it = fv.rbegin(); it != fv.rend(); ++it) {
    Type t = *fenv.find(*it);
    ExprPtr seed = (*it == wrt) ? onehot(t, *it, *names) : zero_of(tangent_type(t, *tau));
    body = ex::let(tangent_name(*it), seed, body);
  }
  return body;
}

}  // namespace sdg
