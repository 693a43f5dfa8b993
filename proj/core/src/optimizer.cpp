#include "sdgrad/optimizer.hpp"

#include <functional>

#include "cost_internal.hpp"
#include "sdgrad/error.hpp"
#include "sdgrad/names.hpp"

namespace sdg {

namespace {

ExprPtr zero_for(const std::optional<Type>& t) {
  if (!t || t->is_unknown() || !t->is_tensor()) return ex::empty();
  return zero_of(*t);
}

Type value_type(const std::optional<Type>& t) {
  if (t && t->is_dict()) return t->value();
  return Type::unknown();
}

Type key_type(const std::optional<Type>& t) {
  (void)t;
  return Type::integer();
}

class Sparsity {
 public:
  explicit Sparsity(TypeEnv env) : env_(std::move(env)) {}

  ExprPtr run(const ExprPtr& e) {
    if (const auto* s = e->as<ast::Sum>()) return sum(*s, e);
    if (const auto* l = e->as<ast::Let>()) return let(*l, e);
    ExprPtr r = map_children(e, [&](const ExprPtr& c) { return run(c); });
    if (const auto* m = r->as<ast::Mul>()) {
      if (is_zero_literal(m->lhs) || is_zero_literal(m->rhs)) {
        auto tl = try_typecheck(env_, m->lhs);
        auto tr = try_typecheck(env_, m->rhs);
        if (tl && tr && tl->is_tensor() && tr->is_tensor() && !tl->is_unknown() &&
            !tr->is_unknown()) {
          return zero_of(otimes(*tl, *tr));
        }
        return ex::empty();
      }
    } else if (const auto* a = r->as<ast::Add>()) {
      if (is_zero_literal(a->lhs)) return a->rhs;
      if (is_zero_literal(a->rhs)) return a->lhs;
    } else if (const auto* l = r->as<ast::Lookup>()) {
      if (is_zero_literal(l->dict)) return zero_for(value_type(try_typecheck(env_, l->dict)));
    } else if (const auto* s = r->as<ast::Singleton>()) {
      if (is_zero_literal(s->val)) return zero_for(try_typecheck(env_, r));
    } else if (const auto* i = r->as<ast::If>()) {
      if (is_zero_literal(i->then_)) return i->then_;
    }
    return r;
  }

 private:
  ExprPtr sum(const ast::Sum& s, const ExprPtr& e) {
    ExprPtr range = run(s.range);
    auto rt = try_typecheck(env_, range);
    std::size_t mark = env_.size();
    env_.push(s.key, key_type(rt));
    env_.push(s.val, value_type(rt));
    if (is_zero_literal(range)) {
      auto bt = try_typecheck(env_, s.body);
      env_.truncate(mark);
      return zero_for(bt);
    }
    ExprPtr body = run(s.body);
    env_.truncate(mark);
    if (range == s.range && body == s.body) return e;
    return ex::sum(s.key, s.val, range, body);
  }

  ExprPtr let(const ast::Let& l, const ExprPtr& e) {
    ExprPtr bound = run(l.bound);
    if (is_zero_literal(bound)) return run(substitute(l.body, l.var, bound));
    auto bt = try_typecheck(env_, bound);
    env_.push(l.var, bt ? *bt : Type::unknown());
    ExprPtr body = run(l.body);
    env_.pop();
    if (bound == l.bound && body == l.body) return e;
    return ex::let(l.var, bound, body);
  }

  TypeEnv env_;
};

bool binds(const Expr& e, const std::string& x) {
  if (const auto* s = e.as<ast::Sum>()) return s->key == x || s->val == x;
  if (const auto* l = e.as<ast::Let>()) return l->var == x;
  return false;
}

/// True when `x` occurs free inside the body of a sum within `e`.
bool used_in_loop(const ExprPtr& e, const std::string& x) {
  if (const auto* s = e->as<ast::Sum>()) {
    if (used_in_loop(s->range, x)) return true;
    if (binds(*e, x)) return false;
    return occurs_free(s->body, x);
  }
  if (const auto* l = e->as<ast::Let>()) {
    if (used_in_loop(l->bound, x)) return true;
    if (l->var == x) return false;
    return used_in_loop(l->body, x);
  }
  bool found = false;
  for_each_child(*e, [&](const ExprPtr& c) { found = found || used_in_loop(c, x); });
  return found;
}

ExprPtr inline_rec(const ExprPtr& e) {
  ExprPtr r = map_children(e, inline_rec);
  const auto* l = r->as<ast::Let>();
  if (!l) return r;
  int uses = count_free(l->body, l->var);
  if (uses == 0) return l->body;
  bool atomic = is_atom(l->bound) || l->bound->is<ast::EmptyDict>();
  if (atomic || (uses == 1 && !used_in_loop(l->body, l->var))) {
    return inline_rec(substitute(l->body, l->var, l->bound));
  }
  return r;
}

bool linear(const ExprPtr& e, const std::string& v) {
  if (!occurs_free(e, v)) return false;
  auto occ = [&](const ExprPtr& c) { return occurs_free(c, v); };
  if (const auto* x = e->as<ast::Var>()) return x->name == v;
  if (const auto* s = e->as<ast::Sum>()) {
    bool in_range = occ(s->range);
    bool in_body = !binds(*e, v) && occ(s->body);
    if (in_range && in_body) return false;
    if (in_range) return linear(s->range, v) && linear(s->body, s->val);
    return linear(s->body, v);
  }
  if (const auto* s = e->as<ast::Singleton>()) return !occ(s->key) && linear(s->val, v);
  if (const auto* l = e->as<ast::Lookup>()) return !occ(l->key) && linear(l->dict, v);
  if (const auto* m = e->as<ast::Mul>()) {
    return (linear(m->lhs, v) && !occ(m->rhs)) || (!occ(m->lhs) && linear(m->rhs, v));
  }
  if (const auto* a = e->as<ast::Add>()) return linear(a->lhs, v) && linear(a->rhs, v);
  if (const auto* l = e->as<ast::Let>()) {
    bool in_bound = occ(l->bound);
    bool in_body = l->var != v && occ(l->body);
    if (in_bound && in_body) return false;
    if (in_bound) return linear(l->bound, v) && linear(l->body, l->var);
    return linear(l->body, v);
  }
  if (const auto* i = e->as<ast::If>()) return !occ(i->cond) && linear(i->then_, v);
  if (const auto* u = e->as<ast::Unique>()) return linear(u->arg, v);
  return false;
}

class Normalizer {
 public:
  Normalizer(TypeEnv env, const ExprPtr& e) : env_(std::move(env)), names_(all_names(e)) {
    for (const auto& [n, t] : env_.entries()) names_.reserve(n);
  }

  ExprPtr run(const ExprPtr& e) {
    if (const auto* s = e->as<ast::Sum>()) {
      ExprPtr range = run(s->range);
      auto rt = try_typecheck(env_, range);
      std::size_t mark = env_.size();
      env_.push(s->key, key_type(rt));
      env_.push(s->val, value_type(rt));
      ExprPtr body = run(s->body);
      env_.truncate(mark);
      return ex::sum(s->key, s->val, range, body);
    }
    if (const auto* l = e->as<ast::Let>()) {
      ExprPtr bound = run(l->bound);
      auto bt = try_typecheck(env_, bound);
      env_.push(l->var, bt ? *bt : Type::unknown());
      ExprPtr body = run(l->body);
      env_.pop();
      return ex::let(l->var, bound, body);
    }
    ExprPtr r = map_children(e, [&](const ExprPtr& c) { return run(c); });
    if (const auto* m = r->as<ast::Mul>()) return product(m->lhs, m->rhs);
    return r;
  }

 private:
  static bool is_dict(const std::optional<Type>& t) { return t && t->is_dict(); }

  ExprPtr product(const ExprPtr& a, const ExprPtr& b) {
    auto ta = try_typecheck(env_, a);
    auto tb = try_typecheck(env_, b);
    if (is_dict(ta)) {
      return hoisted(b, [&](const ExprPtr& rhs) {
        return nest(a, ta->depth(), [&](const ExprPtr& v) { return product(v, rhs); });
      });
    }
    if (ta && (ta->is_real() || ta->is_int()) && is_dict(tb)) {
      return hoisted(a, [&](const ExprPtr& lhs) {
        return nest(b, tb->depth(), [&](const ExprPtr& v) { return ex::mul(lhs, v); });
      });
    }
    return ex::mul(a, b);
  }

  /// Binds a non-atomic operand before it is used inside generated loops.
  ExprPtr hoisted(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& k) {
    if (is_atom(e)) return k(e);
    std::string t = names_.fresh("t");
    auto te = try_typecheck(env_, e);
    env_.push(t, te ? *te : Type::unknown());
    ExprPtr body = k(ex::var(t));
    env_.pop();
    return ex::let(t, e, body);
  }

  /// sum(<i1,v1> in d) ... sum(<in,vn> in v(n-1)) {i1 -> ... {in -> leaf(vn)}}
  ExprPtr nest(const ExprPtr& d, int depth, const std::function<ExprPtr(const ExprPtr&)>& leaf) {
    std::vector<std::string> keys, vals;
    std::size_t mark = env_.size();
    Type t = *try_typecheck(env_, d);
    for (int i = 0; i < depth; ++i) {
      keys.push_back(names_.fresh("i"));
      vals.push_back(names_.fresh("v"));
      t = t.is_dict() ? t.value() : Type::real();
      env_.push(keys.back(), Type::integer());
      env_.push(vals.back(), t);
    }
    ExprPtr body = leaf(ex::var(vals.back()));
    env_.truncate(mark);
    for (int i = depth; i-- > 0;) body = ex::singleton(ex::var(keys[i]), body);
    for (int i = depth; i-- > 0;) {
      ExprPtr range = i == 0 ? d : ex::var(vals[i - 1]);
      body = ex::sum(keys[i], vals[i], range, body);
    }
    return body;
  }

  TypeEnv env_;
  NameGen names_;
};

/// Flat loop building one entry per element: as cheap to re-run as to iterate.
bool is_view(const ExprPtr& e) {
  const auto* s = e->as<ast::Sum>();
  if (!s || !(s->range->is<ast::Var>() || s->range->is<ast::Range>() || s->range->is<ast::SubArray>())) {
    return false;
  }
  const auto* single = s->body->as<ast::Singleton>();
  if (!single) return false;
  bool flat = true;
  std::function<void(const ExprPtr&)> check = [&](const ExprPtr& x) {
    if (x->is<ast::Sum>() || x->is<ast::Let>()) flat = false;
    for_each_child(*x, check);
  };
  check(single->key);
  check(single->val);
  return flat;
}

/// Counts free uses of `x`; `ranges` counts those that are ranges of sums
/// linear in their value.
void range_uses(const ExprPtr& e, const std::string& x, int& all, int& ranges) {
  if (const auto* v = e->as<ast::Var>()) {
    if (v->name == x) ++all;
    return;
  }
  if (const auto* s = e->as<ast::Sum>()) {
    const auto* rv = s->range->as<ast::Var>();
    if (rv && rv->name == x) {
      ++all;
      if (linear(s->body, s->val)) ++ranges;
    } else {
      range_uses(s->range, x, all, ranges);
    }
    if (!binds(*e, x)) range_uses(s->body, x, all, ranges);
    return;
  }
  if (const auto* l = e->as<ast::Let>()) {
    range_uses(l->bound, x, all, ranges);
    if (l->var != x) range_uses(l->body, x, all, ranges);
    return;
  }
  for_each_child(*e, [&](const ExprPtr& c) { range_uses(c, x, all, ranges); });
}

ExprPtr fuse_step(const ExprPtr& e) {
  ExprPtr r = map_children(e, fuse_step);
  if (const auto* l = r->as<ast::Let>()) {
    if (is_atom(l->bound)) return substitute(l->body, l->var, l->bound);
    if (const auto* single = l->bound->as<ast::Singleton>()) {
      if (is_atom(single->key) && is_atom(single->val)) return substitute(l->body, l->var, l->bound);
    }
    int all = 0, ranges = 0;
    if (is_view(l->bound)) range_uses(l->body, l->var, all, ranges);
    if (all > 0 && all == ranges) return substitute(l->body, l->var, l->bound);
    return r;
  }
  const auto* s = r->as<ast::Sum>();
  if (!s) return r;
  const ExprPtr& c = s->body;
  const ExprPtr& range = s->range;
  if (const auto* inner = range->as<ast::Sum>()) {
    if (linear(c, s->val)) {
      std::string k = inner->key, v = inner->val;
      ExprPtr body = inner->body;
      if (occurs_free(c, k) || occurs_free(c, v)) {
        auto used = all_names(r);
        k = fresh_name(k == "_" ? "k" : k, used);
        used.insert(k);
        v = fresh_name(v == "_" ? "v" : v, used);
        body = substitute(body, {{inner->key, ex::var(k)}, {inner->val, ex::var(v)}});
      }
      return ex::sum(k, v, inner->range, ex::sum(s->key, s->val, body, c));
    }
  } else if (const auto* single = range->as<ast::Singleton>()) {
    if (linear(c, s->val)) return ex::let(s->key, single->key, ex::let(s->val, single->val, c));
  } else if (const auto* l = range->as<ast::Let>()) {
    if (!occurs_free(c, l->var)) {
      return ex::let(l->var, l->bound, ex::sum(s->key, s->val, l->body, c));
    }
  } else if (const auto* i = range->as<ast::If>()) {
    return ex::if_(i->cond, ex::sum(s->key, s->val, i->then_, c));
  } else if (const auto* a = range->as<ast::Add>()) {
    if (linear(c, s->val)) {
      return ex::add(ex::sum(s->key, s->val, a->lhs, c), ex::sum(s->key, s->val, a->rhs, c));
    }
  } else if (range->is<ast::EmptyDict>()) {
    return ex::empty();
  }
  return r;
}

class Coster {
 public:
  Coster(TypeEnv env, const CostModel& m) : env_(std::move(env)), m_(m) {}

  detail::Estimate run(const ExprPtr& e) {
    using detail::CostKind;
    auto dict = [&](const ExprPtr& x) {
      auto t = try_typecheck(env_, x);
      return t && t->is_dict();
    };
    if (const auto* v = e->as<ast::Var>()) {
      auto it = nnz_.find(v->name);
      double n = it != nnz_.end() ? it->second : (dict(e) ? m_.input_nnz : 1);
      return detail::estimate(m_, CostKind::Var, {}, false, false, false, n);
    }
    if (e->is<ast::EmptyDict>()) return detail::estimate(m_, CostKind::Empty, {}, true);
    if (e->is<ast::ConstInt>() || e->is<ast::ConstReal>() || e->is<ast::ConstBool>()) {
      return detail::estimate(m_, CostKind::Leaf, {}, false);
    }
    if (const auto* s = e->as<ast::Sum>()) {
      auto r = run(s->range);
      auto rt = try_typecheck(env_, s->range);
      Type vt = value_type(rt);
      std::size_t mark = env_.size();
      env_.push(s->key, Type::integer());
      env_.push(s->val, vt);
      auto saved_k = save(s->key), saved_v = save(s->val);
      nnz_[s->key] = 1;
      nnz_[s->val] = vt.is_dict() ? m_.bound_nnz : 1;
      auto b = run(s->body);
      bool d = dict(s->body);
      restore(s->key, saved_k);
      restore(s->val, saved_v);
      env_.truncate(mark);
      return detail::estimate(m_, CostKind::Sum, {r, b}, d);
    }
    if (const auto* l = e->as<ast::Let>()) {
      auto b = run(l->bound);
      auto bt = try_typecheck(env_, l->bound);
      env_.push(l->var, bt ? *bt : Type::unknown());
      auto saved = save(l->var);
      nnz_[l->var] = b.nnz;
      auto body = run(l->body);
      restore(l->var, saved);
      env_.pop();
      return detail::estimate(m_, CostKind::Let, {b, body}, false);
    }
    std::vector<detail::Estimate> kids;
    for_each_child(*e, [&](const ExprPtr& c) { kids.push_back(run(c)); });
    if (const auto* l = e->as<ast::Lookup>()) {
      auto t = try_typecheck(env_, l->dict);
      bool dense = l->dict->is<ast::Range>() ||
                   (t && t->is_dict() && t->key().kind() == Type::Kind::DenseInt);
      return detail::estimate(m_, CostKind::Lookup, kids, dict(e), dense);
    }
    if (e->is<ast::Singleton>()) return detail::estimate(m_, CostKind::Singleton, kids, true);
    if (const auto* m = e->as<ast::Mul>()) {
      return detail::estimate(m_, CostKind::Mul, kids, false, dict(m->lhs), dict(m->rhs));
    }
    if (e->is<ast::Add>()) return detail::estimate(m_, CostKind::Add, kids, false);
    if (e->is<ast::If>()) return detail::estimate(m_, CostKind::If, kids, false);
    if (e->is<ast::Range>()) return detail::estimate(m_, CostKind::Range, kids, true);
    if (e->is<ast::SubArray>()) return detail::estimate(m_, CostKind::SubArray, kids, true);
    if (e->is<ast::Unique>()) return detail::estimate(m_, CostKind::Unique, kids, false);
    return detail::estimate(m_, CostKind::Scalar, kids, false);
  }

 private:
  std::optional<double> save(const std::string& n) {
    auto it = nnz_.find(n);
    if (it == nnz_.end()) return std::nullopt;
    return it->second;
  }
  void restore(const std::string& n, std::optional<double> v) {
    if (v) {
      nnz_[n] = *v;
    } else {
      nnz_.erase(n);
    }
  }

  TypeEnv env_;
  const CostModel& m_;
  std::map<std::string, double> nnz_;
};

bool scalar_mults(const ExprPtr& e, TypeEnv& env) {
  if (const auto* s = e->as<ast::Sum>()) {
    if (!scalar_mults(s->range, env)) return false;
    auto rt = try_typecheck(env, s->range);
    std::size_t mark = env.size();
    env.push(s->key, Type::integer());
    env.push(s->val, value_type(rt));
    bool ok = scalar_mults(s->body, env);
    env.truncate(mark);
    return ok;
  }
  if (const auto* l = e->as<ast::Let>()) {
    if (!scalar_mults(l->bound, env)) return false;
    auto bt = try_typecheck(env, l->bound);
    env.push(l->var, bt ? *bt : Type::unknown());
    bool ok = scalar_mults(l->body, env);
    env.pop();
    return ok;
  }
  if (const auto* m = e->as<ast::Mul>()) {
    for (const auto& side : {m->lhs, m->rhs}) {
      auto t = try_typecheck(env, side);
      if (!t || !(t->is_real() || t->is_int())) return false;
    }
  }
  bool ok = true;
  for_each_child(*e, [&](const ExprPtr& c) { ok = ok && scalar_mults(c, env); });
  return ok;
}

}  // namespace

ExprPtr propagate_sparsity(const ExprPtr& e, const TypeEnv& env) {
  ExprPtr cur = e;
  for (;;) {
    ExprPtr next = Sparsity(env).run(cur);
    if (structurally_equal(next, cur)) return next;
    cur = next;
  }
}

ExprPtr inline_lets(const ExprPtr& e) { return inline_rec(e); }

bool is_linear_in(const ExprPtr& e, const std::string& v) { return linear(e, v); }

ExprPtr normalize_mult(const ExprPtr& e, const TypeEnv& env) { return Normalizer(env, e).run(e); }

ExprPtr fuse_loops(const ExprPtr& e) {
  ExprPtr cur = e;
  for (int i = 0; i < 64; ++i) {
    ExprPtr next = inline_lets(fuse_step(cur));
    if (structurally_equal(next, cur)) break;
    cur = next;
  }
  return cur;
}

bool only_scalar_mults(const ExprPtr& e, const TypeEnv& env) {
  TypeEnv scope = env;
  return scalar_mults(e, scope);
}

double term_cost(const ExprPtr& e, const TypeEnv& env, const CostModel& model) {
  return Coster(env, model).run(e).cost;
}

}  // namespace sdg
