#include "sdgrad/eval.hpp"

#include "sdgrad/error.hpp"
#include "sdgrad/unary_ops.hpp"

namespace sdg {

const Value* Env::find(const std::string& name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == name) return &it->second;
  }
  return nullptr;
}

void Env::set(const std::string& name, Value v) {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == name) {
      it->second = std::move(v);
      return;
    }
  }
  bind(name, std::move(v));
}

namespace {

class Evaluator {
 public:
  Evaluator(const Env& env, EvalStats* stats) : env_(env), stats_(stats) {}

  Value run(const ExprPtr& e) {
    return std::visit([&](const auto& n) { return go(n); }, e->node);
  }

 private:
  Value go(const ast::Var& n) {
    const Value* v = env_.find(n.name);
    if (!v) throw EvalError("unbound variable '" + n.name + "'");
    return *v;
  }
  Value go(const ast::ConstInt& n) { return Value::integer(n.value); }
  Value go(const ast::ConstReal& n) { return Value::real(n.value); }
  Value go(const ast::ConstBool& n) { return Value::boolean(n.value); }
  Value go(const ast::EmptyDict&) { return Value(); }

  Value go(const ast::Singleton& n) {
    std::int64_t k = key_of(run(n.key));
    Value v = run(n.val);
    return singleton_path({k}, v);
  }

  Value go(const ast::Lookup& n) {
    Value d = run(n.dict);
    std::int64_t k = key_of(run(n.key));
    if (stats_) ++stats_->lookups;
    if (d.is_real() || d.is_int()) {
      if (d.is_zero()) return Value();
      throw EvalError("lookup on a scalar");
    }
    return d.at(k);
  }

  Value go(const ast::Let& n) {
    Value b = run(n.bound);
    std::size_t mark = env_.size();
    env_.bind(n.var, std::move(b));
    Value r = run(n.body);
    env_.truncate(mark);
    return r;
  }

  Value go(const ast::Sum& n) {
    Value range = run(n.range);
    if (!range.is_collection()) {
      if (range.is_zero()) return Value();
      throw EvalError("sum over a scalar");
    }
    Value acc;
    std::size_t mark = env_.size();
    env_.bind(n.key, Value());
    env_.bind(n.val, Value());
    const auto* single = n.body->as<ast::Singleton>();
    std::int64_t* merged = stats_ ? &stats_->accumulations : nullptr;
    range.for_each([&](std::int64_t k, const Value& v) {
      if (stats_) ++stats_->binding_visits;
      env_.truncate(mark);
      env_.bind(n.key, Value::integer(k));
      env_.bind(n.val, v);
      if (single) {
        // Accumulate `{key -> val}` without building a one-entry dictionary.
        std::int64_t key = key_of(run(single->key));
        Value val = run(single->val);
        if (val.is_zero()) return;
        if (!acc.is_dict()) throw EvalError("adding a dictionary to a scalar");
        if (merged) ++*merged;
        acc.accumulate(key, std::move(val));
      } else {
        add_into(acc, run(n.body), merged);
      }
    });
    env_.truncate(mark);
    return acc;
  }

  Value go(const ast::Not& n) { return Value::boolean(!run(n.arg).as_bool()); }

  Value go(const ast::If& n) {
    if (run(n.cond).as_bool()) return run(n.then_);
    return Value();
  }

  Value go(const ast::Add& n) { return semiring_add(run(n.lhs), run(n.rhs)); }
  Value go(const ast::Mul& n) { return semiring_mul(run(n.lhs), run(n.rhs)); }

  Value go(const ast::Unary& n) {
    const UnaryOpInfo* op = find_unary_op(n.op);
    if (!op) throw EvalError("unknown operation '" + n.op + "'");
    return Value::real(op->eval(run(n.arg).as_number()));
  }

  Value go(const ast::Eq& n) {
    Value a = run(n.lhs);
    Value b = run(n.rhs);
    if (a.is_bool() || b.is_bool()) return Value::boolean(a.as_bool() == b.as_bool());
    return Value::boolean(a.as_int() == b.as_int());
  }

  Value go(const ast::Range& n) {
    return Value::range(run(n.start).as_int(), run(n.end).as_int());
  }

  Value go(const ast::SubArray& n) {
    Value a = run(n.arr);
    return a.slice(run(n.start).as_int(), run(n.end).as_int());
  }

  Value go(const ast::Unique& n) { return run(n.arg); }

  static std::int64_t key_of(const Value& v) {
    if (v.is_int()) return v.as_int();
    if (v.is_dict() && v.is_zero()) return 0;
    throw EvalError("dictionary key is not an integer");
  }

  Env env_;
  EvalStats* stats_;
};

Value with_leaf(const Value& v, const std::vector<std::int64_t>& path, std::size_t depth, double x) {
  if (depth == path.size()) return Value::real(x);
  Value d = v.is_collection() ? v.to_dict() : Value();
  Value child = with_leaf(d.at(path[depth]), path, depth + 1, x);
  Value::Map& m = d.mutable_entries();
  if (child.is_zero()) {
    m.erase(path[depth]);
  } else {
    m[path[depth]] = std::move(child);
  }
  return Value::dict(std::move(m));
}

double leaf_at(const Value& v, const std::vector<std::int64_t>& path) {
  Value cur = v;
  for (std::int64_t k : path) {
    if (!cur.is_collection()) return 0.0;
    cur = cur.at(k);
  }
  return cur.as_number();
}

void all_indices(const std::vector<std::int64_t>& shape, std::vector<std::int64_t>& cur,
                 std::vector<std::vector<std::int64_t>>& out) {
  if (cur.size() == shape.size()) {
    out.push_back(cur);
    return;
  }
  for (std::int64_t i = 0; i < shape[cur.size()]; ++i) {
    cur.push_back(i);
    all_indices(shape, cur, out);
    cur.pop_back();
  }
}

}  // namespace

Value eval(const Env& env, const ExprPtr& e, EvalStats* stats) {
  return Evaluator(env, stats).run(e);
}

Value finite_diff(const ExprPtr& e, const std::string& wrt, const Env& env,
                  const FiniteDiffOptions& opts) {
  if (!(opts.eps > 0)) throw Error("finite difference step must be positive");
  const Value* base = env.find(wrt);
  if (!base) throw EvalError("unbound variable '" + wrt + "'");

  std::vector<std::vector<std::int64_t>> coords;
  if (opts.dense_shape) {
    std::vector<std::int64_t> cur;
    all_indices(*opts.dense_shape, cur, coords);
  } else if (base->is_real() || base->is_int()) {
    coords.push_back({});
  } else {
    for_each_leaf(*base, [&](const std::vector<std::int64_t>& p, double) { coords.push_back(p); });
  }

  Value result;
  Env probe = env;
  for (const auto& c : coords) {
    double x = leaf_at(*base, c);
    probe.set(wrt, with_leaf(*base, c, 0, x + opts.eps));
    Value plus = eval(probe, e);
    probe.set(wrt, with_leaf(*base, c, 0, x - opts.eps));
    Value minus = eval(probe, e);
    Value d = semiring_mul(semiring_add(plus, negate(minus)), Value::real(0.5 / opts.eps));
    add_into(result, semiring_mul(d, singleton_path(c, Value::real(1.0))));
  }
  return result;
}

}  // namespace sdg
