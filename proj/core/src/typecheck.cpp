#include "sdgrad/typecheck.hpp"

#include "sdgrad/error.hpp"
#include "sdgrad/printer.hpp"
#include "sdgrad/unary_ops.hpp"

namespace sdg {

std::optional<Type> TypeEnv::find(const std::string& name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == name) return it->second;
  }
  return std::nullopt;
}

namespace {

class Checker {
 public:
  explicit Checker(const TypeEnv& env) : env_(env) {}

  Type run(const ExprPtr& e) {
    return std::visit([&](const auto& n) { return check(n, e); }, e->node);
  }

 private:
  [[noreturn]] static void fail(const std::string& msg, const ExprPtr& e) {
    throw TypeError(msg + " in '" + pretty(e) + "'");
  }

  static bool index_like(const Type& t) { return t.is_index() || t.is_unknown(); }

  Type check(const ast::Var& n, const ExprPtr&) {
    auto t = env_.find(n.name);
    if (!t) throw TypeError("unbound variable '" + n.name + "'");
    return *t;
  }
  Type check(const ast::ConstInt&, const ExprPtr&) { return Type::integer(); }
  Type check(const ast::ConstReal&, const ExprPtr&) { return Type::real(); }
  Type check(const ast::ConstBool&, const ExprPtr&) { return Type::boolean(); }
  Type check(const ast::EmptyDict& n, const ExprPtr&) { return n.type ? *n.type : Type::unknown(); }

  Type check(const ast::Singleton& n, const ExprPtr& e) {
    Type k = run(n.key);
    Type v = run(n.val);
    if (!k.is_index()) fail("key not an index type (" + k.str() + ")", e);
    if (!v.is_additive()) fail("dictionary value of type " + v.str() + " is not additive", e);
    return Type::dict(k.is_int() ? k : Type::integer(), v);
  }

  Type check(const ast::Lookup& n, const ExprPtr& e) {
    Type d = run(n.dict);
    Type k = run(n.key);
    if (!k.is_index()) fail("key not an index type (" + k.str() + ")", e);
    if (d.is_unknown()) return d;
    if (!d.is_dict()) fail("lookup on non-dictionary type " + d.str(), e);
    return d.value();
  }

  Type check(const ast::Sum& n, const ExprPtr& e) {
    Type r = run(n.range);
    Type vt = Type::unknown();
    if (r.is_dict()) {
      vt = r.value();
    } else if (!r.is_unknown()) {
      fail("sum over non-dictionary type " + r.str(), e);
    }
    std::size_t mark = env_.size();
    env_.push(n.key, Type::integer());
    env_.push(n.val, vt);
    Type body = run(n.body);
    env_.truncate(mark);
    if (!body.is_additive()) fail("sum body of type " + body.str() + " is not additive", e);
    return body;
  }

  Type check(const ast::Let& n, const ExprPtr&) {
    Type b = run(n.bound);
    std::size_t mark = env_.size();
    env_.push(n.var, b);
    Type t = run(n.body);
    env_.truncate(mark);
    return t;
  }

  Type check(const ast::Not& n, const ExprPtr& e) {
    if (!run(n.arg).is_bool()) fail("'not' expects bool", e);
    return Type::boolean();
  }

  Type check(const ast::If& n, const ExprPtr& e) {
    if (!run(n.cond).is_bool()) fail("condition is not bool", e);
    Type t = run(n.then_);
    if (!t.is_additive()) fail("branch of type " + t.str() + " has no zero", e);
    return t;
  }

  Type check(const ast::Add& n, const ExprPtr& e) {
    Type a = run(n.lhs);
    Type b = run(n.rhs);
    if (!a.is_additive() || !b.is_additive()) {
      fail("'+' undefined for " + a.str() + " and " + b.str(), e);
    }
    try {
      return unify(a, b);
    } catch (const TypeError& err) {
      fail(std::string("operand type mismatch: ") + err.what(), e);
    }
  }

  Type check(const ast::Mul& n, const ExprPtr& e) {
    Type a = run(n.lhs);
    Type b = run(n.rhs);
    if (a.is_int() && b.is_int()) return a;
    if (!a.is_tensor() || !b.is_tensor()) {
      fail("⊗ undefined for " + a.str() + " and " + b.str(), e);
    }
    return otimes(a, b);
  }

  Type check(const ast::Unary& n, const ExprPtr& e) {
    if (!find_unary_op(n.op)) fail("unknown operation '" + n.op + "'", e);
    Type a = run(n.arg);
    if (!a.is_real()) fail("'" + n.op + "' expects real, got " + a.str(), e);
    return Type::real();
  }

  Type check(const ast::Eq& n, const ExprPtr& e) {
    Type a = run(n.lhs);
    Type b = run(n.rhs);
    auto discrete = [](const Type& t) { return t.is_index() || t.is_bool(); };
    if (!discrete(a) || !discrete(b)) fail("equality of discrete types only", e);
    if (a.is_bool() != b.is_bool()) fail("equality between " + a.str() + " and " + b.str(), e);
    return Type::boolean();
  }

  Type check(const ast::Range& n, const ExprPtr& e) {
    if (!run(n.start).is_index() || !run(n.end).is_index()) fail("range bounds must be int", e);
    return Type::dict(Type::dense_int(), Type::integer());
  }

  Type check(const ast::SubArray& n, const ExprPtr& e) {
    Type a = run(n.arr);
    if (!a.is_dict() || a.key().kind() != Type::Kind::DenseInt) {
      fail("subarray of non-array type " + a.str(), e);
    }
    if (!run(n.start).is_index() || !run(n.end).is_index()) fail("subarray bounds must be int", e);
    return a;
  }

  Type check(const ast::Unique& n, const ExprPtr&) { return run(n.arg); }

  TypeEnv env_;
};

}  // namespace

Type typecheck(const TypeEnv& env, const ExprPtr& e) { return Checker(env).run(e); }

std::optional<Type> try_typecheck(const TypeEnv& env, const ExprPtr& e) {
  try {
    return typecheck(env, e);
  } catch (const TypeError&) {
    return std::nullopt;
  }
}

ExprPtr zero_of(const Type& t) {
  switch (t.kind()) {
    case Type::Kind::Real:
      return ex::real(0.0);
    case Type::Kind::Int:
      return ex::int_(0);
    case Type::Kind::Dict:
      if (!t.is_additive()) throw TypeError("no zero for type " + t.str());
      return ex::empty(t);
    case Type::Kind::Unknown:
      return ex::empty();
    default:
      throw TypeError("no zero for type " + t.str());
  }
}

}  // namespace sdg
