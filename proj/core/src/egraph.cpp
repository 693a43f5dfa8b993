#include "sdgrad/egraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <tuple>

#include "cost_internal.hpp"
#include "sdgrad/error.hpp"
#include "sdgrad/parser.hpp"

namespace sdg {

namespace {

std::string type_key(const std::optional<Type>& t) { return t ? t->str() : std::string(); }

auto node_key(const ENode& n) { return std::tie(n.op, n.name, n.name2, n.bits, n.kids); }

std::uint64_t real_bits(double d) {
  std::uint64_t b;
  std::memcpy(&b, &d, sizeof b);
  return b;
}

double bits_real(std::uint64_t b) {
  double d;
  std::memcpy(&d, &b, sizeof d);
  return d;
}

bool is_pattern_var(const std::string& s) { return !s.empty() && s[0] == '?'; }

/// Operator and payload of an expression node; children are left empty.
ENode head(const Expr& e) {
  ENode n;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ast::Sum>) {
          n.op = Op::Sum;
          n.name = x.key;
          n.name2 = x.val;
        } else if constexpr (std::is_same_v<T, ast::Singleton>) {
          n.op = Op::Singleton;
        } else if constexpr (std::is_same_v<T, ast::EmptyDict>) {
          n.op = Op::Empty;
          n.type = x.type;
        } else if constexpr (std::is_same_v<T, ast::Lookup>) {
          n.op = Op::Lookup;
        } else if constexpr (std::is_same_v<T, ast::Let>) {
          n.op = Op::Let;
          n.name = x.var;
        } else if constexpr (std::is_same_v<T, ast::Var>) {
          n.op = Op::Var;
          n.name = x.name;
        } else if constexpr (std::is_same_v<T, ast::Not>) {
          n.op = Op::Not;
        } else if constexpr (std::is_same_v<T, ast::If>) {
          n.op = Op::If;
        } else if constexpr (std::is_same_v<T, ast::Add>) {
          n.op = Op::Add;
        } else if constexpr (std::is_same_v<T, ast::Mul>) {
          n.op = Op::Mul;
        } else if constexpr (std::is_same_v<T, ast::ConstInt>) {
          n.op = Op::Int;
          n.bits = static_cast<std::uint64_t>(x.value);
        } else if constexpr (std::is_same_v<T, ast::ConstReal>) {
          n.op = Op::Real;
          n.bits = real_bits(x.value);
        } else if constexpr (std::is_same_v<T, ast::ConstBool>) {
          n.op = Op::Bool;
          n.bits = x.value ? 1 : 0;
        } else if constexpr (std::is_same_v<T, ast::Unary>) {
          n.op = Op::Unary;
          n.name = x.op;
        } else if constexpr (std::is_same_v<T, ast::Eq>) {
          n.op = Op::Eq;
        } else if constexpr (std::is_same_v<T, ast::Range>) {
          n.op = Op::Range;
        } else if constexpr (std::is_same_v<T, ast::SubArray>) {
          n.op = Op::SubArray;
        } else if constexpr (std::is_same_v<T, ast::Unique>) {
          n.op = Op::Unique;
        }
      },
      e.node);
  return n;
}

ExprPtr build_expr(const ENode& n, const std::vector<ExprPtr>& k) {
  switch (n.op) {
    case Op::Sum: return ex::sum(n.name, n.name2, k[0], k[1]);
    case Op::Singleton: return ex::singleton(k[0], k[1]);
    case Op::Empty: return ex::empty(n.type);
    case Op::Lookup: return ex::lookup(k[0], k[1]);
    case Op::Let: return ex::let(n.name, k[0], k[1]);
    case Op::Var: return ex::var(n.name);
    case Op::Not: return ex::not_(k[0]);
    case Op::If: return ex::if_(k[0], k[1]);
    case Op::Add: return ex::add(k[0], k[1]);
    case Op::Mul: return ex::mul(k[0], k[1]);
    case Op::Int: return ex::int_(static_cast<std::int64_t>(n.bits));
    case Op::Real: return ex::real(bits_real(n.bits));
    case Op::Bool: return ex::bool_(n.bits != 0);
    case Op::Unary: return ex::unary(n.name, k[0]);
    case Op::Eq: return ex::eq(k[0], k[1]);
    case Op::Range: return ex::range(k[0], k[1]);
    case Op::SubArray: return ex::subarray(k[0], k[1], k[2]);
    case Op::Unique: return ex::unique(k[0]);
  }
  throw Error("unknown e-node");
}

bool is_leaf(Op op) {
  return op == Op::Var || op == Op::Int || op == Op::Real || op == Op::Bool || op == Op::Empty;
}

ExprPtr zero_for(const Type& t) {
  if (t.is_unknown() || !t.is_tensor()) return ex::empty();
  return zero_of(t);
}

}  // namespace

bool operator<(const ENode& a, const ENode& b) {
  if (node_key(a) != node_key(b)) return node_key(a) < node_key(b);
  return type_key(a.type) < type_key(b.type);
}

bool operator==(const ENode& a, const ENode& b) {
  return node_key(a) == node_key(b) && type_key(a.type) == type_key(b.type);
}

EGraph::EGraph(const TypeEnv& inputs, std::set<std::string> dense, CostModel cost)
    : dense_inputs_(std::move(dense)), cost_(cost) {
  for (const auto& [name, t] : inputs.entries()) {
    var_types_[name] = t;
    inputs_.insert(name);
  }
}

EClassId EGraph::find(EClassId id) const {
  while (parent_[id] != id) {
    parent_[id] = parent_[parent_[id]];
    id = parent_[id];
  }
  return id;
}

ENode EGraph::canonical(ENode n) const {
  for (auto& k : n.kids) k = find(k);
  return n;
}

std::vector<EClassId> EGraph::classes() const {
  std::vector<EClassId> out;
  out.reserve(classes_.size());
  for (const auto& [id, c] : classes_) out.push_back(id);
  return out;
}

const std::vector<ENode>& EGraph::nodes(EClassId id) const { return classes_.at(find(id)).nodes; }

Type EGraph::type(EClassId id) const { return classes_.at(find(id)).data.type; }

const std::set<std::string>& EGraph::free_vars(EClassId id) const {
  return classes_.at(find(id)).data.fv;
}

bool EGraph::dense(EClassId id) const { return classes_.at(find(id)).data.dense; }

bool EGraph::is_constant(EClassId id) const {
  for (const auto& n : nodes(id)) {
    if (n.op == Op::Int || n.op == Op::Real) return true;
  }
  return false;
}

bool EGraph::has_atom(EClassId id) const {
  for (const auto& n : nodes(id)) {
    if (is_leaf(n.op)) return true;
  }
  return false;
}

std::optional<Type> EGraph::var_type(const std::string& name) const {
  auto it = var_types_.find(name);
  if (it == var_types_.end()) return std::nullopt;
  return it->second;
}

std::optional<EClassId> EGraph::let_bound(const std::string& name) const {
  auto it = lets_.find(name);
  if (it == lets_.end()) return std::nullopt;
  return find(it->second);
}

void EGraph::declare(const std::string& name, const Type& t) {
  auto it = var_types_.find(name);
  if (it != var_types_.end() && !it->second.is_unknown()) return;
  var_types_[name] = t;
  ENode v;
  v.op = Op::Var;
  v.name = name;
  auto m = memo_.find(v);
  if (m == memo_.end()) return;
  EClassId c = find(m->second);
  if (join(classes_[c].data, node_data(v))) propagate({c});
}

EGraph::Data EGraph::node_data(const ENode& n) const {
  Data d;
  auto kid = [&](std::size_t i) -> const Data& { return classes_.at(find(n.kids[i])).data; };
  for (std::size_t i = 0; i < n.kids.size(); ++i) {
    const auto& fv = kid(i).fv;
    bool body = (n.op == Op::Sum || n.op == Op::Let) && i == 1;
    for (const auto& v : fv) {
      if (body && (v == n.name || (n.op == Op::Sum && v == n.name2))) continue;
      d.fv.insert(v);
    }
  }
  switch (n.op) {
    case Op::Var: {
      d.fv.insert(n.name);
      auto t = var_type(n.name);
      if (t) d.type = *t;
      d.dense = dense_inputs_.count(n.name) > 0;
      break;
    }
    case Op::Int: d.type = Type::integer(); break;
    case Op::Real: d.type = Type::real(); break;
    case Op::Bool: d.type = Type::boolean(); break;
    case Op::Empty: d.type = n.type ? *n.type : Type::unknown(); break;
    case Op::Singleton: {
      const Type& v = kid(1).type;
      if (!v.is_unknown()) d.type = Type::dict(Type::integer(), v);
      break;
    }
    case Op::Lookup: {
      const Type& t = kid(0).type;
      if (t.is_dict()) {
        d.type = t.value();
        d.dense = kid(0).dense && t.value().is_dict();
      }
      break;
    }
    case Op::Sum:
    case Op::Let:
    case Op::If: d.type = kid(1).type; break;
    case Op::Not:
    case Op::Eq: d.type = Type::boolean(); break;
    case Op::Add: d.type = kid(0).type.is_unknown() ? kid(1).type : kid(0).type; break;
    case Op::Mul: {
      const Type& a = kid(0).type;
      const Type& b = kid(1).type;
      if (a.is_int() && b.is_int()) {
        d.type = Type::integer();
      } else if ((a.is_int() || a.is_real()) && (b.is_int() || b.is_real())) {
        d.type = Type::real();
      } else if (a.is_tensor() && b.is_tensor() && !a.is_unknown() && !b.is_unknown()) {
        d.type = otimes(a, b);
      }
      break;
    }
    case Op::Unary: d.type = Type::real(); break;
    case Op::Range:
      d.type = Type::dict(Type::dense_int(), Type::integer());
      d.dense = true;
      break;
    case Op::SubArray: d.type = kid(0).type; break;
    case Op::Unique: d.type = kid(0).type; break;
  }
  return d;
}

bool EGraph::join(Data& into, const Data& from) const {
  bool changed = false;
  if (into.type.is_unknown() && !from.type.is_unknown()) {
    into.type = from.type;
    changed = true;
  }
  if (from.dense && !into.dense) {
    into.dense = true;
    changed = true;
  }
  std::set<std::string> both;
  std::set_intersection(into.fv.begin(), into.fv.end(), from.fv.begin(), from.fv.end(),
                        std::inserter(both, both.begin()));
  if (both.size() != into.fv.size()) {
    into.fv = std::move(both);
    changed = true;
  }
  return changed;
}

void EGraph::propagate(std::vector<EClassId> work) {
  while (!work.empty()) {
    EClassId c = find(work.back());
    work.pop_back();
    auto parents = classes_.at(c).parents;
    for (const auto& [pn, pc] : parents) {
      EClassId p = find(pc);
      if (join(classes_.at(p).data, node_data(canonical(pn)))) work.push_back(p);
    }
  }
}

EClassId EGraph::add(ENode n) {
  n = canonical(std::move(n));
  auto it = memo_.find(n);
  if (it != memo_.end()) return find(it->second);
  if (n.op == Op::Sum) {
    declare(n.name, Type::integer());
    const Type& r = classes_.at(n.kids[0]).data.type;
    declare(n.name2, r.is_dict() ? r.value() : Type::unknown());
    sum_values_.insert(n.name2);
  } else if (n.op == Op::Let) {
    declare(n.name, classes_.at(n.kids[0]).data.type);
    lets_.emplace(n.name, n.kids[0]);
  }
  auto id = static_cast<EClassId>(parent_.size());
  parent_.push_back(id);
  Class c;
  c.data = node_data(n);
  c.nodes.push_back(n);
  std::vector<EClassId> kids = n.kids;
  std::sort(kids.begin(), kids.end());
  kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
  for (EClassId k : kids) classes_.at(k).parents.emplace_back(n, id);
  classes_.emplace(id, std::move(c));
  memo_.emplace(std::move(n), id);
  return id;
}

EClassId EGraph::add_rec(const ExprPtr& e, const std::map<std::string, EClassId>& holes,
                         std::set<std::string>& shadowed) {
  if (const auto* v = e->as<ast::Var>()) {
    auto it = holes.find(v->name);
    if (it != holes.end() && !shadowed.count(v->name)) return find(it->second);
  }
  ENode n = head(*e);
  if (const auto* s = e->as<ast::Sum>()) {
    EClassId r = add_rec(s->range, holes, shadowed);
    declare(s->key, Type::integer());
    const Type& rt = classes_.at(find(r)).data.type;
    declare(s->val, rt.is_dict() ? rt.value() : Type::unknown());
    bool sk = shadowed.insert(s->key).second;
    bool sv = shadowed.insert(s->val).second;
    EClassId b = add_rec(s->body, holes, shadowed);
    if (sk) shadowed.erase(s->key);
    if (sv) shadowed.erase(s->val);
    n.kids = {r, b};
    return add(std::move(n));
  }
  if (const auto* l = e->as<ast::Let>()) {
    EClassId b = add_rec(l->bound, holes, shadowed);
    declare(l->var, classes_.at(find(b)).data.type);
    bool sv = shadowed.insert(l->var).second;
    EClassId body = add_rec(l->body, holes, shadowed);
    if (sv) shadowed.erase(l->var);
    n.kids = {b, body};
    return add(std::move(n));
  }
  for_each_child(*e, [&](const ExprPtr& c) { n.kids.push_back(add_rec(c, holes, shadowed)); });
  return add(std::move(n));
}

EClassId EGraph::add_term(const ExprPtr& e, const std::map<std::string, EClassId>& holes) {
  std::set<std::string> shadowed;
  return add_rec(e, holes, shadowed);
}

bool EGraph::merge(EClassId a, EClassId b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (b < a) std::swap(a, b);
  parent_[b] = a;
  Class gone = std::move(classes_.at(b));
  classes_.erase(b);
  Class& keep = classes_.at(a);
  for (auto& n : gone.nodes) keep.nodes.push_back(std::move(n));
  for (auto& p : gone.parents) keep.parents.push_back(std::move(p));
  join(keep.data, gone.data);
  pending_.push_back(a);
  return true;
}

void EGraph::rebuild() {
  std::vector<EClassId> touched;
  while (!pending_.empty()) {
    std::vector<EClassId> todo;
    for (EClassId c : pending_) todo.push_back(find(c));
    pending_.clear();
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
    for (EClassId c : todo) {
      touched.push_back(c);
      auto parents = std::move(classes_.at(find(c)).parents);
      for (const auto& [pn, pc] : parents) memo_.erase(pn);
      std::map<ENode, EClassId> seen;
      for (const auto& [pn, pc] : parents) {
        ENode cn = canonical(pn);
        auto it = seen.find(cn);
        if (it != seen.end()) merge(it->second, pc);
        seen[cn] = find(pc);
      }
      std::vector<std::pair<ENode, EClassId>> fresh;
      for (auto& [n, id] : seen) {
        EClassId owner = find(id);
        auto m = memo_.find(n);
        if (m != memo_.end() && find(m->second) != owner) merge(m->second, owner);
        memo_[n] = find(owner);
        fresh.emplace_back(n, find(owner));
      }
      auto& cls = classes_.at(find(c));
      for (auto& p : fresh) cls.parents.push_back(std::move(p));
    }
  }
  for (auto& [id, cls] : classes_) {
    for (auto& n : cls.nodes) n = canonical(std::move(n));
    std::sort(cls.nodes.begin(), cls.nodes.end());
    cls.nodes.erase(std::unique(cls.nodes.begin(), cls.nodes.end()), cls.nodes.end());
    auto zero = [](const ENode& n) { return n.op == Op::Empty || (n.op == Op::Real && n.bits == real_bits(0.0)); };
    if (std::any_of(cls.nodes.begin(), cls.nodes.end(), zero)) {
      std::erase_if(cls.nodes, [&](const ENode& n) { return !zero(n); });
    }
  }
  for (auto& c : touched) c = find(c);
  propagate(touched);
}

bool EGraph::represents(EClassId id, const ExprPtr& e) const {
  ENode h = head(*e);
  std::vector<ExprPtr> kids;
  for_each_child(*e, [&](const ExprPtr& c) { kids.push_back(c); });
  for (const auto& n : nodes(id)) {
    if (n.op != h.op || n.name != h.name || n.name2 != h.name2 || n.bits != h.bits) continue;
    bool ok = n.kids.size() == kids.size();
    for (std::size_t i = 0; ok && i < kids.size(); ++i) ok = represents(n.kids[i], kids[i]);
    if (ok) return true;
  }
  return false;
}

std::vector<ExprPtr> EGraph::enumerate(EClassId id, int depth, std::size_t limit) const {
  std::vector<ExprPtr> out;
  if (depth <= 0) return out;
  for (const auto& n : nodes(id)) {
    std::vector<std::vector<ExprPtr>> options;
    bool empty = false;
    for (EClassId k : n.kids) {
      options.push_back(enumerate(k, depth - 1, limit));
      if (options.back().empty()) empty = true;
    }
    if (empty) continue;
    std::vector<std::size_t> idx(options.size(), 0);
    for (;;) {
      std::vector<ExprPtr> kids;
      for (std::size_t i = 0; i < options.size(); ++i) kids.push_back(options[i][idx[i]]);
      out.push_back(build_expr(n, kids));
      if (out.size() >= limit) return out;
      std::size_t i = 0;
      while (i < idx.size() && ++idx[i] == options[i].size()) idx[i++] = 0;
      if (i == idx.size()) break;
    }
  }
  return out;
}

EGraph::Extractor::Extractor(const EGraph& g) : g_(g) {
  using detail::CostKind;
  auto kind_of = [](Op op) {
    switch (op) {
      case Op::Var: return CostKind::Var;
      case Op::Int:
      case Op::Real:
      case Op::Bool: return CostKind::Leaf;
      case Op::Empty: return CostKind::Empty;
      case Op::Lookup: return CostKind::Lookup;
      case Op::Singleton: return CostKind::Singleton;
      case Op::Sum: return CostKind::Sum;
      case Op::Let: return CostKind::Let;
      case Op::Mul: return CostKind::Mul;
      case Op::Add: return CostKind::Add;
      case Op::If: return CostKind::If;
      case Op::Range: return CostKind::Range;
      case Op::SubArray: return CostKind::SubArray;
      case Op::Unique: return CostKind::Unique;
      default: return CostKind::Scalar;
    }
  };
  const CostModel& m = g.cost_;
  auto var_nnz = [&](const ENode& n, EClassId c) {
    if (!g.type(c).is_dict()) return 1.0;
    if (g.input(n.name)) return m.input_nnz;
    if (g.sum_bound(n.name)) return m.bound_nnz;
    if (auto b = g.let_bound(n.name)) {
      auto it = nnz_.find(*b);
      return it != nnz_.end() ? it->second : m.bound_nnz;
    }
    return m.input_nnz;
  };
  auto ranged = [&](EClassId c) {
    const Type& t = g.type(c);
    if (t.is_dict() && t.key().kind() == Type::Kind::DenseInt) return true;
    for (const auto& n : g.nodes(c)) {
      if (n.op == Op::Range) return true;
    }
    return false;
  };
  auto ids = g.classes();
  for (int pass = 0; pass < 200; ++pass) {
    bool changed = false;
    for (EClassId c : ids) {
      const auto& cls = g.classes_.at(c);
      for (const auto& n : cls.nodes) {
        if (g.node_data(n).fv != cls.data.fv) continue;
        std::vector<detail::Estimate> kids;
        std::size_t size = 1;
        bool ready = true;
        for (EClassId k : n.kids) {
          auto it = best_.find(g.find(k));
          if (it == best_.end()) {
            ready = false;
            break;
          }
          kids.push_back({it->second.cost, nnz_.at(g.find(k))});
          size += it->second.size;
        }
        if (!ready) continue;
        bool self_dict = g.type(c).is_dict();
        bool lhs = false, rhs = false;
        if (n.op == Op::Lookup) lhs = ranged(n.kids[0]);
        if (n.op == Op::Mul) {
          lhs = g.type(n.kids[0]).is_dict();
          rhs = g.type(n.kids[1]).is_dict();
        }
        double vn = n.op == Op::Var ? var_nnz(n, c) : 1;
        auto est = detail::estimate(m, kind_of(n.op), kids, self_dict, lhs, rhs, vn);
        auto nit = nnz_.find(c);
        if (nit == nnz_.end() || est.nnz < nit->second - 1e-9) {
          nnz_[c] = est.nnz;
          changed = true;
        }
        auto it = best_.find(c);
        bool better = it == best_.end();
        if (!better) {
          const Best& b = it->second;
          if (est.cost < b.cost - 1e-9) {
            better = true;
          } else if (est.cost <= b.cost + 1e-9) {
            better = size < b.size || (size == b.size && n.op < b.node.op);
          }
        }
        if (better) {
          best_[c] = {est.cost, size, n};
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
}

ExprPtr EGraph::Extractor::build(EClassId id, int depth) const {
  if (depth > 100000) throw Error("extraction did not terminate");
  auto it = best_.find(id);
  if (it == best_.end()) it = best_.find(g_.find(id));
  if (it == best_.end()) return nullptr;
  std::vector<ExprPtr> kids;
  for (EClassId k : it->second.node.kids) {
    kids.push_back(build(k, depth + 1));
    if (!kids.back()) return nullptr;
  }
  return build_expr(it->second.node, kids);
}

std::optional<EGraph::Extraction> EGraph::Extractor::extract(EClassId id) const {
  auto it = best_.find(id);
  if (it == best_.end()) it = best_.find(g_.find(id));
  if (it == best_.end()) return std::nullopt;
  ExprPtr t = build(id, 0);
  if (!t) return std::nullopt;
  return Extraction{t, it->second.cost};
}

namespace {

bool match_name(const std::string& pat, const std::string& actual, Match& m) {
  if (!is_pattern_var(pat)) return pat == actual;
  auto it = m.names.find(pat);
  if (it != m.names.end()) return it->second == actual;
  m.names[pat] = actual;
  return true;
}

bool has_var(const EGraph& g, EClassId id, const std::string& name) {
  for (const auto& n : g.nodes(id)) {
    if (n.op == Op::Var && n.name == name) return true;
  }
  return false;
}

void match_rec(const EGraph& g, const ExprPtr& pat, EClassId id, Match m, std::vector<Match>& out,
               std::size_t limit) {
  if (out.size() >= limit) return;
  id = g.find(id);
  if (const auto* v = pat->as<ast::Var>()) {
    if (!is_pattern_var(v->name)) {
      if (has_var(g, id, v->name)) out.push_back(std::move(m));
      return;
    }
    if (auto it = m.names.find(v->name); it != m.names.end()) {
      if (has_var(g, id, it->second)) out.push_back(std::move(m));
      return;
    }
    if (auto it = m.classes.find(v->name); it != m.classes.end()) {
      if (g.find(it->second) == id) out.push_back(std::move(m));
      return;
    }
    m.classes[v->name] = id;
    out.push_back(std::move(m));
    return;
  }
  ENode h = head(*pat);
  std::vector<ExprPtr> kids;
  for_each_child(*pat, [&](const ExprPtr& c) { kids.push_back(c); });
  for (const auto& n : g.nodes(id)) {
    if (n.op != h.op) continue;
    Match mm = m;
    switch (n.op) {
      case Op::Sum:
        if (!match_name(h.name, n.name, mm) || !match_name(h.name2, n.name2, mm)) continue;
        break;
      case Op::Let:
        if (!match_name(h.name, n.name, mm)) continue;
        break;
      case Op::Unary:
        if (!match_name(h.name, n.name, mm)) continue;
        break;
      case Op::Int:
      case Op::Real:
      case Op::Bool:
        if (n.bits != h.bits) continue;
        break;
      default:
        break;
    }
    std::vector<Match> cur{std::move(mm)};
    for (std::size_t i = 0; i < kids.size() && !cur.empty(); ++i) {
      std::vector<Match> next;
      for (auto& c : cur) match_rec(g, kids[i], n.kids[i], std::move(c), next, limit);
      cur = std::move(next);
    }
    for (auto& c : cur) {
      if (out.size() >= limit) return;
      out.push_back(std::move(c));
    }
  }
}

std::string resolve(const std::string& name, const Match& m) {
  if (!is_pattern_var(name)) return name;
  auto it = m.names.find(name);
  if (it == m.names.end()) throw Error("unbound pattern name " + name);
  return it->second;
}

}  // namespace

std::vector<Match> match_pattern(const EGraph& g, const ExprPtr& pattern, EClassId id, std::size_t limit) {
  std::vector<Match> out;
  Match m;
  m.root = g.find(id);
  match_rec(g, pattern, id, m, out, limit);
  return out;
}

EClassId instantiate(EGraph& g, const ExprPtr& pat, const Match& m) {
  if (const auto* v = pat->as<ast::Var>()) {
    if (is_pattern_var(v->name)) {
      if (auto it = m.classes.find(v->name); it != m.classes.end()) return g.find(it->second);
    }
    ENode n;
    n.op = Op::Var;
    n.name = resolve(v->name, m);
    return g.add(std::move(n));
  }
  ENode n = head(*pat);
  if (n.op == Op::Sum || n.op == Op::Let || n.op == Op::Unary) {
    n.name = resolve(n.name, m);
    if (n.op == Op::Sum) n.name2 = resolve(n.name2, m);
  }
  for_each_child(*pat, [&](const ExprPtr& c) { n.kids.push_back(instantiate(g, c, m)); });
  return g.add(std::move(n));
}

RewriteRule make_rule(const std::string& name, const std::string& lhs, const std::string& rhs,
                      std::string condition, std::function<bool(const EGraph&, const Match&)> guard) {
  RewriteRule r;
  r.name = name;
  r.lhs = parse_internal(lhs);
  if (!rhs.empty()) r.rhs = parse_internal(rhs);
  r.condition = std::move(condition);
  r.guard = std::move(guard);
  return r;
}

namespace {

bool scalar(const EGraph& g, const Match& m, const char* var) {
  const Type& t = g.type(m.classes.at(var));
  return t.is_real() || t.is_int();
}

bool avoids(const EGraph& g, const Match& m, const char* cls, std::initializer_list<const char*> names) {
  const auto& fv = g.free_vars(m.classes.at(cls));
  for (const char* n : names) {
    if (fv.count(m.names.at(n))) return false;
  }
  return true;
}

/// Some member of `id` evaluates to zero whenever `v` is zero.
bool vanishes_with(const EGraph& g, EClassId id, const std::string& v, std::set<EClassId>& visiting) {
  id = g.find(id);
  if (!visiting.insert(id).second) return false;
  auto occ = [&](EClassId c) { return g.free_vars(c).count(v) > 0; };
  auto van = [&](EClassId c, const std::string& x) { return vanishes_with(g, c, x, visiting); };
  bool found = false;
  for (const auto& n : g.nodes(id)) {
    switch (n.op) {
      case Op::Var: found = n.name == v; break;
      case Op::Empty: found = true; break;
      case Op::Real: found = n.bits == real_bits(0.0); break;
      case Op::Sum:
        found = van(n.kids[0], v) || (n.name != v && n.name2 != v && van(n.kids[1], v));
        break;
      case Op::Let:
        found = (n.name != v && van(n.kids[1], v)) ||
                (van(n.kids[0], v) && !occ(n.kids[1]) && van(n.kids[1], n.name));
        break;
      case Op::Singleton:
      case Op::If: found = van(n.kids[1], v); break;
      case Op::Lookup:
      case Op::Unique: found = van(n.kids[0], v); break;
      case Op::Mul: found = van(n.kids[0], v) || van(n.kids[1], v); break;
      case Op::Add: found = van(n.kids[0], v) && van(n.kids[1], v); break;
      default: break;
    }
    if (found) break;
  }
  visiting.erase(id);
  return found;
}

std::optional<double> constant(const EGraph& g, EClassId id, bool& is_int) {
  for (const auto& n : g.nodes(id)) {
    if (n.op == Op::Int) {
      is_int = true;
      return static_cast<double>(static_cast<std::int64_t>(n.bits));
    }
  }
  for (const auto& n : g.nodes(id)) {
    if (n.op == Op::Real) {
      is_int = false;
      return bits_real(n.bits);
    }
  }
  return std::nullopt;
}

RewriteRule to_zero(const std::string& name, const std::string& lhs) {
  RewriteRule r = make_rule(name, lhs, "");
  r.apply = [](EGraph& g, const Match& m, const EGraph::Extractor&) -> std::optional<EClassId> {
    return g.add_term(zero_for(g.type(m.root)));
  };
  return r;
}

RewriteRule fold(const std::string& name, const std::string& lhs, char op) {
  RewriteRule r = make_rule(name, lhs, "", "both operands are constants");
  r.guard = [](const EGraph& g, const Match& m) {
    return g.is_constant(m.classes.at("?a")) && g.is_constant(m.classes.at("?b"));
  };
  r.apply = [op](EGraph& g, const Match& m, const EGraph::Extractor&) -> std::optional<EClassId> {
    bool ia = false, ib = false;
    double a = *constant(g, m.classes.at("?a"), ia);
    double b = *constant(g, m.classes.at("?b"), ib);
    if (op == '=') {
      if (ia != ib) return std::nullopt;
      return g.add_term(ex::bool_(a == b));
    }
    double v = op == '+' ? a + b : a * b;
    if (ia && ib) return g.add_term(ex::int_(static_cast<std::int64_t>(v)));
    if (!std::isfinite(v)) return std::nullopt;
    return g.add_term(ex::real(v));
  };
  return r;
}

std::set<std::string> binders(const ExprPtr& e) {
  std::set<std::string> out;
  std::function<void(const ExprPtr&)> go = [&](const ExprPtr& x) {
    if (const auto* s = x->as<ast::Sum>()) {
      out.insert(s->key);
      out.insert(s->val);
    } else if (const auto* l = x->as<ast::Let>()) {
      out.insert(l->var);
    }
    for_each_child(*x, go);
  };
  go(e);
  return out;
}

std::vector<RewriteRule> build_rules() {
  std::vector<RewriteRule> rules;
  auto add = [&](RewriteRule r) { rules.push_back(std::move(r)); };

  add(to_zero("mul-zero-l", "{ } * ?a"));
  add(to_zero("mul-zero-r", "?a * { }"));
  add(to_zero("mul-zero-real-l", "0.0 * ?a"));
  add(to_zero("mul-zero-real-r", "?a * 0.0"));
  add(make_rule("add-zero-l", "{ } + ?a", "?a"));
  add(make_rule("add-zero-r", "?a + { }", "?a"));
  add(make_rule("add-zero-real-l", "0.0 + ?a", "?a"));
  add(make_rule("add-zero-real-r", "?a + 0.0", "?a"));
  add(to_zero("lookup-zero", "{ }(?k)"));
  add(to_zero("sum-zero", "sum(<?k, ?v> in { }) ?b"));
  add(to_zero("singleton-zero", "{ ?k -> { } }"));
  add(to_zero("singleton-zero-real", "{ ?k -> 0.0 }"));
  add(to_zero("if-zero", "if ?c then { }"));

  add(fold("fold-add", "?a + ?b", '+'));
  add(fold("fold-mul", "?a * ?b", '*'));
  add(fold("fold-eq", "?a = ?b", '='));
  add(make_rule("mul-one-l", "1.0 * ?a", "?a"));
  add(make_rule("mul-one-r", "?a * 1.0", "?a"));
  add(make_rule("eq-refl", "?a = ?a", "true"));
  add(make_rule("if-true", "if true then ?a", "?a"));
  add(to_zero("if-false", "if false then ?a"));

  add(make_rule("mul-comm", "?a * ?b", "?b * ?a", "?a or ?b is a scalar",
                [](const EGraph& g, const Match& m) { return scalar(g, m, "?a") || scalar(g, m, "?b"); }));
  add(make_rule("mul-assoc-l", "?a * (?b * ?c)", "(?a * ?b) * ?c"));
  add(make_rule("mul-assoc-r", "(?a * ?b) * ?c", "?a * (?b * ?c)"));
  add(make_rule("singleton-mul-r", "{ ?k -> ?v } * ?e", "{ ?k -> ?v * ?e }"));
  add(make_rule("singleton-mul-l", "?s * { ?k -> ?v }", "{ ?k -> ?s * ?v }", "?s is a scalar",
                [](const EGraph& g, const Match& m) { return scalar(g, m, "?s"); }));
  add(make_rule("singleton-factor", "{ ?k -> ?s * ?e }", "?s * { ?k -> ?e }", "?s is a scalar",
                [](const EGraph& g, const Match& m) { return scalar(g, m, "?s"); }));

  add(make_rule("lookup-singleton-exact", "{ ?k -> ?v }(?k)", "?v"));
  add(make_rule("lookup-unique-singleton", "{ unique(?k) -> ?v }(?k)", "?v"));
  add(make_rule("lookup-singleton", "{ ?k -> ?v }(?j)", "if ?k = ?j then ?v"));
  add(make_rule("range-lookup", "(0:?n)(?i)", "?i"));
  add(make_rule("lookup-sum", "(sum(<?k, ?v> in ?r) ?b)(?j)", "sum(<?k, ?v> in ?r) ?b(?j)",
                "?k, ?v not free in ?j",
                [](const EGraph& g, const Match& m) { return avoids(g, m, "?j", {"?k", "?v"}); }));
  auto dense_guard = [](const EGraph& g, const Match& m) {
    return g.dense(m.classes.at("?d")) && avoids(g, m, "?j", {"?k", "?v"});
  };
  add(make_rule("sum-select-dense", "sum(<?k, ?v> in ?d) if ?k = ?j then ?b",
                "let ?k = ?j in let ?v = ?d(?j) in ?b", "?d holds every key; ?k, ?v not free in ?j",
                dense_guard));
  add(make_rule("sum-select-dense-r", "sum(<?k, ?v> in ?d) if ?j = ?k then ?b",
                "let ?k = ?j in let ?v = ?d(?j) in ?b", "?d holds every key; ?k, ?v not free in ?j",
                dense_guard));

  add(make_rule("dead-let", "let ?x = ?e in ?b", "?b", "?x not free in ?b",
                [](const EGraph& g, const Match& m) { return avoids(g, m, "?b", {"?x"}); }));
  {
    RewriteRule r = make_rule("let-inline", "let ?x = ?e in ?b", "",
                              "?e is an atom or ?x occurs once in ?b");
    r.apply = [](EGraph& g, const Match& m,
                 const EGraph::Extractor& ex) -> std::optional<EClassId> {
      EClassId e = m.classes.at("?e");
      const std::string& x = m.names.at("?x");
      auto body = ex.extract(m.classes.at("?b"));
      if (!body) return std::nullopt;
      int uses = count_free(body->term, x);
      if (uses == 0) return std::nullopt;
      if (uses > 1 && !g.has_atom(e)) return std::nullopt;
      const auto& fv = g.free_vars(e);
      for (const auto& b : binders(body->term)) {
        if (fv.count(b)) return std::nullopt;
      }
      return g.add_term(body->term, {{x, e}});
    };
    add(std::move(r));
  }

  auto invariant = [](const char* cls) {
    return [cls](const EGraph& g, const Match& m) { return avoids(g, m, cls, {"?k", "?v"}); };
  };
  add(make_rule("sum-factor-l", "sum(<?k, ?v> in ?r) ?s * ?b", "?s * (sum(<?k, ?v> in ?r) ?b)",
                "?k, ?v not free in ?s", invariant("?s")));
  add(make_rule("sum-factor-r", "sum(<?k, ?v> in ?r) ?b * ?s", "(sum(<?k, ?v> in ?r) ?b) * ?s",
                "?k, ?v not free in ?s", invariant("?s")));
  add(make_rule("singleton-sum-in", "sum(<?k, ?v> in ?r) { ?j -> ?b }",
                "{ ?j -> sum(<?k, ?v> in ?r) ?b }", "?k, ?v not free in ?j", invariant("?j")));
  add(make_rule("singleton-sum-out", "{ ?j -> sum(<?k, ?v> in ?r) ?b }",
                "sum(<?k, ?v> in ?r) { ?j -> ?b }", "?k, ?v not free in ?j", invariant("?j")));
  add(make_rule("outer-product", "sum(<?k, ?v> in ?r) { ?k -> ?v * ?e }", "?r * ?e",
                "?k, ?v not free in ?e", invariant("?e")));
  add(make_rule("identity-map", "sum(<?k, ?v> in ?r) { ?k -> ?v }", "?r"));
  add(make_rule("fuse-unique",
                "sum(<?k, ?v> in sum(<?k2, ?v2> in ?r) { unique(?f) -> ?g }) ?b",
                "sum(<?k2, ?v2> in ?r) let ?k = ?f in let ?v = ?g in ?b",
                "keys ?f are pairwise distinct; ?k2, ?v2 not free in ?b; ?b vanishes when ?v is zero",
                [](const EGraph& g, const Match& m) {
                  std::set<EClassId> visiting;
                  return avoids(g, m, "?b", {"?k2", "?v2"}) &&
                         vanishes_with(g, m.classes.at("?b"), m.names.at("?v"), visiting);
                }));
  return rules;
}

}  // namespace

const std::vector<RewriteRule>& default_rules() {
  static const std::vector<RewriteRule> rules = build_rules();
  return rules;
}

SaturationResult saturate(const ExprPtr& e, const TypeEnv& env, const SaturationOptions& opts,
                          const std::vector<RewriteRule>& rules) {
  SaturationResult res;
  ExprPtr input = rename_binders_unique(e);
  Type want = typecheck(env, input);
  res.input_cost = term_cost(input, env, opts.cost);
  EGraph g(env, opts.dense, opts.cost);
  EClassId root = g.add_term(input);
  g.rebuild();

  for (res.iterations = 0; res.iterations < opts.max_iterations;) {
    ++res.iterations;
    std::vector<std::pair<const RewriteRule*, Match>> found;
    bool exhausted = false;
    for (const auto& rule : rules) {
      for (EClassId c : g.classes()) {
        for (auto& m : match_pattern(g, rule.lhs, c, opts.max_matches + 1 - found.size())) {
          if (rule.guard && !rule.guard(g, m)) continue;
          found.emplace_back(&rule, std::move(m));
        }
        if (found.size() > opts.max_matches) {
          exhausted = true;
          break;
        }
      }
      if (exhausted) break;
    }
    std::size_t before = g.node_count();
    bool merged = false;
    EGraph::Extractor snapshot(g);
    for (const auto& [rule, m] : found) {
      std::optional<EClassId> rhs;
      if (rule->apply) {
        rhs = rule->apply(g, m, snapshot);
      } else {
        rhs = instantiate(g, rule->rhs, m);
      }
      if (rhs && g.merge(m.root, *rhs)) merged = true;
      if (g.node_count() > opts.max_nodes) break;
    }
    g.rebuild();
    if (exhausted) break;
    if (!merged && g.node_count() == before) {
      res.saturated = true;
      break;
    }
    if (g.node_count() > opts.max_nodes) break;
  }
  res.nodes = g.node_count();

  res.term = input;
  res.cost = res.input_cost;
  auto best = g.extractor().extract(root);
  if (best) {
    auto t = try_typecheck(env, best->term);
    bool scoped = true;
    for (const auto& v : free_vars(best->term)) scoped = scoped && env.contains(v);
    double c = term_cost(best->term, env, opts.cost);
    if (scoped && t && (want.is_unknown() || *t == want) && c <= res.input_cost) {
      res.term = best->term;
      res.cost = c;
    }
  }
  return res;
}

}  // namespace sdg
