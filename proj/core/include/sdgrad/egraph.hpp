#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sdgrad/expr.hpp"
#include "sdgrad/optimizer.hpp"
#include "sdgrad/typecheck.hpp"

namespace sdg {

using EClassId = std::uint32_t;

enum class Op : std::uint8_t {
  Sum,
  Singleton,
  Empty,
  Lookup,
  Let,
  Var,
  Not,
  If,
  Add,
  Mul,
  Int,
  Real,
  Bool,
  Unary,
  Eq,
  Range,
  SubArray,
  Unique,
};

/// Operator plus child classes. `name`/`name2` hold binder, variable or
/// operation names; `bits` holds integer, boolean and real payloads.
struct ENode {
  Op op = Op::Int;
  std::string name;
  std::string name2;
  std::uint64_t bits = 0;
  std::optional<Type> type;
  std::vector<EClassId> kids;

  friend bool operator<(const ENode& a, const ENode& b);
  friend bool operator==(const ENode& a, const ENode& b);
};

/// Equality graph over terms with named binders. Binder names are expected
/// to be globally unique (see `rename_binders_unique`), which lets every
/// variable carry a single type.
///
/// Per-class analyses: the type, the free variables shared by every member
/// (a variable outside this set can be dropped by choosing another member),
/// and whether the class denotes a dictionary holding every key of its
/// index space (declared dense inputs, ranges, rows of those).
class EGraph {
 public:
  EGraph(const TypeEnv& inputs, std::set<std::string> dense = {}, CostModel cost = {});

  EClassId add(ENode n);
  /// Adds a term. Free variables listed in `holes` stand for existing classes.
  EClassId add_term(const ExprPtr& e, const std::map<std::string, EClassId>& holes = {});
  EClassId find(EClassId id) const;
  /// Returns true when the classes were distinct.
  bool merge(EClassId a, EClassId b);
  /// Restores congruence closure and the analyses.
  void rebuild();

  std::vector<EClassId> classes() const;
  const std::vector<ENode>& nodes(EClassId id) const;
  std::size_t node_count() const { return memo_.size(); }
  std::size_t class_count() const { return classes().size(); }

  /// Unknown until some member determines it.
  Type type(EClassId id) const;
  const std::set<std::string>& free_vars(EClassId id) const;
  bool dense(EClassId id) const;
  bool is_constant(EClassId id) const;
  /// Variable, constant or empty dictionary among the members.
  bool has_atom(EClassId id) const;

  /// Registers the type of a binder introduced by a rewrite.
  void declare(const std::string& name, const Type& t);
  std::optional<Type> var_type(const std::string& name) const;

  /// True when `e` is one of the terms represented by class `id`.
  bool represents(EClassId id, const ExprPtr& e) const;

  struct Extraction {
    ExprPtr term;
    double cost = 0;
  };
  /// Minimum-cost member of every class. Ties prefer smaller terms, then the
  /// earlier operator. Only members whose free variables equal the class's
  /// are eligible, so the result is well scoped.
  class Extractor {
   public:
    explicit Extractor(const EGraph& g);
    std::optional<Extraction> extract(EClassId id) const;

   private:
    struct Best {
      double cost = 0;
      std::size_t size = 0;
      ENode node;
    };
    ExprPtr build(EClassId id, int depth) const;
    const EGraph& g_;
    std::map<EClassId, Best> best_;
    std::map<EClassId, double> nnz_;
  };
  Extractor extractor() const { return Extractor(*this); }

  /// Every represented term of depth at most `depth`, up to `limit` terms.
  std::vector<ExprPtr> enumerate(EClassId id, int depth, std::size_t limit) const;

  const CostModel& cost_model() const { return cost_; }
  bool input(const std::string& name) const { return inputs_.count(name) > 0; }
  bool sum_bound(const std::string& name) const { return sum_values_.count(name) > 0; }
  std::optional<EClassId> let_bound(const std::string& name) const;

 private:
  struct Data {
    Type type = Type::unknown();
    std::set<std::string> fv;
    bool dense = false;
  };
  struct Class {
    std::vector<ENode> nodes;
    std::vector<std::pair<ENode, EClassId>> parents;
    Data data;
  };

  ENode canonical(ENode n) const;
  Data node_data(const ENode& n) const;
  bool join(Data& into, const Data& from) const;
  void propagate(std::vector<EClassId> changed);
  EClassId add_rec(const ExprPtr& e, const std::map<std::string, EClassId>& holes,
                   std::set<std::string>& shadowed);

  mutable std::vector<EClassId> parent_;
  std::map<EClassId, Class> classes_;
  std::map<ENode, EClassId> memo_;
  std::vector<EClassId> pending_;
  std::map<std::string, Type> var_types_;
  std::set<std::string> inputs_;
  std::set<std::string> dense_inputs_;
  std::set<std::string> sum_values_;
  std::map<std::string, EClassId> lets_;
  CostModel cost_;
};

/// Assignment of pattern variables: `?x` in expression position binds a
/// class, `?x` in binder position binds a name.
struct Match {
  EClassId root = 0;
  std::map<std::string, EClassId> classes;
  std::map<std::string, std::string> names;
};

/// One directed equation. Patterns are terms in the surface syntax whose
/// `?`-prefixed identifiers are pattern variables. When `apply` is set it
/// builds the right-hand side instead of `rhs`; it receives the extraction
/// computed before the current round of rewrites.
struct RewriteRule {
  std::string name;
  ExprPtr lhs;
  ExprPtr rhs;
  /// Human-readable side condition.
  std::string condition;
  std::function<bool(const EGraph&, const Match&)> guard;
  std::function<std::optional<EClassId>(EGraph&, const Match&, const EGraph::Extractor&)> apply;
};

RewriteRule make_rule(const std::string& name, const std::string& lhs, const std::string& rhs,
                      std::string condition = {},
                      std::function<bool(const EGraph&, const Match&)> guard = {});

/// Matches of `pattern` rooted at class `id`, at most `limit` of them.
std::vector<Match> match_pattern(const EGraph& g, const ExprPtr& pattern, EClassId id,
                                 std::size_t limit = static_cast<std::size_t>(-1));

/// Adds the instantiation of `pattern` under `m`.
EClassId instantiate(EGraph& g, const ExprPtr& pattern, const Match& m);

/// Algebraic and sparsity rules used by `saturate`.
const std::vector<RewriteRule>& default_rules();

struct SaturationOptions {
  int max_iterations = 24;
  std::size_t max_nodes = 50000;
  /// Rule matches gathered in one iteration before giving up.
  std::size_t max_matches = 100000;
  /// Inputs whose dictionaries hold every key of their index space.
  std::set<std::string> dense;
  CostModel cost;
};

struct SaturationResult {
  ExprPtr term;
  /// False when the iteration or node budget ran out before a fixpoint.
  bool saturated = false;
  int iterations = 0;
  std::size_t nodes = 0;
  double input_cost = 0;
  double cost = 0;
};

SaturationResult saturate(const ExprPtr& e, const TypeEnv& env, const SaturationOptions& opts = {},
                          const std::vector<RewriteRule>& rules = default_rules());

}  // namespace sdg
