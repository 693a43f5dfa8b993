#pragma once

#include <map>
#include <set>
#include <string>

#include "sdgrad/expr.hpp"
#include "sdgrad/typecheck.hpp"

namespace sdg {

/// Removes symbolic zeros introduced by differentiation:
///
///   zero * e, e * zero        ~> zero of the product type
///   e + zero, zero + e        ~> e
///   zero(k)                   ~> zero one order lower
///   let x = zero in e         ~> e[x := zero]
///   sum(<k,v> in zero) e      ~> zero of the body type
///
/// plus `{k -> zero}` and `if c then zero` collapsing to zero. Runs to a
/// fixpoint; every step shrinks the term.
ExprPtr propagate_sparsity(const ExprPtr& e, const TypeEnv& env);

/// Drops unused lets and inlines lets bound to atoms or used exactly once
/// outside any loop body of the let.
ExprPtr inline_lets(const ExprPtr& e);

/// True when `e` is additive and homogeneous in variable `v`, i.e.
/// e[v := a + b] = e[v := a] + e[v := b] and e[v := 0] = 0. Syntactic and
/// conservative.
bool is_linear_in(const ExprPtr& e, const std::string& v);

/// Rewrites tensor products into nested sums whose only multiplications are
/// scalar ones:
///
///   e1 * e2  ~>  sum(<i1,v1> in e1) ... sum(<in,v> in v(n-1)) {i1 -> ... {in -> v * e2}}
///   s * e2   ~>  sum(<i1,v1> in e2) ... {i1 -> ... {in -> s * v}}
///
/// Non-atomic operands that would be re-evaluated inside the loops are
/// let-bound first.
ExprPtr normalize_mult(const ExprPtr& e, const TypeEnv& env);

/// Fuses loops over intermediate dictionaries whose consumer is linear in the
/// iterated value: sums over sums, singletons, lets, conditionals and
/// additions. Used after `normalize_mult` to remove temporaries.
ExprPtr fuse_loops(const ExprPtr& e);

/// True when every multiplication in `e` has real operands.
bool only_scalar_mults(const ExprPtr& e, const TypeEnv& env);

/// Symbolic cost of evaluating a term.
///
///   variable, constant       1
///   scalar operation         1 + children
///   lookup                   2 (hash) or 1 (array, range) + children
///   singleton                5 + children
///   sum(<k,v> in R) B        1 + c(R) + 10 * nnz(R) * (c(B) + m(B))
///   tensor product           1 + children + nnz(lhs) * nnz(rhs)
///
/// where m(B) is nnz(B) when B is a dictionary (merging into the result)
/// and 0 otherwise. nnz is a symbolic estimate: 100 for inputs and ranges,
/// 10 for values bound by a sum and for sub-arrays.
struct CostModel {
  double input_nnz = 100;
  double bound_nnz = 10;
  double range_nnz = 100;
  double subarray_nnz = 10;
  double iteration = 10;
  double singleton = 5;
  double hash_lookup = 2;
  double array_lookup = 1;
  /// Extra cost of `tensor * scalar` over `scalar * tensor`.
  double orientation_penalty = 1;
};

double term_cost(const ExprPtr& e, const TypeEnv& env, const CostModel& model = {});

}  // namespace sdg
