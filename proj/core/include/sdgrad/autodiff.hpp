#pragma once

#include <map>
#include <memory>
#include <string>

#include "sdgrad/expr.hpp"
#include "sdgrad/names.hpp"
#include "sdgrad/typecheck.hpp"

namespace sdg {

/// A-normal form: operands of every operator, sum ranges and conditions are
/// variables or constants; sum bodies, branches and let bodies are blocks of
/// lets ending in an atom. Existing let names are kept, so the transform is
/// idempotent.
ExprPtr to_anf(const ExprPtr& e);

/// True when `e` is in the form produced by `to_anf`.
bool is_anf(const ExprPtr& e);

/// Maps each differentiated variable to its tangent variable.
struct DualContext {
  std::map<std::string, std::string> tangent;

  /// Context covering every variable of `env`.
  static DualContext from_env(const TypeEnv& env);
  void add(const std::string& name) { tangent[name] = tangent_name(name); }
};

struct FadConfig {
  /// Tangent type; must be in the D grammar.
  Type tau = Type::real();
  /// Source of names for binders introduced by the ⊙τ expansion. When null a
  /// generator seeded with the names of the input is used.
  std::shared_ptr<NameGen> names;
  /// Reject inputs that are not in A-normal form.
  bool require_anf = true;
};

/// Scalar forward-mode transformation: the tangent part of the input, with
/// lets pairing each primal binding with its tangent.
ExprPtr fad_scalar(const ExprPtr& e, const TypeEnv& env, const DualContext& ctx,
                   bool require_anf = true);

/// Tensorized forward-mode transformation with tangent type `cfg.tau`.
ExprPtr fad_tensor(const FadConfig& cfg, const ExprPtr& e, const TypeEnv& env,
                   const DualContext& ctx);

/// Tangent type of a primal type: `T ⊗ τ` for tensors, real for discrete types.
Type tangent_type(const Type& t, const Type& tau);

/// Order-2n diagonal seed for variable `x` of type `t`.
ExprPtr onehot(const Type& t, const std::string& x, NameGen& names);

/// `let v' = ingrad v wrt in ... F_τ[e]` over the free variables of `e`
/// in name order, with τ the type of `wrt`.
ExprPtr expand_gradient(const ExprPtr& e, const std::string& wrt, const TypeEnv& env);

}  // namespace sdg
