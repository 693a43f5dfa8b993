#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sdgrad/egraph.hpp"
#include "sdgrad/storage.hpp"

namespace sdg {

/// Stage names in execution order:
///   input, pre-sat, anf, ad, sparsity, post-ad, storage, normalize, anf-final
const std::vector<std::string>& stage_names();

struct PipelineOptions {
  /// Differentiation target; empty optimizes the term itself.
  std::string wrt;
  /// Physical formats. Without them the storage stage is skipped and the
  /// later stages work on the logical term.
  std::optional<std::vector<StorageSpec>> storage;
  /// Inputs holding every key of their index space. Defaults to the inputs
  /// stored in dense formats, or to `wrt` when no storage is given.
  std::optional<std::set<std::string>> dense;
  SaturationOptions saturation;
  bool pre_saturate = true;
};

struct Stage {
  std::string name;
  ExprPtr term;
  double millis = 0;
  /// For saturation stages: whether a fixpoint was reached.
  std::optional<bool> saturated;
};

struct PipelineResult {
  std::vector<Stage> stages;
  TypeEnv logical_env;
  /// Types of the free variables of the physical term.
  TypeEnv physical_env;
  /// Resolved formats; empty when the storage stage was skipped.
  std::vector<StorageSpec> storage;
  Type result_type;

  const Stage& stage(const std::string& name) const;
  /// Differentiated and optimized logical term (`post-ad`).
  const ExprPtr& logical() const { return stage("post-ad").term; }
  /// Term handed to the backend (`normalize`).
  const ExprPtr& physical() const { return stage("normalize").term; }
};

/// Saturation, ANF, differentiation, sparsity propagation, saturation,
/// storage composition with saturation, multiplication normalization with
/// loop fusion, and a final ANF. Throws on ill-typed input.
PipelineResult run_pipeline(const ExprPtr& e, const TypeEnv& env, const PipelineOptions& opts);

}  // namespace sdg
