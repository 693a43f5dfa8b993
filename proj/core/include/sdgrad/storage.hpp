#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sdgrad/expr.hpp"
#include "sdgrad/typecheck.hpp"

namespace sdg {

enum class Format {
  Scalar,
  VectorDense,
  VectorCOO,
  MatrixCSR,
  MatrixCSC,
  MatrixCOO,
  MatrixDenseRow,
  MatrixDenseCol,
};

/// Binds an input tensor to a physical format and its backing arrays.
///
/// Roles per format:
///   scalar        val
///   dense vector  len, arr
///   coo vector    len, row, val
///   csr, csc      len, pos, idx, val   (len = rows for csr, columns for csc)
///   coo matrix    len, row, col, val
///   dense matrix  rows, cols, arr
struct StorageSpec {
  std::string tensor;
  Format format = Format::VectorDense;
  /// Role name to array name, in role order.
  std::vector<std::pair<std::string, std::string>> arrays;

  const std::string& array(const std::string& role) const;
};

const char* format_keyword(Format f);
/// 0 for scalars, 1 for vectors, 2 for matrices.
int format_order(Format f);
std::vector<std::string> format_roles(Format f);
/// Type of a backing array: `int` for lengths, `{dense_int -> int}` for
/// index arrays, `{dense_int -> real}` for values, `real` for scalars.
Type role_type(Format f, const std::string& role);

/// Spec with the default array names (`X_V`, `X_len`, `A_VRow`, ...).
StorageSpec default_spec(const std::string& tensor, Format f);

/// Parses a comma-separated list of `name = kind` or
/// `name = kind(role=array, ...)`. Kinds: scalar, dense, coo, csr, csc,
/// dense_col. `dense` and `coo` stand for the vector formats until resolved
/// against a matrix type. Unlisted roles get default names. Throws ParseError.
std::vector<StorageSpec> parse_storage_specs(const std::string& text);

/// Fixes vector/matrix variants and default array names against the tensor
/// types in `env`, and adds scalar specs for real inputs without one.
/// Throws TransformError on order mismatches or unknown tensors.
std::vector<StorageSpec> resolve_storage(const std::vector<StorageSpec>& specs, const TypeEnv& env);

std::string to_string(const StorageSpec& s);

/// Physical definition of the tensor in terms of its arrays.
ExprPtr storage_definition(const StorageSpec& s);

/// Types of every backing array, in spec order.
TypeEnv physical_env(const std::vector<StorageSpec>& specs);

/// `let X1 = def1 in ... let Xn = defn in e`. Every free dictionary-typed
/// variable of `e` needs a spec. Throws TransformError.
ExprPtr compose_storage(const ExprPtr& e, const TypeEnv& env, const std::vector<StorageSpec>& specs);

}  // namespace sdg
