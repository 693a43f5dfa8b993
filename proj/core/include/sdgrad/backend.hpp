#pragma once

#include <string>
#include <variant>
#include <vector>

#include "sdgrad/eval.hpp"
#include "sdgrad/expr.hpp"
#include "sdgrad/storage.hpp"
#include "sdgrad/typecheck.hpp"

namespace sdg {

namespace ir {

struct Stmt;
using Block = std::vector<Stmt>;

/// `for key in [lo, hi)`, with `val = arr[key]`, or `val = key` without arr.
struct ForRange {
  std::string key;
  std::string val;
  ExprPtr lo;
  ExprPtr hi;
  ExprPtr arr;
  Block body;
};

/// `for (key, val) in dict`. Arrays are iterated by position.
struct ForEach {
  std::string key;
  std::string val;
  ExprPtr dict;
  Type dict_type;
  Block body;
};

struct DeclDict {
  std::string name;
  Type type;
};

struct DeclScalar {
  std::string name;
  Type type;
  ExprPtr init;
};

/// `dest[path...] += value`
struct AccumAdd {
  std::string dest;
  std::vector<ExprPtr> path;
  ExprPtr value;
};

struct IfThen {
  ExprPtr cond;
  Block body;
};

struct Stmt {
  std::variant<ForRange, ForEach, DeclDict, DeclScalar, AccumAdd, IfThen> node;
};

}  // namespace ir

struct Param {
  enum class Kind { Scalar, Length, IndexArray, ValueArray, Result };
  std::string name;
  Type type;
  Kind kind = Kind::Scalar;
  /// Storage the parameter belongs to, for comments.
  std::string tensor;
  Format format = Format::Scalar;
};

/// Parameters in storage declaration order, destination last.
struct KernelSignature {
  std::string name;
  std::vector<Param> params;

  const Param& result() const { return params.back(); }
};

/// Signature over the backing arrays of `specs` with a destination of
/// `result_type`. Free inputs without a spec become scalar parameters.
KernelSignature make_signature(const std::string& name, const std::vector<StorageSpec>& specs,
                               const TypeEnv& env, const Type& result_type);

struct Kernel {
  KernelSignature sig;
  ir::Block body;
};

struct LowerOptions {
  /// Accumulate directly into the destination. When off, every dictionary
  /// built by a loop nested in another loop gets its own temporary.
  bool dps = true;
};

/// Lowers a physical term whose multiplications are all scalar.
/// Throws TransformError on residual tensor products or unbound variables.
Kernel lower_dps(const ExprPtr& e, const KernelSignature& sig, const LowerOptions& opts = {});

/// Number of dictionary declarations nested inside loops.
int in_loop_dict_decls(const ir::Block& b);

/// Indented text form of the IR.
std::string dump_ir(const Kernel& k);

/// C++ type of a value of type `t`.
std::string cpp_type(const Type& t);

/// One C++ function in destination-passing style.
std::string emit_kernel(const Kernel& k);

struct EmitOptions {
  std::string runtime_header = "sdg_runtime.hpp";
  /// Adds a `main` that reads an SDG1 dump named on the command line, runs
  /// the kernel and prints the destination as a value literal.
  bool with_main = false;
};

/// Complete translation unit: runtime include, the kernels and optionally
/// a driver `main` for the first kernel.
std::string emit_source(const std::vector<Kernel>& kernels, const EmitOptions& opts = {});

/// Runs the IR. `inputs` binds every parameter except the destination.
Value run_kernel(const Kernel& k, const Env& inputs);

}  // namespace sdg
