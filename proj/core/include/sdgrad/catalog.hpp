#pragma once

#include <map>
#include <string>
#include <vector>

#include "sdgrad/expr.hpp"
#include "sdgrad/typecheck.hpp"

namespace sdg {

/// Input tensor of a catalog kernel. `shape` names a symbolic dimension per
/// order (empty for scalars).
struct TensorDecl {
  std::string name;
  std::vector<std::string> shape;
};

struct KernelEntry {
  std::string name;
  std::string source;
  std::string wrt;
  std::vector<TensorDecl> inputs;
  /// Storage used when none is given, in spec syntax.
  std::string default_specs;
  /// Scalars with a fixed value in generated instances.
  std::map<std::string, double> fixed_scalars;
  /// Order of the kernel's own result.
  int result_order = 0;

  TypeEnv env() const;
  ExprPtr term() const;
};

/// BATAX, SMMM, SMVM, VVA, VVD, VSM. Each entry is checked to typecheck on
/// first access.
const std::vector<KernelEntry>& kernel_catalog();

/// Entry by name (case-insensitive) or nullptr.
const KernelEntry* find_kernel(const std::string& name);

/// Entry for a user term. Every tensor axis uses the dimension `n`; `wrt`
/// is stored densely, other vectors as coo and matrices as csr. Throws
/// TypeError when the term does not typecheck.
KernelEntry user_kernel(const std::string& name, const std::string& source, const TypeEnv& env,
                        const std::string& wrt);

}  // namespace sdg
