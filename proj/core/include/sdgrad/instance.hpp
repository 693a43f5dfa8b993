#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sdgrad/catalog.hpp"
#include "sdgrad/eval.hpp"
#include "sdgrad/storage.hpp"

namespace sdg {

/// Sparse tensor as sorted coordinate lists. Scalars have no dimensions and
/// one value.
struct SparseInstance {
  std::vector<std::int64_t> dims;
  double density = 1.0;
  std::uint64_t seed = 0;
  /// Lexicographically sorted, distinct coordinates.
  std::vector<std::vector<std::int64_t>> coords;
  std::vector<double> vals;

  std::int64_t nnz() const { return static_cast<std::int64_t>(vals.size()); }
  /// Nested dictionary (or real for scalars).
  Value value() const;
};

/// Each coordinate is present independently with probability `density`;
/// values are uniform in [0.1, 1.0]. Deterministic per seed. Throws
/// std::invalid_argument on bad dims or density.
SparseInstance gen_sparse(const std::vector<std::int64_t>& dims, double density, std::uint64_t seed);

/// Instance from a value of type tensor n.
SparseInstance from_value(const Value& v, const std::vector<std::int64_t>& dims);

/// Reads a `%%MatrixMarket matrix coordinate real general|symmetric` file.
/// Symmetric entries are mirrored. Throws ParseError.
SparseInstance load_matrix_market(std::istream& in);
SparseInstance load_matrix_market_file(const std::string& path);
/// Writes a general coordinate file with 1-based indices.
void write_matrix_market(std::ostream& out, const SparseInstance& m);

/// Backing arrays of `t` in the format of `spec`, named as in the spec.
/// Throws TransformError when the tensor order does not fit the format.
Env backing_arrays(const SparseInstance& t, const StorageSpec& spec);

/// Inputs of a catalog kernel in logical and physical form.
struct KernelInstance {
  std::map<std::string, SparseInstance> tensors;
  Env logical;
  Env physical;
  std::int64_t nnz = 0;
};

/// Samples every input of `k`. Tensors stored densely are generated at
/// density 1, the others at `density`. Scalars take their fixed value or a
/// uniform draw in [0.5, 2]. Missing dimension symbols default to 8.
/// Tensors in `given` are used as they are.
KernelInstance make_instance(const KernelEntry& k, const std::vector<StorageSpec>& specs,
                             const std::map<std::string, std::int64_t>& dims, double density,
                             std::uint64_t seed, const std::map<std::string, SparseInstance>& given = {});

}  // namespace sdg
