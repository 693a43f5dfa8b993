#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdgrad/backend.hpp"
#include "sdgrad/catalog.hpp"
#include "sdgrad/instance.hpp"
#include "sdgrad/pipeline.hpp"

namespace sdg {

/// Differentiated and optimized catalog kernel with its resolved storage.
struct GradientSetup {
  const KernelEntry* kernel = nullptr;
  std::string wrt;
  std::vector<StorageSpec> specs;
  PipelineResult pipeline;

  /// `<KERNEL>_wrt_<wrt>`
  std::string function_name() const;
  KernelSignature signature() const;
};

/// Runs the pipeline on a catalog kernel. Empty `wrt` and `specs` select the
/// catalog defaults.
GradientSetup prepare_gradient(const KernelEntry& k, const std::string& wrt = "",
                               const std::string& specs = "", const PipelineOptions& base = {});

/// Dimensions of the differentiation target of `k` under `dims`.
std::vector<std::int64_t> wrt_shape(const KernelEntry& k, const std::string& wrt,
                                    const std::map<std::string, std::int64_t>& dims);

struct VerifyOptions {
  double eps = 1e-5;
  /// Perturb every coordinate of the target's shape rather than only its
  /// stored ones.
  bool dense_support = true;
  double abs_tol = 1e-6;
  double rel_tol = 1e-4;
};

struct VerifyReport {
  /// Optimized physical gradient evaluated on the backing arrays.
  Value gradient;
  /// Optimized logical gradient evaluated on the logical inputs.
  Value logical;
  Value oracle;
  /// Worst of the two comparisons against the oracle.
  ValueDiff diff;
  bool pass = false;
};

VerifyReport verify_gradient(const GradientSetup& g, const KernelInstance& inst,
                             const std::vector<std::int64_t>& shape, const VerifyOptions& opts = {});

struct BenchCell {
  std::map<std::string, std::int64_t> dims;
  double density = 1.0;
};

struct BenchOptions {
  int repeats = 3;
  std::uint64_t seed = 1;
  bool verify = false;
  VerifyOptions verify_opts;
  /// Spec text; empty selects the catalog default.
  std::string specs;
};

struct BenchResult {
  std::string kernel;
  std::map<std::string, std::int64_t> dims;
  double density = 0;
  std::int64_t nnz = 0;
  std::vector<std::pair<std::string, double>> stage_ms;
  /// Interpreted run time of the physical gradient per repeat.
  std::vector<double> run_ms;
  double median_ms = 0;
  EvalStats ops;
  /// Sum of the gradient's stored leaves.
  double checksum = 0;
  std::optional<double> oracle_max_abs;
  std::optional<double> oracle_max_rel;
};

std::vector<BenchResult> bench_command(const KernelEntry& k, const std::vector<BenchCell>& sweep,
                                       const BenchOptions& opts = {});

/// JSON array with one object per cell.
std::string bench_json(const std::vector<BenchResult>& results);

struct FixtureOptions {
  std::string dir;
  int count = 10;
  std::uint64_t seed = 1;
  double density = 0.25;
  std::map<std::string, std::int64_t> dims = {{"n", 12}, {"m", 10}, {"k", 9}};
};

/// For VVD, SMVM and BATAX writes `<fn>.cpp` (kernel plus dump-reading
/// `main`), `<fn>_<i>.sdg1` inputs and `<fn>_<i>.expected` interpreter
/// gradients; also `semiring_vectors.txt` with lines `op<TAB>a<TAB>b<TAB>result`.
/// Returns the written paths.
std::vector<std::string> emit_runtime_fixtures(const FixtureOptions& opts);

}  // namespace sdg
