#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sdgrad/eval.hpp"
#include "sdgrad/expr.hpp"
#include "sdgrad/instance.hpp"
#include "sdgrad/storage.hpp"
#include "sdgrad/typecheck.hpp"

namespace sdg::fuzz {

/// x, y : real; V, W : tensor 1; A, B : tensor 2.
TypeEnv fuzz_env();

/// Random well-typed logical terms over `fuzz_env()`.
class TermGen {
 public:
  explicit TermGen(std::uint64_t seed) : rng_(seed) {}

  /// Term of type real (order 0), tensor 1 or tensor 2.
  ExprPtr term(int order, int depth);

 private:
  struct Scoped {
    std::string name;
    int order;  // -1 for keys
  };

  ExprPtr gen(int order, int depth);
  ExprPtr leaf(int order);
  ExprPtr key();
  ExprPtr sum_over(int body_order, int depth, int range_order, bool keyed);
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  std::string fresh(const char* base) { return base + std::to_string(++counter_); }

  std::mt19937_64 rng_;
  std::vector<Scoped> scope_;
  int counter_ = 0;
};

/// Keys are drawn from [0, kFuzzDim).
inline constexpr std::int64_t kFuzzDim = 5;

/// Values for every variable of `env`: reals in [-1, 1], tensors over
/// [0, kFuzzDim) with random sparsity. Variables in `dense` are full.
Env random_env(std::mt19937_64& rng, const TypeEnv& env, const std::vector<std::string>& dense = {});

/// Random physical format for each tensor input of `env`.
std::vector<StorageSpec> random_formats(std::mt19937_64& rng, const TypeEnv& env);

/// Backing arrays for `values` under `specs`.
Env physical_inputs(const Env& values, const TypeEnv& env, const std::vector<StorageSpec>& specs);

}  // namespace sdg::fuzz
