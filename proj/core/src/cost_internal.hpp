#pragma once

#include <vector>

#include "sdgrad/optimizer.hpp"

namespace sdg::detail {

struct Estimate {
  double cost = 0;
  double nnz = 1;
};

enum class CostKind {
  Leaf,
  Empty,
  Var,
  Scalar,
  Lookup,
  Singleton,
  Sum,
  Let,
  Mul,
  Add,
  If,
  Range,
  SubArray,
  Unique,
};

/// Shared by tree costing and e-graph extraction. `kids` are in child order
/// (for Sum: range then body; for Let: bound then body). `self_dict` tells
/// whether the node produces a dictionary. For Mul, `lhs_dict`/`rhs_dict`
/// describe the operands; for Lookup, `lhs_dict` marks array or range
/// storage. For Var, `var_nnz` is the estimate of the variable.
inline Estimate estimate(const CostModel& m, CostKind kind, const std::vector<Estimate>& kids,
                         bool self_dict, bool lhs_dict = false, bool rhs_dict = false,
                         double var_nnz = 1) {
  double children = 0;
  for (const auto& k : kids) children += k.cost;
  switch (kind) {
    case CostKind::Leaf:
      return {1, 1};
    case CostKind::Empty:
      return {1, 0};
    case CostKind::Var:
      return {1, var_nnz};
    case CostKind::Scalar:
      return {1 + children, 1};
    case CostKind::Lookup:
      return {(lhs_dict ? m.array_lookup : m.hash_lookup) + children,
              self_dict ? m.bound_nnz : 1};
    case CostKind::Singleton:
      return {m.singleton + children, kids[1].nnz};
    case CostKind::Sum: {
      double n = kids[0].nnz;
      double merge = self_dict ? kids[1].nnz : 0;
      return {1 + kids[0].cost + m.iteration * n * (kids[1].cost + merge),
              self_dict ? n * kids[1].nnz : 1};
    }
    case CostKind::Let:
      return {1 + children, kids[1].nnz};
    case CostKind::Mul: {
      double c = 1 + children;
      if (lhs_dict || rhs_dict) c += kids[0].nnz * kids[1].nnz;
      if (lhs_dict && !rhs_dict) c += m.orientation_penalty;
      return {c, kids[0].nnz * kids[1].nnz};
    }
    case CostKind::Add:
      return {1 + children, kids[0].nnz + kids[1].nnz};
    case CostKind::If:
      return {1 + children, kids[1].nnz};
    case CostKind::Range:
      return {1 + children, m.range_nnz};
    case CostKind::SubArray:
      return {1 + children, m.subarray_nnz};
    case CostKind::Unique:
      return {children, kids[0].nnz};
  }
  return {1 + children, 1};
}

}  // namespace sdg::detail
