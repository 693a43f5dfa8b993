#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace sdg {

class Value;

/// Backing storage of a physical array: either reals or integers.
struct ArrayData {
  std::vector<double> reals;
  std::vector<std::int64_t> ints;
  bool is_real = true;

  std::int64_t size() const {
    return static_cast<std::int64_t>(is_real ? reals.size() : ints.size());
  }
};

/// Runtime datum. Dictionaries are finite maps from integer keys and never
/// store zero values. An empty dictionary doubles as the zero of every
/// additive type. Arrays and ranges are dense views used by physical
/// programs: iterating them visits every position, zeros included.
class Value {
 public:
  enum class Kind { Real, Int, Bool, Dict, Array, Range };
  using Map = std::map<std::int64_t, Value>;

  Value() : rep_(DictRep{}) {}
  static Value real(double v) { return Value(Rep(v)); }
  static Value integer(std::int64_t v) { return Value(Rep(v)); }
  static Value boolean(bool v) { return Value(Rep(v)); }
  static Value dict() { return Value(); }
  static Value dict(Map m);
  static Value array(std::vector<double> reals);
  static Value int_array(std::vector<std::int64_t> ints);
  static Value range(std::int64_t lo, std::int64_t hi);

  Kind kind() const { return static_cast<Kind>(rep_.index()); }
  bool is_real() const { return kind() == Kind::Real; }
  bool is_int() const { return kind() == Kind::Int; }
  bool is_bool() const { return kind() == Kind::Bool; }
  bool is_dict() const { return kind() == Kind::Dict; }
  bool is_array() const { return kind() == Kind::Array; }
  bool is_range() const { return kind() == Kind::Range; }
  /// Dict, array or range.
  bool is_collection() const { return is_dict() || is_array() || is_range(); }

  double as_real() const;
  std::int64_t as_int() const;
  bool as_bool() const;
  /// Real or integer as double; empty dictionary as 0.
  double as_number() const;
  /// Integer key; an empty dictionary (the zero) reads as 0.
  std::int64_t as_index() const;

  /// Additive identity: 0, 0.0 or an empty dictionary.
  bool is_zero() const;

  /// Entries of a dictionary. Empty map for non-dictionaries.
  const Map& entries() const;

  /// Number of stored entries (dictionaries) or positions (arrays, ranges).
  std::int64_t size() const;

  /// Value at `key`, or the polymorphic zero when absent.
  Value at(std::int64_t key) const;

  /// True for arrays of reals, false for integer arrays and non-arrays.
  bool is_real_array() const;

  /// Position bounds of an array view or range.
  std::int64_t lo() const;
  std::int64_t hi() const;
  /// Sub-view `[lo, hi)` of an array; keys stay absolute.
  Value slice(std::int64_t lo, std::int64_t hi) const;

  /// Calls `f(key, value)` for every entry in key order.
  template <typename F>
  void for_each(F&& f) const;

  /// Materializes an array or range into a dictionary (zeros elided).
  Value to_dict() const;

  /// Total number of stored scalar leaves.
  std::int64_t nnz() const;

  /// Adds `v` at `key` in place, eliding a resulting zero.
  void accumulate(std::int64_t key, Value v);

  /// Mutable map; detaches shared storage first.
  Map& mutable_entries();

 private:
  struct DictRep {
    std::shared_ptr<Map> map;
  };
  struct ArrayRep {
    std::shared_ptr<const ArrayData> data;
    std::int64_t lo;
    std::int64_t hi;
  };
  struct RangeRep {
    std::int64_t lo;
    std::int64_t hi;
  };
  using Rep = std::variant<double, std::int64_t, bool, DictRep, ArrayRep, RangeRep>;

  explicit Value(Rep r) : rep_(std::move(r)) {}

  Value array_elem(std::int64_t pos) const;

  Rep rep_;

  friend Value semiring_add(const Value& a, const Value& b);
  friend void add_into(Value& acc, Value v, std::int64_t* merged);
};

/// Pointwise sum with zero elision. Throws EvalError on incompatible operands.
Value semiring_add(const Value& a, const Value& b);

/// In-place `acc += v`. Reuses the accumulator's storage when unshared.
/// When `merged` is given it is incremented by the number of entries merged.
void add_into(Value& acc, Value v, std::int64_t* merged = nullptr);

/// Scalar product or tensor outer product.
Value semiring_mul(const Value& a, const Value& b);

/// Value-level negation (`-1 * v`).
Value negate(const Value& v);

/// Equality after zero elision within `max(abs_tol, rel_tol * |b|)` per leaf.
bool approx_equal(const Value& a, const Value& b, double abs_tol = 1e-6, double rel_tol = 1e-4);

/// Largest absolute and relative leafwise difference between two values.
struct ValueDiff {
  double max_abs = 0;
  double max_rel = 0;
  /// True when every leaf is within tolerance.
  bool ok = true;
};
ValueDiff compare_values(const Value& actual, const Value& expected, double abs_tol = 1e-6,
                         double rel_tol = 1e-4);

/// Exact equality after zero elision.
bool exact_equal(const Value& a, const Value& b);

/// `{0 -> {1 -> 2.0}}` style text.
std::string to_string(const Value& v);

/// Parses the text produced by `to_string`.
Value parse_value(const std::string& text);

/// Builds `{k1 -> {k2 -> ... leaf}}`.
Value singleton_path(const std::vector<std::int64_t>& path, const Value& leaf);

/// Stored scalar leaves with their key paths.
void for_each_leaf(const Value& v,
                   const std::function<void(const std::vector<std::int64_t>&, double)>& f);

template <typename F>
void Value::for_each(F&& f) const {
  switch (kind()) {
    case Kind::Dict: {
      const auto& d = std::get<DictRep>(rep_);
      if (!d.map) return;
      for (const auto& [k, v] : *d.map) f(k, v);
      return;
    }
    case Kind::Array: {
      const auto& a = std::get<ArrayRep>(rep_);
      for (std::int64_t p = a.lo; p < a.hi; ++p) f(p, array_elem(p));
      return;
    }
    case Kind::Range: {
      const auto& r = std::get<RangeRep>(rep_);
      for (std::int64_t p = r.lo; p < r.hi; ++p) f(p, Value::integer(p));
      return;
    }
    default:
      return;
  }
}

}  // namespace sdg
