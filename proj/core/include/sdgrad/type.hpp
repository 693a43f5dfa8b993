#pragma once

#include <memory>
#include <string>
#include <utility>

namespace sdg {

/// Type tree of the language: scalars, index types and (nested) dictionaries.
///
/// `Unknown` is the type given to an empty dictionary literal that carries no
/// annotation. It behaves as a polymorphic additive zero and unifies with any
/// tensor type.
class Type {
 public:
  enum class Kind { Real, Bool, Int, DenseInt, Dict, Unknown };

  Type() : kind_(Kind::Real) {}

  static Type real() { return Type(Kind::Real); }
  static Type boolean() { return Type(Kind::Bool); }
  static Type integer() { return Type(Kind::Int); }
  static Type dense_int() { return Type(Kind::DenseInt); }
  static Type unknown() { return Type(Kind::Unknown); }
  static Type dict(Type key, Type value);
  /// `tensor 0` is real, `tensor (n+1)` is `{int -> tensor n}`.
  static Type tensor(int order);

  Kind kind() const { return kind_; }
  bool is_real() const { return kind_ == Kind::Real; }
  bool is_bool() const { return kind_ == Kind::Bool; }
  bool is_int() const { return kind_ == Kind::Int; }
  bool is_dict() const { return kind_ == Kind::Dict; }
  bool is_unknown() const { return kind_ == Kind::Unknown; }
  bool is_index() const { return kind_ == Kind::Int || kind_ == Kind::DenseInt; }
  bool is_discrete() const { return kind_ == Kind::Int || kind_ == Kind::Bool; }

  /// Member of the D grammar: real, or a dictionary with index keys over D.
  /// Unknown counts as D.
  bool is_tensor() const;

  /// Values that can be summed: D types plus integer-valued physical arrays.
  bool is_additive() const;

  const Type& key() const;
  const Type& value() const;

  /// n such that this type is `tensor n`, or -1. Keys must be `int`.
  int order() const;

  /// Number of dictionary levels regardless of key kind (0 for scalars).
  int depth() const;

  std::string str() const;

  friend bool operator==(const Type& a, const Type& b);
  friend bool operator!=(const Type& a, const Type& b) { return !(a == b); }

 private:
  explicit Type(Kind k) : kind_(k) {}

  Kind kind_;
  std::shared_ptr<const std::pair<Type, Type>> dict_;
};

/// Type-level tensor product: `real ⊗ D = D`, `{I -> D1} ⊗ D2 = {I -> D1 ⊗ D2}`.
/// Throws TypeError when an operand is outside the D grammar.
Type otimes(const Type& lhs, const Type& rhs);

/// Join of two types where `Unknown` acts as a wildcard. Throws TypeError on
/// a genuine mismatch.
Type unify(const Type& a, const Type& b);

/// Parses `real`, `int`, `bool`, `dense_int`, `tensor N`, `{int -> T}`.
Type parse_type(const std::string& text);

}  // namespace sdg
