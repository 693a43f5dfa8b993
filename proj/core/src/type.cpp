#include "sdgrad/type.hpp"

#include <cctype>

#include "sdgrad/error.hpp"

namespace sdg {

Type Type::dict(Type key, Type value) {
  if (!key.is_index()) {
    throw TypeError("dictionary key must be an index type, got " + key.str());
  }
  Type t(Kind::Dict);
  t.dict_ = std::make_shared<const std::pair<Type, Type>>(std::move(key), std::move(value));
  return t;
}

Type Type::tensor(int order) {
  Type t = real();
  for (int i = 0; i < order; ++i) t = dict(integer(), t);
  return t;
}

bool Type::is_tensor() const {
  switch (kind_) {
    case Kind::Real:
    case Kind::Unknown:
      return true;
    case Kind::Dict:
      return dict_->second.is_tensor();
    default:
      return false;
  }
}

bool Type::is_additive() const {
  switch (kind_) {
    case Kind::Real:
    case Kind::Int:
    case Kind::Unknown:
      return true;
    case Kind::Dict:
      return dict_->second.is_additive();
    default:
      return false;
  }
}

const Type& Type::key() const {
  if (kind_ != Kind::Dict) throw TypeError("key() on non-dictionary type " + str());
  return dict_->first;
}

const Type& Type::value() const {
  if (kind_ != Kind::Dict) throw TypeError("value() on non-dictionary type " + str());
  return dict_->second;
}

int Type::order() const {
  if (kind_ == Kind::Real) return 0;
  if (kind_ != Kind::Dict || !dict_->first.is_int()) return -1;
  int inner = dict_->second.order();
  return inner < 0 ? -1 : inner + 1;
}

int Type::depth() const {
  return kind_ == Kind::Dict ? 1 + dict_->second.depth() : 0;
}

std::string Type::str() const {
  switch (kind_) {
    case Kind::Real:
      return "real";
    case Kind::Bool:
      return "bool";
    case Kind::Int:
      return "int";
    case Kind::DenseInt:
      return "dense_int";
    case Kind::Unknown:
      return "?";
    case Kind::Dict:
      return "{" + dict_->first.str() + " -> " + dict_->second.str() + "}";
  }
  return "?";
}

bool operator==(const Type& a, const Type& b) {
  if (a.kind_ != b.kind_) return false;
  if (a.kind_ != Type::Kind::Dict) return true;
  if (a.dict_ == b.dict_) return true;
  return a.dict_->first == b.dict_->first && a.dict_->second == b.dict_->second;
}

Type otimes(const Type& lhs, const Type& rhs) {
  if (!lhs.is_tensor() || !rhs.is_tensor()) {
    throw TypeError("⊗ undefined for " + lhs.str() + " and " + rhs.str());
  }
  if (lhs.is_unknown()) return Type::unknown();
  if (lhs.is_real()) return rhs;
  return Type::dict(lhs.key(), otimes(lhs.value(), rhs));
}

Type unify(const Type& a, const Type& b) {
  if (a.is_unknown()) return b;
  if (b.is_unknown()) return a;
  if (a.is_dict() && b.is_dict()) {
    Type k = a.key() == b.key() ? a.key() : Type::integer();
    return Type::dict(k, unify(a.value(), b.value()));
  }
  if (a != b) throw TypeError("type mismatch: " + a.str() + " vs " + b.str());
  return a;
}

namespace {

class TypeReader {
 public:
  explicit TypeReader(const std::string& s) : s_(s) {}

  Type read() {
    Type t = one();
    skip();
    if (pos_ != s_.size()) fail("trailing characters");
    return t;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(const std::string& tok) {
    skip();
    if (s_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& why) {
    throw Error("bad type '" + s_ + "': " + why);
  }

  Type one() {
    if (eat("{")) {
      Type k = one();
      if (!eat("->")) fail("expected '->'");
      Type v = one();
      if (!eat("}")) fail("expected '}'");
      return Type::dict(k, v);
    }
    if (eat("dense_int")) return Type::dense_int();
    if (eat("real")) return Type::real();
    if (eat("bool")) return Type::boolean();
    if (eat("int")) return Type::integer();
    if (eat("tensor")) {
      skip();
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected tensor order");
      return Type::tensor(std::stoi(s_.substr(start, pos_ - start)));
    }
    fail("unknown type");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Type parse_type(const std::string& text) { return TypeReader(text).read(); }

}  // namespace sdg
