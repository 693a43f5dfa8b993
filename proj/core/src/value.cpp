#include "sdgrad/value.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "sdgrad/error.hpp"
#include "sdgrad/printer.hpp"

namespace sdg {

namespace {

const Value::Map& empty_map() {
  static const Value::Map m;
  return m;
}

const char* kind_str(Value::Kind k) {
  switch (k) {
    case Value::Kind::Real:
      return "real";
    case Value::Kind::Int:
      return "int";
    case Value::Kind::Bool:
      return "bool";
    case Value::Kind::Dict:
      return "dict";
    case Value::Kind::Array:
      return "array";
    case Value::Kind::Range:
      return "range";
  }
  return "?";
}

}  // namespace

Value Value::dict(Map m) {
  for (auto it = m.begin(); it != m.end();) {
    it = it->second.is_zero() ? m.erase(it) : std::next(it);
  }
  if (m.empty()) return Value();
  return Value(Rep(DictRep{std::make_shared<Map>(std::move(m))}));
}

Value Value::array(std::vector<double> reals) {
  auto d = std::make_shared<ArrayData>();
  d->reals = std::move(reals);
  d->is_real = true;
  std::int64_t n = d->size();
  return Value(Rep(ArrayRep{std::move(d), 0, n}));
}

Value Value::int_array(std::vector<std::int64_t> ints) {
  auto d = std::make_shared<ArrayData>();
  d->ints = std::move(ints);
  d->is_real = false;
  std::int64_t n = d->size();
  return Value(Rep(ArrayRep{std::move(d), 0, n}));
}

Value Value::range(std::int64_t lo, std::int64_t hi) { return Value(Rep(RangeRep{lo, std::max(lo, hi)})); }

double Value::as_real() const {
  if (auto p = std::get_if<double>(&rep_)) return *p;
  if (is_dict() && size() == 0) return 0.0;
  throw EvalError(std::string("expected real, got ") + kind_str(kind()));
}

std::int64_t Value::as_int() const {
  if (auto p = std::get_if<std::int64_t>(&rep_)) return *p;
  if (is_dict() && size() == 0) return 0;
  throw EvalError(std::string("expected int, got ") + kind_str(kind()));
}

bool Value::as_bool() const {
  if (auto p = std::get_if<bool>(&rep_)) return *p;
  throw EvalError(std::string("expected bool, got ") + kind_str(kind()));
}

double Value::as_number() const {
  if (auto p = std::get_if<double>(&rep_)) return *p;
  if (auto p = std::get_if<std::int64_t>(&rep_)) return static_cast<double>(*p);
  if (is_dict() && size() == 0) return 0.0;
  throw EvalError(std::string("expected a number, got ") + kind_str(kind()));
}

std::int64_t Value::as_index() const { return as_int(); }

bool Value::is_zero() const {
  switch (kind()) {
    case Kind::Real:
      return std::get<double>(rep_) == 0.0;
    case Kind::Int:
      return std::get<std::int64_t>(rep_) == 0;
    case Kind::Dict: {
      const auto& m = std::get<DictRep>(rep_).map;
      return !m || m->empty();
    }
    default:
      return false;
  }
}

const Value::Map& Value::entries() const {
  if (auto d = std::get_if<DictRep>(&rep_)) {
    if (d->map) return *d->map;
  }
  return empty_map();
}

std::int64_t Value::size() const {
  switch (kind()) {
    case Kind::Dict:
      return static_cast<std::int64_t>(entries().size());
    case Kind::Array: {
      const auto& a = std::get<ArrayRep>(rep_);
      return a.hi - a.lo;
    }
    case Kind::Range: {
      const auto& r = std::get<RangeRep>(rep_);
      return r.hi - r.lo;
    }
    default:
      return 0;
  }
}

bool Value::is_real_array() const {
  auto a = std::get_if<ArrayRep>(&rep_);
  return a && a->data->is_real;
}

Value Value::array_elem(std::int64_t pos) const {
  const auto& a = std::get<ArrayRep>(rep_);
  if (a.data->is_real) return Value::real(a.data->reals[static_cast<std::size_t>(pos)]);
  return Value::integer(a.data->ints[static_cast<std::size_t>(pos)]);
}

Value Value::at(std::int64_t key) const {
  switch (kind()) {
    case Kind::Dict: {
      const auto& m = entries();
      auto it = m.find(key);
      return it == m.end() ? Value() : it->second;
    }
    case Kind::Array: {
      const auto& a = std::get<ArrayRep>(rep_);
      if (key < a.lo || key >= a.hi) return Value();
      return array_elem(key);
    }
    case Kind::Range: {
      const auto& r = std::get<RangeRep>(rep_);
      if (key < r.lo || key >= r.hi) return Value();
      return Value::integer(key);
    }
    default:
      throw EvalError(std::string("lookup on ") + kind_str(kind()));
  }
}

std::int64_t Value::lo() const {
  if (auto a = std::get_if<ArrayRep>(&rep_)) return a->lo;
  if (auto r = std::get_if<RangeRep>(&rep_)) return r->lo;
  throw EvalError("bounds of a non-array value");
}

std::int64_t Value::hi() const {
  if (auto a = std::get_if<ArrayRep>(&rep_)) return a->hi;
  if (auto r = std::get_if<RangeRep>(&rep_)) return r->hi;
  throw EvalError("bounds of a non-array value");
}

Value Value::slice(std::int64_t lo, std::int64_t hi) const {
  auto a = std::get_if<ArrayRep>(&rep_);
  if (!a) throw EvalError(std::string("subarray of ") + kind_str(kind()));
  if (lo < 0 || hi > a->data->size() || lo > hi) {
    throw EvalError("subarray bounds [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    ") outside array of length " + std::to_string(a->data->size()));
  }
  return Value(Rep(ArrayRep{a->data, lo, hi}));
}

Value Value::to_dict() const {
  if (is_dict()) return *this;
  if (!is_array() && !is_range()) throw EvalError(std::string("not a collection: ") + kind_str(kind()));
  Map m;
  for_each([&](std::int64_t k, const Value& v) {
    if (!v.is_zero()) m.emplace(k, v);
  });
  return dict(std::move(m));
}

std::int64_t Value::nnz() const {
  switch (kind()) {
    case Kind::Real:
    case Kind::Int:
      return is_zero() ? 0 : 1;
    case Kind::Bool:
      return 1;
    default: {
      std::int64_t n = 0;
      for_each([&](std::int64_t, const Value& v) { n += v.nnz(); });
      return n;
    }
  }
}

Value::Map& Value::mutable_entries() {
  if (!is_dict()) throw EvalError(std::string("not a dictionary: ") + kind_str(kind()));
  auto& d = std::get<DictRep>(rep_);
  if (!d.map) {
    d.map = std::make_shared<Map>();
  } else if (d.map.use_count() > 1) {
    d.map = std::make_shared<Map>(*d.map);
  }
  return *d.map;
}

void Value::accumulate(std::int64_t key, Value v) {
  if (v.is_zero()) return;
  Map& m = mutable_entries();
  auto [it, inserted] = m.try_emplace(key, std::move(v));
  if (!inserted) {
    add_into(it->second, std::move(v));
    if (it->second.is_zero()) m.erase(it);
  }
}

namespace {

Value as_dict_operand(const Value& v) { return v.is_array() || v.is_range() ? v.to_dict() : v; }

[[noreturn]] void bad_operands(const char* op, const Value& a, const Value& b) {
  throw EvalError(std::string("'") + op + "' on " + kind_str(a.kind()) + " and " + kind_str(b.kind()));
}

}  // namespace

Value semiring_add(const Value& a, const Value& b) {
  Value acc = a;
  add_into(acc, b);
  return acc;
}

void add_into(Value& acc, Value v, std::int64_t* merged) {
  if (v.is_collection() && !v.is_dict()) v = v.to_dict();
  if (acc.is_collection() && !acc.is_dict()) acc = acc.to_dict();
  if (v.is_dict() && v.is_zero()) return;
  if (acc.is_dict() && acc.is_zero()) {
    if (merged && v.is_dict()) *merged += v.size();
    if (merged && !v.is_dict()) *merged += 1;
    acc = std::move(v);
    return;
  }
  if (acc.is_real() && v.is_real()) {
    acc = Value::real(acc.as_real() + v.as_real());
    if (merged) *merged += 1;
    return;
  }
  if (acc.is_int() && v.is_int()) {
    acc = Value::integer(acc.as_int() + v.as_int());
    if (merged) *merged += 1;
    return;
  }
  if (acc.is_dict() && !v.is_dict() && !v.is_bool() && v.is_zero()) return;
  if (v.is_dict() && !acc.is_dict() && !acc.is_bool() && acc.is_zero()) {
    if (merged) *merged += v.size();
    acc = std::move(v);
    return;
  }
  if (!acc.is_dict() || !v.is_dict()) bad_operands("+", acc, v);
  if (merged) *merged += v.size();
  Value::Map& m = acc.mutable_entries();
  for (const auto& [k, x] : v.entries()) {
    auto [it, inserted] = m.try_emplace(k, x);
    if (!inserted) {
      add_into(it->second, x);
      if (it->second.is_zero()) m.erase(it);
    }
  }
  if (m.empty()) acc = Value();
}

Value semiring_mul(const Value& a0, const Value& b0) {
  Value a = as_dict_operand(a0);
  Value b = as_dict_operand(b0);
  if ((a.is_dict() && a.is_zero()) || (b.is_dict() && b.is_zero())) return Value();
  if (a.is_real() && b.is_real()) return Value::real(a.as_real() * b.as_real());
  if (a.is_int() && b.is_int()) return Value::integer(a.as_int() * b.as_int());
  if (a.is_dict()) {
    Value::Map m;
    for (const auto& [k, v] : a.entries()) {
      Value p = semiring_mul(v, b);
      if (!p.is_zero()) m.emplace(k, std::move(p));
    }
    return Value::dict(std::move(m));
  }
  if (a.is_real() && b.is_dict()) {
    if (a.as_real() == 0.0) return Value();
    Value::Map m;
    for (const auto& [k, v] : b.entries()) {
      Value p = semiring_mul(a, v);
      if (!p.is_zero()) m.emplace(k, std::move(p));
    }
    return Value::dict(std::move(m));
  }
  bad_operands("*", a, b);
}

Value negate(const Value& v) {
  if (v.is_int()) return Value::integer(-v.as_int());
  return semiring_mul(Value::real(-1.0), v);
}

namespace {

void diff_rec(const Value& a, const Value& b, double abs_tol, double rel_tol, ValueDiff& out) {
  Value x = as_dict_operand(a);
  Value y = as_dict_operand(b);
  bool xs = !x.is_dict(), ys = !y.is_dict();
  if (x.is_bool() || y.is_bool()) {
    if (!(x.is_bool() && y.is_bool() && x.as_bool() == y.as_bool())) out.ok = false;
    return;
  }
  if (xs || ys) {
    if ((x.is_dict() && !x.is_zero()) || (y.is_dict() && !y.is_zero())) {
      out.ok = false;
      out.max_abs = INFINITY;
      return;
    }
    double u = x.as_number(), w = y.as_number();
    double d = std::fabs(u - w);
    if (std::isnan(d)) d = (std::isnan(u) && std::isnan(w)) ? 0.0 : INFINITY;
    double rel = d == 0.0 ? 0.0 : d / std::max(std::fabs(w), 1e-300);
    out.max_abs = std::max(out.max_abs, d);
    out.max_rel = std::max(out.max_rel, rel);
    if (!(d <= abs_tol || d <= rel_tol * std::fabs(w))) out.ok = false;
    return;
  }
  const auto& mx = x.entries();
  const auto& my = y.entries();
  static const Value zero;
  auto ix = mx.begin();
  auto iy = my.begin();
  while (ix != mx.end() || iy != my.end()) {
    if (iy == my.end() || (ix != mx.end() && ix->first < iy->first)) {
      diff_rec(ix->second, zero, abs_tol, rel_tol, out);
      ++ix;
    } else if (ix == mx.end() || iy->first < ix->first) {
      diff_rec(zero, iy->second, abs_tol, rel_tol, out);
      ++iy;
    } else {
      diff_rec(ix->second, iy->second, abs_tol, rel_tol, out);
      ++ix;
      ++iy;
    }
  }
}

}  // namespace

ValueDiff compare_values(const Value& actual, const Value& expected, double abs_tol, double rel_tol) {
  ValueDiff out;
  diff_rec(actual, expected, abs_tol, rel_tol, out);
  return out;
}

bool approx_equal(const Value& a, const Value& b, double abs_tol, double rel_tol) {
  return compare_values(a, b, abs_tol, rel_tol).ok;
}

bool exact_equal(const Value& a, const Value& b) { return compare_values(a, b, 0.0, 0.0).ok; }

namespace {

void write(const Value& v, std::string& out) {
  switch (v.kind()) {
    case Value::Kind::Real:
      out += format_real(v.as_real());
      return;
    case Value::Kind::Int:
      out += std::to_string(v.as_int());
      return;
    case Value::Kind::Bool:
      out += v.as_bool() ? "true" : "false";
      return;
    default:
      break;
  }
  Value d = v.to_dict();
  if (d.is_zero()) {
    out += "{}";
    return;
  }
  out += "{";
  bool first = true;
  for (const auto& [k, x] : d.entries()) {
    if (!first) out += ", ";
    first = false;
    out += std::to_string(k) + " -> ";
    write(x, out);
  }
  out += "}";
}

class ValueReader {
 public:
  explicit ValueReader(const std::string& s) : s_(s) {}

  Value read() {
    Value v = one();
    skip();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw Error("bad value literal at offset " + std::to_string(pos_) + ": " + why);
  }
  bool eat(const char* tok) {
    skip();
    std::size_t n = std::char_traits<char>::length(tok);
    if (s_.compare(pos_, n, tok) == 0) {
      pos_ += n;
      return true;
    }
    return false;
  }

  Value one() {
    skip();
    if (eat("{")) {
      Value::Map m;
      if (eat("}")) return Value();
      do {
        Value k = one();
        if (!k.is_int()) fail("dictionary key must be an integer");
        if (!eat("->")) fail("expected '->'");
        Value v = one();
        if (!v.is_zero()) {
          auto [it, inserted] = m.emplace(k.as_int(), v);
          if (!inserted) fail("duplicate key");
        }
      } while (eat(","));
      if (!eat("}")) fail("expected '}'");
      return Value::dict(std::move(m));
    }
    if (eat("true")) return Value::boolean(true);
    if (eat("false")) return Value::boolean(false);
    std::size_t start = pos_;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
    bool real = false;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E' ||
                 ((c == '-' || c == '+') && (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E'))) {
        real = true;
        ++pos_;
      } else {
        break;
      }
    }
    std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty() || tok == "-" || tok == "+") fail("expected a value");
    try {
      return real ? Value::real(std::stod(tok)) : Value::integer(std::stoll(tok));
    } catch (const std::exception&) {
      fail("bad number '" + tok + "'");
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(const Value& v) {
  std::string out;
  write(v, out);
  return out;
}

Value parse_value(const std::string& text) { return ValueReader(text).read(); }

Value singleton_path(const std::vector<std::int64_t>& path, const Value& leaf) {
  Value v = leaf;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    Value::Map m;
    if (!v.is_zero()) m.emplace(*it, v);
    v = Value::dict(std::move(m));
  }
  return v;
}

namespace {

void leaves(const Value& v, std::vector<std::int64_t>& path,
            const std::function<void(const std::vector<std::int64_t>&, double)>& f) {
  if (v.is_real() || v.is_int()) {
    if (!v.is_zero()) f(path, v.as_number());
    return;
  }
  if (!v.is_collection()) return;
  v.for_each([&](std::int64_t k, const Value& x) {
    path.push_back(k);
    leaves(x, path, f);
    path.pop_back();
  });
}

}  // namespace

void for_each_leaf(const Value& v,
                   const std::function<void(const std::vector<std::int64_t>&, double)>& f) {
  std::vector<std::int64_t> path;
  leaves(v, path, f);
}

}  // namespace sdg
