#include "sdgrad/storage.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "sdgrad/error.hpp"
#include "sdgrad/parser.hpp"

namespace sdg {

namespace {

struct Keyword {
  const char* name;
  Format format;
};

constexpr Keyword kKeywords[] = {
    {"scalar", Format::Scalar},       {"dense", Format::VectorDense},
    {"coo", Format::VectorCOO},       {"csr", Format::MatrixCSR},
    {"csc", Format::MatrixCSC},       {"dense_col", Format::MatrixDenseCol},
};

std::string default_array(const std::string& x, Format f, const std::string& role) {
  if (role == "len" || role == "rows" || role == "cols") return x + "_" + role;
  switch (f) {
    case Format::Scalar: return x + "_S";
    case Format::VectorDense:
    case Format::MatrixDenseRow:
    case Format::MatrixDenseCol: return x + "_V";
    case Format::MatrixCSC:
      if (role == "pos") return x + "_VCol";
      if (role == "idx") return x + "_VRow";
      return x + "_VVal";
    case Format::MatrixCSR:
      if (role == "pos") return x + "_VRow";
      if (role == "idx") return x + "_VCol";
      return x + "_VVal";
    case Format::VectorCOO:
    case Format::MatrixCOO:
      if (role == "row") return x + "_VRow";
      if (role == "col") return x + "_VCol";
      return x + "_VVal";
  }
  return x + "_" + role;
}

class SpecParser {
 public:
  explicit SpecParser(const std::string& s) : s_(s) {}

  std::vector<StorageSpec> run() {
    std::vector<StorageSpec> out;
    skip();
    if (pos_ == s_.size()) return out;
    for (;;) {
      out.push_back(spec());
      skip();
      if (pos_ == s_.size()) break;
      expect(',');
    }
    return out;
  }

 private:
  StorageSpec spec() {
    StorageSpec sp;
    sp.tensor = ident();
    expect('=');
    std::string kw = ident();
    auto it = std::find_if(std::begin(kKeywords), std::end(kKeywords),
                           [&](const Keyword& k) { return kw == k.name; });
    if (it == std::end(kKeywords)) fail("unknown storage format '" + kw + "'");
    sp.format = it->format;
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      skip();
      if (pos_ < s_.size() && s_[pos_] == ')') {
        ++pos_;
        return sp;
      }
      for (;;) {
        std::string role = ident();
        expect('=');
        std::string arr = ident();
        sp.arrays.emplace_back(role, arr);
        skip();
        if (pos_ < s_.size() && s_[pos_] == ')') {
          ++pos_;
          break;
        }
        expect(',');
      }
    }
    return sp;
  }

  std::string ident() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected a name");
    return s_.substr(start, pos_ - start);
  }

  void expect(char c) {
    skip();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError("storage spec: " + msg, 1, static_cast<int>(pos_) + 1);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

ExprPtr P(const std::string& src) { return parse_internal(src); }

}  // namespace

const std::string& StorageSpec::array(const std::string& role) const {
  for (const auto& [r, a] : arrays) {
    if (r == role) return a;
  }
  throw TransformError("storage of '" + tensor + "' has no '" + role + "' array");
}

const char* format_keyword(Format f) {
  switch (f) {
    case Format::Scalar: return "scalar";
    case Format::VectorDense: return "dense";
    case Format::VectorCOO: return "coo";
    case Format::MatrixCSR: return "csr";
    case Format::MatrixCSC: return "csc";
    case Format::MatrixCOO: return "coo";
    case Format::MatrixDenseRow: return "dense";
    case Format::MatrixDenseCol: return "dense_col";
  }
  return "?";
}

int format_order(Format f) {
  switch (f) {
    case Format::Scalar: return 0;
    case Format::VectorDense:
    case Format::VectorCOO: return 1;
    default: return 2;
  }
}

std::vector<std::string> format_roles(Format f) {
  switch (f) {
    case Format::Scalar: return {"val"};
    case Format::VectorDense: return {"len", "arr"};
    case Format::VectorCOO: return {"len", "row", "val"};
    case Format::MatrixCSR:
    case Format::MatrixCSC: return {"len", "pos", "idx", "val"};
    case Format::MatrixCOO: return {"len", "row", "col", "val"};
    case Format::MatrixDenseRow:
    case Format::MatrixDenseCol: return {"rows", "cols", "arr"};
  }
  return {};
}

Type role_type(Format f, const std::string& role) {
  if (f == Format::Scalar) return Type::real();
  if (role == "len" || role == "rows" || role == "cols") return Type::integer();
  if (role == "val" || role == "arr") return Type::dict(Type::dense_int(), Type::real());
  return Type::dict(Type::dense_int(), Type::integer());
}

StorageSpec default_spec(const std::string& tensor, Format f) {
  StorageSpec s;
  s.tensor = tensor;
  s.format = f;
  for (const auto& r : format_roles(f)) s.arrays.emplace_back(r, default_array(tensor, f, r));
  return s;
}

std::vector<StorageSpec> parse_storage_specs(const std::string& text) {
  return SpecParser(text).run();
}

std::vector<StorageSpec> resolve_storage(const std::vector<StorageSpec>& specs, const TypeEnv& env) {
  std::vector<StorageSpec> out;
  std::set<std::string> seen;
  for (const auto& sp : specs) {
    auto t = env.find(sp.tensor);
    if (!t) throw TransformError("storage given for unknown input '" + sp.tensor + "'");
    if (!seen.insert(sp.tensor).second) {
      throw TransformError("storage of '" + sp.tensor + "' given twice");
    }
    Format f = sp.format;
    int order = t->is_real() ? 0 : t->order();
    if (order == 2 && f == Format::VectorDense) f = Format::MatrixDenseRow;
    if (order == 2 && f == Format::VectorCOO) f = Format::MatrixCOO;
    if (format_order(f) != order) {
      throw TransformError("format '" + std::string(format_keyword(f)) + "' does not fit '" +
                           sp.tensor + "' of type " + t->str());
    }
    StorageSpec r = default_spec(sp.tensor, f);
    auto roles = format_roles(f);
    for (const auto& [role, arr] : sp.arrays) {
      if (std::find(roles.begin(), roles.end(), role) == roles.end()) {
        throw TransformError("format '" + std::string(format_keyword(f)) + "' has no role '" + role + "'");
      }
      for (auto& [rr, ra] : r.arrays) {
        if (rr == role) ra = arr;
      }
    }
    out.push_back(std::move(r));
  }
  for (const auto& [name, t] : env.entries()) {
    if (t.is_real() && !seen.count(name)) {
      seen.insert(name);
      out.push_back(default_spec(name, Format::Scalar));
    }
  }
  return out;
}

std::string to_string(const StorageSpec& s) {
  std::string out = s.tensor + " = " + format_keyword(s.format) + "(";
  bool first = true;
  for (const auto& [role, arr] : s.arrays) {
    if (!first) out += ", ";
    first = false;
    out += role + "=" + arr;
  }
  return out + ")";
}

ExprPtr storage_definition(const StorageSpec& s) {
  auto a = [&](const char* role) { return s.array(role); };
  switch (s.format) {
    case Format::Scalar: return ex::var(a("val"));
    case Format::VectorDense:
      return P("sum(<_, i> in (0:" + a("len") + ")) { unique(i) -> " + a("arr") + "(i) }");
    case Format::VectorCOO:
      return P("sum(<_, i> in (0:" + a("len") + ")) { unique(" + a("row") + "(i)) -> " + a("val") +
               "(i) }");
    case Format::MatrixCSR:
      return P("sum(<_, i> in (0:" + a("len") + ")) { unique(i) -> sum(<p, j> in " + a("idx") + "(" +
               a("pos") + "(i):" + a("pos") + "(i + 1))) { unique(j) -> " + a("val") + "(p) } }");
    case Format::MatrixCSC:
      return P("sum(<_, j> in (0:" + a("len") + ")) sum(<p, i> in " + a("idx") + "(" + a("pos") +
               "(j):" + a("pos") + "(j + 1))) { i -> { unique(j) -> " + a("val") + "(p) } }");
    case Format::MatrixCOO:
      return P("sum(<_, p> in (0:" + a("len") + ")) { " + a("row") + "(p) -> { " + a("col") +
               "(p) -> " + a("val") + "(p) } }");
    case Format::MatrixDenseRow:
      return P("sum(<_, i> in (0:" + a("rows") + ")) { unique(i) -> sum(<_, j> in (0:" + a("cols") +
               ")) { unique(j) -> " + a("arr") + "(i * " + a("cols") + " + j) } }");
    case Format::MatrixDenseCol:
      return P("sum(<_, j> in (0:" + a("cols") + ")) sum(<_, i> in (0:" + a("rows") + ")) { i -> { unique(j) -> " +
               a("arr") + "(i + j * " + a("rows") + ") } }");
  }
  throw TransformError("unknown storage format");
}

TypeEnv physical_env(const std::vector<StorageSpec>& specs) {
  TypeEnv env;
  for (const auto& s : specs) {
    for (const auto& [role, arr] : s.arrays) env.push(arr, role_type(s.format, role));
  }
  return env;
}

ExprPtr compose_storage(const ExprPtr& e, const TypeEnv& env, const std::vector<StorageSpec>& specs) {
  std::map<std::string, const StorageSpec*> by_name;
  for (const auto& s : specs) by_name[s.tensor] = &s;
  for (const auto& v : free_vars(e)) {
    auto t = env.find(v);
    if (!t) throw TransformError("unbound input '" + v + "'");
    auto it = by_name.find(v);
    if (it == by_name.end()) {
      if (t->is_dict()) throw TransformError("no storage format for '" + v + "'");
      continue;
    }
    int order = t->is_real() ? 0 : t->order();
    if (format_order(it->second->format) != order) {
      throw TransformError("format of '" + v + "' does not match type " + t->str());
    }
  }
  ExprPtr out = e;
  for (auto it = specs.rbegin(); it != specs.rend(); ++it) {
    out = ex::let(it->tensor, storage_definition(*it), out);
  }
  return out;
}

}  // namespace sdg
