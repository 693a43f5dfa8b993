#include "sdgrad/instance.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sdgrad/error.hpp"

namespace sdg {

namespace {

std::vector<std::int64_t> unravel(std::int64_t pos, const std::vector<std::int64_t>& dims) {
  std::vector<std::int64_t> c(dims.size());
  for (std::size_t d = dims.size(); d-- > 0;) {
    c[d] = pos % dims[d];
    pos /= dims[d];
  }
  return c;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::int64_t> column(const SparseInstance& t, std::size_t d) {
  std::vector<std::int64_t> out;
  out.reserve(t.coords.size());
  for (const auto& c : t.coords) out.push_back(c[d]);
  return out;
}

/// Offsets of a compressed format: `pos[r]..pos[r+1]` spans the entries
/// whose coordinate `d` is r. Coordinates must be sorted on `d` first.
std::vector<std::int64_t> offsets(const std::vector<std::vector<std::int64_t>>& coords, std::size_t d,
                                  std::int64_t n) {
  std::vector<std::int64_t> pos(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& c : coords) ++pos[static_cast<std::size_t>(c[d]) + 1];
  for (std::size_t i = 1; i < pos.size(); ++i) pos[i] += pos[i - 1];
  return pos;
}

std::vector<double> dense(const SparseInstance& t, bool column_major) {
  std::int64_t rows = t.dims[0], cols = t.dims.size() > 1 ? t.dims[1] : 1;
  std::vector<double> arr(static_cast<std::size_t>(rows * cols), 0.0);
  for (std::size_t e = 0; e < t.coords.size(); ++e) {
    const auto& c = t.coords[e];
    std::int64_t i = c[0], j = c.size() > 1 ? c[1] : 0;
    arr[static_cast<std::size_t>(column_major ? i + j * rows : i * cols + j)] = t.vals[e];
  }
  return arr;
}

}  // namespace

Value SparseInstance::value() const {
  if (dims.empty()) return Value::real(vals.empty() ? 0.0 : vals[0]);
  Value acc;
  for (std::size_t e = 0; e < coords.size(); ++e) add_into(acc, singleton_path(coords[e], Value::real(vals[e])));
  return acc;
}

SparseInstance gen_sparse(const std::vector<std::int64_t>& dims, double density, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("density must be in (0, 1]");
  std::int64_t volume = 1;
  for (auto d : dims) {
    if (d <= 0) throw std::invalid_argument("dimensions must be positive");
    if (volume > std::numeric_limits<std::int64_t>::max() / d) {
      throw std::invalid_argument("tensor volume overflows");
    }
    volume *= d;
  }
  SparseInstance t;
  t.dims = dims;
  t.density = density;
  t.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(0.1, 1.0);
  if (dims.empty()) {
    t.vals.push_back(value(rng));
    return t;
  }
  std::geometric_distribution<std::int64_t> skip(density < 1.0 ? density : 0.5);
  for (std::int64_t pos = -1;;) {
    pos += 1 + (density < 1.0 ? skip(rng) : 0);
    if (pos >= volume) break;
    t.coords.push_back(unravel(pos, dims));
    t.vals.push_back(value(rng));
  }
  return t;
}

SparseInstance from_value(const Value& v, const std::vector<std::int64_t>& dims) {
  SparseInstance t;
  t.dims = dims;
  if (dims.empty()) {
    t.vals.push_back(v.is_zero() ? 0.0 : v.as_number());
    return t;
  }
  for_each_leaf(v, [&](const std::vector<std::int64_t>& path, double x) {
    t.coords.push_back(path);
    t.vals.push_back(x);
  });
  return t;
}

SparseInstance load_matrix_market(std::istream& in) {
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) throw ParseError("matrix market: empty input", 1, 1);
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate") {
    throw ParseError("matrix market: expected '%%MatrixMarket matrix coordinate' header", 1, 1);
  }
  if (lower(field) != "real") throw ParseError("matrix market: field '" + field + "' is not real", 1, 1);
  symmetry = lower(symmetry);
  if (symmetry != "general" && symmetry != "symmetric") {
    throw ParseError("matrix market: unsupported symmetry '" + symmetry + "'", 1, 1);
  }
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '%') continue;
      return true;
    }
    return false;
  };
  if (!next()) throw ParseError("matrix market: missing size line", lineno, 1);
  std::int64_t rows = 0, cols = 0, entries = 0;
  {
    std::istringstream s(line);
    if (!(s >> rows >> cols >> entries) || rows <= 0 || cols <= 0 || entries < 0) {
      throw ParseError("matrix market: bad size line", lineno, 1);
    }
  }
  std::map<std::pair<std::int64_t, std::int64_t>, double> cells;
  for (std::int64_t e = 0; e < entries; ++e) {
    if (!next()) throw ParseError("matrix market: expected " + std::to_string(entries) + " entries", lineno, 1);
    std::istringstream s(line);
    std::int64_t i = 0, j = 0;
    double v = 0;
    if (!(s >> i >> j >> v)) throw ParseError("matrix market: bad entry", lineno, 1);
    if (i < 1 || i > rows || j < 1 || j > cols) {
      throw ParseError("matrix market: index (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") outside " + std::to_string(rows) + " x " + std::to_string(cols),
                       lineno, 1);
    }
    cells[{i - 1, j - 1}] += v;
    if (symmetry == "symmetric" && i != j) cells[{j - 1, i - 1}] += v;
  }
  SparseInstance t;
  t.dims = {rows, cols};
  for (const auto& [c, v] : cells) {
    if (v == 0.0) continue;
    t.coords.push_back({c.first, c.second});
    t.vals.push_back(v);
  }
  t.density = static_cast<double>(t.vals.size()) / (static_cast<double>(rows) * static_cast<double>(cols));
  return t;
}

SparseInstance load_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0, 0);
  return load_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const SparseInstance& m) {
  if (m.dims.size() != 2) throw TransformError("matrix market output needs a matrix");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.dims[0] << " " << m.dims[1] << " " << m.nnz() << "\n";
  out << std::setprecision(17);
  for (std::size_t e = 0; e < m.coords.size(); ++e) {
    out << m.coords[e][0] + 1 << " " << m.coords[e][1] + 1 << " " << m.vals[e] << "\n";
  }
}

Env backing_arrays(const SparseInstance& t, const StorageSpec& spec) {
  Env env;
  int order = format_order(spec.format);
  if (static_cast<int>(t.dims.size()) != order) {
    throw TransformError("format '" + std::string(format_keyword(spec.format)) + "' does not fit '" +
                         spec.tensor + "' of order " + std::to_string(t.dims.size()));
  }
  auto bind = [&](const char* role, Value v) { env.bind(spec.array(role), std::move(v)); };
  switch (spec.format) {
    case Format::Scalar:
      bind("val", Value::real(t.vals.empty() ? 0.0 : t.vals[0]));
      break;
    case Format::VectorDense:
      bind("len", Value::integer(t.dims[0]));
      bind("arr", Value::array(dense(t, false)));
      break;
    case Format::VectorCOO:
      bind("len", Value::integer(t.nnz()));
      bind("row", Value::int_array(column(t, 0)));
      bind("val", Value::array(t.vals));
      break;
    case Format::MatrixCSR:
      bind("len", Value::integer(t.dims[0]));
      bind("pos", Value::int_array(offsets(t.coords, 0, t.dims[0])));
      bind("idx", Value::int_array(column(t, 1)));
      bind("val", Value::array(t.vals));
      break;
    case Format::MatrixCSC: {
      std::vector<std::size_t> order_(t.coords.size());
      for (std::size_t e = 0; e < order_.size(); ++e) order_[e] = e;
      std::stable_sort(order_.begin(), order_.end(),
                       [&](std::size_t a, std::size_t b) { return t.coords[a][1] < t.coords[b][1]; });
      std::vector<std::vector<std::int64_t>> coords;
      std::vector<std::int64_t> rows;
      std::vector<double> vals;
      for (auto e : order_) {
        coords.push_back(t.coords[e]);
        rows.push_back(t.coords[e][0]);
        vals.push_back(t.vals[e]);
      }
      bind("len", Value::integer(t.dims[1]));
      bind("pos", Value::int_array(offsets(coords, 1, t.dims[1])));
      bind("idx", Value::int_array(rows));
      bind("val", Value::array(vals));
      break;
    }
    case Format::MatrixCOO:
      bind("len", Value::integer(t.nnz()));
      bind("row", Value::int_array(column(t, 0)));
      bind("col", Value::int_array(column(t, 1)));
      bind("val", Value::array(t.vals));
      break;
    case Format::MatrixDenseRow:
    case Format::MatrixDenseCol:
      bind("rows", Value::integer(t.dims[0]));
      bind("cols", Value::integer(t.dims[1]));
      bind("arr", Value::array(dense(t, spec.format == Format::MatrixDenseCol)));
      break;
  }
  return env;
}

KernelInstance make_instance(const KernelEntry& k, const std::vector<StorageSpec>& specs,
                             const std::map<std::string, std::int64_t>& dims, double density,
                             std::uint64_t seed, const std::map<std::string, SparseInstance>& given) {
  KernelInstance out;
  std::uint64_t stream = 0;
  for (const auto& in : k.inputs) {
    ++stream;
    const StorageSpec* spec = nullptr;
    for (const auto& s : specs) {
      if (s.tensor == in.name) spec = &s;
    }
    if (!spec) throw TransformError("no storage for input '" + in.name + "'");
    std::uint64_t s = seed * 0x9E3779B97F4A7C15ULL + stream;
    SparseInstance t;
    bool dense_format = spec->format == Format::VectorDense || spec->format == Format::MatrixDenseRow ||
                        spec->format == Format::MatrixDenseCol;
    if (auto g = given.find(in.name); g != given.end()) {
      t = g->second;
      if (t.dims.size() != in.shape.size()) {
        throw TransformError("given '" + in.name + "' has order " + std::to_string(t.dims.size()));
      }
      if (!dense_format) out.nnz += t.nnz();
    } else if (in.shape.empty()) {
      auto fixed = k.fixed_scalars.find(in.name);
      if (fixed != k.fixed_scalars.end()) {
        t.vals.push_back(fixed->second);
      } else {
        std::mt19937_64 rng(s);
        t.vals.push_back(std::uniform_real_distribution<double>(0.5, 2.0)(rng));
      }
    } else {
      std::vector<std::int64_t> shape;
      for (const auto& d : in.shape) {
        auto it = dims.find(d);
        shape.push_back(it == dims.end() ? 8 : it->second);
      }
      t = gen_sparse(shape, dense_format ? 1.0 : density, s);
      if (!dense_format) out.nnz += t.nnz();
    }
    out.logical.bind(in.name, t.value());
    Env arrays = backing_arrays(t, *spec);
    for (const auto& [n, v] : arrays.entries()) out.physical.bind(n, v);
    out.tensors.emplace(in.name, std::move(t));
  }
  return out;
}

}  // namespace sdg
