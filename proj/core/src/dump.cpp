#include "sdgrad/dump.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "sdgrad/error.hpp"

namespace sdg {

namespace {

static_assert(std::endian::native == std::endian::little, "SDG1 dumps assume a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw ParseError("SDG1: truncated record", 0, 0);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

void header(std::ostream& out, const std::string& name, DumpKind kind, std::uint64_t count) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
  put<std::uint64_t>(out, count);
}

}  // namespace

void write_dump(std::ostream& out, const Env& env) {
  out.write("SDG1", 4);
  for (const auto& [name, v] : env.entries()) {
    switch (v.kind()) {
      case Value::Kind::Real:
        header(out, name, DumpKind::Real, 1);
        put<double>(out, v.as_real());
        break;
      case Value::Kind::Int:
        header(out, name, DumpKind::Index, 1);
        put<std::uint64_t>(out, static_cast<std::uint64_t>(v.as_int()));
        break;
      case Value::Kind::Array: {
        std::vector<Value> elems;
        bool real = v.is_real_array();
        v.for_each([&](std::int64_t, const Value& x) { elems.push_back(x); });
        header(out, name, real ? DumpKind::RealArray : DumpKind::IndexArray, elems.size());
        for (const auto& x : elems) {
          if (real) {
            put<double>(out, x.as_real());
          } else {
            put<std::uint64_t>(out, static_cast<std::uint64_t>(x.as_int()));
          }
        }
        break;
      }
      case Value::Kind::Dict: {
        std::string text = to_string(v);
        header(out, name, DumpKind::Literal, text.size());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        break;
      }
      default:
        throw TransformError("cannot dump '" + name + "'");
    }
  }
}

void write_dump_file(const std::string& path, const Env& env) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TransformError("cannot write '" + path + "'");
  write_dump(out, env);
}

Env read_dump(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SDG1", 4) != 0) throw ParseError("SDG1: bad magic", 0, 0);
  Env env;
  while (in.peek() != std::char_traits<char>::eof()) {
    auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw ParseError("SDG1: truncated name", 0, 0);
    auto kind = get<std::uint8_t>(in);
    auto count = get<std::uint64_t>(in);
    switch (static_cast<DumpKind>(kind)) {
      case DumpKind::Real:
        if (count != 1) throw ParseError("SDG1: scalar with count " + std::to_string(count), 0, 0);
        env.bind(name, Value::real(get<double>(in)));
        break;
      case DumpKind::Index:
        if (count != 1) throw ParseError("SDG1: scalar with count " + std::to_string(count), 0, 0);
        env.bind(name, Value::integer(static_cast<std::int64_t>(get<std::uint64_t>(in))));
        break;
      case DumpKind::RealArray: {
        std::vector<double> xs(count);
        for (auto& x : xs) x = get<double>(in);
        env.bind(name, Value::array(std::move(xs)));
        break;
      }
      case DumpKind::IndexArray: {
        std::vector<std::int64_t> xs(count);
        for (auto& x : xs) x = static_cast<std::int64_t>(get<std::uint64_t>(in));
        env.bind(name, Value::int_array(std::move(xs)));
        break;
      }
      case DumpKind::Literal: {
        std::string text(count, '\0');
        if (!in.read(text.data(), static_cast<std::streamsize>(count))) {
          throw ParseError("SDG1: truncated literal", 0, 0);
        }
        env.bind(name, parse_value(text));
        break;
      }
      default:
        throw ParseError("SDG1: unknown kind " + std::to_string(kind), 0, 0);
    }
  }
  return env;
}

Env read_dump_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0, 0);
  return read_dump(in);
}

}  // namespace sdg
