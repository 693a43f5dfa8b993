#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sdgrad/eval.hpp"

namespace sdg {

/// SDG1 binary dump, little-endian:
///
///   "SDG1"
///   record*:  u32 name length, name bytes, u8 kind, u64 count, payload
///
/// Kinds and payloads:
///   0  real scalar    count = 1, one f64
///   1  index scalar   count = 1, one u64
///   2  real array     count f64
///   3  index array    count u64
///   4  value literal  count bytes of text in the value literal syntax
enum class DumpKind : std::uint8_t { Real = 0, Index = 1, RealArray = 2, IndexArray = 3, Literal = 4 };

/// Writes the bindings of `env` in order. Reals, integers and arrays use
/// their binary kinds; dictionaries are written as literals. Throws
/// TransformError on other values.
void write_dump(std::ostream& out, const Env& env);
void write_dump_file(const std::string& path, const Env& env);

/// Reads a dump back into bindings. Throws ParseError on malformed input.
Env read_dump(std::istream& in);
Env read_dump_file(const std::string& path);

}  // namespace sdg
