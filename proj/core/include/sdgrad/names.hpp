#pragma once

#include <set>
#include <string>

namespace sdg {

/// Character reserved for compiler-generated names; rejected in user source.
inline constexpr char kReservedChar = '$';

/// Name of the tangent variable paired with `name`.
std::string tangent_name(const std::string& name);

/// Part of a name before the first reserved character.
std::string base_name(const std::string& name);

/// `base$N` for the smallest N >= 1 not in `used`.
std::string fresh_name(const std::string& base, const std::set<std::string>& used);

/// Monotone fresh-name source. Every returned name is recorded as taken.
class NameGen {
 public:
  NameGen() = default;
  explicit NameGen(std::set<std::string> taken) : taken_(std::move(taken)) {}

  void reserve(const std::string& name) { taken_.insert(name); }
  template <typename It>
  void reserve(It first, It last) {
    taken_.insert(first, last);
  }
  bool taken(const std::string& name) const { return taken_.count(name) > 0; }

  std::string fresh(const std::string& base);
  /// `base` itself when free, otherwise a fresh variant of it.
  std::string prefer(const std::string& base);

 private:
  std::set<std::string> taken_;
  int counter_ = 0;
};

}  // namespace sdg
