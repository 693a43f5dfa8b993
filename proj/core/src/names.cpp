#include "sdgrad/names.hpp"

namespace sdg {

std::string tangent_name(const std::string& name) { return name + kReservedChar + "d"; }

std::string base_name(const std::string& name) {
  auto pos = name.find(kReservedChar);
  return pos == std::string::npos ? name : name.substr(0, pos);
}

std::string fresh_name(const std::string& base, const std::set<std::string>& used) {
  std::string b = base_name(base);
  if (b.empty() || b == "_") b = "x";
  for (int n = 1;; ++n) {
    std::string cand = b + kReservedChar + std::to_string(n);
    if (!used.count(cand)) return cand;
  }
}

std::string NameGen::fresh(const std::string& base) {
  std::string b = base_name(base);
  if (b.empty() || b == "_") b = "x";
  for (;;) {
    std::string cand = b + kReservedChar + std::to_string(++counter_);
    if (taken_.insert(cand).second) return cand;
  }
}

std::string NameGen::prefer(const std::string& base) {
  if (taken_.insert(base).second) return base;
  return fresh(base);
}

}  // namespace sdg
