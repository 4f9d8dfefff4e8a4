// Multiplicative constants for "up to a constant" inequalities. Condition
// checks look their row up by name; anything not set explicitly counts as 1,
// so the default table reproduces the bare inequalities.
#pragma once

#include <map>
#include <string>

namespace nekholab {

struct ConstantTable {
  std::map<std::string, double> rows;

  double row(const std::string &name) const {
    auto it = rows.find(name);
    return it == rows.end() ? 1.0 : it->second;
  }
};

} // namespace nekholab
