#pragma once

#include <string>
#include <vector>

#include "pseudoherm/types.hpp"

namespace pseudoherm {

// One named residual measured at one sample point, with the tolerance it
// was judged against.
struct ResidualEntry {
  std::string identity_name;
  Vec point;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// A batch of residual checks. Failures are recorded, never thrown, so a
// full suite always reports every identity.
struct ResidualReport {
  std::vector<ResidualEntry> entries;

  void add(const std::string& name, const Vec& point, double residual,
           double tolerance);
  bool all_pass() const;
  // Largest residual among entries with the given name; 0 if none match.
  double worst(const std::string& name) const;
  std::vector<std::string> failing_names() const;
};

}  // namespace pseudoherm
