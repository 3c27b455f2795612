#include "pseudoherm/report.hpp"

#include <algorithm>

namespace pseudoherm {

void ResidualReport::add(const std::string& name, const Vec& point,
                         double residual, double tolerance) {
  entries.push_back({name, point, residual, tolerance, residual <= tolerance});
}

bool ResidualReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const ResidualEntry& e) { return e.pass; });
}

double ResidualReport::worst(const std::string& name) const {
  double worst = 0.0;
  for (const ResidualEntry& e : entries)
    if (e.identity_name == name) worst = std::max(worst, e.residual);
  return worst;
}

std::vector<std::string> ResidualReport::failing_names() const {
  std::vector<std::string> names;
  for (const ResidualEntry& e : entries)
    if (!e.pass &&
        std::find(names.begin(), names.end(), e.identity_name) == names.end())
      names.push_back(e.identity_name);
  return names;
}

}  // namespace pseudoherm
