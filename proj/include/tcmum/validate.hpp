#pragma once

#include <string>
#include <vector>

#include "tcmum/model.hpp"

namespace tcmum {

struct Violation {
  std::string path;     // e.g. "routes[3].legs[0].line"
  std::string message;  // e.g. "unknown line 'L99'"
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

// Lists every invariant violation of the scenario. An empty report means
// the scenario is well formed and can be indexed.
ValidationReport validate_scenario(const Scenario& scenario);

// Throws ValidationError if the report is not empty.
void require_valid(const Scenario& scenario);

}  // namespace tcmum
