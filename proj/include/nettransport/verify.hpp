#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nettransport/scenario.hpp"

namespace nettransport {

enum class CheckStatus { Pass, Fail, SkippedDependency, NotApplicable };

const char* to_string(CheckStatus status);

struct CheckResult {
  std::string name;
  std::string reference;  // which property of the theory the check exercises
  double measured = 0.0;
  double tolerance = 0.0;
  CheckStatus status = CheckStatus::Pass;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckResult> checks;  // fixed catalogue order

  bool passed() const;
  const CheckResult& find(const std::string& name) const;
  nlohmann::json to_json() const;
  std::string to_table() const;
};

struct VerifyConfig {
  std::uint64_t seed = 7;
  int random_samples = 100;
};

/// Names of the fifteen checks in report order.
const std::vector<std::string>& check_catalogue();

/// Runs every check on one scenario. Failures become report entries; a
/// check whose prerequisite failed is marked SkippedDependency, a check whose
/// hypotheses the scenario does not meet NotApplicable.
CheckReport run_all(const Scenario& scenario, const VerifyConfig& config = {});

}  // namespace nettransport
