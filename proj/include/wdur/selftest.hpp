#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wdur {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Reduced-size versions of the invariant checks: wavelet round-trip, schedule marginals,
/// analytic-score sampling, gradient checks and metric oracles. Takes a few seconds.
std::vector<CheckResult> run_selftest();

/// One "PASS|FAIL name: detail" line per result. Returns true when all passed.
bool print_results(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace wdur
