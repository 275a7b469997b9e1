#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace cclab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  std::string error;  // set when the run threw
  std::vector<std::pair<std::string, double>> scalars;
  double seconds = 0.0;
  double budget_seconds = 0.0;  // 0: no runtime limit

  /// "name=value" pairs printed with %.17g; used for the determinism check.
  std::string digest() const;
  /// One line: "[PASS] 3 doubling-uniformity: ...".
  std::string line() const;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240611;
  std::vector<int> only;   // empty: all criteria
  int threads = 1;         // thread count of the first pass
  int rerun_threads = 3;   // thread count of the determinism pass
};

int criterion_count();
std::string criterion_name(int id);

/// Runs one of the criteria 1..11 with the current thread setting.
CriterionResult run_criterion(int id, std::uint64_t seed);

/// Runs the selected criteria, then (when 12 is selected) reruns them with
/// rerun_threads workers and compares the digests byte for byte. `report`
/// is called with every result as soon as it is known.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& report = {});

}  // namespace cclab
