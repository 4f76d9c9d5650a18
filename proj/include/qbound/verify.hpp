#pragma once

// Cross-verification suite: numeric solver against closed forms, region
// sweeps against the analytic envelope, and Monte-Carlo runs against bounds.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qbound {

struct CheckResult {
  /// "group/check"; --only filters on either part.
  std::string name;
  bool pass = false;
  /// Worst observed error (or statistic) and the tolerance it is held to.
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  /// Run only checks whose group or full name is listed; empty runs all.
  std::vector<std::string> only;
  /// Test hook: scales numeric envelope values by (1 + perturb_envelope).
  double perturb_envelope = 0.0;
  std::uint64_t seed = 20240611;
  std::uint64_t shots = 1'000'000;
};

/// Names of all checks, in run order.
std::vector<std::string> verify_check_names();

/// Runs the selected checks; `on_result` sees each result as it finishes.
/// Throws InvalidArgument when a filter matches nothing.
std::vector<CheckResult> run_verify(const VerifyOptions& options,
                                    const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace qbound
