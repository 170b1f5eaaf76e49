#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Property suites shared by the `check` CLI subcommand and the acceptance
// runner. Each suite prints progress to `out` and returns true on success.
namespace ssmx::checks {

bool run_scan_equiv(std::ostream& out);  // recurrence vs LTI kernel route
bool run_grad(std::ostream& out);        // finite-difference suite
bool run_cis(std::ostream& out);         // interleaved-scan bijection
bool run_fold(std::ostream& out);        // fold/unfold identity + partition of unity
bool run_metrics(std::ostream& out);     // metric oracles + gt-oracle calibration

std::vector<std::string> suite_names();
bool run_suite(const std::string& name, std::ostream& out);

}  // namespace ssmx::checks
