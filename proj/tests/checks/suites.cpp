#include "suites.hpp"

#include <ostream>

namespace ssmx::checks {

bool run_scan_equiv(std::ostream& out) { out << "todo\n"; return false; }
bool run_grad(std::ostream& out) { out << "todo\n"; return false; }
bool run_cis(std::ostream& out) { out << "todo\n"; return false; }
bool run_fold(std::ostream& out) { out << "todo\n"; return false; }
bool run_metrics(std::ostream& out) { out << "todo\n"; return false; }

std::vector<std::string> suite_names() {
  return {"scan-equiv", "grad", "cis", "fold", "metrics"};
}

bool run_suite(const std::string& name, std::ostream& out) {
  if (name == "scan-equiv") return run_scan_equiv(out);
  if (name == "grad") return run_grad(out);
  if (name == "cis") return run_cis(out);
  if (name == "fold") return run_fold(out);
  if (name == "metrics") return run_metrics(out);
  out << "unknown suite: " << name << "\n";
  return false;
}

}  // namespace ssmx::checks
