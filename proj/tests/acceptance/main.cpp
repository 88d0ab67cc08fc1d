#include "acceptance.hpp"

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

namespace acceptance {

std::string work_dir(const std::string& leaf) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ewopt-acceptance" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace acceptance

int main() {
  using acceptance::CriterionResult;
  struct Entry {
    int number;
    const char* label;
    CriterionResult (*run)();
  };
  const std::vector<Entry> entries = {
      {1, "domain-shift weight recovery",
       acceptance::criterion1_domain_shift_recovery},
      {2, "noise-transition weight recovery",
       acceptance::criterion2_noise_transition_recovery},
      {3, "plug-in rule brute-force optimality",
       acceptance::criterion3_plugin_optimality},
      {4, "metric gradients vs finite differences",
       acceptance::criterion4_gradient_checks},
      {5, "iterative optimizer on the cluster-noise benchmark",
       acceptance::criterion5_iterative_end_to_end},
      {6, "black-box path tracks the known-gradient path",
       acceptance::criterion6_blackbox_parity},
      {7, "coordinate search vs exhaustive thresholds",
       acceptance::criterion7_coordinate_search},
      {8, "probe conditioning across the perturbation grid",
       acceptance::criterion8_probe_conditioning},
      {9, "invariant property suites",
       acceptance::criterion9_property_suites},
  };

  int failures = 0;
  for (const auto& entry : entries) {
    CriterionResult result;
    try {
      result = entry.run();
    } catch (const std::exception& ex) {
      result.pass = false;
      result.detail = std::string("exception: ") + ex.what();
    }
    std::printf("[%s] criterion %d: %s (%s)\n", result.pass ? "PASS" : "FAIL",
                entry.number, entry.label, result.detail.c_str());
    std::fflush(stdout);
    if (!result.pass) ++failures;
  }
  std::printf("%d/9 criteria passed\n",
              static_cast<int>(entries.size()) - failures);
  return failures == 0 ? 0 : 1;
}
