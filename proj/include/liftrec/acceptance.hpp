#pragma once

// Acceptance suite: one PASS/FAIL result per criterion with pinned
// tolerances. Shared by the `acceptance` test binary and `liftrec selftest`.

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace liftrec {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;
  std::map<std::string, std::string> tables;  // name -> CSV text
  bool all_pass() const;
};

std::string format_result(const CriterionResult& r);

AcceptanceReport run_acceptance(const std::function<void(const CriterionResult&)>& on_result = {});

}  // namespace liftrec
