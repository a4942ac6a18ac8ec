#pragma once

// The `liftrec` experiment runner.
//
//   liftrec internal certify|recover|sweep
//   liftrec calderon forward|recover|certify|baseline
//   liftrec phaselift [--n N] [--m M] [--noise D,...]
//   liftrec certify [--problem internal|calderon|phaselift]
//   liftrec selftest
//
// Common flags: --config PATH, --out DIR, --seed U64, --jobs K. Each run
// writes CSV tables and summary.json into the output directory.
// Exit codes: 0 success, 1 failed assertion or runtime error, 2 usage or
// configuration error.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "liftrec/cli/config.hpp"
#include "liftrec/cli/table.hpp"

namespace liftrec::cli {

struct RunContext {
  Config cfg;
  std::string kind;
  std::string action;
  std::filesystem::path out;
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunOutput {
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  std::vector<Assertion> assertions;
  std::map<std::string, Table> tables;
  std::map<std::string, std::string> raw_tables;  // name -> CSV text
  std::map<std::string, nlohmann::ordered_json> documents;  // name -> extra JSON file
};

RunOutput run_internal(const RunContext& ctx);
RunOutput run_calderon(const RunContext& ctx);
RunOutput run_phaselift(const RunContext& ctx);
RunOutput run_certify(const RunContext& ctx);
RunOutput run_selftest(const RunContext& ctx);

// Dispatches on ctx.kind, writes the artifacts and returns the exit code.
int execute(const RunContext& ctx);

int run_cli(int argc, const char* const* argv);

}  // namespace liftrec::cli
