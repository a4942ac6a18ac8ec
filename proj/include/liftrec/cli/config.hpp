#pragma once

// Experiment configuration: INI-style sections of key = value lines. Keys are
// validated against a fixed schema; unknown sections or keys are rejected.
// Lists are comma-separated.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "liftrec/common.hpp"
#include "liftrec/solvers.hpp"

namespace liftrec::cli {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// section -> accepted keys
const std::map<std::string, std::set<std::string>>& config_schema();

class Config {
 public:
  // Throws ConfigError on syntax errors and unknown keys.
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  // Keys are "section.key". Throws ConfigError for keys outside the schema.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string text(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

SolverOptions solver_options(const Config& cfg);

}  // namespace liftrec::cli
