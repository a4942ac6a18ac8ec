#include "liftrec/cli/config.hpp"

#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace liftrec::cli {

const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"experiment", {"kind", "action", "seed", "jobs"}},
      {"grid", {"n", "a", "b", "nx", "ny"}},
      {"potential", {"type", "value", "q0", "lo", "hi", "bilinear", "coefficients"}},
      {"boundary", {"f_a", "f_b", "N", "N_list", "m"}},
      {"noise", {"delta", "c", "seeds"}},
      {"sweep", {"q0", "alpha_points"}},
      {"phaselift", {"n", "m"}},
      {"certify", {"problem"}},
      {"baseline", {"iters", "perturbation"}},
      {"solver", {"max_iter", "tol_feas", "tol_gap", "rho", "momentum", "tol_fixed_point", "check_every"}},
      {"assert", {"max_error", "require_ndsc", "min_slope", "max_slope"}},
      {"output", {"dir"}},
  };
  return schema;
}

namespace {

void check_key(const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw ConfigError("config: key outside any section: " + key);
  const auto& schema = config_schema();
  const auto section = schema.find(key.substr(0, dot));
  if (section == schema.end()) throw ConfigError("config: unknown section [" + key.substr(0, dot) + "]");
  if (!section->second.count(key.substr(dot + 1))) throw ConfigError("config: unknown key " + key);
}

template <class T>
T convert(const std::string& key, const std::string& raw) {
  try {
    return boost::lexical_cast<T>(boost::trim_copy(raw));
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("config: cannot parse " + key + " = " + raw);
  }
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> parts;
  boost::split(parts, raw, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
  return parts;
}

}  // namespace

Config Config::parse(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key outside any section: " + section);
    for (const auto& [key, value] : body) cfg.set(section + "." + key, value.data());
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  check_key(key);
  values_[key] = boost::trim_copy(value);
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::text(const std::string& key, const std::string& fallback) const {
  check_key(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::real(const std::string& key, double fallback) const {
  return has(key) ? convert<double>(key, values_.at(key)) : (check_key(key), fallback);
}

int Config::integer(const std::string& key, int fallback) const {
  return has(key) ? convert<int>(key, values_.at(key)) : (check_key(key), fallback);
}

std::uint64_t Config::u64(const std::string& key, std::uint64_t fallback) const {
  if (has(key) && boost::trim_copy(values_.at(key)).starts_with("-"))
    throw ConfigError("config: " + key + " must be nonnegative");
  return has(key) ? convert<std::uint64_t>(key, values_.at(key)) : (check_key(key), fallback);
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return check_key(key), fallback;
  const std::string v = boost::to_lower_copy(values_.at(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: cannot parse " + key + " = " + v + " as a flag");
}

std::vector<double> Config::reals(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return check_key(key), fallback;
  std::vector<double> out;
  for (const auto& p : split_list(values_.at(key))) out.push_back(convert<double>(key, p));
  return out;
}

std::vector<int> Config::integers(const std::string& key, const std::vector<int>& fallback) const {
  if (!has(key)) return check_key(key), fallback;
  std::vector<int> out;
  for (const auto& p : split_list(values_.at(key))) out.push_back(convert<int>(key, p));
  return out;
}

SolverOptions solver_options(const Config& cfg) {
  SolverOptions o;
  o.max_iter = cfg.integer("solver.max_iter", o.max_iter);
  o.tol_feas = cfg.real("solver.tol_feas", o.tol_feas);
  o.tol_gap = cfg.real("solver.tol_gap", o.tol_gap);
  o.rho = cfg.real("solver.rho", o.rho);
  o.momentum = cfg.flag("solver.momentum", o.momentum);
  o.tol_fixed_point = cfg.real("solver.tol_fixed_point", o.tol_fixed_point);
  o.check_every = cfg.integer("solver.check_every", o.check_every);
  if (o.max_iter <= 0 || o.tol_feas <= 0.0 || o.tol_gap <= 0.0 || o.rho < 0.0 || o.tol_fixed_point <= 0.0 ||
      o.check_every <= 0)
    throw ConfigError("config: solver options out of range");
  return o;
}

}  // namespace liftrec::cli
