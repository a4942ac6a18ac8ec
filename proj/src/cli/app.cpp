#include "liftrec/cli/app.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "liftrec/version.hpp"

namespace liftrec::cli {

namespace {

using json = nlohmann::ordered_json;

void configure_logging() {
  const char* env = std::getenv("LIFTREC_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

json options_json(const SolverOptions& o) {
  return {{"max_iter", o.max_iter},   {"tol_feas", o.tol_feas},           {"tol_gap", o.tol_gap},
          {"rho", o.rho},             {"momentum", o.momentum},           {"tol_fixed_point", o.tol_fixed_point},
          {"check_every", o.check_every}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string());
  os << text;
  if (!os) throw Error("write failed for " + path.string());
}

}  // namespace

int execute(const RunContext& ctx) {
  const std::string declared = ctx.cfg.text("experiment.kind", ctx.kind);
  if (declared != ctx.kind) throw ConfigError("config: experiment.kind = " + declared + " but command is " + ctx.kind);
  spdlog::info("running {} {} into {}", ctx.kind, ctx.action, ctx.out.string());
  std::filesystem::create_directories(ctx.out);

  RunOutput out;
  if (ctx.kind == "internal") out = run_internal(ctx);
  else if (ctx.kind == "calderon") out = run_calderon(ctx);
  else if (ctx.kind == "phaselift") out = run_phaselift(ctx);
  else if (ctx.kind == "certify") out = run_certify(ctx);
  else if (ctx.kind == "selftest") out = run_selftest(ctx);
  else throw ConfigError("unknown experiment kind " + ctx.kind);

  json tables = json::array();
  for (const auto& [name, table] : out.tables) {
    emit_table(table, ctx.out / (name + ".csv"));
    tables.push_back(name + ".csv");
  }
  for (const auto& [name, csv] : out.raw_tables) {
    write_text(ctx.out / (name + ".csv"), csv);
    tables.push_back(name + ".csv");
  }
  for (const auto& [name, doc] : out.documents) write_text(ctx.out / (name + ".json"), doc.dump(2) + "\n");

  json assertions = json::array();
  bool ok = true;
  for (const auto& a : out.assertions) {
    assertions.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
    ok = ok && a.pass;
  }
  json config = json::object();
  for (const auto& [k, v] : ctx.cfg.values()) config[k] = v;
  json summary{
      {"command", ctx.kind + (ctx.action.empty() ? "" : " " + ctx.action)},
      {"versions", {{"liftrec", kVersion},
                    {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)}}},
      {"timestamp", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                          std::chrono::system_clock::now())))},
      {"seed", ctx.seed},
      {"jobs", ctx.jobs},
      {"config", config},
      {"solver", options_json(solver_options(ctx.cfg))},
      {"tables", tables},
      {"assertions", assertions},
      {"results", out.results},
      {"pass", ok}};
  write_text(ctx.out / "summary.json", summary.dump(2) + "\n");

  for (const auto& a : out.assertions)
    if (!a.pass) std::cerr << "assertion failed: " << a.name << " (" << a.detail << ")\n";
  std::cout << fmt::format("{}{}: {} ({} tables in {})\n", ctx.kind, ctx.action.empty() ? "" : " " + ctx.action,
                           ok ? "ok" : "FAILED", tables.size(), ctx.out.string());
  return ok ? 0 : 1;
}

int run_cli(int argc, const char* const* argv) {
  configure_logging();
  CLI::App app{"Convex lifting recovery of PDE coefficients", "liftrec"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int jobs = 0;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag_callback("--version", [] { throw CLI::Success(); });

  std::string kind, action;
  auto* internal = app.add_subcommand("internal", "1-D internal-measurement problem");
  internal->require_subcommand(1);
  for (const char* a : {"certify", "recover", "sweep"}) internal->add_subcommand(a);
  auto* calderon = app.add_subcommand("calderon", "2-D boundary-measurement problem");
  calderon->require_subcommand(1);
  for (const char* a : {"forward", "recover", "certify", "baseline"}) calderon->add_subcommand(a);
  auto* phaselift = app.add_subcommand("phaselift", "PhaseLift on Gaussian phase retrieval");
  int pl_n = 0, pl_m = 0;
  std::vector<double> pl_noise;
  phaselift->add_option("--n", pl_n, "signal dimension")->check(CLI::PositiveNumber);
  phaselift->add_option("--m", pl_m, "measurement count")->check(CLI::PositiveNumber);
  phaselift->add_option("--noise", pl_noise, "noise levels")->delimiter(',');
  auto* certify = app.add_subcommand("certify", "least-norm pre-certificate report");
  std::string problem;
  certify->add_option("--problem", problem, "internal, calderon or phaselift");
  app.add_subcommand("selftest", "run the acceptance suite");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();
  for (auto* sub : {internal, calderon})
    for (auto* leaf : sub->get_subcommands({})) leaf->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success&) {
    std::cout << "liftrec " << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  RunContext ctx;
  try {
    for (auto* sub : app.get_subcommands()) {
      kind = sub->get_name();
      for (auto* leaf : sub->get_subcommands()) action = leaf->get_name();
    }
    ctx.kind = kind;
    ctx.action = action;
    if (!config_path.empty()) ctx.cfg = Config::load(config_path);
    if (app.count("--seed")) ctx.cfg.set("experiment.seed", std::to_string(seed));
    if (app.count("--jobs")) ctx.cfg.set("experiment.jobs", std::to_string(jobs));
    if (!out_dir.empty()) ctx.cfg.set("output.dir", out_dir);
    if (phaselift->count("--n")) ctx.cfg.set("phaselift.n", std::to_string(pl_n));
    if (phaselift->count("--m")) ctx.cfg.set("phaselift.m", std::to_string(pl_m));
    if (!pl_noise.empty()) {
      std::string list;
      for (double d : pl_noise) list += (list.empty() ? "" : ",") + format_real(d);
      ctx.cfg.set("noise.delta", list);
    }
    if (!problem.empty()) ctx.cfg.set("certify.problem", problem);
    const std::string declared_action = ctx.cfg.text("experiment.action", action);
    if (declared_action != action)
      throw ConfigError("config: experiment.action = " + declared_action + " but command is " + action);
    ctx.seed = ctx.cfg.u64("experiment.seed", kind == "phaselift" ? 7 : 1);
    ctx.jobs = ctx.cfg.integer("experiment.jobs", 1);
    if (ctx.jobs < 1) throw ConfigError("config: experiment.jobs must be positive");
    ctx.out = ctx.cfg.text("output.dir", "liftrec-out/" + kind + (action.empty() ? "" : "-" + action));
    solver_options(ctx.cfg);
  } catch (const ConfigError& e) {
    std::cerr << "liftrec: " << e.what() << "\n";
    return 2;
  }

  try {
    return execute(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "liftrec: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "liftrec: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "liftrec: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace liftrec::cli
