#include <cmath>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "liftrec/acceptance.hpp"
#include "liftrec/calderon.hpp"
#include "liftrec/cli/app.hpp"
#include "liftrec/cli/pool.hpp"
#include "liftrec/internal.hpp"
#include "liftrec/quadratic.hpp"

namespace liftrec::cli {

namespace {

using json = nlohmann::ordered_json;

std::int64_t as_int(std::size_t k) { return static_cast<std::int64_t>(k); }

json vector_json(const std::vector<double>& v) { return json(v); }

json certificate_json(const CertificateReport& cert) {
  json blocks = json::array();
  for (std::size_t i = 0; i < cert.w_norm.size(); ++i)
    blocks.push_back({{"block", i}, {"w_norm", cert.w_norm[i]}, {"tangent_residual", cert.tangent_residual[i]}});
  return {{"blocks", blocks},
          {"max_w_norm", cert.max_w_norm()},
          {"sigma_min", cert.smallest_singular_value},
          {"margin", cert.margin},
          {"pass", cert.ndsc_pass}};
}

Table certificate_table(const CertificateReport& cert) {
  Table t{{"block", "w_norm", "tangent_residual", "pass"}, {}};
  for (std::size_t i = 0; i < cert.w_norm.size(); ++i)
    t.add({as_int(i), cert.w_norm[i], cert.tangent_residual[i], cert.w_norm[i] <= 1.0 - cert.margin});
  return t;
}

void assert_ndsc(const RunContext& ctx, RunOutput& out, const CertificateReport& cert) {
  if (ctx.cfg.flag("assert.require_ndsc", false))
    out.assertions.push_back({"ndsc", cert.ndsc_pass, fmt::format("max w_norm {}", cert.max_w_norm())});
}

void assert_errors(const RunContext& ctx, RunOutput& out, const std::vector<double>& errors) {
  if (!ctx.cfg.has("assert.max_error")) return;
  const double bound = ctx.cfg.real("assert.max_error", 0.0);
  double worst = 0.0;
  for (double e : errors) worst = std::max(worst, e);
  out.assertions.push_back({"max_error", worst <= bound, fmt::format("worst error {} vs {}", worst, bound)});
}

void assert_slope(const RunContext& ctx, RunOutput& out, double slope) {
  if (!ctx.cfg.has("assert.min_slope") && !ctx.cfg.has("assert.max_slope")) return;
  const double lo = ctx.cfg.real("assert.min_slope", -INFINITY), hi = ctx.cfg.real("assert.max_slope", INFINITY);
  out.assertions.push_back({"slope", slope >= lo && slope <= hi, fmt::format("slope {} vs [{}, {}]", slope, lo, hi)});
}

void assert_converged(RunOutput& out, int converged, int total) {
  out.assertions.push_back({"solver_converged", converged == total, fmt::format("{}/{} solves converged", converged,
                                                                               total)});
}

// Noise tasks: every δ > 0 is paired with `seeds` consecutive seeds; δ = 0
// runs once.
struct NoiseTask {
  double delta = 0.0;
  std::uint64_t seed = 0;
};

std::vector<NoiseTask> noise_tasks(const RunContext& ctx) {
  const std::vector<double> deltas = ctx.cfg.reals("noise.delta", {0.0});
  const int seeds = ctx.cfg.integer("noise.seeds", 1);
  if (seeds < 1) throw ConfigError("config: noise.seeds must be positive");
  std::vector<NoiseTask> tasks;
  for (double d : deltas) {
    if (d < 0.0) throw ConfigError("config: noise.delta must be nonnegative");
    if (d == 0.0) {
      tasks.push_back({0.0, ctx.seed});
      continue;
    }
    for (int s = 0; s < seeds; ++s) tasks.push_back({d, ctx.seed + static_cast<std::uint64_t>(s)});
  }
  return tasks;
}

// Median error per positive δ and the log-log slope, when at least two δ.
std::optional<double> rate(const std::vector<NoiseTask>& tasks, const std::vector<double>& errors, json& results) {
  std::map<double, std::vector<double>> by_delta;
  for (std::size_t k = 0; k < tasks.size(); ++k)
    if (tasks[k].delta > 0.0) by_delta[tasks[k].delta].push_back(errors[k]);
  if (by_delta.size() < 2) return std::nullopt;
  std::vector<double> ds, meds;
  for (const auto& [d, errs] : by_delta) {
    ds.push_back(d);
    meds.push_back(median(errs));
  }
  const double slope = loglog_slope(ds, meds);
  results["rate"] = {{"deltas", ds}, {"median_errors", meds}, {"slope", slope}};
  return slope;
}

// ---------------------------------------------------------------- internal

Potential1D internal_potential(const Config& cfg, const Grid1D& g) {
  const std::string type = cfg.text("potential.type", "step");
  const double value = cfg.real("potential.value", 1.0);
  if (type == "constant") return Potential1D(g, Vector::Constant(g.n, value));
  if (type == "step") {
    const double q0 = cfg.real("potential.q0", 0.5);
    const double lo = cfg.real("potential.lo", g.a + 0.4 * (g.b - g.a));
    const double hi = cfg.real("potential.hi", g.a + 0.6 * (g.b - g.a));
    Vector v = Vector::Constant(g.n, value);
    for (int j = 0; j < g.n; ++j)
      if (g.nodes(j) > lo + 1e-12 && g.nodes(j) < hi - 1e-12) v(j) += q0;
    return Potential1D(g, std::move(v));
  }
  if (type == "coefficients") {
    const std::vector<double> c = cfg.reals("potential.coefficients", {});
    if (static_cast<int>(c.size()) != g.n)
      throw ConfigError(fmt::format("config: potential.coefficients needs {} nodal values", g.n));
    return Potential1D(g, Eigen::Map<const Vector>(c.data(), g.n));
  }
  throw ConfigError("config: potential.type for internal must be constant, step or coefficients");
}

Grid1D internal_grid(const Config& cfg) {
  return build_grid_1d(cfg.integer("grid.n", 41), cfg.real("grid.a", 0.0), cfg.real("grid.b", 1.0));
}

InternalSetup internal_setup(const Config& cfg, std::optional<NoiseSpec> noise = std::nullopt) {
  const Grid1D g = internal_grid(cfg);
  return build_internal_problem(g, internal_potential(cfg, g), cfg.real("boundary.f_a", 1.0),
                                cfg.real("boundary.f_b", 1.0), noise);
}

struct InternalRow {
  double delta = 0.0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  int iters = 0;
  std::string status;
  double err = 0.0;
  double sigma_ratio = 0.0;
  Vector q_hat;
  Vector q_true;
  Vector x;
};

InternalRow internal_solve(const Config& cfg, const NoiseTask& task, const SolverOptions& opts) {
  const auto noise = task.delta > 0.0 ? std::optional<NoiseSpec>(NoiseSpec{task.delta, task.seed}) : std::nullopt;
  const InternalSetup s = internal_setup(cfg, noise);
  const InternalRecovery r =
      recover_internal(s.problem, s.measurements, task.delta > 0.0 ? RecoveryMode::noisy : RecoveryMode::exact,
                       cfg.real("noise.c", 1.0), opts);
  return {task.delta,         task.seed, r.lambda,       r.report.iterations, std::string(to_string(r.report.status)),
          r.rel_error,        r.sigma_ratio, r.q_hat.values, s.problem.q_true.values, s.problem.grid.nodes};
}

double potential_q0(const Config& cfg) { return cfg.real("potential.q0", cfg.text("potential.type", "step") == "step" ? 0.5 : 0.0); }

RunOutput internal_certify(const RunContext& ctx) {
  RunOutput out;
  const InternalSetup s = internal_setup(ctx.cfg);
  const InternalProblem& p = s.problem;
  const SufficientCondition sc = sufficient_condition(p);
  const AffineOperator op = assemble_internal_operator(p);
  const CertificateReport cert = precertificate(op, {p.truth_model()});
  const double cphi = apriori_constant(p);
  const Vector qn = normalized_pair(p).q;
  const int points = ctx.cfg.integer("sweep.alpha_points", 41);
  if (points < 2) throw ConfigError("config: sweep.alpha_points must be at least 2");
  const double lo = qn.minCoeff() - 0.5, hi = qn.maxCoeff() + 0.5;
  Table alpha{{"alpha", "exact", "bound", "dominated"}, {}};
  double best_alpha = lo, best_exact = INFINITY;
  int dominated = 0;
  for (int k = 0; k < points; ++k) {
    const double a = lo + (hi - lo) * k / (points - 1);
    const CertificateNorm c = certificate_norm(p, a);
    alpha.add({a, c.exact, c.bound, c.dominated});
    dominated += c.dominated ? 1 : 0;
    if (c.exact < best_exact) {
      best_exact = c.exact;
      best_alpha = a;
    }
  }
  const double astar = optimal_alpha(p);
  Table cond{{"q0", "lhs", "pass", "w_norm", "sigma_min", "c_phi"}, {}};
  cond.add({potential_q0(ctx.cfg), sc.lhs_normalized, sc.pass, cert.max_w_norm(), cert.smallest_singular_value, cphi});
  out.tables["certify"] = std::move(cond);
  out.tables["alpha"] = std::move(alpha);
  out.results = {{"lhs_normalized", sc.lhs_normalized},
                 {"lhs_unnormalized", sc.lhs_unnormalized},
                 {"condition_pass", sc.pass},
                 {"certificate", certificate_json(cert)},
                 {"c_phi", cphi},
                 {"inverse_sigma_min", 1.0 / cert.smallest_singular_value},
                 {"alpha_star", astar},
                 {"alpha_star_exact", certificate_norm(p, astar).exact},
                 {"alpha_grid_best", best_alpha},
                 {"alpha_grid_best_exact", best_exact},
                 {"least_norm_vs_h_alpha_star",
                  (cert.H[0] - closed_form_precertificate(p, astar)).norm()}};
  out.assertions.push_back({"dominance", dominated == points, fmt::format("{}/{} alpha values", dominated, points)});
  assert_ndsc(ctx, out, cert);
  return out;
}

Table internal_q_table(const InternalRow& row) {
  Table t{{"x", "q_true", "q_hat"}, {}};
  for (Eigen::Index j = 0; j < row.x.size(); ++j) t.add({row.x(j), row.q_true(j), row.q_hat(j)});
  return t;
}

RunOutput internal_recover(const RunContext& ctx) {
  RunOutput out;
  const SolverOptions opts = solver_options(ctx.cfg);
  const std::vector<NoiseTask> tasks = noise_tasks(ctx);
  const auto rows = parallel_map<InternalRow>(static_cast<int>(tasks.size()), ctx.jobs,
                                              [&](int k) { return internal_solve(ctx.cfg, tasks[k], opts); });
  const double q0 = potential_q0(ctx.cfg);
  Table t{{"q0", "delta", "seed", "lambda", "iters", "status", "err_L2", "sigma_ratio"}, {}};
  std::vector<double> errors;
  int converged = 0;
  for (const auto& r : rows) {
    t.add({q0, r.delta, static_cast<std::int64_t>(r.seed), r.lambda, static_cast<std::int64_t>(r.iters), r.status,
           r.err, r.sigma_ratio});
    errors.push_back(r.err);
    converged += r.status == "converged" ? 1 : 0;
  }
  out.tables["recover"] = std::move(t);
  out.tables["q_hat"] = internal_q_table(rows.front());
  out.results["solves"] = rows.size();
  out.results["errors"] = errors;
  assert_converged(out, converged, static_cast<int>(rows.size()));
  assert_errors(ctx, out, errors);
  if (const auto slope = rate(tasks, errors, out.results)) assert_slope(ctx, out, *slope);
  return out;
}

RunOutput internal_sweep(const RunContext& ctx) {
  RunOutput out;
  const SolverOptions opts = solver_options(ctx.cfg);
  const std::vector<double> q0s = ctx.cfg.reals("sweep.q0", {-0.6, -0.3, 0.0, 0.3, 0.6, 0.9, 1.2});
  struct Row {
    double lhs = 0.0;
    bool pass = false;
    double w = 0.0;
    double err = 0.0;
    int iters = 0;
    bool converged = false;
  };
  const auto rows = parallel_map<Row>(static_cast<int>(q0s.size()), ctx.jobs, [&](int k) {
    Config cfg = ctx.cfg;
    cfg.set("potential.type", "step");
    cfg.set("potential.q0", format_real(q0s[k]));
    const InternalSetup s = internal_setup(cfg);
    const SufficientCondition sc = sufficient_condition(s.problem);
    Row row{sc.lhs_normalized, sc.pass};
    try {
      row.w = precertificate(assemble_internal_operator(s.problem), {s.problem.truth_model()}).max_w_norm();
    } catch (const DegenerateCertificate&) {
      row.w = INFINITY;
    }
    const InternalRecovery r = recover_internal(s.problem, s.measurements, RecoveryMode::exact, 1.0, opts);
    row.err = r.rel_error;
    row.iters = r.report.iterations;
    row.converged = r.report.status == SolveStatus::converged;
    return row;
  });
  Table t{{"q0", "lhs", "pass", "w_norm", "err_L2", "iters"}, {}};
  int converged = 0;
  std::vector<double> errors;
  for (std::size_t k = 0; k < q0s.size(); ++k) {
    t.add({q0s[k], rows[k].lhs, rows[k].pass, rows[k].w, rows[k].err, static_cast<std::int64_t>(rows[k].iters)});
    converged += rows[k].converged ? 1 : 0;
    errors.push_back(rows[k].err);
  }
  out.tables["sweep"] = std::move(t);

  const std::vector<NoiseTask> tasks = noise_tasks(ctx);
  const bool any_noise = std::any_of(tasks.begin(), tasks.end(), [](const NoiseTask& n) { return n.delta > 0.0; });
  if (any_noise) {
    const auto noisy = parallel_map<InternalRow>(static_cast<int>(tasks.size()), ctx.jobs,
                                                 [&](int k) { return internal_solve(ctx.cfg, tasks[k], opts); });
    Table nt{{"q0", "delta", "seed", "lambda", "iters", "err_L2"}, {}};
    std::vector<double> nerr;
    for (const auto& r : noisy) {
      nt.add({potential_q0(ctx.cfg), r.delta, static_cast<std::int64_t>(r.seed), r.lambda,
              static_cast<std::int64_t>(r.iters), r.err});
      nerr.push_back(r.err);
      converged += r.status == "converged" ? 1 : 0;
    }
    out.tables["noise"] = std::move(nt);
    if (const auto slope = rate(tasks, nerr, out.results)) assert_slope(ctx, out, *slope);
  }
  const int n = ctx.cfg.integer("grid.n", 41);
  const auto lower = bisect_condition_boundary(n, -0.99, 0.0);
  const auto upper = bisect_condition_boundary(n, 0.0, 3.0);
  out.results["step_boundary"] = {{"n", n},
                                  {"lower", lower ? json(*lower) : json(nullptr)},
                                  {"upper", upper ? json(*upper) : json(nullptr)}};
  assert_converged(out, converged, static_cast<int>(q0s.size() + (any_noise ? tasks.size() : 0)));
  assert_errors(ctx, out, errors);
  return out;
}

// ---------------------------------------------------------------- calderon

struct CalderonSetup {
  Grid2D grid;
  BasisW w;
  Vector coeffs;
};

CalderonSetup calderon_setup(const Config& cfg) {
  CalderonSetup s{build_grid_2d(cfg.integer("grid.nx", 17), cfg.integer("grid.ny", cfg.integer("grid.nx", 17))),
                  {}, {}};
  s.w = build_hat_basis(s.grid, cfg.integer("boundary.m", 4));
  const std::string type = cfg.text("potential.type", "bilinear");
  if (type == "coefficients") {
    const std::vector<double> c = cfg.reals("potential.coefficients", {});
    if (static_cast<int>(c.size()) != s.w.m)
      throw ConfigError(fmt::format("config: potential.coefficients needs {} W coordinates", s.w.m));
    s.coeffs = Eigen::Map<const Vector>(c.data(), s.w.m);
    return s;
  }
  Vector q(s.grid.size());
  if (type == "constant") {
    q.setConstant(cfg.real("potential.value", 1.0));
  } else if (type == "bilinear") {
    const std::vector<double> b = cfg.reals("potential.bilinear", {1.5, 1.0, -0.5, 1.0});
    if (b.size() != 4) throw ConfigError("config: potential.bilinear needs c0, cx, cy, cxy");
    for (int k = 0; k < s.grid.size(); ++k) {
      const double x = s.grid.node_x(k), y = s.grid.node_y(k);
      q(k) = b[0] + b[1] * x + b[2] * y + b[3] * x * y;
    }
  } else {
    throw ConfigError("config: potential.type for calderon must be constant, bilinear or coefficients");
  }
  s.coeffs = project_onto_w(s.grid, s.w, q);
  return s;
}

CalderonProblem calderon_problem(const Config& cfg, const CalderonSetup& s) {
  return build_calderon_problem(s.grid, s.w, cfg.integer("boundary.N", 4), s.coeffs);
}

RunOutput calderon_forward(const RunContext& ctx) {
  RunOutput out;
  const CalderonSetup s = calderon_setup(ctx.cfg);
  const CalderonProblem p = calderon_problem(ctx.cfg, s);
  const CalderonOperators ops = assemble_calderon_operator(p);
  const CalderonMeasurements m = calderon_measurements(p);
  Table t{{"datum", "node", "x", "y", "boundary_weight", "f", "flux", "harmonic_flux"}, {}};
  const Grid2D& g = p.grid;
  for (int i = 0; i < p.N(); ++i)
    for (std::size_t b = 0; b < g.boundary_index.size(); ++b) {
      const int node = g.boundary_index[b];
      const auto bi = static_cast<Eigen::Index>(b);
      t.add({static_cast<std::int64_t>(i), static_cast<std::int64_t>(node), g.node_x(node), g.node_y(node),
             g.boundary_weights(bi), p.bdry.f(bi, i), p.fluxes(bi, i), p.harmonic_fluxes(bi, i)});
    }
  out.tables["dtn"] = std::move(t);
  const double residual = (ops.full.apply(p.truth_whitened()) - m.stacked()).norm();
  out.results = {{"N", p.N()},
                 {"int_q", p.int_q},
                 {"q_coeffs", vector_json(std::vector<double>(p.q_coeffs.data(), p.q_coeffs.data() + p.q_coeffs.size()))},
                 {"z1_norm", m.z1.norm()},
                 {"z2_norm", m.z2.norm()},
                 {"truth_residual", residual}};
  out.assertions.push_back({"forward_consistency", residual <= 1e-9 * std::max(1.0, m.stacked().norm()),
                            fmt::format("residual {}", residual)});
  return out;
}

RunOutput calderon_recover(const RunContext& ctx) {
  RunOutput out;
  const SolverOptions opts = solver_options(ctx.cfg);
  const CalderonSetup s = calderon_setup(ctx.cfg);
  const CalderonProblem p = calderon_problem(ctx.cfg, s);
  const std::vector<NoiseTask> tasks = noise_tasks(ctx);
  const double c = ctx.cfg.real("noise.c", 1.0);
  const auto recs = parallel_map<CalderonRecovery>(static_cast<int>(tasks.size()), ctx.jobs, [&](int k) {
    const NoiseTask& task = tasks[k];
    const bool noisy = task.delta > 0.0;
    const CalderonMeasurements m =
        calderon_measurements(p, noisy ? std::optional<NoiseSpec>(NoiseSpec{task.delta, task.seed}) : std::nullopt);
    return recover_calderon(p, m, noisy ? CalderonMode::noisy : CalderonMode::exact, c, opts);
  });
  Table t{{"N", "delta", "seed", "lambda", "iters", "status", "rel_error", "max_sigma_ratio", "constraint_residual"},
          {}};
  std::vector<double> errors;
  int converged = 0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const auto& r = recs[k];
    t.add({static_cast<std::int64_t>(p.N()), tasks[k].delta, static_cast<std::int64_t>(tasks[k].seed), r.lambda,
           static_cast<std::int64_t>(r.report.iterations), std::string(to_string(r.report.status)), r.rel_error,
           r.max_sigma_ratio, r.constraint_residual});
    errors.push_back(r.rel_error);
    converged += r.report.status == SolveStatus::converged ? 1 : 0;
  }
  Table q{{"k", "q_true", "q_hat"}, {}};
  for (Eigen::Index k = 0; k < p.q_coeffs.size(); ++k) q.add({static_cast<std::int64_t>(k), p.q_coeffs(k),
                                                               recs.front().q_coeffs(k)});
  out.tables["recover"] = std::move(t);
  out.tables["q_hat"] = std::move(q);
  out.results["errors"] = errors;
  assert_converged(out, converged, static_cast<int>(recs.size()));
  assert_errors(ctx, out, errors);
  if (const auto slope = rate(tasks, errors, out.results)) assert_slope(ctx, out, *slope);
  return out;
}

RunOutput calderon_certify(const RunContext& ctx) {
  RunOutput out;
  const CalderonSetup s = calderon_setup(ctx.cfg);
  const int N = ctx.cfg.integer("boundary.N", 4);
  const std::vector<int> Ns = ctx.cfg.integers("boundary.N_list", {N});
  const auto rows = parallel_map<std::vector<PrecertificateRow>>(
      static_cast<int>(Ns.size()), ctx.jobs, [&](int k) { return precertificate_study(s.grid, s.w, s.coeffs, {Ns[k]}); });
  Table t{{"N", "degenerate", "max_w_norm", "max_tangent_residual", "smallest_singular_value", "ndsc_pass"}, {}};
  json list = json::array();
  bool all_pass = true;
  for (const auto& rs : rows)
    for (const auto& r : rs) {
      t.add({static_cast<std::int64_t>(r.N), r.degenerate, r.max_w_norm, r.max_tangent_residual,
             r.smallest_singular_value, r.ndsc_pass});
      list.push_back({{"N", r.N}, {"w_norm", r.max_w_norm}, {"pass", r.ndsc_pass}});
      all_pass = all_pass && r.ndsc_pass;
    }
  out.tables["precertificate"] = std::move(t);
  out.results["rows"] = list;
  if (ctx.cfg.flag("assert.require_ndsc", false))
    out.assertions.push_back({"ndsc", all_pass, "every N in the list"});
  return out;
}

RunOutput calderon_baseline(const RunContext& ctx) {
  RunOutput out;
  const CalderonSetup s = calderon_setup(ctx.cfg);
  const CalderonProblem p = calderon_problem(ctx.cfg, s);
  const Vector init = p.q_coeffs + ctx.cfg.real("baseline.perturbation", 0.05) * Vector::Ones(p.q_coeffs.size());
  const GaussNewtonHistory h = gauss_newton_baseline(p, init, ctx.cfg.integer("baseline.iters", 20));
  Table t{{"iter", "misfit", "rel_error"}, {}};
  for (std::size_t k = 0; k < h.misfit.size(); ++k) {
    const double err = k < h.iterates.size() ? (h.iterates[k] - p.q_coeffs).norm() / p.q_coeffs.norm() : NAN;
    t.add({as_int(k), h.misfit[k], err});
  }
  out.tables["baseline"] = std::move(t);
  out.results = {{"converged", h.converged}, {"diverged", h.diverged}, {"note", h.note}};
  return out;
}

// ---------------------------------------------------------------- phaselift

Vector seeded_direction(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vector e(n);
  for (Eigen::Index k = 0; k < n; ++k) e(k) = gauss(rng);
  return e.normalized();
}

}  // namespace

RunOutput run_internal(const RunContext& ctx) {
  if (ctx.action == "certify") return internal_certify(ctx);
  if (ctx.action == "recover") return internal_recover(ctx);
  if (ctx.action == "sweep") return internal_sweep(ctx);
  throw ConfigError("internal: unknown action " + ctx.action);
}

RunOutput run_calderon(const RunContext& ctx) {
  if (ctx.action == "forward") return calderon_forward(ctx);
  if (ctx.action == "recover") return calderon_recover(ctx);
  if (ctx.action == "certify") return calderon_certify(ctx);
  if (ctx.action == "baseline") return calderon_baseline(ctx);
  throw ConfigError("calderon: unknown action " + ctx.action);
}

RunOutput run_phaselift(const RunContext& ctx) {
  RunOutput out;
  const SolverOptions opts = solver_options(ctx.cfg);
  const int n = ctx.cfg.integer("phaselift.n", 5), m = ctx.cfg.integer("phaselift.m", 20);
  const QuadraticInstance inst = make_phase_retrieval(n, m, ctx.seed);
  const Matrix truth = lift(*inst.x_true);
  std::vector<double> deltas = ctx.cfg.reals("noise.delta", {0.0});
  const double c = ctx.cfg.real("noise.c", 1.0);
  struct Row {
    double lambda = 0.0;
    PhaseLiftResult r;
  };
  const auto rows = parallel_map<Row>(static_cast<int>(deltas.size()), ctx.jobs, [&](int k) {
    const double d = deltas[k];
    if (d < 0.0) throw ConfigError("config: noise.delta must be nonnegative");
    if (d == 0.0) return Row{0.0, recover_phaselift(inst, PsdMode::exact, 0.0, nullptr, opts)};
    const Vector z = inst.z + d * seeded_direction(inst.z.size(), ctx.seed + 1000 + static_cast<std::uint64_t>(k));
    return Row{c * d, recover_phaselift(inst, PsdMode::regularized, c * d, &z, opts)};
  });
  Table t{{"delta", "lambda", "iters", "status", "error_x", "error_X", "sigma_ratio"}, {}};
  std::vector<double> errs, noisy_d, noisy_err;
  int converged = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k].r;
    const double ex = sign_aligned_error(r.x_hat, *inst.x_true), eX = (r.X - truth).norm();
    t.add({deltas[k], rows[k].lambda, static_cast<std::int64_t>(r.report.iterations),
           std::string(to_string(r.report.status)), ex, eX, r.sigma_ratio});
    errs.push_back(ex);
    converged += r.report.status == SolveStatus::converged ? 1 : 0;
    if (deltas[k] > 0.0) {
      noisy_d.push_back(deltas[k]);
      noisy_err.push_back(eX);
    }
  }
  out.tables["phaselift"] = std::move(t);
  CertificateReport cert;
  try {
    cert = phaselift_certificate(inst);
    out.results["certificate"] = certificate_json(cert);
  } catch (const DegenerateCertificate& e) {
    out.results["certificate"] = {{"degenerate", true}, {"sigma_min", e.smallest_singular_value}};
  }
  out.results["n"] = n;
  out.results["m"] = m;
  out.results["errors"] = errs;
  if (noisy_d.size() >= 2) {
    const double slope = loglog_slope(noisy_d, noisy_err);
    out.results["slope"] = slope;
    assert_slope(ctx, out, slope);
  }
  assert_converged(out, converged, static_cast<int>(rows.size()));
  assert_errors(ctx, out, errs);
  assert_ndsc(ctx, out, cert);
  return out;
}

RunOutput run_certify(const RunContext& ctx) {
  RunOutput out;
  const std::string problem = ctx.cfg.text("certify.problem", "internal");
  CertificateReport cert;
  if (problem == "internal") {
    const InternalSetup s = internal_setup(ctx.cfg);
    cert = precertificate(assemble_internal_operator(s.problem), {s.problem.truth_model()});
  } else if (problem == "calderon") {
    const CalderonSetup s = calderon_setup(ctx.cfg);
    const CalderonProblem p = calderon_problem(ctx.cfg, s);
    cert = precertificate(assemble_calderon_operator(p).full, p.truth_models());
  } else if (problem == "phaselift") {
    cert = phaselift_certificate(
        make_phase_retrieval(ctx.cfg.integer("phaselift.n", 5), ctx.cfg.integer("phaselift.m", 20), ctx.seed));
  } else {
    throw ConfigError("config: certify.problem must be internal, calderon or phaselift");
  }
  json report{{"problem", problem}};
  report.update(certificate_json(cert));
  out.documents["certify"] = report;
  out.tables["certificate"] = certificate_table(cert);
  out.results = report;
  assert_ndsc(ctx, out, cert);
  return out;
}

RunOutput run_selftest(const RunContext&) {
  RunOutput out;
  const AcceptanceReport report = run_acceptance([](const CriterionResult& r) {
    std::printf("%s\n", format_result(r).c_str());
    std::fflush(stdout);
  });
  Table t{{"id", "title", "pass", "detail"}, {}};
  json timings = json::object();
  for (const auto& r : report.results) {
    t.add({static_cast<std::int64_t>(r.id), r.title, r.pass, r.detail});
    out.assertions.push_back({fmt::format("criterion {}: {}", r.id, r.title), r.pass, r.detail});
    timings[std::to_string(r.id)] = r.seconds;
  }
  out.tables["acceptance"] = std::move(t);
  out.raw_tables = report.tables;
  out.results["seconds"] = timings;
  return out;
}

}  // namespace liftrec::cli
