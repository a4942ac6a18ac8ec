#include "liftrec/acceptance.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "liftrec/calderon.hpp"
#include "liftrec/certify.hpp"
#include "liftrec/cli/table.hpp"
#include "liftrec/internal.hpp"
#include "liftrec/lowrank.hpp"
#include "liftrec/quadratic.hpp"

namespace liftrec {

namespace {

constexpr double kPi = 3.141592653589793;

// Pinned tolerances.
constexpr int kStepGrid = 401;
constexpr double kLowerWindowLo = -0.75, kLowerWindowHi = -0.65;
constexpr double kUpperWindowLo = 0.75, kUpperWindowHi = 0.85;
constexpr double kBisectSeconds = 10.0;
constexpr int kInternalGrid = 41;
constexpr double kExactRelError = 1e-3;
constexpr double kRankRatio = 1e-4;
constexpr double kExactSeconds = 120.0;
constexpr double kSlopeLo = 0.8, kSlopeHi = 1.2;
constexpr double kFormAgreement = 1e-10;
constexpr double kDominanceSlack = 1e-9;
constexpr double kProjectorTol = 1e-10;
constexpr double kDualityGapRel = 1e-6;
constexpr double kPairingDefect = 1e-6;
constexpr double kKktTol = 1e-8;
constexpr double kOracleObjective = 1e-6;
constexpr double kPhaseLiftError = 1e-3;
constexpr double kPhaseLiftSeconds = 60.0;
constexpr double kConstraintResidual = 1e-9;
constexpr double kTangentResidual = 1e-8;
constexpr double kCalderonRelError = 1e-2;
constexpr double kCalderonSeconds = 600.0;
constexpr double kFrechetOrder = 0.9;
constexpr double kFrechetSymmetry = 1e-8;

const std::vector<double> kDeltas{1e-2, 3e-3, 1e-3, 3e-4};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return gauss_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  Vector vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = normal();
    return v;
  }
  Matrix matrix(Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }
  RankOneModel model(Eigen::Index r, Eigen::Index c) {
    return RankOneModel(uniform(0.5, 2.0), vector(r).normalized(), vector(c).normalized());
  }
  Vector unit_orthogonal(const Vector& u) {
    Vector w = vector(u.size());
    w -= u.dot(w) * u;
    return w.normalized();
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_;
};

// Solver outputs shared between criteria.
struct EqualitySolve {
  std::string name;
  BlockList blocks;
  Vector dual;
  AffineOperator op;
  Vector z;
  SolveReport report;
};

struct NoisySolve {
  std::string name;
  BlockList blocks;
  std::vector<RankOneModel> models;
  CertificateReport cert;
  Vector p;
  AffineOperator op;
  double c = 1.0;
  double delta = 0.0;
};

struct Shared {
  std::vector<EqualitySolve> equality;
  std::vector<NoisySolve> noisy;
};

InternalSetup step_setup(int n, double q0, std::optional<NoiseSpec> noise = std::nullopt) {
  const Grid1D g = build_grid_1d(n, 0.0, 1.0);
  return build_internal_problem(g, step_potential(g, q0), 1.0, 1.0, noise);
}

Potential1D random_potential(Rng& rng, const Grid1D& g) {
  Vector q = Vector::Constant(g.n, rng.uniform(0.5, 2.0));
  for (int k = 1; k <= 3; ++k) {
    const double a = rng.uniform(-0.3, 0.3), ph = rng.uniform(0.0, 2.0 * kPi);
    q.array() += a * (k * kPi * g.nodes.array() + ph).sin();
  }
  return Potential1D(g, q);
}

CriterionResult start(int id, const char* title) {
  CriterionResult r;
  r.id = id;
  r.title = title;
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CriterionResult c1_step_interval() {
  CriterionResult r = start(1, "step-potential interval by bisection");
  const auto t0 = std::chrono::steady_clock::now();
  const auto lower = bisect_condition_boundary(kStepGrid, -0.99, 0.0);
  const auto upper = bisect_condition_boundary(kStepGrid, 0.0, 3.0);
  const double secs = seconds_since(t0);
  const bool lower_ok = lower && *lower >= kLowerWindowLo && *lower <= kLowerWindowHi;
  const bool upper_ok = upper && *upper >= kUpperWindowLo && *upper <= kUpperWindowHi;
  r.pass = lower_ok && upper_ok && secs <= kBisectSeconds;
  r.detail = fmt::format("lower={} upper={} LHS(-0.7)={:.4f} LHS(0.8)={:.4f}",
                         lower ? fmt::format("{:.6f}", *lower) : "none", upper ? fmt::format("{:.6f}", *upper) : "none",
                         step_condition_lhs(kStepGrid, -0.7), step_condition_lhs(kStepGrid, 0.8));
  return r;
}

CriterionResult c2_internal_exact(Shared& shared) {
  CriterionResult r = start(2, "internal exact recovery");
  bool pass = true;
  std::string detail;
  for (double q0 : {-0.3, 0.3, 0.5}) {
    const auto t0 = std::chrono::steady_clock::now();
    const InternalSetup s = step_setup(kInternalGrid, q0);
    const AffineOperator op = assemble_internal_operator(s.problem);
    const CertificateReport cert = precertificate(op, {s.problem.truth_model()});
    const InternalRecovery rec = recover_internal(s.problem, s.measurements, RecoveryMode::exact);
    const Vector oracle = direct_division_oracle(s.problem.grid, s.problem.u_true).values;
    const double err = l2_relative_error(s.problem.grid, rec.q_hat.values, oracle);
    const double secs = seconds_since(t0);
    const bool ok = cert.ndsc_pass && rec.report.status == SolveStatus::converged && err <= kExactRelError &&
                    rec.sigma_ratio <= kRankRatio && secs <= kExactSeconds;
    pass = pass && ok;
    detail += fmt::format("q0={}: w={:.3f} err={:.2e} ratio={:.2e}; ", q0, cert.max_w_norm(), err,
                          rec.sigma_ratio);
    if (rec.report.status == SolveStatus::converged)
      shared.equality.push_back({fmt::format("internal q0={}", q0), {rec.f_hat}, rec.dual, op,
                                 s.measurements.stacked(), rec.report});
  }
  r.pass = pass;
  r.detail = detail;
  return r;
}

CriterionResult c3_internal_noisy(Shared& shared, AcceptanceReport& report) {
  CriterionResult r = start(3, "internal noisy rate");
  cli::Table table{{"delta", "seed", "z_error", "rel_error"}, {}};
  std::vector<double> medians;
  bool converged = true;
  for (double delta : kDeltas) {
    std::vector<double> errs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const InternalSetup s = step_setup(kInternalGrid, 0.5, NoiseSpec{delta, seed});
      const InternalRecovery rec = recover_internal(s.problem, s.measurements, RecoveryMode::noisy, 1.0);
      converged = converged && rec.report.status == SolveStatus::converged;
      errs.push_back(rec.rel_error);
      table.add({delta, static_cast<std::int64_t>(seed), s.measurements.z_error, rec.rel_error});
      if (seed == 1) {
        const AffineOperator op = assemble_internal_operator(s.problem);
        const RankOneModel m = s.problem.truth_model();
        CertificateReport cert = precertificate(op, {m});
        const double dz = s.measurements.z_error;
        const Vector p = cert.p;
        shared.noisy.push_back({fmt::format("internal delta={}", delta), {rec.f_hat}, {m}, std::move(cert), p, op,
                                rec.lambda / dz, dz});
      }
    }
    medians.push_back(median(errs));
  }
  const double slope = loglog_slope(kDeltas, medians);
  r.pass = converged && slope >= kSlopeLo && slope <= kSlopeHi;
  r.detail = fmt::format("slope={:.3f} medians=[{:.2e}, {:.2e}, {:.2e}, {:.2e}]", slope, medians[0], medians[1],
                         medians[2], medians[3]);
  report.tables["internal_noisy"] = cli::to_csv(table);
  return r;
}

CriterionResult c4_dominance() {
  CriterionResult r = start(4, "certificate norm dominance and condition forms");
  Rng rng(2024);
  const Grid1D g = build_grid_1d(kInternalGrid, 0.0, 1.0);
  int dominated = 0, agree = 0;
  double worst_form = 0.0;
  for (int t = 0; t < 50; ++t) {
    const InternalSetup s =
        build_internal_problem(g, random_potential(rng, g), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0));
    const Vector q = normalized_pair(s.problem).q;
    const double alpha = rng.uniform(q.minCoeff() - 0.5, q.maxCoeff() + 0.5);
    const CertificateNorm c = certificate_norm(s.problem, alpha);
    if (c.exact <= c.bound + kDominanceSlack) ++dominated;
    const SufficientCondition sc = sufficient_condition(s.problem);
    const double diff = std::abs(sc.lhs_normalized - sc.lhs_unnormalized) / std::max(1.0, sc.lhs_normalized);
    worst_form = std::max(worst_form, diff);
    if (diff <= kFormAgreement) ++agree;
  }
  r.pass = dominated == 50 && agree == 50;
  r.detail = fmt::format("dominated={}/50 forms agree={}/50 worst form difference={:.2e}", dominated, agree,
                         worst_form);
  return r;
}

CriterionResult c5_apriori() {
  CriterionResult r = start(5, "a-priori constant");
  Rng rng(500);
  const InternalSetup s = step_setup(kInternalGrid, 0.5);
  const double cphi = apriori_constant(s.problem);
  const AffineOperator op = assemble_internal_operator(s.problem);
  const RankOneModel m = s.problem.truth_model();
  const Matrix b = tangent_basis(m);
  int ok = 0;
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const Vector f = b * rng.vector(b.cols());
    const Matrix fm = Eigen::Map<const Matrix>(f.data(), m.rows(), m.cols());
    const double ratio = fm.norm() / op.apply({fm}).norm();
    worst = std::max(worst, ratio);
    if (fm.norm() <= cphi * op.apply({fm}).norm() + 1e-9) ++ok;
  }
  const CertificateReport cert = precertificate(op, {m});
  const double inv = 1.0 / cert.smallest_singular_value;
  r.pass = std::isfinite(cphi) && ok == 500 && inv <= cphi;
  r.detail = fmt::format("C_phi={:.4f} 1/sigma_min={:.4f} worst ratio={:.4f} holds={}/500", cphi, inv, worst, ok);
  return r;
}

CriterionResult c6_subdifferential() {
  CriterionResult r = start(6, "subdifferential forms and projector identities");
  Rng rng(6);
  int agree = 0;
  constexpr std::array forms{SubdiffForm::norm_and_pairing, SubdiffForm::tangent_projection,
                             SubdiffForm::explicit_remainder, SubdiffForm::bilinear_restriction};
  for (int t = 0; t < 200; ++t) {
    const int n = rng.integer(2, 6), m = rng.integer(2, 6);
    const RankOneModel model = rng.model(n, m);
    const Matrix qu = orthogonal_complement(model.u), qv = orthogonal_complement(model.v);
    Matrix inner_block = rng.matrix(n - 1, m - 1);
    const double target = (t % 4 == 0) ? 1.0 + 1e-9 : (t % 4 == 1) ? 1.0 - 1e-9 : rng.uniform(0.2, 1.8);
    inner_block *= target / operator_norm(inner_block);
    Matrix h = model.direction() + qu * inner_block * qv.transpose();
    if (t % 5 == 0) h += 1e-3 * model.u * rng.unit_orthogonal(model.v).transpose();
    const bool first = subdiff_check(h, model, forms[0]).holds;
    bool same = true;
    for (std::size_t k = 1; k < forms.size(); ++k) same = same && subdiff_check(h, model, forms[k]).holds == first;
    if (same) ++agree;
  }
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const RankOneModel model = rng.model(5, 4);
    const Matrix a = rng.matrix(5, 4), b = rng.matrix(5, 4);
    const Matrix pt = project_tangent(a, model), pc = project_tangent_complement(a, model);
    const double expansion =
        (pc - project_tangent_complement(b, model)).norm() - (a - b).norm();
    worst = std::max({worst, (project_tangent(pt, model) - pt).norm(),
                      (project_tangent_complement(pc, model) - pc).norm(), std::abs((pt.array() * pc.array()).sum()),
                      (pt + pc - a).norm(), project_tangent(pc, model).norm(), expansion});
  }
  r.pass = agree == 200 && worst <= kProjectorTol;
  r.detail = fmt::format("forms agree={}/200 projector defect={:.2e}", agree, worst);
  return r;
}

CriterionResult c7_duality(const Shared& shared) {
  CriterionResult r = start(7, "duality on converged equality solves");
  bool pass = !shared.equality.empty();
  std::string detail;
  for (const auto& s : shared.equality) {
    const DualityGapReport g = duality_gap(s.blocks, s.dual, s.op, s.z);
    double defect = 0.0;
    for (double d : g.pairing_defect) defect = std::max(defect, std::abs(d));
    const bool ok = std::abs(g.gap) <= kDualityGapRel * (1.0 + std::abs(g.primal)) && defect <= kPairingDefect;
    pass = pass && ok;
    detail += fmt::format("{}: gap={:.1e} defect={:.1e}; ", s.name, g.gap, defect);
  }
  r.pass = pass;
  r.detail = detail.empty() ? "no converged solves" : detail;
  return r;
}

CriterionResult c8_bounds(const Shared& shared) {
  CriterionResult r = start(8, "robustness bounds on noisy solves");
  bool pass = !shared.noisy.empty();
  std::string detail;
  for (const auto& s : shared.noisy) {
    const RobustnessBounds b = robustness_bounds(s.blocks, s.models, s.cert.H, s.p, s.c, s.delta, s.op);
    const bool ok = b.bregman_ok && b.prediction_ok && (!s.cert.ndsc_pass || b.projection_ok);
    pass = pass && ok;
    detail += fmt::format("{}: D={:.1e}<={:.1e} pred={:.1e}<={:.1e}; ", s.name, b.bregman, b.bregman_bound,
                          b.prediction, b.prediction_bound);
  }
  r.pass = pass;
  r.detail = detail;
  return r;
}

// Minimises ½‖X − M‖² + τ‖X‖_* by subgradient descent with diminishing steps.
Matrix subgradient_oracle(const Matrix& m, double tau, int iters) {
  Matrix x = m, best = m;
  auto objective = [&](const Matrix& y) { return 0.5 * (y - m).squaredNorm() + tau * nuclear_norm(y); };
  double best_val = objective(x);
  for (int k = 1; k <= iters; ++k) {
    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix g = x - m;
    const Vector& s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > 1e-12) g += tau * svd.matrixU().col(i) * svd.matrixV().col(i).transpose();
    x -= (1.0 / (k + 10.0)) * g;
    const double val = objective(x);
    if (val < best_val) {
      best_val = val;
      best = x;
    }
  }
  return best;
}

CriterionResult c9_svt() {
  CriterionResult r = start(9, "singular value thresholding");
  Rng rng(9);
  int kkt = 0;
  for (int t = 0; t < 100; ++t) {
    const Matrix m = rng.matrix(rng.integer(2, 6), rng.integer(2, 6));
    const double tau = rng.uniform(0.1, 2.0);
    const Matrix out = svt_prox(m, tau);
    const Matrix h = (m - out) / tau;
    const bool norm_ok = operator_norm(h) <= 1.0 + kKktTol;
    const bool pair_ok =
        std::abs((out.array() * h.array()).sum() - nuclear_norm(out)) <= kKktTol * (1.0 + nuclear_norm(out));
    if (norm_ok && pair_ok) ++kkt;
  }
  int oracle_ok = 0;
  double worst_dist = 0.0;
  for (int t = 0; t < 3; ++t) {
    const Matrix m = rng.matrix(3, 3);
    const Matrix oracle = subgradient_oracle(m, 0.7, 100000);
    const Matrix out = svt_prox(m, 0.7);
    auto objective = [&](const Matrix& y) { return 0.5 * (y - m).squaredNorm() + 0.7 * nuclear_norm(y); };
    const double gap = objective(oracle) - objective(out);
    const double dist = (out - oracle).norm();
    worst_dist = std::max(worst_dist, dist);
    if (gap >= -1e-12 && gap <= kOracleObjective && dist <= std::sqrt(2.0 * kOracleObjective)) ++oracle_ok;
  }
  r.pass = kkt == 100 && oracle_ok == 3;
  r.detail = fmt::format("kkt={}/100 oracle={}/3 max distance={:.2e}", kkt, oracle_ok, worst_dist);
  return r;
}

CriterionResult c10_phaselift(AcceptanceReport& report) {
  CriterionResult r = start(10, "PhaseLift recovery and robustness");
  const auto t0 = std::chrono::steady_clock::now();
  const QuadraticInstance inst = make_phase_retrieval(5, 20, 7);
  const PhaseLiftResult rec = recover_phaselift(inst, PsdMode::exact);
  const double err = sign_aligned_error(rec.x_hat, *inst.x_true);
  const CertificateReport cert = phaselift_certificate(inst);
  bool pass = err <= kPhaseLiftError;
  std::string sweep_detail = "certificate fails, rate not required";
  if (cert.ndsc_pass) {
    const RobustnessSweep sweep = phaselift_robustness(inst, kDeltas, 1.0, 1);
    cli::Table table{{"delta", "error"}, {}};
    for (std::size_t k = 0; k < sweep.deltas.size(); ++k) table.add({sweep.deltas[k], sweep.errors[k]});
    report.tables["phaselift_sweep"] = cli::to_csv(table);
    pass = pass && sweep.slope >= kSlopeLo && sweep.slope <= kSlopeHi;
    sweep_detail = fmt::format("slope={:.3f}", sweep.slope);
  }
  const double secs = seconds_since(t0);
  pass = pass && secs <= kPhaseLiftSeconds;
  r.pass = pass;
  r.detail = fmt::format("error={:.2e} w={:.3f} {}", err, cert.max_w_norm(), sweep_detail);
  return r;
}

Vector bilinear_q(const Grid2D& g) {
  Vector q(g.size());
  for (int k = 0; k < g.size(); ++k) {
    const double x = g.node_x(k), y = g.node_y(k);
    q(k) = 1.5 + x - 0.5 * y + x * y;
  }
  return q;
}

CriterionResult c11_calderon(Shared& shared, AcceptanceReport& report) {
  CriterionResult r = start(11, "boundary-measurement lifted problem");
  const auto t0 = std::chrono::steady_clock::now();
  const Grid2D g = build_grid_2d(17, 17);
  const BasisW w = build_hat_basis(g, 4);
  const Vector coeffs = project_onto_w(g, w, bilinear_q(g));
  const CalderonProblem p = build_calderon_problem(g, w, 4, coeffs);
  const CalderonOperators ops = assemble_calderon_operator(p);
  const CalderonMeasurements exact = calderon_measurements(p);
  const BlockList truth = p.truth_whitened();
  const double constraint_res = (ops.constraints.apply(truth) - exact.constraints()).norm();
  const double full_res = (ops.full.apply(truth) - exact.stacked()).norm();

  const auto rows = precertificate_study(g, w, coeffs, {1, 2, 3, 4});
  cli::Table table{{"N", "degenerate", "max_w_norm", "max_tangent_residual", "smallest_singular_value", "ndsc_pass"},
                   {}};
  std::string wlist;
  double tangent = 0.0;
  for (const auto& row : rows) {
    table.add({static_cast<std::int64_t>(row.N), row.degenerate, row.max_w_norm, row.max_tangent_residual,
               row.smallest_singular_value, row.ndsc_pass});
    wlist += fmt::format("{}N{}={:.3f}", wlist.empty() ? "" : " ", row.N, row.max_w_norm);
    if (row.N == 4) tangent = row.max_tangent_residual;
  }
  report.tables["calderon_precertificate"] = cli::to_csv(table);

  bool pass = constraint_res <= kConstraintResidual && tangent <= kTangentResidual;
  std::string rec_detail = "w>=1, recovery not required";
  const CertificateReport cert = precertificate(ops.full, p.truth_models());
  if (cert.ndsc_pass) {
    const CalderonRecovery rec = recover_calderon(p, exact, CalderonMode::exact);
    pass = pass && rec.report.status == SolveStatus::converged && rec.rel_error <= kCalderonRelError;
    rec_detail = fmt::format("exact err={:.2e}", rec.rel_error);
    if (rec.report.status == SolveStatus::converged)
      shared.equality.push_back({"calderon N=4", rec.blocks, rec.dual, ops.full, exact.stacked(), rec.report});
  }
  const CalderonMeasurements noisy = calderon_measurements(p, NoiseSpec{1e-3, 5});
  const CalderonRecovery nrec = recover_calderon(p, noisy, CalderonMode::noisy, 1.0);
  pass = pass && nrec.report.status == SolveStatus::converged;
  const Vector p1 = cert.p.head(ops.phi1.codomain_dim());
  shared.noisy.push_back({"calderon delta=1e-3", nrec.blocks, p.truth_models(), cert, p1, ops.phi1, 1.0,
                          noisy.z1_error});
  const double secs = seconds_since(t0);
  pass = pass && secs <= kCalderonSeconds;
  r.pass = pass;
  r.detail = fmt::format(
      "constraint residual={:.1e} full residual={:.1e} tangent residual={:.1e} w: {} {} noisy err={:.2e}",
      constraint_res, full_res, tangent, wlist, rec_detail, nrec.rel_error);
  return r;
}

CriterionResult c12_frechet(AcceptanceReport& report) {
  CriterionResult r = start(12, "Frechet derivative and compactness");
  const Grid2D g = build_grid_2d(17, 17);
  const BasisW w = build_hat_basis(g, 4);
  const CalderonProblem p = build_calderon_problem(g, w, 4, project_onto_w(g, w, bilinear_q(g)));
  Vector h(g.size());
  for (int k = 0; k < g.size(); ++k) h(k) = std::sin(3.0 * g.node_x(k)) * std::cos(2.0 * g.node_y(k)) + 0.5;
  const Matrix d = frechet_derivative(p, p.q_values, h);
  const Schrodinger2D base(g, p.q_values);
  std::vector<double> ts{1e-2, 1e-3, 1e-4}, errs;
  for (double t : ts) {
    const Schrodinger2D moved(g, p.q_values + t * h);
    Matrix fd(d.rows(), d.cols());
    for (int i = 0; i < p.N(); ++i) fd.col(i) = (moved.dtn(p.bdry.f.col(i)) - base.dtn(p.bdry.f.col(i))) / t;
    errs.push_back((fd - d).norm());
  }
  const double order = loglog_slope(ts, errs);
  const Matrix pairing = p.bdry.f.transpose() * g.boundary_weights.asDiagonal() * d;
  const double asym = (pairing - pairing.transpose()).cwiseAbs().maxCoeff();
  const CompactnessProfile prof = compactness_diagnostic(g, p.q_values, h);
  bool monotone = true;
  cli::Table table{{"K", "tail", "singular_value"}, {}};
  for (Eigen::Index k = 0; k < prof.tail.size(); ++k) {
    if (k > 0 && prof.tail(k) > prof.tail(k - 1) + 1e-14) monotone = false;
    table.add({static_cast<std::int64_t>(k), prof.tail(k),
               k < prof.singular_values.size() ? prof.singular_values(k) : 0.0});
  }
  report.tables["compactness"] = cli::to_csv(table);
  r.pass = order >= kFrechetOrder && asym <= kFrechetSymmetry && monotone;
  r.detail = fmt::format("fd order={:.3f} asymmetry={:.1e} tail nonincreasing={} s1={:.3e}", order, asym, monotone,
                         prof.singular_values.size() ? prof.singular_values(0) : 0.0);
  return r;
}

template <class F>
CriterionResult guarded(int id, const char* title, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = start(id, title);
    r.detail = fmt::format("exception: {}", e.what());
  }
  r.seconds = seconds_since(t0);
  return r;
}

}  // namespace

bool AcceptanceReport::all_pass() const {
  for (const auto& r : results)
    if (!r.pass) return false;
  return !results.empty();
}

std::string format_result(const CriterionResult& r) {
  return fmt::format("{} [{:2d}] {} ({:.1f}s): {}", r.pass ? "PASS" : "FAIL", r.id, r.title, r.seconds, r.detail);
}

AcceptanceReport run_acceptance(const std::function<void(const CriterionResult&)>& on_result) {
  AcceptanceReport report;
  Shared shared;
  auto record = [&](CriterionResult r) {
    spdlog::debug("criterion {} done in {:.1f}s", r.id, r.seconds);
    if (on_result) on_result(r);
    report.results.push_back(std::move(r));
  };
  record(guarded(1, "step-potential interval by bisection", [] { return c1_step_interval(); }));
  record(guarded(2, "internal exact recovery", [&] { return c2_internal_exact(shared); }));
  record(guarded(3, "internal noisy rate", [&] { return c3_internal_noisy(shared, report); }));
  record(guarded(4, "certificate norm dominance and condition forms", [] { return c4_dominance(); }));
  record(guarded(5, "a-priori constant", [] { return c5_apriori(); }));
  record(guarded(6, "subdifferential forms and projector identities", [] { return c6_subdifferential(); }));
  record(guarded(9, "singular value thresholding", [] { return c9_svt(); }));
  record(guarded(10, "PhaseLift recovery and robustness", [&] { return c10_phaselift(report); }));
  record(guarded(11, "boundary-measurement lifted problem", [&] { return c11_calderon(shared, report); }));
  record(guarded(12, "Frechet derivative and compactness", [&] { return c12_frechet(report); }));
  record(guarded(7, "duality on converged equality solves", [&] { return c7_duality(shared); }));
  record(guarded(8, "robustness bounds on noisy solves", [&] { return c8_bounds(shared); }));
  return report;
}

}  // namespace liftrec
