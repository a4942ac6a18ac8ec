#include "liftrec/internal.hpp"

#include <cmath>
#include <limits>

#include "liftrec/lowrank.hpp"

namespace liftrec {

namespace {

Vector sqrt_weights(const InternalProblem& p) { return p.grid.quad_weights.cwiseSqrt(); }

// R₂⁻¹ x
Vector h2_unwhiten(const InternalProblem& p, const Vector& x) {
  return p.h2->whitener.triangularView<Eigen::Upper>().solve(x);
}

}  // namespace

Matrix InternalProblem::truth_values() const { return u_true.u * q_true.values.transpose(); }

Matrix InternalProblem::truth_whitened() const {
  return (h2->whitener * u_true.u) * (sqrt_weights(*this).cwiseProduct(q_true.values)).transpose();
}

RankOneModel InternalProblem::truth_model() const {
  const Vector uw = h2->whitener * u_true.u;
  const Vector qw = sqrt_weights(*this).cwiseProduct(q_true.values);
  return RankOneModel(uw.norm() * qw.norm(), uw.normalized(), qw.normalized());
}

Vector InternalMeasurements::stacked() const {
  Vector z(z1.size() + z2.size());
  z << z1, z2;
  return z;
}

namespace {

InternalMeasurements measure_state(const InternalProblem& p, const Vector& u) {
  const DerivativeMatrices1D d = derivative_matrices(p.grid);
  InternalMeasurements m;
  m.z1 = sqrt_weights(p).cwiseProduct(d.second * u);
  m.z2 = p.int_q * (p.h2->whitener * u);
  return m;
}

}  // namespace

InternalMeasurements exact_measurements(const InternalProblem& problem) {
  return measure_state(problem, problem.u_true.u);
}

InternalSetup build_internal_problem(const Grid1D& grid, const Potential1D& q, double f_a, double f_b,
                                     std::optional<NoiseSpec> noise) {
  if (q.values.size() != grid.n) throw InvalidArgument("build_internal_problem: potential size mismatch");
  if (!(q.inf > 0.0)) throw InvalidArgument("build_internal_problem: q must be positive");
  if (!(f_a > 0.0) || !(f_b > 0.0)) throw InvalidArgument("build_internal_problem: boundary data must be positive");
  InternalSetup s;
  InternalProblem& p = s.problem;
  p.grid = grid;
  p.q_input = q;
  p.f_a = f_a;
  p.f_b = f_b;
  p.u_true = solve_schrodinger_1d(grid, q, f_a, f_b);
  if (!(p.u_true.u.minCoeff() > 0.0)) throw DegenerateInput("build_internal_problem: state is not positive");
  p.q_true = direct_division_oracle(grid, p.u_true);
  p.int_q = p.q_true.integral;
  if (!(p.int_q > 0.0)) throw InvalidArgument("build_internal_problem: ∫q must be positive");
  p.f_tilde = harmonic_extension_1d(grid, f_a, f_b);
  p.h2 = std::make_shared<const InnerProduct>(assemble_inner_product(grid, InnerProductKind::h2));
  p.l2 = std::make_shared<const InnerProduct>(assemble_inner_product(grid, InnerProductKind::l2));

  const InternalMeasurements exact = exact_measurements(p);
  if (noise && noise->delta > 0.0) {
    const Vector e = h2_noise_vector(grid.n, noise->delta, noise->seed, *p.h2);
    s.measurements = measure_state(p, p.u_true.u + e);
    s.measurements.delta = noise->delta;
    s.measurements.seed = noise->seed;
    s.measurements.z_error = (s.measurements.stacked() - exact.stacked()).norm();
  } else {
    s.measurements = exact;
  }
  return s;
}

AffineOperator assemble_internal_operator(const InternalProblem& problem) {
  const int n = problem.n();
  const Matrix r2 = problem.h2->whitener;
  const Vector sw = sqrt_weights(problem);
  const Vector w = problem.grid.quad_weights;
  auto apply = [r2, sw, w, n](const BlockList& f) {
    // V = R₂⁻¹ F̂ D_y⁻¹
    const Matrix v = r2.triangularView<Eigen::Upper>().solve(f[0]) * sw.cwiseInverse().asDiagonal();
    Vector out(2 * n);
    out.head(n) = sw.cwiseProduct(v.diagonal());
    out.tail(n) = r2 * (v * w);
    return out;
  };
  auto adjoint = [r2, sw, w, n](const Vector& p) {
    // gradient in value coordinates, then mapped by R₂⁻ᵀ (·) D_y⁻¹
    Matrix g = (r2.transpose() * p.tail(n)) * w.transpose();
    g.diagonal() += sw.cwiseProduct(p.head(n));
    const Matrix left = r2.transpose().triangularView<Eigen::Lower>().solve(g);
    return BlockList{left * sw.cwiseInverse().asDiagonal()};
  };
  return AffineOperator({{n, n}}, 2 * n, apply, adjoint);
}

Matrix closed_form_adjoint(const InternalProblem& problem, const Vector& p) {
  const int n = problem.n();
  if (p.size() != 2 * n) throw InvalidArgument("closed_form_adjoint: dual vector size mismatch");
  const Vector sw = sqrt_weights(problem);
  const Vector d = p.head(n).cwiseQuotient(sw);
  const Vector omega = h2_unwhiten(problem, p.tail(n));
  const Matrix h = problem.h2->kernel * d.asDiagonal() + omega * Vector::Ones(n).transpose();
  return problem.h2->whitener * h * sw.asDiagonal();
}

Potential1D extract_q_from_trace(const Matrix& f_values, const InternalProblem& problem) {
  const double fa = problem.f_a, fb = problem.f_b;
  const double norm2 = fa * fa + fb * fb;
  if (!(norm2 > 0.0)) throw InvalidArgument("extract_q_from_trace: boundary data vanish");
  const int n = problem.n();
  if (f_values.rows() != n || f_values.cols() != n) throw InvalidArgument("extract_q_from_trace: shape mismatch");
  const Vector q = (fa * f_values.row(0).transpose() + fb * f_values.row(n - 1).transpose()) / norm2;
  return Potential1D(problem.grid, q);
}

double l2_relative_error(const Grid1D& grid, const Vector& estimate, const Vector& truth) {
  const Vector diff = estimate - truth;
  const double num = std::sqrt(diff.dot(grid.quad_weights.cwiseProduct(diff)));
  const double den = std::sqrt(truth.dot(grid.quad_weights.cwiseProduct(truth)));
  return den > 0.0 ? num / den : num;
}

InternalRecovery recover_internal(const InternalProblem& problem, const InternalMeasurements& meas, RecoveryMode mode,
                                  double c, const SolverOptions& opts) {
  const AffineOperator op = assemble_internal_operator(problem);
  const Vector z = meas.stacked();
  InternalRecovery r;
  BlockSolution sol;
  if (mode == RecoveryMode::exact) {
    if (meas.delta != 0.0) throw InvalidArgument("recover_internal: exact mode requires noiseless measurements");
    sol = solve_equality_nnm(op, z, opts);
  } else {
    if (!(meas.delta > 0.0)) throw InvalidArgument("recover_internal: noisy mode requires delta > 0");
    if (!(c > 0.0)) throw InvalidArgument("recover_internal: c must be positive");
    r.lambda = c * meas.delta;
    sol = solve_regularized_nnm(op, z, r.lambda, opts);
  }
  r.f_hat = std::move(sol.blocks.front());
  r.dual = std::move(sol.dual);
  r.report = sol.report;
  const Vector sw = sqrt_weights(problem);
  r.f_values = problem.h2->whitener.triangularView<Eigen::Upper>().solve(r.f_hat) * sw.cwiseInverse().asDiagonal();
  r.q_hat = extract_q_from_trace(r.f_values, problem);
  const Vector s = singular_values(r.f_hat);
  r.sigma_ratio = s(0) > 0.0 && s.size() > 1 ? s(1) / s(0) : 0.0;
  r.rel_error = l2_relative_error(problem.grid, r.q_hat.values, problem.q_true.values);
  return r;
}

NormalizedPair normalized_pair(const InternalProblem& problem) {
  const double un = problem.h2->norm(problem.u_true.u);
  const double qn = problem.l2->norm(problem.q_true.values);
  return {problem.u_true.u / un, problem.q_true.values / qn};
}

Matrix closed_form_precertificate(const InternalProblem& problem, double alpha) {
  const auto [u, q] = normalized_pair(problem);
  if (!(u.minCoeff() > 0.0)) throw DegenerateInput("closed_form_precertificate: u must be positive");
  const Vector& w = problem.grid.quad_weights;
  const double int_q = w.dot(q);
  if (int_q == 0.0) throw DegenerateInput("closed_form_precertificate: ∫q vanishes");
  const Matrix& k = problem.h2->kernel;
  const Vector d = (q.array() - alpha).matrix().cwiseQuotient(u);
  const Vector omega = (u - k * w.cwiseProduct(d).cwiseProduct(q)) / int_q;
  const int n = problem.n();
  const Matrix h = k * d.asDiagonal() + omega * Vector::Ones(n).transpose();
  return problem.h2->whitener * h * sqrt_weights(problem).asDiagonal();
}

double optimal_alpha(const InternalProblem& problem) {
  const Vector q = normalized_pair(problem).q;
  return 0.5 * (q.minCoeff() + q.maxCoeff());
}

CertificateNorm certificate_norm(const InternalProblem& problem, double alpha) {
  const auto [u, q] = normalized_pair(problem);
  const Matrix h = closed_form_precertificate(problem, alpha);
  const RankOneModel model = problem.truth_model();
  CertificateNorm c;
  c.exact = operator_norm(project_tangent_complement(h, model));
  const double len = problem.grid.b - problem.grid.a;
  const double int_q = problem.grid.quad_weights.dot(q);
  c.bound = len / (int_q * int_q) * (q.array() - alpha).abs().maxCoeff() / u.minCoeff();
  c.dominated = c.exact <= c.bound + 1e-9;
  return c;
}

SufficientCondition sufficient_condition(const InternalProblem& problem) {
  const double len = problem.grid.b - problem.grid.a;
  const auto [u, q] = normalized_pair(problem);
  const double int_qn = problem.grid.quad_weights.dot(q);
  SufficientCondition s;
  s.lhs_normalized = len / (2.0 * u.minCoeff()) * (q.maxCoeff() - q.minCoeff()) / (int_qn * int_qn);
  const Vector& qt = problem.q_true.values;
  const Vector& ut = problem.u_true.u;
  const double int_q = problem.int_q;
  s.lhs_unnormalized = len / (2.0 * ut.minCoeff()) * (qt.maxCoeff() - qt.minCoeff()) / (int_q * int_q) *
                       problem.l2->norm(qt) * problem.h2->norm(ut);
  s.pass = s.lhs_normalized < 1.0;
  return s;
}

double apriori_constant(const InternalProblem& problem) {
  const Vector& ut = problem.u_true.u;
  const Vector& qt = problem.q_true.values;
  const double uh2 = problem.h2->norm(ut);
  const double inf_u = ut.minCoeff();
  const double first = uh2 / inf_u;
  const double second = (problem.l2->norm(qt) + qt.cwiseAbs().maxCoeff() * uh2 / inf_u) / problem.int_q;
  return std::sqrt(2.0) * std::max(first, second);
}

LinearOracle linear_system_oracle(const InternalProblem& problem, const InternalMeasurements& meas) {
  if (meas.delta != 0.0) throw InvalidArgument("linear_system_oracle: requires noiseless measurements");
  const Vector& u = problem.u_true.u;
  if (u.cwiseAbs().minCoeff() < 1e-10) throw DegenerateInput("linear_system_oracle: state vanishes");
  const Vector diag = meas.z1.cwiseQuotient(sqrt_weights(problem));
  LinearOracle o;
  o.q_hat = Potential1D(problem.grid, diag.cwiseQuotient(u));
  o.f_values = u * o.q_hat.values.transpose();
  return o;
}

double step_condition_lhs(int n, double q0, double lo, double hi) {
  const Grid1D g = build_grid_1d(n, 0.0, 1.0);
  const InternalSetup s = build_internal_problem(g, step_potential(g, q0, lo, hi), 1.0, 1.0);
  return sufficient_condition(s.problem).lhs_normalized;
}

std::optional<double> bisect_condition_boundary(int n, double lo, double hi, double tol) {
  double flo = step_condition_lhs(n, lo) - 1.0;
  const double fhi = step_condition_lhs(n, hi) - 1.0;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) return std::nullopt;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = step_condition_lhs(n, mid) - 1.0;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace liftrec
