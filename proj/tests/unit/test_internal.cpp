#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "liftrec/internal.hpp"
#include "liftrec/lowrank.hpp"

using namespace liftrec;

namespace {

InternalSetup step_setup(int n, double q0, std::optional<NoiseSpec> noise = std::nullopt) {
  const Grid1D g = build_grid_1d(n, 0.0, 1.0);
  return build_internal_problem(g, step_potential(g, q0), 1.0, 1.0, noise);
}

InternalSetup constant_setup(int n, double c) {
  const Grid1D g = build_grid_1d(n, 0.0, 1.0);
  return build_internal_problem(g, Potential1D(g, Vector::Constant(n, c)), 1.0, 1.0);
}

// Smooth positive potential with random Fourier content.
Potential1D random_potential(gen::Source& src, const Grid1D& g) {
  Vector q = Vector::Constant(g.n, src.uniform(0.5, 2.0));
  for (int k = 1; k <= 3; ++k) {
    const double a = src.uniform(-0.3, 0.3), ph = src.uniform(0.0, 6.283185307179586);
    q.array() += a * (k * 3.141592653589793 * g.nodes.array() + ph).sin();
  }
  return Potential1D(g, q);
}

}  // namespace

TEST_SUITE("internal") {
  TEST_CASE("measurements") {
    const InternalSetup s = constant_setup(21, 1.0);
    const InternalProblem& p = s.problem;
    CHECK(std::abs(p.int_q - 1.0) < p.grid.h * p.grid.h);
    CHECK((s.measurements.z2 - p.int_q * (p.h2->whitener * p.u_true.u)).norm() < 1e-10);
    const Vector diag = s.measurements.z1.cwiseQuotient(p.grid.quad_weights.cwiseSqrt());
    const InternalSetup t = step_setup(41, 0.5);
    const Vector d2 = t.measurements.z1.cwiseQuotient(t.problem.grid.quad_weights.cwiseSqrt());
    CHECK((d2 - t.problem.truth_values().diagonal()).norm() < 1e-10);
    CHECK((diag - p.truth_values().diagonal()).norm() < 1e-10);
    const InternalSetup z = step_setup(41, 0.5, NoiseSpec{0.0, 3});
    CHECK(z.measurements.delta == 0.0);
    CHECK((z.measurements.stacked() - t.measurements.stacked()).norm() == 0.0);
  }

  TEST_CASE("noisy measurements") {
    const InternalSetup s = step_setup(41, 0.3, NoiseSpec{1e-3, 9});
    const InternalMeasurements exact = exact_measurements(s.problem);
    CHECK(s.measurements.z_error > 0.0);
    CHECK(s.measurements.z_error ==
          doctest::Approx((s.measurements.stacked() - exact.stacked()).norm()).epsilon(1e-12));
    CHECK(s.measurements.z_error <= 1e-3 * std::sqrt(1.0 + s.problem.int_q * s.problem.int_q) + 1e-12);
    CHECK((s.measurements.z1 - exact.z1).norm() > 0.0);
    CHECK((s.measurements.z2 - exact.z2).norm() > 0.0);
  }

  TEST_CASE("invalid inputs") {
    const Grid1D g = build_grid_1d(21, 0.0, 1.0);
    CHECK_THROWS_AS(build_internal_problem(g, Potential1D(g, Vector::Constant(21, -1.0)), 1, 1), InvalidArgument);
    CHECK_THROWS_AS(build_internal_problem(g, Potential1D(g, Vector::Ones(21)), 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(build_internal_problem(g, Potential1D(g, Vector::Ones(20)), 1.0, 1.0), InvalidArgument);
    const InternalSetup s = constant_setup(21, 1.0);
    CHECK_THROWS_AS(recover_internal(s.problem, s.measurements, RecoveryMode::noisy), InvalidArgument);
    const InternalSetup t = step_setup(21, 0.3, NoiseSpec{1e-3, 1});
    CHECK_THROWS_AS(recover_internal(t.problem, t.measurements, RecoveryMode::exact), InvalidArgument);
    CHECK_THROWS_AS(linear_system_oracle(t.problem, t.measurements), InvalidArgument);
    InternalProblem zero = s.problem;
    zero.f_a = zero.f_b = 0.0;
    CHECK_THROWS_AS(extract_q_from_trace(Matrix::Zero(21, 21), zero), InvalidArgument);
  }

  TEST_CASE("operator reproduces measurements and is adjoint-consistent") {
    for (double q0 : {-0.3, 0.5}) {
      const InternalSetup s = step_setup(41, q0);
      const AffineOperator op = assemble_internal_operator(s.problem);
      CHECK((op.apply({s.problem.truth_whitened()}) - s.measurements.stacked()).norm() < 1e-10);
      CHECK(adjoint_mismatch(op, 100, 17) < 1e-10);
    }
  }

  TEST_CASE("closed-form adjoint matches generic adjoint") {
    gen::Source src(5);
    const InternalSetup s = step_setup(31, 0.3);
    const AffineOperator op = assemble_internal_operator(s.problem);
    for (int t = 0; t < 10; ++t) {
      const Vector p = src.vector(62);
      const Matrix generic = op.adjoint(p)[0];
      CHECK((generic - closed_form_adjoint(s.problem, p)).norm() <= 1e-9 * std::max(1.0, generic.norm()));
    }
  }

  TEST_CASE("trace extraction") {
    const InternalSetup s = step_setup(41, 0.5);
    const InternalProblem& p = s.problem;
    CHECK((extract_q_from_trace(p.truth_values(), p).values - p.q_true.values).norm() < 1e-12);
    CHECK(extract_q_from_trace(Matrix::Zero(41, 41), p).values.norm() == 0.0);
    gen::Source src(8);
    const Matrix a = src.matrix(41, 41), b = src.matrix(41, 41);
    const Vector lhs = extract_q_from_trace(2.0 * a - b, p).values;
    const Vector rhs = 2.0 * extract_q_from_trace(a, p).values - extract_q_from_trace(b, p).values;
    CHECK((lhs - rhs).norm() < 1e-12);
    CHECK_THROWS_AS(extract_q_from_trace(Matrix::Zero(40, 41), p), InvalidArgument);
  }

  TEST_CASE("exact recovery") {
    for (double q0 : {-0.3, 0.3, 0.5}) {
      const InternalSetup s = step_setup(41, q0);
      const InternalRecovery r = recover_internal(s.problem, s.measurements, RecoveryMode::exact);
      CHECK(r.report.status == SolveStatus::converged);
      CHECK(r.rel_error <= 1e-3);
      CHECK(r.sigma_ratio <= 1e-4);
      const Vector oracle = direct_division_oracle(s.problem.grid, s.problem.u_true).values;
      CHECK(l2_relative_error(s.problem.grid, r.q_hat.values, oracle) <= 1e-3);
    }
    const InternalSetup c = constant_setup(41, 2.0);
    CHECK(sufficient_condition(c.problem).lhs_normalized < 1e-2);
    const InternalRecovery r = recover_internal(c.problem, c.measurements, RecoveryMode::exact);
    CHECK(r.report.status == SolveStatus::converged);
    CHECK(r.rel_error <= 1e-6);
  }

  TEST_CASE("noisy recovery rate and robustness bounds") {
    const std::vector<double> deltas{1e-2, 3e-3, 1e-3, 3e-4};
    std::vector<double> med;
    for (double delta : deltas) {
      std::vector<double> errs;
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const InternalSetup s = step_setup(41, 0.5, NoiseSpec{delta, seed});
        const InternalRecovery r = recover_internal(s.problem, s.measurements, RecoveryMode::noisy, 1.0);
        CHECK(r.lambda == doctest::Approx(delta));
        errs.push_back(r.rel_error);
        const AffineOperator op = assemble_internal_operator(s.problem);
        const RankOneModel m = s.problem.truth_model();
        const CertificateReport cert = precertificate(op, {m});
        const double dz = s.measurements.z_error;
        const RobustnessBounds b = robustness_bounds({r.f_hat}, {m}, cert.H, cert.p, r.lambda / dz, dz, op);
        CHECK(b.bregman_ok);
        CHECK(b.prediction_ok);
      }
      med.push_back(median(errs));
    }
    const double slope = loglog_slope(deltas, med);
    CHECK(slope >= 0.8);
    CHECK(slope <= 1.2);
  }

  TEST_CASE("closed-form pre-certificate interpolates the tangent conditions") {
    for (double q0 : {-0.5, 0.3, 0.7}) {
      const InternalSetup s = step_setup(41, q0);
      const RankOneModel m = s.problem.truth_model();
      for (double alpha : {0.0, 0.5, 1.0}) {
        const Matrix h = closed_form_precertificate(s.problem, alpha);
        CHECK((h * m.v - m.u).norm() < 1e-8);
        CHECK((h.transpose() * m.u - m.v).norm() < 1e-8);
        CHECK((project_tangent(h, m) - m.u * m.v.transpose()).norm() < 1e-8);
        // H_α lies in the range of Φ*
        const AffineOperator op = assemble_internal_operator(s.problem);
        const Matrix a = op.dense();
        const Vector hv = Eigen::Map<const Vector>(h.data(), h.size());
        const Vector coef = a.transpose().colPivHouseholderQr().solve(hv);
        CHECK((a.transpose() * coef - hv).norm() < 1e-8 * hv.norm());
      }
    }
  }

  TEST_CASE("constant potential: condition and certificate vanish at second order") {
    std::vector<double> hs, lhs, exact, bound;
    for (int n : {41, 81, 161, 321}) {
      const InternalSetup s = constant_setup(n, 1.5);
      const Vector& q = s.problem.q_true.values;
      CHECK((q.segment(1, n - 2).array() - 1.5).abs().maxCoeff() < 1e-8);
      const CertificateNorm c = certificate_norm(s.problem, optimal_alpha(s.problem));
      CHECK(c.exact <= c.bound + 1e-9);
      hs.push_back(s.problem.grid.h);
      lhs.push_back(sufficient_condition(s.problem).lhs_normalized);
      exact.push_back(c.exact);
      bound.push_back(c.bound);
    }
    CHECK(loglog_slope(hs, lhs) > 1.8);
    CHECK(loglog_slope(hs, bound) > 1.8);
    CHECK(loglog_slope(hs, exact) > 1.8);
  }

  TEST_CASE("certificate norm dominated by analytic bound") {
    gen::Source src(2024);
    const Grid1D g = build_grid_1d(41, 0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      const InternalSetup s = build_internal_problem(g, random_potential(src, g), src.uniform(0.5, 2.0),
                                                     src.uniform(0.5, 2.0));
      const Vector q = normalized_pair(s.problem).q;
      const double alpha = src.uniform(q.minCoeff() - 0.5, q.maxCoeff() + 0.5);
      const CertificateNorm c = certificate_norm(s.problem, alpha);
      CHECK(c.exact <= c.bound + 1e-9);
      CHECK(c.dominated);
    }
    const InternalSetup s = step_setup(41, 0.5);
    const CertificateNorm c = certificate_norm(s.problem, optimal_alpha(s.problem));
    CHECK(c.exact <= c.bound);
    CHECK(c.bound < 1.0);
    const double b1 = certificate_norm(s.problem, 50.0).bound, b2 = certificate_norm(s.problem, 100.0).bound;
    CHECK((b2 - b1) / 50.0 == doctest::Approx(b2 / 100.0).epsilon(0.05));
  }

  TEST_CASE("optimal alpha minimises the bound") {
    const InternalSetup s = step_setup(41, 0.6);
    const Vector q = normalized_pair(s.problem).q;
    const double a0 = optimal_alpha(s.problem);
    const double best = certificate_norm(s.problem, a0).bound;
    for (int k = 0; k <= 40; ++k) {
      const double a = q.minCoeff() - 0.5 + k * (q.maxCoeff() - q.minCoeff() + 1.0) / 40.0;
      CHECK(certificate_norm(s.problem, a).bound >= best - 1e-12);
    }
  }

  TEST_CASE("condition forms agree") {
    gen::Source src(77);
    const Grid1D g = build_grid_1d(41, 0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      const InternalSetup s = build_internal_problem(g, random_potential(src, g), src.uniform(0.5, 2.0),
                                                     src.uniform(0.5, 2.0));
      const SufficientCondition c = sufficient_condition(s.problem);
      CHECK(std::abs(c.lhs_normalized - c.lhs_unnormalized) <= 1e-10 * std::max(1.0, c.lhs_normalized));
      CHECK(c.pass == (c.lhs_normalized < 1.0));
    }
  }

  TEST_CASE("step condition") {
    CHECK(sufficient_condition(constant_setup(41, 1.0).problem).pass);
    CHECK(step_condition_lhs(401, 0.0) < 1e-5);
    CHECK(step_condition_lhs(401, 0.5) < 1.0);
    CHECK(step_condition_lhs(401, 1.5) > 1.0);
    const auto upper = bisect_condition_boundary(401, 0.0, 3.0);
    REQUIRE(upper.has_value());
    CHECK(step_condition_lhs(401, *upper) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK_FALSE(bisect_condition_boundary(401, 0.0, 0.5).has_value());
  }

  TEST_CASE("sufficient condition implies least-norm certificate passes") {
    for (double q0 : {-0.6, -0.3, 0.3, 0.5, 0.7}) {
      const InternalSetup s = step_setup(41, q0);
      REQUIRE(sufficient_condition(s.problem).pass);
      const AffineOperator op = assemble_internal_operator(s.problem);
      const CertificateReport r = precertificate(op, {s.problem.truth_model()});
      CHECK(r.ndsc_pass);
      CHECK(r.tangent_residual[0] <= 1e-8);
    }
  }

  TEST_CASE("a-priori constant") {
    gen::Source src(500);
    for (double q0 : {0.0, 0.5}) {
      const InternalSetup s = q0 == 0.0 ? constant_setup(41, 1.0) : step_setup(41, q0);
      const double cphi = apriori_constant(s.problem);
      CHECK(std::isfinite(cphi));
      CHECK(cphi >= std::sqrt(2.0));
      const AffineOperator op = assemble_internal_operator(s.problem);
      const RankOneModel m = s.problem.truth_model();
      const Matrix b = tangent_basis(m);
      for (int t = 0; t < 500; ++t) {
        const Vector coords = src.vector(b.cols());
        const Vector f = b * coords;
        const Matrix fm = Eigen::Map<const Matrix>(f.data(), 41, 41);
        CHECK(fm.norm() <= cphi * op.apply({fm}).norm() + 1e-9);
      }
      const CertificateReport r = precertificate(op, {m});
      CHECK(1.0 / r.smallest_singular_value <= cphi);
    }
  }

  TEST_CASE("linear system oracle") {
    const InternalSetup s = step_setup(41, 0.3);
    const LinearOracle o = linear_system_oracle(s.problem, s.measurements);
    const Vector direct = direct_division_oracle(s.problem.grid, s.problem.u_true).values;
    CHECK((o.q_hat.values - direct).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(singular_values(o.f_values)(1) <= 1e-12 * singular_values(o.f_values)(0));
    const AffineOperator op = assemble_internal_operator(s.problem);
    const Matrix fw = s.problem.h2->whitener * o.f_values * s.problem.grid.quad_weights.cwiseSqrt().asDiagonal();
    CHECK((op.apply({fw}) - s.measurements.stacked()).norm() < 1e-9);
  }

  TEST_CASE("rank-one feasible points coincide with the truth") {
    gen::Source src(31);
    const InternalSetup s = step_setup(31, 0.4);
    const InternalProblem& p = s.problem;
    const AffineOperator op = assemble_internal_operator(p);
    const Vector z = s.measurements.stacked();
    const Vector sw = p.grid.quad_weights.cwiseSqrt();
    const Matrix truth = p.truth_whitened();
    for (int t = 0; t < 40; ++t) {
      const double eps = std::pow(10.0, -src.uniform(1.0, 4.0));
      const Vector a = p.u_true.u + eps * src.vector(31);
      const Vector b = p.q_true.values + eps * src.vector(31);
      Matrix g = p.h2->whitener * a * (sw.cwiseProduct(b)).transpose();
      // best scaling of the probe
      const Vector pg = op.apply({g});
      g *= pg.dot(z) / pg.squaredNorm();
      const double residual = (op.apply({g}) - z).norm();
      CHECK(residual > 0.0);
      CHECK((g - truth).norm() <= 1e3 * residual);
    }
    for (int t = 0; t < 10; ++t) {
      const double s2 = src.uniform(0.2, 5.0);
      const Matrix g = p.h2->whitener * (s2 * p.u_true.u) * (sw.cwiseProduct(p.q_true.values / s2)).transpose();
      CHECK((op.apply({g}) - z).norm() < 1e-9);
      CHECK((g - truth).norm() < 1e-9 * truth.norm());
    }
  }
}
