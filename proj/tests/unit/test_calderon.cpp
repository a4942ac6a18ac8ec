#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "liftrec/calderon.hpp"
#include "liftrec/lowrank.hpp"

using namespace liftrec;

namespace {

constexpr double kPi = 3.141592653589793;

Vector bilinear_q(const Grid2D& g) {
  Vector q(g.size());
  for (int k = 0; k < g.size(); ++k) {
    const double x = g.node_x(k), y = g.node_y(k);
    q(k) = 1.5 + x - 0.5 * y + x * y;
  }
  return q;
}

struct Setup {
  Grid2D grid;
  BasisW w;
  CalderonProblem problem;
};

Setup small_setup(int n, int N) {
  Grid2D g = build_grid_2d(n, n);
  BasisW w = build_hat_basis(g, 4);
  const Vector c = project_onto_w(g, w, bilinear_q(g));
  CalderonProblem p = build_calderon_problem(g, w, N, c);
  return {std::move(g), std::move(w), std::move(p)};
}

}  // namespace

TEST_SUITE("calderon") {
  TEST_CASE("hat basis") {
    const Grid2D g = build_grid_2d(11, 9);
    for (int m : {4, 9}) {
      const BasisW w = build_hat_basis(g, m);
      const Matrix gram = w.omega.transpose() * g.area_weights.asDiagonal() * w.omega;
      CHECK((gram - Matrix::Identity(m, m)).norm() < 1e-10);
      CHECK((w.integrals - w.omega.transpose() * g.area_weights).norm() < 1e-14);
    }
    const BasisW w = build_hat_basis(g, 4);
    CHECK((w.values(project_onto_w(g, w, bilinear_q(g))) - bilinear_q(g)).norm() < 1e-12);
    CHECK_THROWS_AS(build_hat_basis(g, 5), InvalidArgument);
    CHECK_THROWS_AS(build_hat_basis(g, 1), InvalidArgument);
  }

  TEST_CASE("boundary basis") {
    const Grid2D g = build_grid_2d(9, 9);
    const BoundaryBasis b = build_trig_boundary_basis(g, 5);
    const Matrix gram = b.f.transpose() * g.boundary_weights.asDiagonal() * b.f;
    CHECK((gram - Matrix::Identity(5, 5)).norm() < 1e-12);
    CHECK(b.f1_floor > 0.0);
    CHECK(b.f.col(0).maxCoeff() - b.f.col(0).minCoeff() < 1e-12);
    CHECK_THROWS_AS(build_trig_boundary_basis(g, 0), InvalidArgument);
    CHECK_THROWS_AS(build_trig_boundary_basis(g, 1000), InvalidArgument);
  }

  TEST_CASE("stiffness matches the 5-point stencil") {
    const Grid2D g = build_grid_2d(7, 9, 0.0, 1.5, 0.0, 1.0);
    const Matrix a = p1_stiffness(g);
    CHECK((a - a.transpose()).norm() < 1e-12);
    CHECK((a * Vector::Ones(g.size())).norm() < 1e-12);
    const Matrix lap = interior_laplacian(g);
    gen::Source src(3);
    Vector u = Vector::Zero(g.size());
    Vector ui = src.vector(g.interior_index.size());
    for (std::size_t k = 0; k < g.interior_index.size(); ++k) u(g.interior_index[k]) = ui(k);
    const Vector lu = lap * ui;
    for (std::size_t k = 0; k < g.interior_index.size(); ++k) {
      const int idx = g.interior_index[k];
      CHECK(a.row(idx).dot(u) == doctest::Approx(-g.area_weights(idx) * lu(k)).epsilon(1e-10));
    }
  }

  TEST_CASE("affine data with q = 0") {
    const Grid2D g = build_grid_2d(9, 9);
    const double ca = 0.7, cb = -1.3, c0 = 0.4;
    Vector exact(g.size()), f(g.boundary_index.size());
    for (int k = 0; k < g.size(); ++k) exact(k) = c0 + ca * g.node_x(k) + cb * g.node_y(k);
    for (std::size_t k = 0; k < g.boundary_index.size(); ++k) f(k) = exact(g.boundary_index[k]);
    const Vector zero = Vector::Zero(g.size());
    CHECK((solve_schrodinger_2d(g, zero, f) - exact).cwiseAbs().maxCoeff() < 1e-12);
    for (FluxScheme scheme : {FluxScheme::green, FluxScheme::one_sided}) {
      const Vector flux = dtn_flux(g, zero, f, scheme);
      for (std::size_t k = 0; k < g.boundary_index.size(); ++k) {
        const double nx = g.boundary_normals(k, 0), ny = g.boundary_normals(k, 1);
        double expected;
        if (nx != 0.0 && ny != 0.0)
          expected = 0.5 * ((nx > 0 ? ca : -ca) + (ny > 0 ? cb : -cb));
        else
          expected = nx * ca + ny * cb;
        CHECK(flux(k) == doctest::Approx(expected).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("manufactured solution converges at second order") {
    std::vector<double> hs, node_err, flux_err;
    for (int n : {9, 17, 33}) {
      const Grid2D g = build_grid_2d(n, n);
      Vector u(g.size()), q(g.size());
      for (int k = 0; k < g.size(); ++k) {
        const double s = std::sin(kPi * g.node_x(k)) * std::sin(kPi * g.node_y(k));
        u(k) = 2.0 + s;
        q(k) = -2.0 * kPi * kPi * s / (2.0 + s);
      }
      Vector f(g.boundary_index.size()), dn(g.boundary_index.size());
      for (std::size_t k = 0; k < g.boundary_index.size(); ++k) {
        const int b = g.boundary_index[k];
        const double x = g.node_x(b), y = g.node_y(b);
        f(k) = u(b);
        const double ux = kPi * std::cos(kPi * x) * std::sin(kPi * y);
        const double uy = kPi * std::sin(kPi * x) * std::cos(kPi * y);
        const double nx = g.boundary_normals(k, 0), ny = g.boundary_normals(k, 1);
        dn(k) = (nx != 0.0 && ny != 0.0) ? 0.5 * ((nx > 0 ? ux : -ux) + (ny > 0 ? uy : -uy)) : nx * ux + ny * uy;
      }
      const Schrodinger2D s(g, q);
      node_err.push_back((s.solve(f) - u).cwiseAbs().maxCoeff());
      flux_err.push_back((s.dtn(f) - dn).cwiseAbs().maxCoeff());
      hs.push_back(g.hx);
    }
    CHECK(loglog_slope(hs, node_err) > 1.8);
    CHECK(loglog_slope(hs, flux_err) > 0.9);
  }

  TEST_CASE("eigenvalue hit") {
    const Grid2D g = build_grid_2d(9, 9);
    const double s = std::sin(kPi * g.hx / 2.0);
    const double lambda1 = 8.0 * s * s / (g.hx * g.hx);
    CHECK_THROWS_AS(Schrodinger2D(g, Vector::Constant(g.size(), -lambda1)), EigenvalueHit);
    CHECK_NOTHROW(Schrodinger2D(g, Vector::Constant(g.size(), -0.5 * lambda1)));
  }

  TEST_CASE("operator identities") {
    const Setup s = small_setup(9, 3);
    const CalderonProblem& p = s.problem;
    const CalderonMeasurements m = calderon_measurements(p);
    const CalderonOperators ops = assemble_calderon_operator(p);
    const BlockList truth = p.truth_whitened();
    CHECK((ops.full.apply(truth) - m.stacked()).norm() < 1e-9);
    CHECK(ops.phi3->apply(truth).norm() < 1e-9);
    CHECK(m.z3.norm() == 0.0);
    for (int i = 0; i < p.N(); ++i) {
      const Vector z2 = ops.phi2.apply(truth).segment(i * p.grid.size(), p.grid.size());
      CHECK((z2 - p.int_q * (p.h1->whitener * p.harmonic.col(i))).norm() < 1e-9);
    }
    CHECK(adjoint_mismatch(ops.full, 100, 11) < 1e-9);
    CHECK(adjoint_mismatch(ops.phi1, 20, 12) < 1e-9);
    CHECK(adjoint_mismatch(ops.constraints, 20, 13) < 1e-9);
  }

  TEST_CASE("pair constraint is antisymmetric and kills common factors") {
    const Setup s = small_setup(9, 2);
    const CalderonProblem& p = s.problem;
    const CalderonOperators ops = assemble_calderon_operator(p);
    gen::Source src(21);
    const BlockList f{src.matrix(p.grid.size(), 4), src.matrix(p.grid.size(), 4)};
    const BlockList swapped{f[1], f[0]};
    // Φ₃ with the data order reversed equals −Φ₃ on swapped unknowns
    CalderonProblem q = p;
    q.bdry.f.col(0).swap(q.bdry.f.col(1));
    const CalderonOperators qops = assemble_calderon_operator(q);
    CHECK((qops.phi3->apply(swapped) + ops.phi3->apply(f)).norm() < 1e-10);
    const Vector common = src.vector(4);
    BlockList rank_one;
    for (int i = 0; i < 2; ++i) rank_one.push_back((p.h1->whitener * p.states.col(i)) * common.transpose());
    CHECK(ops.phi3->apply(rank_one).norm() < 1e-9);
  }

  TEST_CASE("proportionality constraint removes the scaling invariance") {
    const Setup s = small_setup(9, 3);
    const CalderonProblem& p = s.problem;
    const CalderonMeasurements m = calderon_measurements(p);
    const CalderonOperators ops = assemble_calderon_operator(p);
    for (double mu : {0.5, 1.0, 2.0}) {
      BlockList scaled = p.truth_whitened();
      for (Matrix& b : scaled) b *= mu;
      CHECK(ops.phi3->apply(scaled).norm() < 1e-9);
      const double r2 = (ops.phi2.apply(scaled) - m.z2).norm();
      if (mu == 1.0)
        CHECK(r2 < 1e-9);
      else
        CHECK(r2 == doctest::Approx(std::abs(mu - 1.0) * m.z2.norm()).epsilon(1e-9));
    }
  }

  TEST_CASE("extraction") {
    const Setup s = small_setup(9, 3);
    const CalderonProblem& p = s.problem;
    for (int i = 0; i < p.N(); ++i) {
      const Matrix c = p.states.col(i) * p.q_coeffs.transpose();
      CHECK((extract_q_calderon(c, p.bdry.f.col(i), p.grid) - p.q_coeffs).norm() < 1e-12);
    }
    const Vector f = p.bdry.f.col(1);
    CHECK(extract_q_calderon(Matrix::Zero(p.grid.size(), 4), f, p.grid).norm() == 0.0);
    gen::Source src(4);
    const Matrix a = src.matrix(p.grid.size(), 4), b = src.matrix(p.grid.size(), 4);
    CHECK((extract_q_calderon(a + 3.0 * b, f, p.grid) - extract_q_calderon(a, f, p.grid) -
           3.0 * extract_q_calderon(b, f, p.grid))
              .norm() < 1e-12);
    CHECK_THROWS_AS(extract_q_calderon(a, Vector::Zero(f.size()), p.grid), InvalidArgument);
  }

  TEST_CASE("exact recovery when the pre-certificate verifies") {
    const Setup s = small_setup(9, 3);
    const CalderonProblem& p = s.problem;
    const CalderonOperators ops = assemble_calderon_operator(p);
    const CertificateReport cert = precertificate(ops.full, p.truth_models());
    for (double t : cert.tangent_residual) CHECK(t <= 1e-8);
    REQUIRE(cert.ndsc_pass);
    const CalderonRecovery r = recover_calderon(p, calderon_measurements(p), CalderonMode::exact);
    CHECK(r.report.status == SolveStatus::converged);
    CHECK(r.rel_error <= 1e-2);
    CHECK(r.constraint_residual <= 1e-7);
    CHECK(r.max_sigma_ratio <= 1e-4);
  }

  TEST_CASE("noisy recovery keeps the constraints and obeys the robustness bounds") {
    const Setup s = small_setup(9, 3);
    const CalderonProblem& p = s.problem;
    const CalderonOperators ops = assemble_calderon_operator(p);
    const CertificateReport cert = precertificate(ops.full, p.truth_models());
    const Vector p1 = cert.p.head(ops.phi1.codomain_dim());
    std::vector<double> deltas{1e-2, 1e-3}, errs;
    for (double delta : deltas) {
      const CalderonMeasurements m = calderon_measurements(p, NoiseSpec{delta, 5});
      CHECK(m.z1_error == doctest::Approx(delta).epsilon(1e-12));
      const CalderonRecovery r = recover_calderon(p, m, CalderonMode::noisy, 1.0);
      CHECK(r.report.status == SolveStatus::converged);
      CHECK(r.constraint_residual <= 1e-7);
      const RobustnessBounds b = robustness_bounds(r.blocks, p.truth_models(), cert.H, p1, 1.0, delta, ops.phi1);
      CHECK(b.bregman_ok);
      CHECK(b.prediction_ok);
      errs.push_back(r.rel_error);
    }
    CHECK(errs[1] < errs[0]);
    CHECK_THROWS_AS(recover_calderon(p, calderon_measurements(p), CalderonMode::noisy), InvalidArgument);
  }

  TEST_CASE("constant potential") {
    const Grid2D g = build_grid_2d(9, 9);
    const BasisW w = build_hat_basis(g, 4);
    const Vector c = project_onto_w(g, w, Vector::Constant(g.size(), 2.0));
    const CalderonProblem p = build_calderon_problem(g, w, 2, c);
    CHECK(calderon_measurements(p).z3.norm() == 0.0);
    CHECK(assemble_calderon_operator(p).phi3->apply(p.truth_whitened()).norm() < 1e-9);
    const auto rows = precertificate_study(g, w, c, {1});
    REQUIRE(rows.size() == 1);
    CHECK_FALSE(rows[0].degenerate);
    CHECK(rows[0].max_tangent_residual <= 1e-8);
    CHECK(rows[0].smallest_singular_value > 0.0);
  }

  TEST_CASE("Frechet derivative") {
    const Setup s = small_setup(9, 3);
    const CalderonProblem& p = s.problem;
    const Grid2D& g = p.grid;
    Vector h(g.size());
    for (int k = 0; k < g.size(); ++k) h(k) = std::sin(3.0 * g.node_x(k)) * std::cos(2.0 * g.node_y(k)) + 0.5;
    CHECK(frechet_derivative(p, p.q_values, Vector::Zero(g.size())).norm() == 0.0);
    const Matrix d = frechet_derivative(p, p.q_values, h);
    std::vector<double> ts{1e-2, 1e-3, 1e-4}, errs;
    const Schrodinger2D base(g, p.q_values);
    for (double t : ts) {
      const Schrodinger2D moved(g, p.q_values + t * h);
      Matrix fd(d.rows(), d.cols());
      for (int i = 0; i < p.N(); ++i) fd.col(i) = (moved.dtn(p.bdry.f.col(i)) - base.dtn(p.bdry.f.col(i))) / t;
      errs.push_back((fd - d).norm());
    }
    CHECK(loglog_slope(ts, errs) >= 0.9);
    const Matrix pairing = p.bdry.f.transpose() * g.boundary_weights.asDiagonal() * d;
    CHECK((pairing - pairing.transpose()).cwiseAbs().maxCoeff() < 1e-8);
    // ⟨Ψ′[q](h) f_i, f_j⟩ = Σ |cell| h u_i u_j
    for (int i = 0; i < p.N(); ++i)
      for (int j = 0; j < p.N(); ++j) {
        const double form = (g.area_weights.cwiseProduct(h).cwiseProduct(p.states.col(i))).dot(p.states.col(j));
        CHECK(pairing(j, i) == doctest::Approx(form).epsilon(1e-9));
      }
    const Matrix full = frechet_matrix(g, p.q_values, h);
    CHECK((full * p.bdry.f - d).norm() < 1e-10);
    const Matrix lam = dtn_matrix(g, p.q_values);
    CHECK((lam * p.bdry.f - p.fluxes).norm() < 1e-9);
  }

  TEST_CASE("compactness diagnostic") {
    const Grid2D g = build_grid_2d(9, 9);
    const Vector q = bilinear_q(g);
    const CompactnessProfile zero = compactness_diagnostic(g, q, Vector::Zero(g.size()));
    CHECK(zero.singular_values.norm() == 0.0);
    CHECK(zero.tail.norm() == 0.0);
    Vector h(g.size());
    for (int k = 0; k < g.size(); ++k) h(k) = 1.0 + g.node_x(k) * g.node_y(k);
    const CompactnessProfile prof = compactness_diagnostic(g, q, h);
    CHECK(prof.singular_values.minCoeff() >= 0.0);
    for (Eigen::Index k = 1; k < prof.tail.size(); ++k) CHECK(prof.tail(k) <= prof.tail(k - 1) + 1e-14);
    CHECK(prof.tail(0) == doctest::Approx(prof.singular_values(0)).epsilon(1e-10));
  }

  TEST_CASE("Gauss-Newton baseline") {
    const Setup s = small_setup(9, 3);
    const CalderonProblem& p = s.problem;
    const GaussNewtonHistory at_truth = gauss_newton_baseline(p, p.q_coeffs, 10);
    CHECK(at_truth.converged);
    CHECK(at_truth.misfit.size() == 1);
    const GaussNewtonHistory near = gauss_newton_baseline(p, p.q_coeffs + 0.05 * Vector::Ones(4), 20);
    CHECK(near.converged);
    for (std::size_t k = 1; k < near.misfit.size(); ++k) CHECK(near.misfit[k] < near.misfit[k - 1]);
    CHECK((near.iterates.back() - p.q_coeffs).norm() < 1e-6);
    CHECK_THROWS_AS(gauss_newton_baseline(p, Vector::Zero(3), 5), InvalidArgument);
  }

  TEST_CASE("invalid problems") {
    const Grid2D g = build_grid_2d(9, 9);
    const BasisW w = build_hat_basis(g, 4);
    CHECK_THROWS_AS(build_calderon_problem(g, w, 2, Vector::Zero(4)), InvalidArgument);
    CHECK_THROWS_AS(build_calderon_problem(g, w, 2, Vector::Ones(3)), InvalidArgument);
    const Grid2D other = build_grid_2d(11, 11);
    CHECK_THROWS_AS(build_calderon_problem(other, w, 2, Vector::Ones(4)), InvalidArgument);
  }
}
