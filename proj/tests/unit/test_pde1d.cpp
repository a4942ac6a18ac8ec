#include <doctest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "liftrec/pde1d.hpp"

using namespace liftrec;

namespace {

double cosh_error(int n) {
  const Grid1D g = build_grid_1d(n, 0.0, 1.0);
  const StateField1D s = solve_schrodinger_1d(g, Potential1D(g, Vector::Ones(n)), 1.0, 1.0);
  const Vector exact = ((g.nodes.array() - 0.5).cosh() / std::cosh(0.5)).matrix();
  return (s.u - exact).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("pde1d") {
  TEST_CASE("schrodinger solves") {
    const Grid1D g = build_grid_1d(41, 0.0, 1.0);
    const StateField1D lin = solve_schrodinger_1d(g, Potential1D(g, Vector::Zero(41)), 0.0, 1.0);
    CHECK((lin.u - g.nodes).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(cosh_error(41) <= 2.0 * g.h * g.h);
    const StateField1D step = solve_schrodinger_1d(g, step_potential(g, 0.5), 1.0, 1.0);
    CHECK(step.u.minCoeff() > 0.0);
    CHECK(step.u(0) == 1.0);
    CHECK(step.u(40) == 1.0);

    // interior residual
    const Potential1D q = step_potential(g, 0.5);
    const double ih2 = 1.0 / (g.h * g.h);
    double worst = 0.0;
    for (int j = 1; j < 40; ++j) {
      const double r = -(step.u(j - 1) - 2.0 * step.u(j) + step.u(j + 1)) * ih2 + q.values(j) * step.u(j);
      worst = std::max(worst, std::abs(r) / (ih2 * step.u.cwiseAbs().maxCoeff()));
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("second-order convergence") {
    const double e1 = cosh_error(41), e2 = cosh_error(81), e3 = cosh_error(161);
    const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
    CHECK(o1 >= 1.8);
    CHECK(o1 <= 2.2);
    CHECK(o2 >= 1.8);
    CHECK(o2 <= 2.2);
  }

  TEST_CASE("eigenvalue hit") {
    const Grid1D g = build_grid_1d(21, 0.0, 1.0);
    const double s = std::sin(std::numbers::pi * g.h / 2.0);
    const double lambda1 = 4.0 * s * s / (g.h * g.h);
    CHECK_THROWS_AS(solve_schrodinger_1d(g, Potential1D(g, Vector::Constant(21, -lambda1)), 1.0, 1.0),
                    EigenvalueHit);
  }

  TEST_CASE("linearity in the boundary datum") {
    const Grid1D g = build_grid_1d(41, 0.0, 1.0);
    const Potential1D q = step_potential(g, 0.8);
    const StateField1D a = solve_schrodinger_1d(g, q, 1.0, 1.0);
    const StateField1D b = solve_schrodinger_1d(g, q, 2.5, 2.5);
    CHECK((b.u - 2.5 * a.u).cwiseAbs().maxCoeff() <= 1e-14 * 2.5);
  }

  TEST_CASE("poisson solves") {
    const Grid1D g = build_grid_1d(31, 0.0, 1.0);
    const StateField1D aff = solve_poisson_dirichlet_1d(g, Vector::Zero(31), 1.0, 3.0);
    CHECK((aff.u - (1.0 + 2.0 * g.nodes.array()).matrix()).cwiseAbs().maxCoeff() < 1e-13);
    const StateField1D quad = solve_poisson_dirichlet_1d(g, Vector::Constant(31, 2.0), 0.0, 0.0);
    CHECK((quad.u - (g.nodes.array().square() - g.nodes.array()).matrix()).cwiseAbs().maxCoeff() < 1e-13);
    gen::Source src(31);
    for (int t = 0; t < 20; ++t) {
      const Vector r1 = src.vector(31), r2 = src.vector(31);
      const double a1 = src.normal(), a2 = src.normal(), b1 = src.normal(), b2 = src.normal();
      const StateField1D s1 = solve_poisson_dirichlet_1d(g, r1, a1, b1);
      const StateField1D s2 = solve_poisson_dirichlet_1d(g, r2, a2, b2);
      const StateField1D s12 = solve_poisson_dirichlet_1d(g, r1 + r2, a1 + a2, b1 + b2);
      CHECK((s12.u - s1.u - s2.u).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + s12.u.cwiseAbs().maxCoeff()));
    }
  }

  TEST_CASE("harmonic extension") {
    const Grid1D g = build_grid_1d(11, 0.0, 1.0);
    CHECK((harmonic_extension_1d(g, 1.0, 1.0).u - Vector::Ones(11)).norm() == 0.0);
    CHECK((harmonic_extension_1d(g, 0.0, 2.0).u - 2.0 * g.nodes).norm() < 1e-15);
    const StateField1D f = harmonic_extension_1d(g, 0.3, -1.7);
    const Vector lap = derivative_matrices(g).second * f.u;
    CHECK(lap.segment(1, 9).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("direct division oracle") {
    const Grid1D g = build_grid_1d(41, 0.0, 1.0);
    const Potential1D q = step_potential(g, 0.5);
    const Potential1D back = direct_division_oracle(g, solve_schrodinger_1d(g, q, 1.0, 1.0));
    CHECK((back.values - q.values).segment(1, 39).cwiseAbs().maxCoeff() < 1e-10);

    const Grid1D fine = build_grid_1d(161, 0.0, 1.0);
    StateField1D analytic;
    analytic.u = ((fine.nodes.array() - 0.5).cosh() / std::cosh(0.5)).matrix();
    const Potential1D ones = direct_division_oracle(fine, analytic);
    CHECK((ones.values.array() - 1.0).abs().maxCoeff() <= 20.0 * fine.h * fine.h);

    StateField1D crossing;
    crossing.u = (g.nodes.array() - 0.5).matrix();
    CHECK_THROWS_AS(direct_division_oracle(g, crossing), DegenerateInput);
  }

  TEST_CASE("h2 noise injection") {
    const Grid1D g = build_grid_1d(41, 0.0, 1.0);
    const InnerProduct h2 = assemble_inner_product(g, InnerProductKind::h2);
    const StateField1D u = solve_schrodinger_1d(g, step_potential(g, 0.5), 1.0, 1.0);
    CHECK((inject_h2_noise(u, 0.0, 1, h2).u - u.u).norm() == 0.0);
    const StateField1D n1 = inject_h2_noise(u, 1e-3, 7, h2);
    const StateField1D n2 = inject_h2_noise(u, 1e-3, 7, h2);
    CHECK((n1.u - n2.u).norm() == 0.0);
    CHECK(std::abs(h2.norm(h2_noise_vector(41, 1e-3, 7, h2)) - 1e-3) <= 1e-12 * 1e-3);
    CHECK((n1.u - u.u - h2_noise_vector(41, 1e-3, 7, h2)).norm() < 1e-15);
    CHECK(n1.u(0) == u.u(0));
    CHECK(n1.u(40) == u.u(40));
  }

  TEST_CASE("step potential marks the open interval") {
    const Grid1D g = build_grid_1d(11, 0.0, 1.0);
    const Potential1D q = step_potential(g, 2.0);
    CHECK(q.values(4) == 1.0);  // x = 0.4
    CHECK(q.values(5) == 3.0);
    CHECK(q.values(6) == 1.0);  // x = 0.6
    CHECK(q.inf == 1.0);
    CHECK(q.sup == 3.0);
  }
}
