#include "liftrec/pde1d.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace liftrec {

Potential1D::Potential1D(const Grid1D& grid, Vector v) : values(std::move(v)) {
  if (values.size() != grid.n) throw InvalidArgument("Potential1D: size does not match grid");
  if (!values.allFinite()) throw InvalidArgument("Potential1D: non-finite values");
  inf = values.minCoeff();
  sup = values.maxCoeff();
  integral = grid.quad_weights.dot(values);
}

namespace {

// Solves the symmetric tridiagonal system with diagonal `d` and constant
// off-diagonal `e`. Returns false when a pivot collapses.
bool thomas(const Vector& d, double e, const Vector& rhs, Vector& x) {
  const Eigen::Index m = d.size();
  Vector piv(m), y(m);
  const double scale = d.cwiseAbs().maxCoeff() + 2.0 * std::abs(e);
  piv(0) = d(0);
  y(0) = rhs(0);
  for (Eigen::Index k = 1; k < m; ++k) {
    if (std::abs(piv(k - 1)) <= 1e-10 * scale) return false;
    const double l = e / piv(k - 1);
    piv(k) = d(k) - l * e;
    y(k) = rhs(k) - l * y(k - 1);
  }
  if (std::abs(piv(m - 1)) <= 1e-10 * scale) return false;
  x.resize(m);
  x(m - 1) = y(m - 1) / piv(m - 1);
  for (Eigen::Index k = m - 2; k >= 0; --k) x(k) = (y(k) - e * x(k + 1)) / piv(k);
  return true;
}

// Dense fallback with an explicit singularity test.
Vector tridiagonal_fallback(const Vector& d, double e, const Vector& rhs) {
  const Eigen::Index m = d.size();
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    a(k, k) = d(k);
    if (k + 1 < m) a(k, k + 1) = a(k + 1, k) = e;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  const Vector ev = eig.eigenvalues().cwiseAbs();
  if (ev.minCoeff() <= 1e-10 * ev.maxCoeff()) {
    std::ostringstream msg;
    msg << "schrodinger: 0 is numerically a Dirichlet eigenvalue (min |λ| = " << ev.minCoeff() << ")";
    throw EigenvalueHit(msg.str());
  }
  return a.partialPivLu().solve(rhs);
}

StateField1D assemble_with_boundary(const Grid1D& grid, const Vector& interior, double f_a, double f_b) {
  StateField1D s;
  s.f_a = f_a;
  s.f_b = f_b;
  s.u.resize(grid.n);
  s.u(0) = f_a;
  s.u(grid.n - 1) = f_b;
  s.u.segment(1, grid.n - 2) = interior;
  return s;
}

}  // namespace

StateField1D solve_schrodinger_1d(const Grid1D& grid, const Potential1D& q, double f_a, double f_b) {
  if (q.values.size() != grid.n) throw InvalidArgument("solve_schrodinger_1d: potential size mismatch");
  const int m = grid.n - 2;
  const double ih2 = 1.0 / (grid.h * grid.h);
  const Vector d = (2.0 * ih2 + q.values.segment(1, m).array()).matrix();
  Vector rhs = Vector::Zero(m);
  rhs(0) += ih2 * f_a;
  rhs(m - 1) += ih2 * f_b;
  Vector x;
  if (!thomas(d, -ih2, rhs, x)) x = tridiagonal_fallback(d, -ih2, rhs);
  return assemble_with_boundary(grid, x, f_a, f_b);
}

StateField1D solve_poisson_dirichlet_1d(const Grid1D& grid, const Vector& rhs, double f_a, double f_b) {
  if (rhs.size() != grid.n) throw InvalidArgument("solve_poisson_dirichlet_1d: rhs size mismatch");
  const int m = grid.n - 2;
  const double ih2 = 1.0 / (grid.h * grid.h);
  // −D₂ v = −rhs keeps the system positive definite
  const Vector d = Vector::Constant(m, 2.0 * ih2);
  Vector b = -rhs.segment(1, m);
  b(0) += ih2 * f_a;
  b(m - 1) += ih2 * f_b;
  Vector x;
  if (!thomas(d, -ih2, b, x)) throw NumericFailure("solve_poisson_dirichlet_1d: factorisation failed");
  return assemble_with_boundary(grid, x, f_a, f_b);
}

StateField1D harmonic_extension_1d(const Grid1D& grid, double f_a, double f_b) {
  StateField1D s;
  s.f_a = f_a;
  s.f_b = f_b;
  const double len = grid.b - grid.a;
  s.u = (f_a + (f_b - f_a) * (grid.nodes.array() - grid.a) / len).matrix();
  s.u(0) = f_a;
  s.u(grid.n - 1) = f_b;
  return s;
}

Potential1D direct_division_oracle(const Grid1D& grid, const StateField1D& u) {
  if (u.u.size() != grid.n) throw InvalidArgument("direct_division_oracle: size mismatch");
  if (u.u.cwiseAbs().minCoeff() < 1e-10) throw DegenerateInput("direct_division_oracle: state vanishes at a node");
  const DerivativeMatrices1D d = derivative_matrices(grid);
  return Potential1D(grid, (d.second * u.u).cwiseQuotient(u.u));
}

Vector h2_noise_vector(Eigen::Index n, double delta, std::uint64_t seed, const InnerProduct& h2) {
  if (!(delta >= 0.0)) throw InvalidArgument("h2 noise: delta must be nonnegative");
  if (h2.dim() != n) throw InvalidArgument("h2 noise: space dimension mismatch");
  Vector e = Vector::Zero(n);
  if (delta == 0.0) return e;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  for (Eigen::Index k = 1; k + 1 < n; ++k) e(k) = gauss(rng);
  e *= delta / h2.norm(e);
  return e;
}

StateField1D inject_h2_noise(const StateField1D& u, double delta, std::uint64_t seed, const InnerProduct& h2) {
  StateField1D out = u;
  out.u += h2_noise_vector(u.u.size(), delta, seed, h2);
  return out;
}

Potential1D step_potential(const Grid1D& grid, double q0, double lo, double hi) {
  Vector v = Vector::Ones(grid.n);
  const double eps = 1e-12;
  for (int j = 0; j < grid.n; ++j)
    if (grid.nodes(j) > lo + eps && grid.nodes(j) < hi - eps) v(j) += q0;
  return Potential1D(grid, std::move(v));
}

}  // namespace liftrec
