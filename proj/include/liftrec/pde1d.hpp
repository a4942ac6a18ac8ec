#pragma once

// One-dimensional elliptic solvers on a uniform grid: Dirichlet Schrödinger
// and Poisson problems with the 3-point Laplacian, harmonic extension, the
// direct-division inverse q = Δu / u, and seeded H² noise.

#include <cstdint>

#include "liftrec/hilbert.hpp"

namespace liftrec {

struct Potential1D {
  Vector values;
  double inf = 0.0;
  double sup = 0.0;
  double integral = 0.0;  // trapezoid

  Potential1D() = default;
  Potential1D(const Grid1D& grid, Vector values);
};

struct StateField1D {
  Vector u;
  double f_a = 0.0;
  double f_b = 0.0;
};

// (−D₂ + diag q) u = 0 on interior nodes with u(a) = f_a, u(b) = f_b.
// Throws EigenvalueHit when the interior matrix is numerically singular.
StateField1D solve_schrodinger_1d(const Grid1D& grid, const Potential1D& q, double f_a, double f_b);

// D₂ v = rhs on interior nodes with v(a) = f_a, v(b) = f_b.
StateField1D solve_poisson_dirichlet_1d(const Grid1D& grid, const Vector& rhs, double f_a, double f_b);

StateField1D harmonic_extension_1d(const Grid1D& grid, double f_a, double f_b);

// q_j = (D₂u)_j / u_j on every node; endpoints use the one-sided stencil.
// Throws DegenerateInput when some |u_j| < 1e-10.
Potential1D direct_division_oracle(const Grid1D& grid, const StateField1D& u);

// Gaussian vector of length n, zero at both ends, with ‖e‖_{h2} = delta.
Vector h2_noise_vector(Eigen::Index n, double delta, std::uint64_t seed, const InnerProduct& h2);

// u + e with e Gaussian, zero at the endpoints and scaled so that ‖e‖_{h2} = delta.
StateField1D inject_h2_noise(const StateField1D& u, double delta, std::uint64_t seed, const InnerProduct& h2);

// 1 + q0 on the open interval (lo, hi), 1 elsewhere.
Potential1D step_potential(const Grid1D& grid, double q0, double lo = 0.4, double hi = 0.6);

}  // namespace liftrec
