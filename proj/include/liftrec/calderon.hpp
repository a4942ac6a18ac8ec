#pragma once

// Boundary-measurement problem on a rectangle: recover q from Dirichlet-to-
// Neumann data of −Δu + q u = 0 for N boundary data f_i, through lifted
// unknowns F_i = u_i ⊗ q with q in a finite-dimensional space W.
//
// Discretisation. 5-point Laplacian with lumped P1 mass, so the interior
// equations coincide with the lumped P1 finite-element system. Boundary
// fluxes are conormal derivatives from the discrete Green identity,
// ∂_ν u · |b| = (A u)_b + |cell_b| Δu_b, with A the P1 stiffness matrix and
// |b| the boundary weight. Flux data are measured in boundary-weighted ℓ².
//
// Coordinates. F_i is stored as C_i (grid nodes x m) with F_i(x) = Σ_k
// C_i[x, k] ω_k for an L²-orthonormal basis ω of W, and whitened as R₁ C_i
// with R₁ the discrete H¹ Cholesky factor.

#include <optional>
#include <vector>

#include "liftrec/certify.hpp"
#include "liftrec/hilbert.hpp"
#include "liftrec/solvers.hpp"

namespace liftrec {

// L²-orthonormal tensor-product hat functions: √m hats per direction on a
// uniform coarse mesh of the rectangle.
struct BasisW {
  int m = 0;
  Matrix omega;      // grid nodes x m
  Vector integrals;  // ∫ω_k by area quadrature

  Vector values(const Vector& coeffs) const { return omega * coeffs; }
};

// Throws InvalidArgument unless m is a perfect square ≥ 4.
BasisW build_hat_basis(const Grid2D& grid, int m);

// L² projection of nodal values onto W.
Vector project_onto_w(const Grid2D& grid, const BasisW& w, const Vector& values);

// Trigonometric modes in boundary arc length, 1, cos(2πs/P), sin(2πs/P),
// cos(4πs/P), ..., orthonormal in boundary-weighted ℓ².
struct BoundaryBasis {
  int N = 0;
  Matrix f;  // boundary nodes x N
  double f1_floor = 0.0;
};

BoundaryBasis build_trig_boundary_basis(const Grid2D& grid, int N);

enum class FluxScheme { green, one_sided };

// P1 stiffness matrix on the grid split into right triangles.
Matrix p1_stiffness(const Grid2D& grid);

// Factorised Dirichlet operator −Δ + q on interior nodes.
class Schrodinger2D {
 public:
  // Throws EigenvalueHit when zero is a discrete eigenvalue (relative 1e-10).
  Schrodinger2D(const Grid2D& grid, Vector q);

  // Full-grid u with −Δu + q u = source in the interior and u = f on the
  // boundary. An empty source means zero.
  Vector solve(const Vector& f_boundary, const Vector& source = {}) const;

  // Boundary flux of u with Δu = laplacian at every node.
  Vector flux(const Vector& u, const Vector& laplacian, FluxScheme scheme = FluxScheme::green) const;

  // Flux of the solution with boundary data f.
  Vector dtn(const Vector& f_boundary, FluxScheme scheme = FluxScheme::green) const;

  const Grid2D& grid() const { return grid_; }
  const Vector& q() const { return q_; }

 private:
  Grid2D grid_;
  Vector q_;
  Matrix stiffness_;
  Eigen::PartialPivLU<Matrix> lu_;
};

Vector solve_schrodinger_2d(const Grid2D& grid, const Vector& q, const Vector& f_boundary);
Vector dtn_flux(const Grid2D& grid, const Vector& q, const Vector& f_boundary,
                FluxScheme scheme = FluxScheme::green);

struct CalderonProblem {
  Grid2D grid;
  BasisW w;
  BoundaryBasis bdry;
  Vector q_coeffs;  // coordinates of q† in W
  Vector q_values;  // q† at grid nodes
  double int_q = 0.0;
  SpaceHandle h1;
  Matrix states;           // u_i†, grid nodes x N
  Matrix harmonic;         // f̃_i, grid nodes x N
  Matrix fluxes;           // Λ_q f_i, boundary nodes x N
  Matrix harmonic_fluxes;  // Λ_0 f_i

  int N() const { return bdry.N; }
  int pairs() const { return N() * (N() - 1) / 2; }
  BlockList truth_whitened() const;
  std::vector<RankOneModel> truth_models() const;
};

// Throws InvalidArgument when ∫q† = 0 or shapes disagree; EigenvalueHit
// propagates.
CalderonProblem build_calderon_problem(const Grid2D& grid, const BasisW& w, int N, const Vector& q_coeffs);

struct CalderonMeasurements {
  Vector z1;  // √|b| (Λ_q f_i − Λ_0 f_i), stacked over i
  Vector z2;  // R₁ (∫q†) f̃_i, stacked over i
  Vector z3;  // zeros, C(N, 2) x boundary nodes x m
  double delta = 0.0;
  std::uint64_t seed = 0;
  double z1_error = 0.0;
  Vector stacked() const;
  Vector constraints() const;  // (z2, z3)
};

// Noise perturbs the flux data only, with ‖z1^δ − z1‖ = δ.
CalderonMeasurements calderon_measurements(const CalderonProblem& problem,
                                           std::optional<NoiseSpec> noise = std::nullopt);

struct CalderonOperators {
  AffineOperator phi1;                   // flux consistency
  AffineOperator phi2;                   // proportionality to u_F
  std::optional<AffineOperator> phi3;    // common second factor; absent when N = 1
  AffineOperator constraints;            // (Φ₂, Φ₃)
  AffineOperator full;                   // (Φ₁, Φ₂, Φ₃)
};

CalderonOperators assemble_calderon_operator(const CalderonProblem& problem);

// (Σ_b |b| f(b) C[b, :]) / (Σ_b |b| f(b)²) on value coordinates.
Vector extract_q_calderon(const Matrix& c_values, const Vector& f_boundary, const Grid2D& grid);

struct CalderonRecovery {
  Vector q_coeffs;                // average over blocks
  std::vector<Vector> per_block;  // extracted from each F_i
  BlockList blocks;               // whitened
  Vector dual;
  SolveReport report;
  double lambda = 0.0;
  double rel_error = 0.0;  // ‖q̂ − q†‖_W / ‖q†‖_W
  double max_sigma_ratio = 0.0;
  double constraint_residual = 0.0;  // ‖(Φ₂, Φ₃)F − (z2, z3)‖
};

enum class CalderonMode { exact, noisy };

CalderonRecovery recover_calderon(const CalderonProblem& problem, const CalderonMeasurements& meas,
                                  CalderonMode mode, double c = 1.0, const SolverOptions& opts = {});

// Ψ′[q](h) f_i for every boundary datum: boundary nodes x N.
Matrix frechet_derivative(const CalderonProblem& problem, const Vector& q, const Vector& h);

// Ψ′[q](h) on nodal boundary data: boundary nodes x boundary nodes.
Matrix frechet_matrix(const Grid2D& grid, const Vector& q, const Vector& h);

// Λ_q on nodal boundary data.
Matrix dtn_matrix(const Grid2D& grid, const Vector& q);

struct CompactnessProfile {
  Vector singular_values;  // of Ψ′[q](h) in boundary-weighted coordinates, descending
  Vector tail;             // ‖Ψ′[q](h)(I − P_K)‖ for K = 0, ..., boundary nodes − 1
};

CompactnessProfile compactness_diagnostic(const Grid2D& grid, const Vector& q, const Vector& h);

struct PrecertificateRow {
  int N = 0;
  bool degenerate = false;
  double max_w_norm = 0.0;
  double max_tangent_residual = 0.0;
  double smallest_singular_value = 0.0;
  bool ndsc_pass = false;
};

std::vector<PrecertificateRow> precertificate_study(const Grid2D& grid, const BasisW& w, const Vector& q_coeffs,
                                                    const std::vector<int>& Ns);

struct GaussNewtonHistory {
  std::vector<double> misfit;  // ‖Λ_q f_i − data‖ stacked, per iterate
  std::vector<Vector> iterates;
  bool converged = false;
  bool diverged = false;
  std::string note;
};

// Levenberg-damped Gauss-Newton on the W coefficients of q with backtracking.
GaussNewtonHistory gauss_newton_baseline(const CalderonProblem& problem, const Vector& q_init, int iters,
                                         double tol = 1e-10);

}  // namespace liftrec
