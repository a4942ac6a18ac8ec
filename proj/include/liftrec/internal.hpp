#pragma once

// Internal-measurement problem on Ω = (a, b): recover q from u solving
// −u'' + q u = 0, u = f on ∂Ω, through the lifted unknown F = u ⊗ q.
//
// Coordinates. F is stored as a value matrix V (rows: x in H², columns: y in
// L²) and whitened as F̂ = R₂ V D_y with R₂ the H² Cholesky factor and
// D_y = diag(√w). The operator has two blocks:
//   Φ₁F = √w ∘ diag(V)      (Δv_F measured in L²)
//   Φ₂F = R₂ (V w)          (∫F(·, y) dy measured in H²)

#include <cstdint>
#include <optional>

#include "liftrec/certify.hpp"
#include "liftrec/pde1d.hpp"
#include "liftrec/solvers.hpp"

namespace liftrec {

struct InternalProblem {
  Grid1D grid;
  Potential1D q_input;  // potential used for the forward solve
  Potential1D q_true;   // D₂u† / u† on every node; equals q_input in the interior
  double f_a = 1.0;
  double f_b = 1.0;
  StateField1D u_true;
  StateField1D f_tilde;
  SpaceHandle h2;
  SpaceHandle l2;
  double int_q = 0.0;   // trapezoid integral of q_true

  int n() const { return grid.n; }
  Matrix truth_values() const;    // u† q†ᵀ
  Matrix truth_whitened() const;  // R₂ u† q†ᵀ D_y
  RankOneModel truth_model() const;
};

struct InternalMeasurements {
  Vector z1;
  Vector z2;
  double delta = 0.0;  // H² noise level of u^δ
  std::uint64_t seed = 0;
  double z_error = 0.0;  // ‖z^δ − z‖
  Vector stacked() const;
};

struct InternalSetup {
  InternalProblem problem;
  InternalMeasurements measurements;
};

// Throws InvalidArgument unless q > 0 and f_a, f_b > 0; EigenvalueHit from
// the forward solve propagates.
InternalSetup build_internal_problem(const Grid1D& grid, const Potential1D& q, double f_a, double f_b,
                                     std::optional<NoiseSpec> noise = std::nullopt);

// Measurements of the noiseless problem.
InternalMeasurements exact_measurements(const InternalProblem& problem);

AffineOperator assemble_internal_operator(const InternalProblem& problem);

// Value-coordinate representer of Φ*(p): H(x, y) = ω(x) + d(y) K(x, y) with
// d = p₁/√w and ω = R₂⁻¹ p₂. Returned whitened.
Matrix closed_form_adjoint(const InternalProblem& problem, const Vector& p);

enum class RecoveryMode { exact, noisy };

struct InternalRecovery {
  Potential1D q_hat;
  Matrix f_hat;        // whitened
  Matrix f_values;     // value coordinates
  Vector dual;
  SolveReport report;
  double lambda = 0.0;
  double sigma_ratio = 0.0;  // σ₂/σ₁ of f_hat
  double rel_error = 0.0;    // ‖q̂ − q†‖_{L²} / ‖q†‖_{L²}
};

InternalRecovery recover_internal(const InternalProblem& problem, const InternalMeasurements& meas, RecoveryMode mode,
                                  double c = 1.0, const SolverOptions& opts = {});

// (f_a F[0, :] + f_b F[n−1, :]) / (f_a² + f_b²) on value coordinates.
Potential1D extract_q_from_trace(const Matrix& f_values, const InternalProblem& problem);

double l2_relative_error(const Grid1D& grid, const Vector& estimate, const Vector& truth);

// Normalised u = u†/‖u†‖_{H²} and q = q†/‖q†‖_{L²}.
struct NormalizedPair {
  Vector u;
  Vector q;
};
NormalizedPair normalized_pair(const InternalProblem& problem);

// Whitened H_α = R₂ (K diag(d) + ω 𝟙ᵀ) D_y with d = (q − α)/u and
// ω = (u − Σ_k w_k d_k q_k K[:, k]) / ∫q.
Matrix closed_form_precertificate(const InternalProblem& problem, double alpha);

struct CertificateNorm {
  double exact = 0.0;  // ‖P_T⊥(H_α)‖
  double bound = 0.0;  // |Ω| ‖q − α‖_∞ / ([∫q]² inf u)
  bool dominated = false;
};
CertificateNorm certificate_norm(const InternalProblem& problem, double alpha);

// α* = (inf q + sup q)/2 for the normalised q.
double optimal_alpha(const InternalProblem& problem);

struct SufficientCondition {
  double lhs_normalized = 0.0;
  double lhs_unnormalized = 0.0;
  bool pass = false;
};
SufficientCondition sufficient_condition(const InternalProblem& problem);

double apriori_constant(const InternalProblem& problem);

struct LinearOracle {
  Potential1D q_hat;
  Matrix f_values;
};
LinearOracle linear_system_oracle(const InternalProblem& problem, const InternalMeasurements& meas);

// Condition LHS for q = 1 + q0·𝟙_(lo, hi) on (0, 1) with f ≡ 1.
double step_condition_lhs(int n, double q0, double lo = 0.4, double hi = 0.6);

// Bisection for LHS(q0) = 1 inside [lo, hi]; nullopt when the bracket has no
// sign change.
std::optional<double> bisect_condition_boundary(int n, double lo, double hi, double tol = 1e-6);

}  // namespace liftrec
