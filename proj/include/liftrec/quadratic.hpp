#pragma once

// Finite-dimensional quadratic inverse problems z_k = ⟨V_k x, x⟩ and their
// PhaseLift relaxation over the PSD cone.

#include <cstdint>
#include <optional>

#include "liftrec/certify.hpp"
#include "liftrec/solvers.hpp"

namespace liftrec {

struct QuadraticInstance {
  int n = 0;
  std::vector<Matrix> V;
  std::vector<Vector> sensing;  // v_k with V_k = v_k v_kᵀ, when the instance is phase retrieval
  Vector z;
  std::optional<Vector> x_true;
};

Matrix lift(const Vector& x);

// Validates symmetry and, when x_true is given, fills z = (⟨V_k x, x⟩)_k.
QuadraticInstance make_quadratic_instance(std::vector<Matrix> v, std::optional<Vector> x_true,
                                          std::optional<Vector> z = std::nullopt);

// Gaussian sensing vectors and a unit-norm Gaussian x_true.
QuadraticInstance make_phase_retrieval(int n, int m, std::uint64_t seed);

// X ↦ (⟨V_k, X⟩)_k on a single n×n block.
AffineOperator lifted_operator(const QuadraticInstance& inst);

struct PhaseLiftResult {
  Vector x_hat;
  Matrix X;
  SolveReport report;
  double sigma_ratio = 0.0;  // σ₂/σ₁ of X
};

// Trace minimisation over the PSD cone (exact) or its penalised form with
// weight λ (regularized); x̂ = √σ₁ · leading eigenvector, first nonzero entry
// positive. `z_override` replaces the instance measurements (noisy data).
PhaseLiftResult recover_phaselift(const QuadraticInstance& inst, PsdMode mode, double lambda = 0.0,
                                  const Vector* z_override = nullptr, const SolverOptions& opts = {});

// min(‖x̂ − x‖, ‖x̂ + x‖)
double sign_aligned_error(const Vector& x_hat, const Vector& x);

// Least-norm pre-certificate at X† = x†x†ᵀ for the lifted operator.
CertificateReport phaselift_certificate(const QuadraticInstance& inst, double margin = 1e-3);

struct RobustnessSweep {
  std::vector<double> deltas;
  std::vector<double> errors;  // ‖X^δ − X†‖_F
  double slope = 0.0;
  bool ndsc = false;
};

// Regularized solves with λ = cδ on z + e, ‖e‖ = δ along a seeded direction.
RobustnessSweep phaselift_robustness(const QuadraticInstance& inst, const std::vector<double>& deltas, double c,
                                     std::uint64_t seed, const SolverOptions& opts = {});

}  // namespace liftrec
