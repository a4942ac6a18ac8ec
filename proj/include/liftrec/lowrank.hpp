#pragma once

// Nuclear-norm toolbox on whitened matrices. A rank-one model σ u vᵀ has u in
// the row (first-variable) space and v in the column space; the tangent space
// is T = {u aᵀ + b vᵀ} and P_T(M) = uuᵀM + Mvvᵀ − uuᵀMvvᵀ.

#include <string>

#include "liftrec/common.hpp"

namespace liftrec {

struct RankOneModel {
  double sigma = 0.0;
  Vector u;
  Vector v;

  // Validates σ > 0 and unit u, v (1e-12).
  RankOneModel(double sigma, Vector u, Vector v);
  RankOneModel() = default;

  Matrix matrix() const { return sigma * u * v.transpose(); }
  Matrix direction() const { return u * v.transpose(); }
  Eigen::Index rows() const { return u.size(); }
  Eigen::Index cols() const { return v.size(); }
};

Vector singular_values(const Matrix& m);
double nuclear_norm(const Matrix& m);
double operator_norm(const Matrix& m);
double nuclear_norm(const BlockList& blocks);

// Singular value soft-thresholding: argmin_X ½‖X − M‖_F² + τ‖X‖_*.
Matrix svt_prox(const Matrix& m, double tau);

Matrix project_tangent(const Matrix& m, const RankOneModel& model);
Matrix project_tangent_complement(const Matrix& m, const RankOneModel& model);

enum class SubdiffForm {
  // ‖H‖ ≤ 1 and ⟨H, uvᵀ⟩ = 1
  norm_and_pairing,
  // P_T(H) = uvᵀ and ‖P_T⊥(H)‖ ≤ 1
  tangent_projection,
  // H = uvᵀ + W, Wᵀu = 0, Wv = 0, ‖W‖ ≤ 1
  explicit_remainder,
  // Hᵀu = v, Hv = u, |⟨H a, b⟩| ≤ 1 over unit a ⊥ v, b ⊥ u
  bilinear_restriction,
};

struct SubdiffTolerances {
  double equality = 1e-8;
  double inequality = 1e-12;
  double margin = 1e-3;
};

struct SubdiffReport {
  bool holds = false;
  double equality_residual = 0.0;
  // The norm compared against 1 by the chosen form.
  double bound_value = 0.0;
  std::string detail;
};

// Evaluates one of the four equivalent characterisations of H ∈ ∂‖·‖_*(σuvᵀ).
// With strict = true the bound must be below 1 − margin instead of ≤ 1.
SubdiffReport subdiff_check(const Matrix& h, const RankOneModel& model, SubdiffForm form,
                            bool strict = false, const SubdiffTolerances& tol = {});

struct SubdiffCertificate {
  Matrix H;
  Matrix W;
  double w_norm = 0.0;
};
SubdiffCertificate decompose_certificate(const Matrix& h, const RankOneModel& model);

// ‖F‖_* − ‖F_ref‖_* − ⟨H, F − F_ref⟩.
double bregman_divergence(const Matrix& f, const Matrix& f_ref, const Matrix& h);
double bregman_divergence(const BlockList& f, const BlockList& f_ref, const BlockList& h);

// Top singular triple; the first entry of u with magnitude above 1e-12·‖u‖∞
// is made positive. Throws DegenerateInput for a zero matrix.
RankOneModel leading_rank_one(const Matrix& m);

// Numerical rank with threshold σ_k > rel_tol · σ_1.
int numerical_rank(const Matrix& m, double rel_tol = 1e-10);

// Orthonormal basis (columns) of the complement of unit vector u.
Matrix orthogonal_complement(const Vector& u);

}  // namespace liftrec
