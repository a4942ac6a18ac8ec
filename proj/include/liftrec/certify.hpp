#pragma once

// Dual-certificate machinery for Σ‖F_i‖_* minimisation around rank-one models
// F_i = σ_i u_i v_iᵀ: tangent-space bases, the least-norm pre-certificate,
// non-degeneracy checks, injectivity diagnostics and the robustness bounds
// that follow from a certificate.

#include "liftrec/lowrank.hpp"
#include "liftrec/solvers.hpp"

namespace liftrec {

struct CertificateReport {
  Vector p;
  BlockList H;
  std::vector<double> tangent_residual;  // ‖P_T(H_i) − u_i v_iᵀ‖_F
  std::vector<double> w_norm;            // ‖P_T⊥(H_i)‖
  bool ndsc_pass = false;
  double margin = 1e-3;
  double smallest_singular_value = 0.0;  // of Φ restricted to T, when computed
  double max_w_norm() const;
};

// Orthonormal basis of T = {u aᵀ + b vᵀ} as flattened (column-major) columns:
// u e_kᵀ for every column k, then b_j vᵀ for an orthonormal basis b_j of u⊥.
Matrix tangent_basis(const RankOneModel& model);

// Symmetric models (u = v) over symmetric unknowns use the tangent space
// {u aᵀ + a uᵀ}, with orthonormal basis uuᵀ and (u bᵀ + b uᵀ)/√2 for b ⊥ u.
enum class TangentKind { general, symmetric };

Matrix symmetric_tangent_basis(const RankOneModel& model);

// Φ B with B the block-diagonal tangent basis over all models.
Matrix restricted_operator(const AffineOperator& op, const std::vector<RankOneModel>& models,
                           TangentKind kind = TangentKind::general);

// Least-norm p with P_T(Φ*p) = (u_i v_iᵀ)_i. Throws DegenerateCertificate when
// Φ is not injective on T.
CertificateReport precertificate(const AffineOperator& op, const std::vector<RankOneModel>& models,
                                 double margin = 1e-3, double tol = 1e-8, TangentKind kind = TangentKind::general);

CertificateReport ndsc_verify(const BlockList& h, const std::vector<RankOneModel>& models, double margin = 1e-3,
                              double tol = 1e-8);

// σ_min of Φ on T (0 when dim T exceeds the codomain).
double tangent_injectivity(const AffineOperator& op, const std::vector<RankOneModel>& models,
                           TangentKind kind = TangentKind::general);

// Whether α ↦ Φ(α_i u_i v_iᵀ)_i has full column rank.
bool cone_injectivity(const AffineOperator& op, const std::vector<RankOneModel>& models, double rel_tol = 1e-10);

struct RobustnessBounds {
  double bregman = 0.0;          // D_H(F^δ, F†)
  double bregman_bound = 0.0;    // (1 + c‖p‖)² δ / (2c)
  double prediction = 0.0;       // ‖ΦF^δ − ΦF†‖
  double prediction_bound = 0.0; // 2(1 + c‖p‖) δ
  double projection = 0.0;       // Σ‖P_T⊥((F^δ − F†)_i)‖_F
  double projection_bound = 0.0; // D_H / (1 − max‖W_i‖)
  double p_norm = 0.0;
  double max_w_norm = 0.0;
  bool bregman_ok = false;
  bool prediction_ok = false;
  bool projection_ok = false;
  bool all_ok() const { return bregman_ok && prediction_ok && projection_ok; }
};

// Evaluates the certificate-based error bounds for a regularised solution
// computed with λ = cδ, where δ bounds the measurement error. `p` is the
// certificate multiplier and H = Φ*p.
RobustnessBounds robustness_bounds(const BlockList& f_delta, const std::vector<RankOneModel>& models,
                                   const BlockList& h, const Vector& p, double c, double delta,
                                   const AffineOperator& op, double slack = 1e-9);

}  // namespace liftrec
