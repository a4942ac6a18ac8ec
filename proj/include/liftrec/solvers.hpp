#pragma once

// Convex solvers for lifted problems over block lists of whitened matrices:
//   equality-constrained   min Σ‖F_i‖_*  s.t.  ΦF = z          (Douglas–Rachford)
//   regularised            min ½‖ΦF − z‖² + λ Σ‖F_i‖_*        (accelerated prox-gradient)
//   PSD trace minimisation over a single symmetric block        (same splittings)
//   fit + hard constraints min ½‖AF − a‖² + λΣ‖F_i‖_* s.t. BF = b (Douglas–Rachford)

#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>

#include "liftrec/common.hpp"

namespace liftrec {

struct BlockShape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool operator==(const BlockShape&) const = default;
};

// Linear map Φ from a block list (whitened) to a whitened measurement vector.
// Copies share the lazily built dense matrix and norm estimate.
class AffineOperator {
 public:
  using ApplyFn = std::function<Vector(const BlockList&)>;
  using AdjointFn = std::function<BlockList(const Vector&)>;

  AffineOperator(std::vector<BlockShape> domain, Eigen::Index codomain_dim, ApplyFn apply,
                 AdjointFn adjoint);

  // Rows act on the column-major vectorisation of the blocks, concatenated.
  static AffineOperator from_dense(std::vector<BlockShape> domain, Matrix dense);

  Vector apply(const BlockList& f) const;
  BlockList adjoint(const Vector& p) const;

  const std::vector<BlockShape>& domain_shape() const { return domain_; }
  Eigen::Index codomain_dim() const { return codomain_dim_; }
  Eigen::Index domain_dim() const { return domain_dim_; }
  std::size_t block_count() const { return domain_.size(); }

  // Power-iteration estimate of ‖Φ‖, cached.
  double opnorm_estimate() const;
  // Dense assembly, cached.
  const Matrix& dense() const;

  Vector flatten(const BlockList& f) const;
  BlockList unflatten(const Vector& x) const;
  BlockList zero_blocks() const;

 private:
  struct Cache;
  std::vector<BlockShape> domain_;
  Eigen::Index codomain_dim_ = 0;
  Eigen::Index domain_dim_ = 0;
  ApplyFn apply_;
  AdjointFn adjoint_;
  std::shared_ptr<Cache> cache_;
};

// max over random probes of |⟨ΦF, p⟩ − ⟨F, Φ*p⟩| / (‖ΦF‖‖p‖ + ‖F‖‖Φ*p‖).
double adjoint_mismatch(const AffineOperator& op, int probes, std::uint64_t seed);

// Horizontal stacking of operators sharing a domain: F ↦ (Φ_1 F, Φ_2 F, ...).
AffineOperator stack_operators(const std::vector<AffineOperator>& parts);

struct SolverOptions {
  int max_iter = 50000;
  double tol_feas = 1e-8;   // relative to max(‖z‖, 1)
  double tol_gap = 1e-6;    // relative to 1 + |objective|
  double rho = 0.0;         // Douglas–Rachford step; 0 selects ‖z‖ / ‖Φ‖
  bool momentum = true;
  double tol_fixed_point = 1e-9;  // prox-gradient: gradient mapping ≤ tol · λ
  int check_every = 10;
  Eigen::Index direct_factorization_limit = 5000;
  double cg_tol = 1e-10;
  bool record_objective = false;
};

enum class SolveStatus { converged, max_iter, infeasible_suspected };
std::string_view to_string(SolveStatus status);

struct SolveReport {
  int iterations = 0;
  double objective = 0.0;
  double residual = 0.0;  // ‖ΦF − z‖ (or ‖BF − b‖ for the constrained fit)
  double gap = 0.0;
  double dual_norm = 0.0;  // max_i ‖(Φ*p)_i‖, or λ_max(Φ*p) for PSD
  SolveStatus status = SolveStatus::max_iter;
  std::vector<double> objective_trace;
};

struct BlockSolution {
  BlockList blocks;
  Vector dual;
  SolveReport report;
};

BlockSolution solve_equality_nnm(const AffineOperator& op, const Vector& z, const SolverOptions& opts = {});

BlockSolution solve_regularized_nnm(const AffineOperator& op, const Vector& z_noisy, double lambda,
                                    const SolverOptions& opts = {});

// min ½‖A F − a‖² + λ Σ‖F_i‖_* subject to B F = b. A and B share a domain.
BlockSolution solve_constrained_fit_nnm(const AffineOperator& fit, const Vector& a,
                                        const AffineOperator& constraint, const Vector& b, double lambda,
                                        const SolverOptions& opts = {});

enum class PsdMode { exact, regularized };

struct PsdSolution {
  Matrix X;
  Vector dual;
  SolveReport report;
};

// Minimise tr X over X ⪰ 0 subject to ⟨V_k, X⟩ = z_k (exact) or with the
// least-squares penalty ½Σ(⟨V_k, X⟩ − z_k)² + λ tr X (regularized).
PsdSolution solve_psd_trace_min(const std::vector<Matrix>& v, const Vector& z, PsdMode mode,
                                double lambda = 0.0, const SolverOptions& opts = {});

struct DualityGapReport {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double residual = 0.0;
  double max_dual_block_norm = 0.0;
  bool dual_feasible = true;
  std::vector<double> pairing_defect;  // ⟨F_i, H_i⟩ − ‖F_i‖_*
};

// Σ‖F_i‖_* − ⟨p, z⟩ with H = Φ*p; dual infeasibility (‖H_i‖ > 1 + tol) is flagged.
DualityGapReport duality_gap(const BlockList& f, const Vector& p, const AffineOperator& op, const Vector& z,
                             double tol = 1e-6);

// Orthogonal projection onto {F : ΦF = P_range(z)}, via a dense pseudo-inverse
// of ΦΦ* or conjugate gradients on ΦΦ* above the size limit.
class AffineProjector {
 public:
  AffineProjector(const AffineOperator& op, const SolverOptions& opts);
  // x − Φ⁺(Φx − z) on flattened vectors.
  Vector project(const Vector& x, const Vector& z) const;
  // (ΦΦ*)⁺ r
  Vector solve_normal(const Vector& r) const;
  bool uses_direct() const { return direct_; }

 private:
  const AffineOperator* op_;
  bool direct_ = true;
  double cg_tol_ = 1e-10;
  Matrix dense_;
  Matrix pinv_normal_;
};

}  // namespace liftrec
