#include "liftrec/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>

#include "liftrec/lowrank.hpp"

namespace liftrec {

struct AffineOperator::Cache {
  std::once_flag dense_once;
  std::once_flag norm_once;
  Matrix dense;
  double norm = 0.0;
};

AffineOperator::AffineOperator(std::vector<BlockShape> domain, Eigen::Index codomain_dim, ApplyFn apply,
                               AdjointFn adjoint)
    : domain_(std::move(domain)),
      codomain_dim_(codomain_dim),
      apply_(std::move(apply)),
      adjoint_(std::move(adjoint)),
      cache_(std::make_shared<Cache>()) {
  if (domain_.empty()) throw InvalidArgument("AffineOperator: empty domain");
  if (codomain_dim_ < 0) throw InvalidArgument("AffineOperator: negative codomain dimension");
  if (!apply_ || !adjoint_) throw InvalidArgument("AffineOperator: apply and adjoint are required");
  for (const auto& s : domain_) {
    if (s.rows <= 0 || s.cols <= 0) throw InvalidArgument("AffineOperator: empty block shape");
    domain_dim_ += s.rows * s.cols;
  }
}

AffineOperator AffineOperator::from_dense(std::vector<BlockShape> domain, Matrix dense) {
  Eigen::Index dim = 0;
  for (const auto& s : domain) dim += s.rows * s.cols;
  if (dense.cols() != dim) throw InvalidArgument("AffineOperator::from_dense: column count mismatch");
  auto shared = std::make_shared<const Matrix>(std::move(dense));
  auto shapes = domain;
  auto flat = [shapes](const BlockList& f) {
    Eigen::Index total = 0;
    for (const auto& s : shapes) total += s.rows * s.cols;
    Vector x(total);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      const Eigen::Index len = shapes[i].rows * shapes[i].cols;
      x.segment(off, len) = Eigen::Map<const Vector>(f[i].data(), len);
      off += len;
    }
    return x;
  };
  AffineOperator op(
      domain, shared->rows(), [shared, flat](const BlockList& f) -> Vector { return *shared * flat(f); },
      [shared, shapes](const Vector& p) {
        const Vector x = shared->transpose() * p;
        BlockList out;
        Eigen::Index off = 0;
        for (const auto& s : shapes) {
          out.push_back(Eigen::Map<const Matrix>(x.data() + off, s.rows, s.cols));
          off += s.rows * s.cols;
        }
        return out;
      });
  std::call_once(op.cache_->dense_once, [&] { op.cache_->dense = *shared; });
  return op;
}

Vector AffineOperator::apply(const BlockList& f) const {
  if (f.size() != domain_.size()) throw InvalidArgument("AffineOperator::apply: block count mismatch");
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i].rows() != domain_[i].rows || f[i].cols() != domain_[i].cols)
      throw InvalidArgument("AffineOperator::apply: block shape mismatch");
  Vector out = apply_(f);
  if (out.size() != codomain_dim_) throw InvalidArgument("AffineOperator::apply: codomain size mismatch");
  return out;
}

BlockList AffineOperator::adjoint(const Vector& p) const {
  if (p.size() != codomain_dim_) throw InvalidArgument("AffineOperator::adjoint: codomain size mismatch");
  BlockList out = adjoint_(p);
  if (out.size() != domain_.size()) throw InvalidArgument("AffineOperator::adjoint: block count mismatch");
  return out;
}

Vector AffineOperator::flatten(const BlockList& f) const {
  if (f.size() != domain_.size()) throw InvalidArgument("flatten: block count mismatch");
  Vector x(domain_dim_);
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Eigen::Index len = domain_[i].rows * domain_[i].cols;
    if (f[i].size() != len) throw InvalidArgument("flatten: block shape mismatch");
    x.segment(off, len) = Eigen::Map<const Vector>(f[i].data(), len);
    off += len;
  }
  return x;
}

BlockList AffineOperator::unflatten(const Vector& x) const {
  if (x.size() != domain_dim_) throw InvalidArgument("unflatten: size mismatch");
  BlockList out;
  out.reserve(domain_.size());
  Eigen::Index off = 0;
  for (const auto& s : domain_) {
    out.push_back(Eigen::Map<const Matrix>(x.data() + off, s.rows, s.cols));
    off += s.rows * s.cols;
  }
  return out;
}

BlockList AffineOperator::zero_blocks() const {
  BlockList out;
  for (const auto& s : domain_) out.push_back(Matrix::Zero(s.rows, s.cols));
  return out;
}

const Matrix& AffineOperator::dense() const {
  std::call_once(cache_->dense_once, [this] {
    Matrix a(codomain_dim_, domain_dim_);
    if (codomain_dim_ <= domain_dim_) {
      Vector e = Vector::Zero(codomain_dim_);
      for (Eigen::Index k = 0; k < codomain_dim_; ++k) {
        e(k) = 1.0;
        a.row(k) = flatten(adjoint(e)).transpose();
        e(k) = 0.0;
      }
    } else {
      Vector e = Vector::Zero(domain_dim_);
      for (Eigen::Index k = 0; k < domain_dim_; ++k) {
        e(k) = 1.0;
        a.col(k) = apply(unflatten(e));
        e(k) = 0.0;
      }
    }
    cache_->dense = std::move(a);
  });
  return cache_->dense;
}

double AffineOperator::opnorm_estimate() const {
  std::call_once(cache_->norm_once, [this] {
    if (codomain_dim_ == 0) {
      cache_->norm = 0.0;
      return;
    }
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> gauss;
    Vector x(domain_dim_);
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = gauss(rng);
    x.normalize();
    double est = 0.0;
    for (int it = 0; it < 5000; ++it) {
      const Vector y = flatten(adjoint(apply(unflatten(x))));
      const double rq = x.dot(y);
      const double ny = y.norm();
      if (ny == 0.0) break;
      x = y / ny;
      if (it > 5 && std::abs(rq - est) <= 1e-13 * std::abs(rq)) {
        est = rq;
        break;
      }
      est = rq;
    }
    if (!std::isfinite(est)) throw NumericFailure("opnorm_estimate: power iteration diverged");
    cache_->norm = std::sqrt(std::max(est, 0.0));
  });
  return cache_->norm;
}

double adjoint_mismatch(const AffineOperator& op, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  for (int t = 0; t < probes; ++t) {
    Vector x(op.domain_dim());
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = gauss(rng);
    Vector p(op.codomain_dim());
    for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = gauss(rng);
    const BlockList f = op.unflatten(x);
    const Vector af = op.apply(f);
    const BlockList atp = op.adjoint(p);
    const double lhs = af.dot(p);
    const double rhs = inner(f, atp);
    const double scale = af.norm() * p.norm() + frobenius_norm(f) * frobenius_norm(atp);
    if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

AffineOperator stack_operators(const std::vector<AffineOperator>& parts) {
  if (parts.empty()) throw InvalidArgument("stack_operators: no operators");
  const auto shapes = parts.front().domain_shape();
  Eigen::Index total = 0;
  std::vector<Eigen::Index> offsets;
  for (const auto& p : parts) {
    if (p.domain_shape() != shapes) throw InvalidArgument("stack_operators: domain mismatch");
    offsets.push_back(total);
    total += p.codomain_dim();
  }
  auto apply = [parts, total, offsets](const BlockList& f) {
    Vector out(total);
    for (std::size_t i = 0; i < parts.size(); ++i) out.segment(offsets[i], parts[i].codomain_dim()) = parts[i].apply(f);
    return out;
  };
  auto adjoint = [parts, offsets](const Vector& p) {
    BlockList out = parts.front().zero_blocks();
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const BlockList part = parts[i].adjoint(p.segment(offsets[i], parts[i].codomain_dim()));
      axpy(1.0, part, out);
    }
    return out;
  };
  return AffineOperator(shapes, total, apply, adjoint);
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible_suspected: return "infeasible_suspected";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// projection onto the affine constraint set

namespace {

// Pseudo-inverse of a symmetric PSD matrix through its eigendecomposition.
Matrix psd_pinv(const Matrix& s, double rel_tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) throw NumericFailure("pseudo-inverse: eigensolver failed");
  const Vector& ev = eig.eigenvalues();
  const double top = ev.size() ? std::max(ev.cwiseAbs().maxCoeff(), 0.0) : 0.0;
  Vector inv = Vector::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev(k) > rel_tol * top) inv(k) = 1.0 / ev(k);
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

AffineProjector::AffineProjector(const AffineOperator& op, const SolverOptions& opts)
    : op_(&op), cg_tol_(opts.cg_tol) {
  direct_ = op.codomain_dim() <= opts.direct_factorization_limit;
  if (direct_) {
    dense_ = op.dense();
    pinv_normal_ = psd_pinv(dense_ * dense_.transpose());
  }
}

Vector AffineProjector::solve_normal(const Vector& r) const {
  if (direct_) return pinv_normal_ * r;
  // conjugate gradients on ΦΦ* y = r
  auto normal = [this](const Vector& y) { return op_->apply(op_->adjoint(y)); };
  Vector y = Vector::Zero(r.size());
  Vector res = r;
  Vector dir = res;
  double rr = res.squaredNorm();
  const double stop = cg_tol_ * cg_tol_ * std::max(rr, std::numeric_limits<double>::min());
  for (Eigen::Index it = 0; it < 10 * r.size() && rr > stop; ++it) {
    const Vector ad = normal(dir);
    const double curv = dir.dot(ad);
    if (!(curv > 0.0)) break;
    const double step = rr / curv;
    y += step * dir;
    res -= step * ad;
    const double rr_new = res.squaredNorm();
    dir = res + (rr_new / rr) * dir;
    rr = rr_new;
  }
  return y;
}

Vector AffineProjector::project(const Vector& x, const Vector& z) const {
  Vector ax = direct_ ? Vector(dense_ * x) : op_->apply(op_->unflatten(x));
  const Vector corr = solve_normal(ax - z);
  if (direct_) return x - dense_.transpose() * corr;
  return x - op_->flatten(op_->adjoint(corr));
}

// ---------------------------------------------------------------------------
// shared solver kernels

namespace {

// The convex penalty g applied blockwise: its prox, its value and the gauge of
// its conjugate (the dual norm).
struct Penalty {
  Matrix (*prox)(const Matrix&, double);
  double (*value)(const Matrix&);
  double (*dual_gauge)(const Matrix&);
};

Matrix psd_prox(const Matrix& m, double tau) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericFailure("psd prox: eigensolver failed");
  const Vector lam = (eig.eigenvalues().array() - tau).max(0.0).matrix();
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

double psd_value(const Matrix& m) { return m.trace(); }

double psd_gauge(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

const Penalty kNuclear{&svt_prox, static_cast<double (*)(const Matrix&)>(&nuclear_norm), &operator_norm};
const Penalty kPsdTrace{&psd_prox, &psd_value, &psd_gauge};

struct FlatMap {
  const AffineOperator& op;
  const Matrix* dense = nullptr;

  Vector apply(const Vector& x) const { return dense ? Vector(*dense * x) : op.apply(op.unflatten(x)); }
  Vector adjoint(const Vector& p) const {
    return dense ? Vector(dense->transpose() * p) : op.flatten(op.adjoint(p));
  }
};

Vector prox_flat(const AffineOperator& op, const Penalty& pen, const Vector& x, double tau) {
  BlockList blocks = op.unflatten(x);
  for (auto& b : blocks) b = pen.prox(b, tau);
  return op.flatten(blocks);
}

double value_flat(const AffineOperator& op, const Penalty& pen, const Vector& x) {
  double s = 0.0;
  for (const auto& b : op.unflatten(x)) s += pen.value(b);
  return s;
}

double gauge_flat(const AffineOperator& op, const Penalty& pen, const Vector& x) {
  double s = 0.0;
  for (const auto& b : op.unflatten(x)) s = std::max(s, pen.dual_gauge(b));
  return s;
}

struct EqualityResult {
  Vector x;
  Vector dual;
  SolveReport report;
};

// Douglas–Rachford on min g(X) + ι{ΦX = z}.
EqualityResult douglas_rachford_equality(const AffineOperator& op, const Vector& z, const Penalty& pen,
                                         const SolverOptions& opts) {
  if (z.size() != op.codomain_dim()) throw InvalidArgument("solve: measurement size does not match operator");
  if (!z.allFinite()) throw InvalidArgument("solve: non-finite measurements");
  const AffineProjector proj(op, opts);
  const FlatMap map{op, proj.uses_direct() ? &op.dense() : nullptr};

  const double znorm = z.norm();
  const double tol_abs = opts.tol_feas * std::max(znorm, 1.0);
  const double opnorm = op.opnorm_estimate();
  if (!(opnorm > 0.0)) throw InvalidArgument("solve: operator is zero");

  // Least-squares target: the projection onto the range of Φ.
  const Vector x_ls = proj.project(Vector::Zero(op.domain_dim()), z);
  const Vector z_range = map.apply(x_ls);
  const double range_defect = (z_range - z).norm();

  double gamma = opts.rho > 0.0 ? opts.rho : znorm / opnorm;
  if (!(gamma > 0.0)) gamma = 1.0;

  EqualityResult out;
  SolveReport& rep = out.report;
  Vector y = x_ls;
  Vector x = Vector::Zero(op.domain_dim());
  double best_residual = std::numeric_limits<double>::infinity();
  int best_at = 0;
  const int stall_window = 2000;

  for (int it = 1; it <= opts.max_iter; ++it) {
    x = prox_flat(op, pen, y, gamma);
    const Vector zp = proj.project(2.0 * x - y, z);
    y += zp - x;
    rep.iterations = it;
    if (opts.record_objective) rep.objective_trace.push_back(value_flat(op, pen, x));

    if (it % opts.check_every != 0 && it != opts.max_iter) continue;
    const double residual = (map.apply(x) - z_range).norm();
    if (residual < 0.5 * best_residual) {
      best_residual = residual;
      best_at = it;
    }
    if (residual > tol_abs) {
      if (it - best_at > stall_window) {
        rep.status = SolveStatus::infeasible_suspected;
        break;
      }
      continue;
    }
    const Vector h = (y - x) / gamma;
    const Vector p = proj.solve_normal(map.apply(h));
    const double obj = value_flat(op, pen, x);
    const double gap = obj - p.dot(z_range);
    const double dual_norm = gauge_flat(op, pen, map.adjoint(p));
    if (std::abs(gap) <= opts.tol_gap * (1.0 + std::abs(obj)) && dual_norm <= 1.0 + opts.tol_gap) {
      rep.status = SolveStatus::converged;
      break;
    }
  }

  const Vector h = (y - x) / gamma;
  out.dual = proj.solve_normal(map.apply(h));
  out.x = x;
  rep.objective = value_flat(op, pen, x);
  rep.residual = (map.apply(x) - z).norm();
  rep.gap = rep.objective - out.dual.dot(z);
  rep.dual_norm = gauge_flat(op, pen, map.adjoint(out.dual));
  if (range_defect > tol_abs) rep.status = SolveStatus::infeasible_suspected;
  return out;
}

// Accelerated forward-backward with adaptive restart on ½‖ΦX − z‖² + λ g(X).
EqualityResult fista(const AffineOperator& op, const Vector& z, double lambda, const Penalty& pen,
                     const SolverOptions& opts) {
  if (!(lambda > 0.0)) throw InvalidArgument("solve_regularized: lambda must be positive");
  if (z.size() != op.codomain_dim()) throw InvalidArgument("solve_regularized: measurement size mismatch");
  const Matrix* dense = op.codomain_dim() <= opts.direct_factorization_limit ? &op.dense() : nullptr;
  const FlatMap map{op, dense};
  const double opnorm = op.opnorm_estimate();
  if (!(opnorm > 0.0) || !std::isfinite(opnorm)) throw NumericFailure("solve_regularized: step size estimation failed");
  const double lip = 1.01 * opnorm * opnorm;
  const double step = 1.0 / lip;

  EqualityResult out;
  SolveReport& rep = out.report;
  Vector x = Vector::Zero(op.domain_dim());
  Vector w = x;
  double theta = 1.0;
  rep.status = SolveStatus::max_iter;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Vector grad = map.adjoint(map.apply(w) - z);
    const Vector xn = prox_flat(op, pen, w - step * grad, step * lambda);
    const double mapping = (xn - w).norm() / step;
    rep.iterations = it;
    if (opts.record_objective) {
      rep.objective_trace.push_back(0.5 * (map.apply(xn) - z).squaredNorm() + lambda * value_flat(op, pen, xn));
    }
    if (mapping <= opts.tol_fixed_point * lambda) {
      x = xn;
      rep.status = SolveStatus::converged;
      break;
    }
    if (opts.momentum) {
      if ((w - xn).dot(xn - x) > 0.0) {
        theta = 1.0;
        w = xn;
      } else {
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        w = xn + ((theta - 1.0) / theta_next) * (xn - x);
        theta = theta_next;
      }
    } else {
      w = xn;
    }
    x = xn;
  }

  const Vector resid = z - map.apply(x);
  Vector p = resid / lambda;
  const double gauge = gauge_flat(op, pen, map.adjoint(p));
  const double scale = std::max(1.0, gauge);
  const Vector pf = p / scale;
  const double primal = 0.5 * resid.squaredNorm() + lambda * value_flat(op, pen, x);
  const double dual = lambda * pf.dot(z) - 0.5 * lambda * lambda * pf.squaredNorm();
  out.x = x;
  out.dual = p;
  rep.objective = primal;
  rep.residual = resid.norm();
  rep.gap = primal - dual;
  rep.dual_norm = gauge;
  return out;
}

}  // namespace

BlockSolution solve_equality_nnm(const AffineOperator& op, const Vector& z, const SolverOptions& opts) {
  EqualityResult r = douglas_rachford_equality(op, z, kNuclear, opts);
  return {op.unflatten(r.x), std::move(r.dual), std::move(r.report)};
}

BlockSolution solve_regularized_nnm(const AffineOperator& op, const Vector& z_noisy, double lambda,
                                    const SolverOptions& opts) {
  EqualityResult r = fista(op, z_noisy, lambda, kNuclear, opts);
  return {op.unflatten(r.x), std::move(r.dual), std::move(r.report)};
}

BlockSolution solve_constrained_fit_nnm(const AffineOperator& fit, const Vector& a, const AffineOperator& constraint,
                                        const Vector& b, double lambda, const SolverOptions& opts) {
  if (!(lambda > 0.0)) throw InvalidArgument("solve_constrained_fit: lambda must be positive");
  if (fit.domain_shape() != constraint.domain_shape())
    throw InvalidArgument("solve_constrained_fit: operators act on different domains");
  if (a.size() != fit.codomain_dim() || b.size() != constraint.codomain_dim())
    throw InvalidArgument("solve_constrained_fit: measurement size mismatch");

  const Matrix& af = fit.dense();
  const Matrix& bc = constraint.dense();
  const double fit_norm = fit.opnorm_estimate();
  double gamma = opts.rho > 0.0 ? opts.rho : 1.0 / std::max(fit_norm * fit_norm, 1e-300);

  // prox of γ(½‖A X − a‖² + ι{B X = b}):
  //   M = I + γAᵀA, M⁻¹ by Woodbury, multiplier from the Schur complement B M⁻¹ Bᵀ.
  const Eigen::Index m1 = af.rows();
  const Matrix small = Matrix::Identity(m1, m1) + gamma * af * af.transpose();
  const Eigen::LLT<Matrix> small_llt(small);
  if (small_llt.info() != Eigen::Success) throw NumericFailure("solve_constrained_fit: Woodbury factor failed");
  auto m_inv = [&](const Vector& r) -> Vector { return r - gamma * af.transpose() * small_llt.solve(af * r); };
  const Matrix bat = bc * af.transpose();
  const Matrix schur = bc * bc.transpose() - gamma * bat * small_llt.solve(bat.transpose());
  const Matrix schur_pinv = psd_pinv(0.5 * (schur + schur.transpose()));
  const Vector at_a = af.transpose() * a;
  auto prox_g = [&](const Vector& y) -> Vector {
    const Vector r = y + gamma * at_a;
    const Vector xr = m_inv(r);
    const Vector mu = schur_pinv * (bc * xr - b);
    return xr - m_inv(bc.transpose() * mu);
  };

  const double tol_abs = opts.tol_feas * std::max({a.norm(), b.norm(), 1.0});
  BlockSolution out;
  SolveReport& rep = out.report;
  Vector y = prox_g(Vector::Zero(fit.domain_dim()));
  Vector x = y;
  Vector zp = y;
  rep.status = SolveStatus::max_iter;
  for (int it = 1; it <= opts.max_iter; ++it) {
    x = prox_flat(fit, kNuclear, y, gamma * lambda);
    zp = prox_g(2.0 * x - y);
    y += zp - x;
    rep.iterations = it;
    if (opts.record_objective)
      rep.objective_trace.push_back(0.5 * (af * x - a).squaredNorm() + lambda * value_flat(fit, kNuclear, x));
    if (it % opts.check_every != 0) continue;
    const double fp = (zp - x).norm();
    if (fp <= tol_abs && (bc * x - b).norm() <= tol_abs) {
      rep.status = SolveStatus::converged;
      break;
    }
  }
  rep.objective = 0.5 * (af * x - a).squaredNorm() + lambda * value_flat(fit, kNuclear, x);
  rep.residual = (bc * x - b).norm();
  // fixed-point residual of the splitting stands in for a duality gap here
  rep.gap = (zp - x).norm();
  out.dual = (a - af * x) / lambda;
  rep.dual_norm = gauge_flat(fit, kNuclear, af.transpose() * out.dual);
  out.blocks = fit.unflatten(x);
  return out;
}

PsdSolution solve_psd_trace_min(const std::vector<Matrix>& v, const Vector& z, PsdMode mode, double lambda,
                                const SolverOptions& opts) {
  if (v.empty()) throw InvalidArgument("solve_psd_trace_min: no measurement matrices");
  if (static_cast<Eigen::Index>(v.size()) != z.size())
    throw InvalidArgument("solve_psd_trace_min: measurement count mismatch");
  const Eigen::Index n = v.front().rows();
  Matrix a(static_cast<Eigen::Index>(v.size()), n * n);
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k].rows() != n || v[k].cols() != n) throw InvalidArgument("solve_psd_trace_min: size mismatch");
    if ((v[k] - v[k].transpose()).norm() > 1e-12 * std::max(v[k].norm(), 1.0))
      throw InvalidArgument("solve_psd_trace_min: measurement matrices must be symmetric");
    a.row(static_cast<Eigen::Index>(k)) = Eigen::Map<const Vector>(v[k].data(), n * n).transpose();
  }
  const AffineOperator op = AffineOperator::from_dense({{n, n}}, std::move(a));
  EqualityResult r = mode == PsdMode::exact ? douglas_rachford_equality(op, z, kPsdTrace, opts)
                                            : fista(op, z, lambda, kPsdTrace, opts);
  Matrix x = op.unflatten(r.x).front();
  x = 0.5 * (x + x.transpose());
  return {std::move(x), std::move(r.dual), std::move(r.report)};
}

DualityGapReport duality_gap(const BlockList& f, const Vector& p, const AffineOperator& op, const Vector& z,
                             double tol) {
  DualityGapReport r;
  const BlockList h = op.adjoint(p);
  r.residual = (op.apply(f) - z).norm();
  r.primal = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double nn = nuclear_norm(f[i]);
    r.primal += nn;
    r.pairing_defect.push_back((f[i].array() * h[i].array()).sum() - nn);
    r.max_dual_block_norm = std::max(r.max_dual_block_norm, operator_norm(h[i]));
  }
  r.dual = p.dot(z);
  r.gap = r.primal - r.dual;
  r.dual_feasible = r.max_dual_block_norm <= 1.0 + tol;
  return r;
}

}  // namespace liftrec
