#include "liftrec/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace liftrec {

double CertificateReport::max_w_norm() const {
  return w_norm.empty() ? 0.0 : *std::max_element(w_norm.begin(), w_norm.end());
}

Matrix tangent_basis(const RankOneModel& model) {
  const Eigen::Index r = model.rows(), c = model.cols();
  const Matrix qu = orthogonal_complement(model.u);
  Matrix b = Matrix::Zero(r * c, c + r - 1);
  for (Eigen::Index k = 0; k < c; ++k) b.col(k).segment(k * r, r) = model.u;
  for (Eigen::Index j = 0; j + 1 < r; ++j) {
    for (Eigen::Index k = 0; k < c; ++k) b.col(c + j).segment(k * r, r) = model.v(k) * qu.col(j);
  }
  return b;
}

Matrix symmetric_tangent_basis(const RankOneModel& model) {
  if (model.rows() != model.cols() || (model.u - model.v).norm() > 1e-12)
    throw InvalidArgument("symmetric_tangent_basis: model must have u = v");
  const Eigen::Index n = model.rows();
  const Matrix qu = orthogonal_complement(model.u);
  Matrix b(n * n, n);
  const Matrix uu = model.u * model.u.transpose();
  b.col(0) = Eigen::Map<const Vector>(uu.data(), n * n);
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const Matrix s = (model.u * qu.col(j).transpose() + qu.col(j) * model.u.transpose()) / std::sqrt(2.0);
    b.col(j + 1) = Eigen::Map<const Vector>(s.data(), n * n);
  }
  return b;
}

namespace {

void require_models(const AffineOperator& op, const std::vector<RankOneModel>& models) {
  if (models.size() != op.block_count()) throw InvalidArgument("certify: one model per block is required");
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& s = op.domain_shape()[i];
    if (models[i].rows() != s.rows || models[i].cols() != s.cols)
      throw InvalidArgument("certify: model shape does not match operator block");
  }
}

Eigen::Index tangent_dim(const std::vector<RankOneModel>& models, TangentKind kind) {
  Eigen::Index t = 0;
  for (const auto& m : models) t += kind == TangentKind::general ? m.rows() + m.cols() - 1 : m.rows();
  return t;
}

Matrix block_basis(const RankOneModel& m, TangentKind kind) {
  return kind == TangentKind::general ? tangent_basis(m) : symmetric_tangent_basis(m);
}

}  // namespace

Matrix restricted_operator(const AffineOperator& op, const std::vector<RankOneModel>& models, TangentKind kind) {
  require_models(op, models);
  const Matrix& a = op.dense();
  if (kind == TangentKind::symmetric) {
    Matrix out(op.codomain_dim(), tangent_dim(models, kind));
    Eigen::Index col_off = 0, dom_off = 0;
    for (const auto& m : models) {
      const Matrix b = symmetric_tangent_basis(m);
      out.middleCols(col_off, b.cols()) = a.middleCols(dom_off, b.rows()) * b;
      col_off += b.cols();
      dom_off += b.rows();
    }
    return out;
  }
  Matrix out(op.codomain_dim(), tangent_dim(models, kind));
  Eigen::Index col_off = 0, dom_off = 0;
  for (const auto& m : models) {
    const Eigen::Index r = m.rows(), c = m.cols();
    // columns u e_kᵀ: the k-th column slice of the block applied to u
    for (Eigen::Index k = 0; k < c; ++k) out.col(col_off + k) = a.middleCols(dom_off + k * r, r) * m.u;
    // columns b_j vᵀ: (Σ_k v_k A_k) b_j
    Matrix av = Matrix::Zero(a.rows(), r);
    for (Eigen::Index k = 0; k < c; ++k) av += m.v(k) * a.middleCols(dom_off + k * r, r);
    if (r > 1) out.middleCols(col_off + c, r - 1) = av * orthogonal_complement(m.u);
    col_off += c + r - 1;
    dom_off += r * c;
  }
  return out;
}

CertificateReport ndsc_verify(const BlockList& h, const std::vector<RankOneModel>& models, double margin,
                              double tol) {
  if (h.size() != models.size()) throw InvalidArgument("ndsc_verify: block count mismatch");
  CertificateReport r;
  r.H = h;
  r.margin = margin;
  bool pass = true;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double tr = (project_tangent(h[i], models[i]) - models[i].direction()).norm();
    const double w = operator_norm(project_tangent_complement(h[i], models[i]));
    r.tangent_residual.push_back(tr);
    r.w_norm.push_back(w);
    pass = pass && tr <= tol && w <= 1.0 - margin;
  }
  r.ndsc_pass = pass;
  return r;
}

CertificateReport precertificate(const AffineOperator& op, const std::vector<RankOneModel>& models, double margin,
                                 double tol, TangentKind kind) {
  const Matrix phi_t = restricted_operator(op, models, kind);
  const Eigen::Index t = phi_t.cols();
  if (t > phi_t.rows()) {
    std::ostringstream msg;
    msg << "precertificate: tangent space (dim " << t << ") exceeds the codomain (dim " << phi_t.rows() << ")";
    throw DegenerateCertificate(msg.str(), 0.0);
  }
  Eigen::BDCSVD<Matrix> svd(phi_t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericFailure("precertificate: svd failed");
  const Vector& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  const double scale = std::max(s(0), op.opnorm_estimate());
  if (!(smin > 1e-10 * scale)) {
    std::ostringstream msg;
    msg << "precertificate: Φ is not injective on T (σ_min = " << smin << ", σ_max = " << s(0) << ")";
    throw DegenerateCertificate(msg.str(), smin);
  }
  // tangent coordinates of (u_i v_iᵀ)
  Vector rhs = Vector::Zero(t);
  Eigen::Index off = 0;
  for (const auto& m : models) {
    const Matrix b = block_basis(m, kind);
    const Matrix d = m.direction();
    rhs.segment(off, b.cols()) = b.transpose() * Eigen::Map<const Vector>(d.data(), d.size());
    off += b.cols();
  }
  // least-norm solution of (ΦB)ᵀ p = rhs
  const Vector p = svd.matrixU() * (svd.matrixV().transpose() * rhs).cwiseQuotient(s);
  CertificateReport r = ndsc_verify(op.adjoint(p), models, margin, tol);
  r.p = p;
  r.smallest_singular_value = smin;
  return r;
}

double tangent_injectivity(const AffineOperator& op, const std::vector<RankOneModel>& models, TangentKind kind) {
  const Matrix phi_t = restricted_operator(op, models, kind);
  if (phi_t.cols() > phi_t.rows()) return 0.0;
  const Vector s = singular_values(phi_t);
  return s(s.size() - 1);
}

bool cone_injectivity(const AffineOperator& op, const std::vector<RankOneModel>& models, double rel_tol) {
  require_models(op, models);
  Matrix cols(op.codomain_dim(), static_cast<Eigen::Index>(models.size()));
  for (std::size_t i = 0; i < models.size(); ++i) {
    BlockList f = op.zero_blocks();
    f[i] = models[i].direction();
    cols.col(static_cast<Eigen::Index>(i)) = op.apply(f);
  }
  if (cols.rows() < cols.cols()) return false;
  const Vector s = singular_values(cols);
  if (s.size() == 0 || !(s(0) > 0.0)) return false;
  return s(s.size() - 1) > rel_tol * s(0);
}

RobustnessBounds robustness_bounds(const BlockList& f_delta, const std::vector<RankOneModel>& models,
                                   const BlockList& h, const Vector& p, double c, double delta,
                                   const AffineOperator& op, double slack) {
  require_models(op, models);
  if (f_delta.size() != models.size() || h.size() != models.size())
    throw InvalidArgument("robustness_bounds: block count mismatch");
  if (!(delta >= 0.0)) throw InvalidArgument("robustness_bounds: delta must be nonnegative");
  if (delta > 0.0 && !(c > 0.0)) throw InvalidArgument("robustness_bounds: c must be positive");
  RobustnessBounds b;
  BlockList f_ref, diff;
  for (std::size_t i = 0; i < models.size(); ++i) {
    f_ref.push_back(models[i].matrix());
    diff.push_back(f_delta[i] - f_ref.back());
  }
  b.p_norm = p.norm();
  b.bregman = bregman_divergence(f_delta, f_ref, h);
  b.prediction = op.apply(diff).norm();
  for (std::size_t i = 0; i < models.size(); ++i) {
    b.projection += project_tangent_complement(diff[i], models[i]).norm();
    b.max_w_norm = std::max(b.max_w_norm, operator_norm(project_tangent_complement(h[i], models[i])));
  }
  if (delta > 0.0) {
    const double k = 1.0 + c * b.p_norm;
    b.bregman_bound = k * k * delta / (2.0 * c);
    b.prediction_bound = 2.0 * k * delta;
  }
  b.projection_bound = b.max_w_norm < 1.0 ? std::max(b.bregman, 0.0) / (1.0 - b.max_w_norm)
                                          : std::numeric_limits<double>::infinity();
  b.bregman_ok = b.bregman <= b.bregman_bound + slack;
  b.prediction_ok = b.prediction <= b.prediction_bound + slack;
  b.projection_ok = b.projection <= b.projection_bound + slack;
  return b;
}

}  // namespace liftrec
