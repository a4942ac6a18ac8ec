#include "liftrec/lowrank.hpp"

#include <cmath>
#include <sstream>

namespace liftrec {

namespace {

using Svd = Eigen::BDCSVD<Matrix>;

Svd thin_svd(const Matrix& m) {
  if (!m.allFinite()) throw NumericFailure("svd: non-finite matrix entries");
  Svd svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericFailure("svd: did not converge");
  return svd;
}

void require_shape(const Matrix& m, const RankOneModel& model, const char* who) {
  if (m.rows() != model.rows() || m.cols() != model.cols()) {
    std::ostringstream msg;
    msg << who << ": matrix is " << m.rows() << "x" << m.cols() << ", model is " << model.rows()
        << "x" << model.cols();
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

RankOneModel::RankOneModel(double s, Vector uu, Vector vv) : sigma(s), u(std::move(uu)), v(std::move(vv)) {
  if (!(sigma > 0.0)) throw InvalidArgument("RankOneModel: sigma must be positive");
  if (std::abs(u.norm() - 1.0) > 1e-12 || std::abs(v.norm() - 1.0) > 1e-12)
    throw InvalidArgument("RankOneModel: u and v must be unit vectors");
}

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  if (!m.allFinite()) throw NumericFailure("singular_values: non-finite matrix entries");
  Svd svd(m);
  if (svd.info() != Eigen::Success) throw NumericFailure("singular_values: svd did not converge");
  return svd.singularValues();
}

double nuclear_norm(const Matrix& m) { return singular_values(m).sum(); }

double operator_norm(const Matrix& m) {
  const Vector s = singular_values(m);
  return s.size() ? s(0) : 0.0;
}

double nuclear_norm(const BlockList& blocks) {
  double s = 0.0;
  for (const auto& b : blocks) s += nuclear_norm(b);
  return s;
}

Matrix svt_prox(const Matrix& m, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("svt_prox: tau must be positive");
  const Svd svd = thin_svd(m);
  const Vector shrunk = (svd.singularValues().array() - tau).max(0.0).matrix();
  Eigen::Index r = 0;
  while (r < shrunk.size() && shrunk(r) > 0.0) ++r;
  if (r == 0) return Matrix::Zero(m.rows(), m.cols());
  return svd.matrixU().leftCols(r) * shrunk.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
}

Matrix project_tangent(const Matrix& m, const RankOneModel& model) {
  require_shape(m, model, "project_tangent");
  const Vector& u = model.u;
  const Vector& v = model.v;
  const Vector mv = m * v;                  // M v
  const Vector mtu = m.transpose() * u;     // Mᵀ u
  const double umv = u.dot(mv);
  return u * mtu.transpose() + mv * v.transpose() - umv * u * v.transpose();
}

Matrix project_tangent_complement(const Matrix& m, const RankOneModel& model) {
  require_shape(m, model, "project_tangent_complement");
  const Vector& u = model.u;
  const Vector& v = model.v;
  Matrix left = m - u * (u.transpose() * m);
  return left - (left * v) * v.transpose();
}

Matrix orthogonal_complement(const Vector& u) {
  const Eigen::Index n = u.size();
  if (n <= 1) return Matrix(n, 0);
  Eigen::HouseholderQR<Matrix> qr(u);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - 1);
}

SubdiffCertificate decompose_certificate(const Matrix& h, const RankOneModel& model) {
  require_shape(h, model, "decompose_certificate");
  SubdiffCertificate c;
  c.H = h;
  c.W = h - model.direction();
  c.w_norm = operator_norm(project_tangent_complement(h, model));
  return c;
}

SubdiffReport subdiff_check(const Matrix& h, const RankOneModel& model, SubdiffForm form, bool strict,
                            const SubdiffTolerances& tol) {
  require_shape(h, model, "subdiff_check");
  const Vector& u = model.u;
  const Vector& v = model.v;
  SubdiffReport r;
  switch (form) {
    case SubdiffForm::norm_and_pairing: {
      const Vector s = singular_values(h);
      r.equality_residual = std::abs(u.dot(h * v) - 1.0);
      const double top = s.size() ? s(0) : 0.0;
      r.bound_value = top;
      bool ok = r.equality_residual <= tol.equality && top <= 1.0 + tol.inequality;
      if (strict) {
        // the top singular value is the pairing direction; the rest is the remainder
        const double second = s.size() > 1 ? s(1) : 0.0;
        r.bound_value = second;
        ok = ok && second < 1.0 - tol.margin;
      }
      r.holds = ok;
      r.detail = "norm/pairing";
      break;
    }
    case SubdiffForm::tangent_projection: {
      r.equality_residual = (project_tangent(h, model) - model.direction()).norm();
      r.bound_value = operator_norm(project_tangent_complement(h, model));
      break;
    }
    case SubdiffForm::explicit_remainder: {
      const Matrix w = h - model.direction();
      r.equality_residual = std::max((w.transpose() * u).norm(), (w * v).norm());
      r.bound_value = operator_norm(w);
      break;
    }
    case SubdiffForm::bilinear_restriction: {
      r.equality_residual = std::max((h.transpose() * u - v).norm(), (h * v - u).norm());
      const Matrix restricted = orthogonal_complement(u).transpose() * h * orthogonal_complement(v);
      r.bound_value = restricted.size() ? operator_norm(restricted) : 0.0;
      break;
    }
  }
  if (form != SubdiffForm::norm_and_pairing) {
    const bool bound_ok = strict ? r.bound_value < 1.0 - tol.margin : r.bound_value <= 1.0 + tol.inequality;
    r.holds = r.equality_residual <= tol.equality && bound_ok;
  }
  return r;
}

double bregman_divergence(const Matrix& f, const Matrix& f_ref, const Matrix& h) {
  return nuclear_norm(f) - nuclear_norm(f_ref) - (h.array() * (f - f_ref).array()).sum();
}

double bregman_divergence(const BlockList& f, const BlockList& f_ref, const BlockList& h) {
  if (f.size() != f_ref.size() || f.size() != h.size())
    throw InvalidArgument("bregman_divergence: block count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += bregman_divergence(f[i], f_ref[i], h[i]);
  return s;
}

RankOneModel leading_rank_one(const Matrix& m) {
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0)
    throw DegenerateInput("leading_rank_one: zero matrix has no leading direction");
  const Svd svd = thin_svd(m);
  Vector u = svd.matrixU().col(0);
  Vector v = svd.matrixV().col(0);
  const double cutoff = 1e-12 * u.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    if (std::abs(u(k)) > cutoff) {
      if (u(k) < 0.0) {
        u = -u;
        v = -v;
      }
      break;
    }
  }
  u.normalize();
  v.normalize();
  return RankOneModel(svd.singularValues()(0), std::move(u), std::move(v));
}

int numerical_rank(const Matrix& m, double rel_tol) {
  const Vector s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > rel_tol * s(0)) ++r;
  return r;
}

}  // namespace liftrec
