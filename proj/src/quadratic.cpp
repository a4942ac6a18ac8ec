#include "liftrec/quadratic.hpp"

#include <cmath>
#include <random>

#include "liftrec/lowrank.hpp"

namespace liftrec {

Matrix lift(const Vector& x) { return x * x.transpose(); }

QuadraticInstance make_quadratic_instance(std::vector<Matrix> v, std::optional<Vector> x_true,
                                          std::optional<Vector> z) {
  if (v.empty()) throw InvalidArgument("quadratic instance: no measurements");
  QuadraticInstance inst;
  inst.n = static_cast<int>(v.front().rows());
  for (const auto& m : v) {
    if (m.rows() != inst.n || m.cols() != inst.n) throw InvalidArgument("quadratic instance: size mismatch");
    if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm()))
      throw InvalidArgument("quadratic instance: V_k must be symmetric");
  }
  inst.V = std::move(v);
  if (x_true) {
    if (x_true->size() != inst.n) throw InvalidArgument("quadratic instance: x_true size mismatch");
    inst.z.resize(static_cast<Eigen::Index>(inst.V.size()));
    for (std::size_t k = 0; k < inst.V.size(); ++k)
      inst.z(static_cast<Eigen::Index>(k)) = x_true->dot(inst.V[k] * *x_true);
    inst.x_true = std::move(x_true);
  }
  if (z) {
    if (z->size() != static_cast<Eigen::Index>(inst.V.size()))
      throw InvalidArgument("quadratic instance: measurement count mismatch");
    inst.z = *z;
  }
  if (inst.z.size() == 0) throw InvalidArgument("quadratic instance: neither z nor x_true given");
  return inst;
}

QuadraticInstance make_phase_retrieval(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw InvalidArgument("make_phase_retrieval: n and m must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  auto draw = [&] {
    Vector v(n);
    for (int k = 0; k < n; ++k) v(k) = gauss(rng);
    return v;
  };
  Vector x = draw();
  while (x.norm() == 0.0) x = draw();
  x.normalize();
  std::vector<Vector> sensing;
  std::vector<Matrix> v;
  for (int k = 0; k < m; ++k) {
    sensing.push_back(draw());
    v.push_back(sensing.back() * sensing.back().transpose());
  }
  QuadraticInstance inst = make_quadratic_instance(std::move(v), x);
  inst.sensing = std::move(sensing);
  return inst;
}

AffineOperator lifted_operator(const QuadraticInstance& inst) {
  const Eigen::Index n = inst.n;
  Matrix a(static_cast<Eigen::Index>(inst.V.size()), n * n);
  for (std::size_t k = 0; k < inst.V.size(); ++k)
    a.row(static_cast<Eigen::Index>(k)) = Eigen::Map<const Vector>(inst.V[k].data(), n * n).transpose();
  return AffineOperator::from_dense({{n, n}}, std::move(a));
}

PhaseLiftResult recover_phaselift(const QuadraticInstance& inst, PsdMode mode, double lambda, const Vector* z_override,
                                  const SolverOptions& opts) {
  const Vector& z = z_override ? *z_override : inst.z;
  PsdSolution sol = solve_psd_trace_min(inst.V, z, mode, lambda, opts);
  PhaseLiftResult r;
  r.X = std::move(sol.X);
  r.report = sol.report;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(r.X);
  const Vector lam = eig.eigenvalues();
  const Eigen::Index n = lam.size();
  const double top = std::max(lam(n - 1), 0.0);
  r.sigma_ratio = top > 0.0 && n > 1 ? std::abs(lam(n - 2)) / top : 0.0;
  Vector e = eig.eigenvectors().col(n - 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(e(k)) > 1e-12) {
      if (e(k) < 0.0) e = -e;
      break;
    }
  }
  r.x_hat = std::sqrt(top) * e;
  return r;
}

double sign_aligned_error(const Vector& x_hat, const Vector& x) {
  return std::min((x_hat - x).norm(), (x_hat + x).norm());
}

CertificateReport phaselift_certificate(const QuadraticInstance& inst, double margin) {
  if (!inst.x_true) throw InvalidArgument("phaselift_certificate: instance has no ground truth");
  const Vector& x = *inst.x_true;
  const double s = x.squaredNorm();
  const RankOneModel model(s, x / std::sqrt(s), x / std::sqrt(s));
  return precertificate(lifted_operator(inst), {model}, margin, 1e-8, TangentKind::symmetric);
}

RobustnessSweep phaselift_robustness(const QuadraticInstance& inst, const std::vector<double>& deltas, double c,
                                     std::uint64_t seed, const SolverOptions& opts) {
  if (!inst.x_true) throw InvalidArgument("phaselift_robustness: instance has no ground truth");
  RobustnessSweep sweep;
  sweep.deltas = deltas;
  try {
    sweep.ndsc = phaselift_certificate(inst).ndsc_pass;
  } catch (const DegenerateCertificate&) {
    sweep.ndsc = false;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vector dir(inst.z.size());
  for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = gauss(rng);
  dir.normalize();
  const Matrix truth = lift(*inst.x_true);
  for (double delta : deltas) {
    const Vector zd = inst.z + delta * dir;
    const PhaseLiftResult r = recover_phaselift(inst, PsdMode::regularized, c * delta, &zd, opts);
    sweep.errors.push_back((r.X - truth).norm());
  }
  sweep.slope = loglog_slope(sweep.deltas, sweep.errors);
  return sweep;
}

}  // namespace liftrec
