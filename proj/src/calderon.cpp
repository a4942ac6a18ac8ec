#include "liftrec/calderon.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "liftrec/lowrank.hpp"

namespace liftrec {

namespace {

constexpr double kTwoPi = 6.283185307179586;

Vector boundary_values(const Grid2D& grid, const Vector& full) {
  Vector out(grid.boundary_index.size());
  for (std::size_t k = 0; k < grid.boundary_index.size(); ++k) out(k) = full(grid.boundary_index[k]);
  return out;
}

Matrix boundary_rows(const Grid2D& grid, const Matrix& full) {
  Matrix out(grid.boundary_index.size(), full.cols());
  for (std::size_t k = 0; k < grid.boundary_index.size(); ++k) out.row(k) = full.row(grid.boundary_index[k]);
  return out;
}

double hat(double x, double center, double width) { return std::max(0.0, 1.0 - std::abs(x - center) / width); }

}  // namespace

BasisW build_hat_basis(const Grid2D& grid, int m) {
  const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
  if (m < 4 || k * k != m) throw InvalidArgument("build_hat_basis: m must be a perfect square >= 4");
  const double wx = (grid.bx - grid.ax) / (k - 1), wy = (grid.by - grid.ay) / (k - 1);
  Matrix raw(grid.size(), m);
  for (int node = 0; node < grid.size(); ++node)
    for (int b = 0; b < k; ++b)
      for (int a = 0; a < k; ++a)
        raw(node, a + k * b) =
            hat(grid.node_x(node), grid.ax + a * wx, wx) * hat(grid.node_y(node), grid.ay + b * wy, wy);
  const Matrix gram = raw.transpose() * grid.area_weights.asDiagonal() * raw;
  const Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericFailure("build_hat_basis: singular Gram matrix");
  BasisW w;
  w.m = m;
  w.omega = llt.matrixL().solve(raw.transpose()).transpose();
  w.integrals = w.omega.transpose() * grid.area_weights;
  return w;
}

Vector project_onto_w(const Grid2D& grid, const BasisW& w, const Vector& values) {
  if (values.size() != grid.size()) throw InvalidArgument("project_onto_w: size mismatch");
  return w.omega.transpose() * grid.area_weights.cwiseProduct(values);
}

BoundaryBasis build_trig_boundary_basis(const Grid2D& grid, int N) {
  const auto nb = static_cast<int>(grid.boundary_index.size());
  if (N < 1 || N > nb) throw InvalidArgument("build_trig_boundary_basis: N must lie in [1, boundary nodes]");
  const double per = grid.perimeter();
  Matrix raw(nb, N);
  for (int j = 0; j < N; ++j) {
    const int freq = (j + 1) / 2;
    for (int b = 0; b < nb; ++b) {
      const double t = kTwoPi * freq * grid.boundary_arclength(b) / per;
      raw(b, j) = j == 0 ? 1.0 : (j % 2 == 1 ? std::cos(t) : std::sin(t));
    }
  }
  const Vector sb = grid.boundary_weights.cwiseSqrt();
  const Matrix weighted = sb.asDiagonal() * raw;
  const Eigen::HouseholderQR<Matrix> qr(weighted);
  Matrix q = qr.householderQ() * Matrix::Identity(nb, N);
  const Matrix r = q.transpose() * weighted;
  for (int j = 0; j < N; ++j) {
    if (std::abs(r(j, j)) < 1e-10 * weighted.col(j).norm())
      throw NumericFailure("build_trig_boundary_basis: boundary modes are linearly dependent");
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  BoundaryBasis basis;
  basis.N = N;
  basis.f = sb.cwiseInverse().asDiagonal() * q;
  basis.f1_floor = basis.f.col(0).cwiseAbs().minCoeff();
  return basis;
}

Matrix p1_stiffness(const Grid2D& grid) {
  Matrix a = Matrix::Zero(grid.size(), grid.size());
  auto add = [&](int i0, int i1, int i2) {
    const int idx[3] = {i0, i1, i2};
    double x[3], y[3];
    for (int t = 0; t < 3; ++t) {
      x[t] = grid.node_x(idx[t]);
      y[t] = grid.node_y(idx[t]);
    }
    const double det = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]);
    const double area = 0.5 * std::abs(det);
    const double bx[3] = {(y[1] - y[2]) / det, (y[2] - y[0]) / det, (y[0] - y[1]) / det};
    const double by[3] = {(x[2] - x[1]) / det, (x[0] - x[2]) / det, (x[1] - x[0]) / det};
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < 3; ++t) a(idx[s], idx[t]) += area * (bx[s] * bx[t] + by[s] * by[t]);
  };
  for (int j = 0; j + 1 < grid.ny; ++j)
    for (int i = 0; i + 1 < grid.nx; ++i) {
      const int p00 = grid.index(i, j), p10 = grid.index(i + 1, j);
      const int p01 = grid.index(i, j + 1), p11 = grid.index(i + 1, j + 1);
      add(p00, p10, p11);
      add(p00, p11, p01);
    }
  return a;
}

Schrodinger2D::Schrodinger2D(const Grid2D& grid, Vector q) : grid_(grid), q_(std::move(q)) {
  if (q_.size() != grid_.size()) throw InvalidArgument("Schrodinger2D: potential size mismatch");
  if (grid_.nx < 3 || grid_.ny < 3) throw InvalidArgument("Schrodinger2D: grid too small");
  Matrix k = -interior_laplacian(grid_);
  for (std::size_t t = 0; t < grid_.interior_index.size(); ++t) k(t, t) += q_(grid_.interior_index[t]);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(k, Eigen::EigenvaluesOnly);
  const Vector ev = eig.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  if (ev.cwiseAbs().minCoeff() <= 1e-10 * scale)
    throw EigenvalueHit("Schrodinger2D: zero is a discrete Dirichlet eigenvalue of -Δ + q");
  lu_.compute(k);
  stiffness_ = p1_stiffness(grid_);
}

Vector Schrodinger2D::solve(const Vector& f_boundary, const Vector& source) const {
  if (f_boundary.size() != static_cast<Eigen::Index>(grid_.boundary_index.size()))
    throw InvalidArgument("Schrodinger2D::solve: boundary data size mismatch");
  if (source.size() != 0 && source.size() != grid_.size())
    throw InvalidArgument("Schrodinger2D::solve: source size mismatch");
  Vector u = Vector::Zero(grid_.size());
  for (std::size_t k = 0; k < grid_.boundary_index.size(); ++k) u(grid_.boundary_index[k]) = f_boundary(k);
  const double sx = 1.0 / (grid_.hx * grid_.hx), sy = 1.0 / (grid_.hy * grid_.hy);
  const auto ni = static_cast<Eigen::Index>(grid_.interior_index.size());
  Vector rhs(ni);
  for (Eigen::Index t = 0; t < ni; ++t) {
    const int idx = grid_.interior_index[t];
    const int i = idx % grid_.nx, j = idx / grid_.nx;
    double r = source.size() ? source(idx) : 0.0;
    if (i == 1) r += sx * u(idx - 1);
    if (i == grid_.nx - 2) r += sx * u(idx + 1);
    if (j == 1) r += sy * u(idx - grid_.nx);
    if (j == grid_.ny - 2) r += sy * u(idx + grid_.nx);
    rhs(t) = r;
  }
  const Vector inner = lu_.solve(rhs);
  for (Eigen::Index t = 0; t < ni; ++t) u(grid_.interior_index[t]) = inner(t);
  return u;
}

Vector Schrodinger2D::flux(const Vector& u, const Vector& laplacian, FluxScheme scheme) const {
  const auto nb = static_cast<Eigen::Index>(grid_.boundary_index.size());
  Vector out(nb);
  if (scheme == FluxScheme::green) {
    for (Eigen::Index k = 0; k < nb; ++k) {
      const int b = grid_.boundary_index[k];
      out(k) = (stiffness_.row(b).dot(u) + grid_.area_weights(b) * laplacian(b)) / grid_.boundary_weights(k);
    }
    return out;
  }
  auto outward = [&](int idx, int di, int dj, double h) {
    // di, dj point outward; differences taken inward
    const int i = idx % grid_.nx, j = idx / grid_.nx;
    const int i1 = grid_.index(i - di, j - dj), i2 = grid_.index(i - 2 * di, j - 2 * dj);
    return (3.0 * u(idx) - 4.0 * u(i1) + u(i2)) / (2.0 * h);
  };
  for (Eigen::Index k = 0; k < nb; ++k) {
    const int b = grid_.boundary_index[k];
    const double nx = grid_.boundary_normals(k, 0), ny = grid_.boundary_normals(k, 1);
    const int di = nx > 0.0 ? 1 : (nx < 0.0 ? -1 : 0);
    const int dj = ny > 0.0 ? 1 : (ny < 0.0 ? -1 : 0);
    if (di != 0 && dj != 0)
      out(k) = 0.5 * (outward(b, di, 0, grid_.hx) + outward(b, 0, dj, grid_.hy));
    else if (di != 0)
      out(k) = outward(b, di, 0, grid_.hx);
    else
      out(k) = outward(b, 0, dj, grid_.hy);
  }
  return out;
}

Vector Schrodinger2D::dtn(const Vector& f_boundary, FluxScheme scheme) const {
  const Vector u = solve(f_boundary);
  return flux(u, q_.cwiseProduct(u), scheme);
}

Vector solve_schrodinger_2d(const Grid2D& grid, const Vector& q, const Vector& f_boundary) {
  return Schrodinger2D(grid, q).solve(f_boundary);
}

Vector dtn_flux(const Grid2D& grid, const Vector& q, const Vector& f_boundary, FluxScheme scheme) {
  return Schrodinger2D(grid, q).dtn(f_boundary, scheme);
}

BlockList CalderonProblem::truth_whitened() const {
  BlockList out;
  for (int i = 0; i < N(); ++i) out.push_back((h1->whitener * states.col(i)) * q_coeffs.transpose());
  return out;
}

std::vector<RankOneModel> CalderonProblem::truth_models() const {
  std::vector<RankOneModel> out;
  const double qn = q_coeffs.norm();
  for (int i = 0; i < N(); ++i) {
    const Vector uw = h1->whitener * states.col(i);
    out.emplace_back(uw.norm() * qn, uw.normalized(), q_coeffs / qn);
  }
  return out;
}

CalderonProblem build_calderon_problem(const Grid2D& grid, const BasisW& w, int N, const Vector& q_coeffs) {
  if (w.omega.rows() != grid.size()) throw InvalidArgument("build_calderon_problem: basis does not match grid");
  if (q_coeffs.size() != w.m) throw InvalidArgument("build_calderon_problem: coefficient size mismatch");
  CalderonProblem p;
  p.grid = grid;
  p.w = w;
  p.bdry = build_trig_boundary_basis(grid, N);
  p.q_coeffs = q_coeffs;
  p.q_values = w.values(q_coeffs);
  p.int_q = q_coeffs.dot(w.integrals);
  if (!(std::abs(p.int_q) > 1e-12)) throw InvalidArgument("build_calderon_problem: ∫q must be nonzero");
  p.h1 = std::make_shared<const InnerProduct>(assemble_inner_product(grid, InnerProductKind::h1));
  const Schrodinger2D sq(grid, p.q_values);
  const Schrodinger2D s0(grid, Vector::Zero(grid.size()));
  const auto nb = static_cast<Eigen::Index>(grid.boundary_index.size());
  p.states.resize(grid.size(), N);
  p.harmonic.resize(grid.size(), N);
  p.fluxes.resize(nb, N);
  p.harmonic_fluxes.resize(nb, N);
  for (int i = 0; i < N; ++i) {
    const Vector f = p.bdry.f.col(i);
    p.states.col(i) = sq.solve(f);
    p.harmonic.col(i) = s0.solve(f);
    p.fluxes.col(i) = sq.flux(p.states.col(i), p.q_values.cwiseProduct(p.states.col(i)));
    p.harmonic_fluxes.col(i) = s0.flux(p.harmonic.col(i), Vector::Zero(grid.size()));
  }
  return p;
}

Vector CalderonMeasurements::stacked() const {
  Vector z(z1.size() + z2.size() + z3.size());
  z << z1, z2, z3;
  return z;
}

Vector CalderonMeasurements::constraints() const {
  Vector z(z2.size() + z3.size());
  z << z2, z3;
  return z;
}

CalderonMeasurements calderon_measurements(const CalderonProblem& problem, std::optional<NoiseSpec> noise) {
  const Grid2D& g = problem.grid;
  const auto nb = static_cast<Eigen::Index>(g.boundary_index.size());
  const Eigen::Index n = g.size();
  const int N = problem.N();
  const Vector sb = g.boundary_weights.cwiseSqrt();
  CalderonMeasurements m;
  m.z1.resize(N * nb);
  m.z2.resize(N * n);
  for (int i = 0; i < N; ++i) {
    m.z1.segment(i * nb, nb) = sb.cwiseProduct(problem.fluxes.col(i) - problem.harmonic_fluxes.col(i));
    m.z2.segment(i * n, n) = problem.int_q * (problem.h1->whitener * problem.harmonic.col(i));
  }
  m.z3 = Vector::Zero(problem.pairs() * nb * problem.w.m);
  if (noise && noise->delta > 0.0) {
    std::mt19937_64 rng(noise->seed);
    std::normal_distribution<double> gauss;
    Vector e(m.z1.size());
    for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = gauss(rng);
    e *= noise->delta / e.norm();
    m.z1 += e;
    m.delta = noise->delta;
    m.seed = noise->seed;
    m.z1_error = e.norm();
  }
  return m;
}

namespace {

struct OperatorData {
  int N = 0, m = 0;
  Eigen::Index n = 0, nb = 0;
  double int_q = 0.0;
  Matrix r1;     // H¹ whitener
  Matrix omega;  // n x m
  Vector iota;   // ∫ω_k
  Matrix pmat;   // d ↦ v_F on the full grid
  Matrix q1;     // d ↦ √|b| ∂_ν v_F
  std::vector<int> bidx;
  Matrix fb;     // √|b| f_i on boundary nodes, nb x N

  Matrix values(const Matrix& fw) const { return r1.triangularView<Eigen::Upper>().solve(fw); }
  Matrix whiten_adjoint(const Matrix& g) const { return r1.transpose().triangularView<Eigen::Lower>().solve(g); }
  Vector diag(const Matrix& c) const { return c.cwiseProduct(omega).rowwise().sum(); }
};

std::shared_ptr<const OperatorData> operator_data(const CalderonProblem& p) {
  auto d = std::make_shared<OperatorData>();
  const Grid2D& g = p.grid;
  d->N = p.N();
  d->m = p.w.m;
  d->n = g.size();
  d->nb = static_cast<Eigen::Index>(g.boundary_index.size());
  d->int_q = p.int_q;
  d->r1 = p.h1->whitener;
  d->omega = p.w.omega;
  d->iota = p.w.integrals;
  d->bidx = g.boundary_index;
  const Matrix lap_inv = interior_laplacian(g).inverse();
  const auto ni = static_cast<Eigen::Index>(g.interior_index.size());
  d->pmat = Matrix::Zero(d->n, d->n);
  for (Eigen::Index s = 0; s < ni; ++s)
    for (Eigen::Index t = 0; t < ni; ++t) d->pmat(g.interior_index[s], g.interior_index[t]) = lap_inv(s, t);
  const Matrix a = p1_stiffness(g);
  d->q1 = boundary_rows(g, a) * d->pmat;
  for (Eigen::Index k = 0; k < d->nb; ++k) {
    d->q1(k, d->bidx[k]) += g.area_weights(d->bidx[k]);
    d->q1.row(k) /= std::sqrt(g.boundary_weights(k));
  }
  d->fb = g.boundary_weights.cwiseSqrt().asDiagonal() * p.bdry.f;
  return d;
}

std::vector<BlockShape> block_shapes(const OperatorData& d) {
  return std::vector<BlockShape>(d.N, BlockShape{d.n, d.m});
}

AffineOperator make_phi1(std::shared_ptr<const OperatorData> d) {
  auto apply = [d](const BlockList& f) {
    Vector out(d->N * d->nb);
    for (int i = 0; i < d->N; ++i) out.segment(i * d->nb, d->nb) = d->q1 * d->diag(d->values(f[i]));
    return out;
  };
  auto adjoint = [d](const Vector& p) {
    BlockList out;
    for (int i = 0; i < d->N; ++i) {
      const Vector gd = d->q1.transpose() * p.segment(i * d->nb, d->nb);
      out.push_back(d->whiten_adjoint(gd.asDiagonal() * d->omega));
    }
    return out;
  };
  return AffineOperator(block_shapes(*d), d->N * d->nb, apply, adjoint);
}

AffineOperator make_phi2(std::shared_ptr<const OperatorData> d) {
  auto apply = [d](const BlockList& f) {
    Vector out(d->N * d->n);
    for (int i = 0; i < d->N; ++i) {
      const Matrix c = d->values(f[i]);
      out.segment(i * d->n, d->n) = d->r1 * (c * d->iota - d->int_q * (d->pmat * d->diag(c)));
    }
    return out;
  };
  auto adjoint = [d](const Vector& p) {
    BlockList out;
    for (int i = 0; i < d->N; ++i) {
      const Vector r = d->r1.transpose() * p.segment(i * d->n, d->n);
      const Vector gd = -d->int_q * (d->pmat.transpose() * r);
      Matrix g = gd.asDiagonal() * d->omega;
      g += r * d->iota.transpose();
      out.push_back(d->whiten_adjoint(g));
    }
    return out;
  };
  return AffineOperator(block_shapes(*d), d->N * d->n, apply, adjoint);
}

AffineOperator make_phi3(std::shared_ptr<const OperatorData> d) {
  const Eigen::Index chunk = d->nb * d->m;
  const Eigen::Index pairs = d->N * (d->N - 1) / 2;
  auto apply = [d, chunk](const BlockList& f) {
    std::vector<Matrix> cb;
    for (int i = 0; i < d->N; ++i) {
      const Matrix c = d->values(f[i]);
      Matrix rows(d->nb, d->m);
      for (Eigen::Index k = 0; k < d->nb; ++k) rows.row(k) = c.row(d->bidx[k]);
      cb.push_back(std::move(rows));
    }
    Vector out(d->N * (d->N - 1) / 2 * chunk);
    Eigen::Index at = 0;
    for (int i = 0; i < d->N; ++i)
      for (int j = i + 1; j < d->N; ++j) {
        const Matrix blk = d->fb.col(j).asDiagonal() * cb[i] - d->fb.col(i).asDiagonal() * cb[j];
        out.segment(at, chunk) = Eigen::Map<const Vector>(blk.data(), chunk);
        at += chunk;
      }
    return out;
  };
  auto adjoint = [d, chunk](const Vector& p) {
    std::vector<Matrix> g(d->N, Matrix::Zero(d->n, d->m));
    Eigen::Index at = 0;
    for (int i = 0; i < d->N; ++i)
      for (int j = i + 1; j < d->N; ++j) {
        const Eigen::Map<const Matrix> blk(p.data() + at, d->nb, d->m);
        at += chunk;
        for (Eigen::Index k = 0; k < d->nb; ++k) {
          g[i].row(d->bidx[k]) += d->fb(k, j) * blk.row(k);
          g[j].row(d->bidx[k]) -= d->fb(k, i) * blk.row(k);
        }
      }
    BlockList out;
    for (int i = 0; i < d->N; ++i) out.push_back(d->whiten_adjoint(g[i]));
    return out;
  };
  return AffineOperator(block_shapes(*d), pairs * chunk, apply, adjoint);
}

}  // namespace

CalderonOperators assemble_calderon_operator(const CalderonProblem& problem) {
  const auto d = operator_data(problem);
  AffineOperator phi1 = make_phi1(d);
  AffineOperator phi2 = make_phi2(d);
  std::optional<AffineOperator> phi3;
  if (problem.N() > 1) phi3 = make_phi3(d);
  AffineOperator constraints = phi3 ? stack_operators({phi2, *phi3}) : phi2;
  AffineOperator full = phi3 ? stack_operators({phi1, phi2, *phi3}) : stack_operators({phi1, phi2});
  return {std::move(phi1), std::move(phi2), std::move(phi3), std::move(constraints), std::move(full)};
}

Vector extract_q_calderon(const Matrix& c_values, const Vector& f_boundary, const Grid2D& grid) {
  const Vector& bw = grid.boundary_weights;
  if (f_boundary.size() != bw.size()) throw InvalidArgument("extract_q_calderon: boundary data size mismatch");
  if (c_values.rows() != grid.size()) throw InvalidArgument("extract_q_calderon: coefficient rows mismatch");
  const double norm2 = bw.dot(f_boundary.cwiseAbs2());
  if (!(norm2 > 0.0)) throw InvalidArgument("extract_q_calderon: boundary datum vanishes");
  const Matrix rows = boundary_rows(grid, c_values);
  return rows.transpose() * bw.cwiseProduct(f_boundary) / norm2;
}

CalderonRecovery recover_calderon(const CalderonProblem& problem, const CalderonMeasurements& meas, CalderonMode mode,
                                  double c, const SolverOptions& opts) {
  const CalderonOperators ops = assemble_calderon_operator(problem);
  if (meas.stacked().size() != ops.full.codomain_dim())
    throw InvalidArgument("recover_calderon: measurements do not match the problem");
  CalderonRecovery r;
  BlockSolution sol;
  if (mode == CalderonMode::exact) {
    if (meas.delta != 0.0) throw InvalidArgument("recover_calderon: exact mode requires noiseless measurements");
    sol = solve_equality_nnm(ops.full, meas.stacked(), opts);
  } else {
    if (!(meas.delta > 0.0)) throw InvalidArgument("recover_calderon: noisy mode requires delta > 0");
    if (!(c > 0.0)) throw InvalidArgument("recover_calderon: c must be positive");
    r.lambda = c * meas.delta;
    sol = solve_constrained_fit_nnm(ops.phi1, meas.z1, ops.constraints, meas.constraints(), r.lambda, opts);
  }
  r.blocks = std::move(sol.blocks);
  r.dual = std::move(sol.dual);
  r.report = sol.report;
  r.q_coeffs = Vector::Zero(problem.w.m);
  for (int i = 0; i < problem.N(); ++i) {
    const Matrix cv = problem.h1->whitener.triangularView<Eigen::Upper>().solve(r.blocks[i]);
    r.per_block.push_back(extract_q_calderon(cv, problem.bdry.f.col(i), problem.grid));
    r.q_coeffs += r.per_block.back() / problem.N();
    const Vector s = singular_values(r.blocks[i]);
    if (s(0) > 0.0 && s.size() > 1) r.max_sigma_ratio = std::max(r.max_sigma_ratio, s(1) / s(0));
  }
  r.rel_error = (r.q_coeffs - problem.q_coeffs).norm() / problem.q_coeffs.norm();
  r.constraint_residual = (ops.constraints.apply(r.blocks) - meas.constraints()).norm();
  return r;
}

namespace {

Vector frechet_flux(const Schrodinger2D& s, const Vector& h, const Vector& f) {
  const Vector u = s.solve(f);
  const Vector hu = h.cwiseProduct(u);
  const Vector v = s.solve(Vector::Zero(f.size()), -hu);
  return s.flux(v, s.q().cwiseProduct(v) + hu);
}

}  // namespace

Matrix frechet_derivative(const CalderonProblem& problem, const Vector& q, const Vector& h) {
  if (h.size() != problem.grid.size()) throw InvalidArgument("frechet_derivative: direction size mismatch");
  const Schrodinger2D s(problem.grid, q);
  Matrix out(problem.grid.boundary_index.size(), problem.N());
  for (int i = 0; i < problem.N(); ++i) out.col(i) = frechet_flux(s, h, problem.bdry.f.col(i));
  return out;
}

Matrix frechet_matrix(const Grid2D& grid, const Vector& q, const Vector& h) {
  if (h.size() != grid.size()) throw InvalidArgument("frechet_matrix: direction size mismatch");
  const Schrodinger2D s(grid, q);
  const auto nb = static_cast<Eigen::Index>(grid.boundary_index.size());
  Matrix out(nb, nb);
  for (Eigen::Index k = 0; k < nb; ++k) out.col(k) = frechet_flux(s, h, Vector::Unit(nb, k));
  return out;
}

Matrix dtn_matrix(const Grid2D& grid, const Vector& q) {
  const Schrodinger2D s(grid, q);
  const auto nb = static_cast<Eigen::Index>(grid.boundary_index.size());
  Matrix out(nb, nb);
  for (Eigen::Index k = 0; k < nb; ++k) out.col(k) = s.dtn(Vector::Unit(nb, k));
  return out;
}

CompactnessProfile compactness_diagnostic(const Grid2D& grid, const Vector& q, const Vector& h) {
  const auto nb = static_cast<int>(grid.boundary_index.size());
  const Vector sb = grid.boundary_weights.cwiseSqrt();
  const Matrix mw = sb.asDiagonal() * frechet_matrix(grid, q, h) * sb.cwiseInverse().asDiagonal();
  CompactnessProfile prof;
  prof.singular_values = singular_values(mw);
  const Matrix modes = sb.asDiagonal() * build_trig_boundary_basis(grid, nb).f;
  prof.tail.resize(nb);
  for (int k = 0; k < nb; ++k) prof.tail(k) = operator_norm(mw * modes.rightCols(nb - k));
  return prof;
}

std::vector<PrecertificateRow> precertificate_study(const Grid2D& grid, const BasisW& w, const Vector& q_coeffs,
                                                    const std::vector<int>& Ns) {
  std::vector<PrecertificateRow> rows;
  for (int N : Ns) {
    const CalderonProblem p = build_calderon_problem(grid, w, N, q_coeffs);
    const CalderonOperators ops = assemble_calderon_operator(p);
    PrecertificateRow row;
    row.N = N;
    try {
      const CertificateReport cert = precertificate(ops.full, p.truth_models());
      row.max_w_norm = cert.max_w_norm();
      for (double t : cert.tangent_residual) row.max_tangent_residual = std::max(row.max_tangent_residual, t);
      row.smallest_singular_value = cert.smallest_singular_value;
      row.ndsc_pass = cert.ndsc_pass;
    } catch (const DegenerateCertificate& e) {
      row.degenerate = true;
      row.smallest_singular_value = e.smallest_singular_value;
      row.max_w_norm = std::numeric_limits<double>::infinity();
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

Vector stacked_residual(const CalderonProblem& p, const Vector& coeffs) {
  const Schrodinger2D s(p.grid, p.w.values(coeffs));
  const auto nb = static_cast<Eigen::Index>(p.grid.boundary_index.size());
  const Vector sb = p.grid.boundary_weights.cwiseSqrt();
  Vector r(p.N() * nb);
  for (int i = 0; i < p.N(); ++i)
    r.segment(i * nb, nb) = sb.cwiseProduct(s.dtn(p.bdry.f.col(i)) - p.fluxes.col(i));
  return r;
}

}  // namespace

GaussNewtonHistory gauss_newton_baseline(const CalderonProblem& problem, const Vector& q_init, int iters, double tol) {
  if (q_init.size() != problem.w.m) throw InvalidArgument("gauss_newton_baseline: coefficient size mismatch");
  GaussNewtonHistory hist;
  const auto nb = static_cast<Eigen::Index>(problem.grid.boundary_index.size());
  const Vector sb = problem.grid.boundary_weights.cwiseSqrt();
  double data_norm = 0.0;
  for (int i = 0; i < problem.N(); ++i) data_norm += sb.cwiseProduct(problem.fluxes.col(i)).squaredNorm();
  const double threshold = tol * std::max(1.0, std::sqrt(data_norm));

  Vector c = q_init;
  Vector r;
  try {
    r = stacked_residual(problem, c);
  } catch (const EigenvalueHit&) {
    hist.diverged = true;
    hist.note = "initial potential hits a Dirichlet eigenvalue";
    return hist;
  }
  hist.iterates.push_back(c);
  hist.misfit.push_back(r.norm());
  const double initial = r.norm();
  for (int it = 0; it < iters; ++it) {
    if (hist.misfit.back() <= threshold) {
      hist.converged = true;
      return hist;
    }
    const Vector q = problem.w.values(c);
    Matrix jac(problem.N() * nb, problem.w.m);
    for (int k = 0; k < problem.w.m; ++k) {
      const Matrix d = frechet_derivative(problem, q, problem.w.omega.col(k));
      for (int i = 0; i < problem.N(); ++i) jac.col(k).segment(i * nb, nb) = sb.cwiseProduct(d.col(i));
    }
    const Matrix jtj = jac.transpose() * jac;
    const double mu = 1e-12 * jtj.trace();
    const Vector step = (jtj + mu * Matrix::Identity(problem.w.m, problem.w.m)).ldlt().solve(-jac.transpose() * r);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40 && !accepted; ++ls, t *= 0.5) {
      const Vector trial = c + t * step;
      try {
        const Vector rt = stacked_residual(problem, trial);
        if (rt.norm() < hist.misfit.back()) {
          c = trial;
          r = rt;
          accepted = true;
        }
      } catch (const EigenvalueHit&) {
      }
    }
    if (!accepted) {
      hist.note = "stagnated: no decrease along the Gauss-Newton direction";
      return hist;
    }
    hist.iterates.push_back(c);
    hist.misfit.push_back(r.norm());
    if (!std::isfinite(r.norm()) || r.norm() > 1e6 * std::max(initial, 1.0)) {
      hist.diverged = true;
      hist.note = "misfit blew up";
      return hist;
    }
  }
  hist.converged = hist.misfit.back() <= threshold;
  if (!hist.converged) hist.note = "iteration budget exhausted";
  return hist;
}

}  // namespace liftrec
