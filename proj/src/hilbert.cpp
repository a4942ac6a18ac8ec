#include "liftrec/hilbert.hpp"

#include <cmath>
#include <sstream>

namespace liftrec {

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix weighted_gram(const Matrix& d, const Vector& w) {
  return d.transpose() * w.asDiagonal() * d;
}

}  // namespace

Grid1D build_grid_1d(int n, double a, double b) {
  if (n < 3) throw InvalidArgument("build_grid_1d: need at least 3 nodes");
  if (!(b > a)) throw InvalidArgument("build_grid_1d: need b > a");
  Grid1D g;
  g.n = n;
  g.a = a;
  g.b = b;
  g.h = (b - a) / (n - 1);
  g.nodes.resize(n);
  for (int j = 0; j < n; ++j) g.nodes(j) = a + j * g.h;
  g.nodes(n - 1) = b;
  g.quad_weights = Vector::Constant(n, g.h);
  g.quad_weights(0) = g.quad_weights(n - 1) = 0.5 * g.h;
  return g;
}

Grid2D build_grid_2d(int nx, int ny, double ax, double bx, double ay, double by) {
  const Grid1D gx = build_grid_1d(nx, ax, bx);
  const Grid1D gy = build_grid_1d(ny, ay, by);
  Grid2D g;
  g.nx = nx;
  g.ny = ny;
  g.ax = ax;
  g.bx = bx;
  g.ay = ay;
  g.by = by;
  g.hx = gx.h;
  g.hy = gy.h;
  g.x = gx.nodes;
  g.y = gy.nodes;
  g.area_weights.resize(nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) g.area_weights(g.index(i, j)) = gx.quad_weights(i) * gy.quad_weights(j);

  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) g.interior_index.push_back(g.index(i, j));

  struct Node {
    int idx;
    double nxv, nyv, weight;
  };
  std::vector<Node> ring;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double corner_w = 0.5 * (g.hx + g.hy);
  ring.push_back({g.index(0, 0), -inv_sqrt2, -inv_sqrt2, corner_w});
  for (int i = 1; i < nx - 1; ++i) ring.push_back({g.index(i, 0), 0.0, -1.0, g.hx});
  ring.push_back({g.index(nx - 1, 0), inv_sqrt2, -inv_sqrt2, corner_w});
  for (int j = 1; j < ny - 1; ++j) ring.push_back({g.index(nx - 1, j), 1.0, 0.0, g.hy});
  ring.push_back({g.index(nx - 1, ny - 1), inv_sqrt2, inv_sqrt2, corner_w});
  for (int i = nx - 2; i >= 1; --i) ring.push_back({g.index(i, ny - 1), 0.0, 1.0, g.hx});
  ring.push_back({g.index(0, ny - 1), -inv_sqrt2, inv_sqrt2, corner_w});
  for (int j = ny - 2; j >= 1; --j) ring.push_back({g.index(0, j), -1.0, 0.0, g.hy});

  const auto nb = static_cast<Eigen::Index>(ring.size());
  g.boundary_normals.resize(nb, 2);
  g.boundary_weights.resize(nb);
  g.boundary_arclength.resize(nb);
  double s = 0.0;
  for (Eigen::Index k = 0; k < nb; ++k) {
    const Node& nd = ring[k];
    g.boundary_index.push_back(nd.idx);
    g.boundary_normals(k, 0) = nd.nxv;
    g.boundary_normals(k, 1) = nd.nyv;
    g.boundary_weights(k) = nd.weight;
    if (k > 0) {
      const int prev = ring[k - 1].idx;
      s += std::hypot(g.node_x(nd.idx) - g.node_x(prev), g.node_y(nd.idx) - g.node_y(prev));
    }
    g.boundary_arclength(k) = s;
  }
  return g;
}

std::string_view to_string(InnerProductKind kind) {
  switch (kind) {
    case InnerProductKind::l2: return "l2";
    case InnerProductKind::h1: return "h1";
    case InnerProductKind::h2: return "h2";
    case InnerProductKind::laplacian_seminorm: return "laplacian_seminorm";
    case InnerProductKind::coefficient: return "coefficient";
  }
  return "unknown";
}

double InnerProduct::norm(const Vector& a) const { return (whitener * a).norm(); }

Vector InnerProduct::unwhiten(const Vector& a) const {
  return whitener.triangularView<Eigen::Upper>().solve(a);
}

double min_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

InnerProduct InnerProduct::from_gram(Matrix gram, InnerProductKind kind, Vector integration_weights) {
  if (gram.rows() != gram.cols() || gram.rows() == 0)
    throw InvalidArgument("InnerProduct: Gram matrix must be square and non-empty");
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "InnerProduct(" << to_string(kind) << "): Gram is not SPD, smallest eigenvalue "
        << min_eigenvalue(gram);
    throw NumericFailure(msg.str());
  }
  InnerProduct ip;
  ip.kind = kind;
  ip.whitener = llt.matrixU();
  ip.kernel = llt.solve(Matrix::Identity(gram.rows(), gram.cols()));
  ip.gram = std::move(gram);
  if (integration_weights.size() != 0 && integration_weights.size() != ip.gram.rows())
    throw InvalidArgument("InnerProduct: integration weights have the wrong length");
  ip.integration_weights = std::move(integration_weights);
  return ip;
}

DerivativeMatrices1D derivative_matrices(const Grid1D& grid) {
  const int n = grid.n;
  const double h = grid.h;
  DerivativeMatrices1D d{Matrix::Zero(n, n), Matrix::Zero(n, n)};
  for (int j = 1; j < n - 1; ++j) {
    d.first(j, j - 1) = -0.5 / h;
    d.first(j, j + 1) = 0.5 / h;
    d.second(j, j - 1) = 1.0 / (h * h);
    d.second(j, j) = -2.0 / (h * h);
    d.second(j, j + 1) = 1.0 / (h * h);
  }
  d.first(0, 0) = -1.5 / h;
  d.first(0, 1) = 2.0 / h;
  d.first(0, 2) = -0.5 / h;
  d.first(n - 1, n - 1) = 1.5 / h;
  d.first(n - 1, n - 2) = -2.0 / h;
  d.first(n - 1, n - 3) = 0.5 / h;
  if (n >= 4) {
    const double s = 1.0 / (h * h);
    d.second(0, 0) = 2.0 * s;
    d.second(0, 1) = -5.0 * s;
    d.second(0, 2) = 4.0 * s;
    d.second(0, 3) = -1.0 * s;
    d.second(n - 1, n - 1) = 2.0 * s;
    d.second(n - 1, n - 2) = -5.0 * s;
    d.second(n - 1, n - 3) = 4.0 * s;
    d.second(n - 1, n - 4) = -1.0 * s;
  } else {
    // three nodes: the only second difference available
    d.second.row(0) = d.second.row(1);
    d.second.row(2) = d.second.row(1);
  }
  return d;
}

Matrix interior_laplacian(const Grid1D& grid) {
  const int m = grid.n - 2;
  const double s = 1.0 / (grid.h * grid.h);
  Matrix lap = Matrix::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    lap(j, j) = -2.0 * s;
    if (j > 0) lap(j, j - 1) = s;
    if (j + 1 < m) lap(j, j + 1) = s;
  }
  return lap;
}

Matrix interior_laplacian(const Grid2D& grid) {
  const auto m = static_cast<Eigen::Index>(grid.interior_index.size());
  std::vector<int> position(grid.size(), -1);
  for (Eigen::Index k = 0; k < m; ++k) position[grid.interior_index[k]] = static_cast<int>(k);
  const double sx = 1.0 / (grid.hx * grid.hx);
  const double sy = 1.0 / (grid.hy * grid.hy);
  Matrix lap = Matrix::Zero(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const int idx = grid.interior_index[k];
    lap(k, k) = -2.0 * (sx + sy);
    const int nbr[4] = {idx - 1, idx + 1, idx - grid.nx, idx + grid.nx};
    const double w[4] = {sx, sx, sy, sy};
    for (int t = 0; t < 4; ++t)
      if (position[nbr[t]] >= 0) lap(k, position[nbr[t]]) = w[t];
  }
  return lap;
}

InnerProduct assemble_inner_product(const Grid1D& grid, InnerProductKind kind) {
  const Vector& w = grid.quad_weights;
  switch (kind) {
    case InnerProductKind::l2:
      return InnerProduct::from_gram(Matrix(w.asDiagonal()), kind, w);
    case InnerProductKind::h1:
    case InnerProductKind::h2: {
      const auto d = derivative_matrices(grid);
      Matrix gram = Matrix(w.asDiagonal()) + weighted_gram(d.first, w);
      if (kind == InnerProductKind::h2) gram += weighted_gram(d.second, w);
      return InnerProduct::from_gram(std::move(gram), kind, w);
    }
    case InnerProductKind::laplacian_seminorm: {
      const Vector wi = w.segment(1, grid.n - 2);
      return InnerProduct::from_gram(weighted_gram(interior_laplacian(grid), wi), kind, wi);
    }
    case InnerProductKind::coefficient:
      break;
  }
  throw InvalidArgument("assemble_inner_product: kind not supported on a 1-D grid");
}

InnerProduct assemble_inner_product(const Grid2D& grid, InnerProductKind kind) {
  const Vector& w = grid.area_weights;
  switch (kind) {
    case InnerProductKind::l2:
      return InnerProduct::from_gram(Matrix(w.asDiagonal()), kind, w);
    case InnerProductKind::h1:
    case InnerProductKind::h2: {
      const auto dx = derivative_matrices(build_grid_1d(grid.nx, grid.ax, grid.bx));
      const auto dy = derivative_matrices(build_grid_1d(grid.ny, grid.ay, grid.by));
      const Matrix ix = Matrix::Identity(grid.nx, grid.nx);
      const Matrix iy = Matrix::Identity(grid.ny, grid.ny);
      const Matrix d_x = kron(iy, dx.first);
      const Matrix d_y = kron(dy.first, ix);
      Matrix gram = Matrix(w.asDiagonal()) + weighted_gram(d_x, w) + weighted_gram(d_y, w);
      if (kind == InnerProductKind::h2) {
        gram += weighted_gram(kron(iy, dx.second), w);
        gram += weighted_gram(kron(dy.first, dx.first), w);
        gram += weighted_gram(kron(dy.second, ix), w);
      }
      return InnerProduct::from_gram(std::move(gram), kind, w);
    }
    case InnerProductKind::laplacian_seminorm: {
      Vector wi(grid.interior_index.size());
      for (std::size_t k = 0; k < grid.interior_index.size(); ++k) wi(k) = w(grid.interior_index[k]);
      return InnerProduct::from_gram(weighted_gram(interior_laplacian(grid), wi), kind, wi);
    }
    case InnerProductKind::coefficient:
      break;
  }
  throw InvalidArgument("assemble_inner_product: kind not supported on a 2-D grid");
}

InnerProduct coefficient_space(int m, Vector integration_weights) {
  if (m <= 0) throw InvalidArgument("coefficient_space: dimension must be positive");
  return InnerProduct::from_gram(Matrix::Identity(m, m), InnerProductKind::coefficient,
                                 std::move(integration_weights));
}

BivariateField::BivariateField(SpaceHandle x, SpaceHandle y, Matrix v)
    : x_space(std::move(x)), y_space(std::move(y)), values(std::move(v)) {
  if (!x_space || !y_space) throw InvalidArgument("BivariateField: null space handle");
  if (values.rows() != x_space->dim() || values.cols() != y_space->dim())
    throw InvalidArgument("BivariateField: value matrix does not match the space dimensions");
}

Matrix whiten(const BivariateField& field) {
  return field.x_space->whitener * field.values * field.y_space->whitener.transpose();
}

BivariateField unwhiten(const Matrix& whitened, SpaceHandle x_space, SpaceHandle y_space) {
  if (!x_space || !y_space) throw InvalidArgument("unwhiten: null space handle");
  if (whitened.rows() != x_space->dim() || whitened.cols() != y_space->dim())
    throw InvalidArgument("unwhiten: matrix does not match the space dimensions");
  Matrix tmp = x_space->whitener.triangularView<Eigen::Upper>().solve(whitened);
  // tmp = V R_yᵀ, so R_y Vᵀ = tmpᵀ
  Matrix vt = y_space->whitener.triangularView<Eigen::Upper>().solve(tmp.transpose());
  return BivariateField(std::move(x_space), std::move(y_space), vt.transpose());
}

Vector diag_restrict(const BivariateField& field) {
  if (field.values.rows() != field.values.cols())
    throw InvalidArgument("diag_restrict: value matrix must be square");
  return field.values.diagonal();
}

Vector integrate_second_variable(const BivariateField& field) {
  const Vector& w = field.y_space->integration_weights;
  if (w.size() != field.values.cols())
    throw InvalidArgument("integrate_second_variable: second variable has no integration weights");
  return field.values * w;
}

}  // namespace liftrec
