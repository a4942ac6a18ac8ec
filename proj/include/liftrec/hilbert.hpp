#pragma once

// Discrete grids and Hilbert structures. A Hilbert structure is an SPD Gram
// matrix G together with an upper-triangular whitener R (RᵀR = G), so that
// ⟨a, b⟩_G = (Ra)·(Rb). Lifted unknowns are stored as value matrices with rows
// indexed by the first variable and columns by the second; every nuclear-norm
// computation downstream works on the whitened matrix R_x · values · R_yᵀ.

#include <memory>
#include <string_view>

#include "liftrec/common.hpp"

namespace liftrec {

struct Grid1D {
  int n = 0;
  double a = 0.0;
  double b = 0.0;
  double h = 0.0;
  Vector nodes;
  Vector quad_weights;
};

// Uniform grid with composite trapezoid weights. Throws InvalidArgument when
// n < 3 or b <= a.
Grid1D build_grid_1d(int n, double a, double b);

// Rectangular tensor grid. Node (i, j) has flat index j * nx + i, x running
// fastest. Boundary nodes are listed counter-clockwise starting at (ax, ay).
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double ax = 0.0, bx = 1.0, ay = 0.0, by = 1.0;
  double hx = 0.0, hy = 0.0;
  Vector x;  // size nx
  Vector y;  // size ny
  std::vector<int> interior_index;
  std::vector<int> boundary_index;
  Matrix boundary_normals;  // boundary_index.size() x 2, unit outward
  Vector boundary_weights;  // arc-length trapezoid weights
  Vector boundary_arclength;
  Vector area_weights;      // all nodes, tensor trapezoid

  int size() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
  double node_x(int k) const { return x(k % nx); }
  double node_y(int k) const { return y(k / nx); }
  double perimeter() const { return 2.0 * ((bx - ax) + (by - ay)); }
  double area() const { return (bx - ax) * (by - ay); }
};

Grid2D build_grid_2d(int nx, int ny, double ax = 0.0, double bx = 1.0, double ay = 0.0,
                     double by = 1.0);

enum class InnerProductKind { l2, h1, h2, laplacian_seminorm, coefficient };

std::string_view to_string(InnerProductKind kind);

struct InnerProduct {
  InnerProductKind kind = InnerProductKind::l2;
  Matrix gram;
  Matrix whitener;  // upper triangular, whitenerᵀ · whitener = gram
  Matrix kernel;    // gram⁻¹; column j is the discrete representer of evaluation at node j
  // ∫ f = integration_weights · f for f in this space's coordinates. Empty when
  // the space has no integration rule attached.
  Vector integration_weights;

  int dim() const { return static_cast<int>(gram.rows()); }
  double inner(const Vector& a, const Vector& b) const { return a.dot(gram * b); }
  double norm(const Vector& a) const;
  Vector whiten(const Vector& a) const { return whitener * a; }
  Vector unwhiten(const Vector& a) const;

  // Cholesky-factors `gram`; throws NumericFailure with the smallest
  // eigenvalue in the message when it is not SPD.
  static InnerProduct from_gram(Matrix gram, InnerProductKind kind, Vector integration_weights = {});
};

using SpaceHandle = std::shared_ptr<const InnerProduct>;

// First and second derivative matrices on a 1-D grid: central second-order
// in the interior, one-sided second-order at the endpoints.
struct DerivativeMatrices1D {
  Matrix first;
  Matrix second;
};
DerivativeMatrices1D derivative_matrices(const Grid1D& grid);

// 3-point Dirichlet Laplacian on interior nodes, (n-2) x (n-2).
Matrix interior_laplacian(const Grid1D& grid);
// 5-point Dirichlet Laplacian on interior nodes, ordered as interior_index.
Matrix interior_laplacian(const Grid2D& grid);

InnerProduct assemble_inner_product(const Grid1D& grid, InnerProductKind kind);
InnerProduct assemble_inner_product(const Grid2D& grid, InnerProductKind kind);

// Identity Gram on m coefficients, e.g. an orthonormal basis.
InnerProduct coefficient_space(int m, Vector integration_weights = {});

struct BivariateField {
  SpaceHandle x_space;
  SpaceHandle y_space;
  Matrix values;

  BivariateField(SpaceHandle x, SpaceHandle y, Matrix v);
};

Matrix whiten(const BivariateField& field);
BivariateField unwhiten(const Matrix& whitened, SpaceHandle x_space, SpaceHandle y_space);

// values(j, j); requires a square value matrix.
Vector diag_restrict(const BivariateField& field);
// values · w_y, with w_y the second variable's integration weights.
Vector integrate_second_variable(const BivariateField& field);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& sym);

}  // namespace liftrec
