#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "liftrec/certify.hpp"

using namespace liftrec;

namespace {

AffineOperator identity_op(Eigen::Index r, Eigen::Index c) {
  return AffineOperator::from_dense({{r, c}}, Matrix::Identity(r * c, r * c));
}

}  // namespace

TEST_SUITE("certify") {
  TEST_CASE("tangent basis is orthonormal and spans T") {
    gen::Source src(41);
    const RankOneModel m = src.model(5, 3);
    const Matrix b = tangent_basis(m);
    CHECK(b.cols() == 7);
    CHECK((b.transpose() * b - Matrix::Identity(7, 7)).norm() < 1e-12);
    for (int t = 0; t < 10; ++t) {
      const Matrix x = src.matrix(5, 3);
      const Matrix pt = project_tangent(x, m);
      const Vector coords = b.transpose() * Eigen::Map<const Vector>(x.data(), 15);
      const Vector back = b * coords;
      CHECK((Eigen::Map<const Matrix>(back.data(), 5, 3) - pt).norm() < 1e-12);
    }
  }

  TEST_CASE("symmetric tangent basis") {
    gen::Source src(48);
    const Vector u = src.unit(4);
    const RankOneModel m(1.3, u, u);
    const Matrix b = symmetric_tangent_basis(m);
    CHECK(b.cols() == 4);
    CHECK((b.transpose() * b - Matrix::Identity(4, 4)).norm() < 1e-12);
    const Matrix g = tangent_basis(m);
    CHECK((g * g.transpose() * b - b).norm() < 1e-12);
    CHECK_THROWS_AS(symmetric_tangent_basis(src.model(4, 4)), InvalidArgument);
  }

  TEST_CASE("identity operator certifies with the model itself") {
    gen::Source src(42);
    const RankOneModel m = src.model(4, 3);
    const CertificateReport r = precertificate(identity_op(4, 3), {m});
    CHECK(r.ndsc_pass);
    CHECK((r.H[0] - m.direction()).norm() < 1e-12);
    CHECK(r.w_norm[0] < 1e-12);
    CHECK(tangent_injectivity(identity_op(4, 3), {m}) == doctest::Approx(1.0));
    CHECK(cone_injectivity(identity_op(4, 3), {m}));
  }

  TEST_CASE("degenerate tangent systems") {
    gen::Source src(43);
    const RankOneModel m = src.model(3, 3);
    // Φ = projection onto T⊥ annihilates T
    const Matrix b = tangent_basis(m);
    const Matrix kill = Matrix::Identity(9, 9) - b * b.transpose();
    const AffineOperator op = AffineOperator::from_dense({{3, 3}}, kill);
    CHECK_THROWS_AS(precertificate(op, {m}), DegenerateCertificate);
    CHECK(tangent_injectivity(op, {m}) < 1e-12);
    const AffineOperator zero = AffineOperator::from_dense({{3, 3}}, Matrix::Zero(4, 9));
    CHECK_FALSE(cone_injectivity(zero, {m}));
    try {
      precertificate(op, {m});
    } catch (const DegenerateCertificate& e) {
      CHECK(e.smallest_singular_value < 1e-12);
    }
  }

  TEST_CASE("cone injectivity with one nonzero measurement") {
    gen::Source src(44);
    const RankOneModel m = src.model(3, 3);
    Matrix a = Matrix::Zero(1, 9);
    a.row(0) = Eigen::Map<const Vector>(m.direction().data(), 9).transpose();
    CHECK(cone_injectivity(AffineOperator::from_dense({{3, 3}}, a), {m}));
  }

  TEST_CASE("pre-certificate interpolates the tangent space") {
    gen::Source src(45);
    for (int t = 0; t < 10; ++t) {
      const RankOneModel a = src.model(5, 4), b = src.model(3, 3);
      const AffineOperator op = AffineOperator::from_dense({{5, 4}, {3, 3}}, src.matrix(30, 29));
      const CertificateReport r = precertificate(op, {a, b});
      for (double tr : r.tangent_residual) CHECK(tr <= 1e-8);
      CHECK(r.smallest_singular_value > 0.0);
    }
  }

  TEST_CASE("ndsc verification and its stability") {
    gen::Source src(46);
    const RankOneModel m = src.model(5, 5);
    const Matrix qu = orthogonal_complement(m.u), qv = orthogonal_complement(m.v);
    Matrix w = src.matrix(4, 4);
    w *= 1.2 / operator_norm(w);
    CHECK_FALSE(ndsc_verify({m.direction() + qu * w * qv.transpose()}, {m}).ndsc_pass);
    CHECK(ndsc_verify({m.direction()}, {m}).ndsc_pass);

    for (int t = 0; t < 50; ++t) {
      const double margin = src.uniform(0.05, 0.5);
      Matrix inner = src.matrix(4, 4);
      inner *= src.uniform(0.0, 1.0 - margin) / operator_norm(inner);
      const Matrix h = m.direction() + qu * inner * qv.transpose();
      REQUIRE(ndsc_verify({h}, {m}, margin).ndsc_pass);
      Matrix e = src.matrix(4, 4);
      e *= src.uniform(0.0, 0.999 * margin / 2.0) / operator_norm(e);
      CHECK(ndsc_verify({h + qu * e * qv.transpose()}, {m}, margin / 2.0).ndsc_pass);
    }
  }

  TEST_CASE("robustness bounds") {
    gen::Source src(47);
    const RankOneModel m = src.model(4, 4);
    const AffineOperator op = AffineOperator::from_dense({{4, 4}}, src.matrix(14, 16) / std::sqrt(14.0));
    const CertificateReport cert = precertificate(op, {m});
    const RobustnessBounds zero = robustness_bounds({m.matrix()}, {m}, cert.H, cert.p, 1.0, 0.0, op);
    CHECK(std::abs(zero.bregman) < 1e-12);
    CHECK(zero.prediction < 1e-12);
    CHECK(zero.bregman_bound == 0.0);
    CHECK(zero.prediction_bound == 0.0);
    if (!cert.ndsc_pass) return;
    const Vector z = op.apply({m.matrix()});
    for (double delta : {1e-2, 1e-3}) {
      Vector e = src.vector(14);
      e *= delta / e.norm();
      const BlockSolution sol = solve_regularized_nnm(op, z + e, delta);
      const RobustnessBounds rb = robustness_bounds(sol.blocks, {m}, cert.H, cert.p, 1.0, delta, op);
      CHECK(rb.bregman_ok);
      CHECK(rb.prediction_ok);
      CHECK(rb.projection_ok);
    }
  }
}
