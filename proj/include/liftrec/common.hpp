#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace liftrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One whitened matrix per lifted unknown F_i.
using BlockList = std::vector<Matrix>;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// Zero is a discrete Dirichlet eigenvalue of -Δ + q.
class EigenvalueHit : public Error {
 public:
  using Error::Error;
};

class DegenerateCertificate : public Error {
 public:
  DegenerateCertificate(const std::string& what, double smallest_sv)
      : Error(what), smallest_singular_value(smallest_sv) {}
  double smallest_singular_value;
};

// Noise level and seed of a synthetic measurement perturbation.
struct NoiseSpec {
  double delta = 0.0;
  std::uint64_t seed = 0;
};

// Frobenius inner product of two block lists of equal shape.
double inner(const BlockList& a, const BlockList& b);
double frobenius_norm(const BlockList& a);
BlockList zeros_like(const BlockList& a);
void axpy(double alpha, const BlockList& x, BlockList& y);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Median of a nonempty sample.
double median(std::vector<double> values);

}  // namespace liftrec
