#include "liftrec/common.hpp"

#include <algorithm>
#include <cmath>

namespace liftrec {

double inner(const BlockList& a, const BlockList& b) {
  if (a.size() != b.size()) throw InvalidArgument("inner: block count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols())
      throw InvalidArgument("inner: block shape mismatch");
    s += (a[i].array() * b[i].array()).sum();
  }
  return s;
}

double frobenius_norm(const BlockList& a) {
  double s = 0.0;
  for (const auto& m : a) s += m.squaredNorm();
  return std::sqrt(s);
}

BlockList zeros_like(const BlockList& a) {
  BlockList out;
  out.reserve(a.size());
  for (const auto& m : a) out.push_back(Matrix::Zero(m.rows(), m.cols()));
  return out;
}

void axpy(double alpha, const BlockList& x, BlockList& y) {
  if (x.size() != y.size()) throw InvalidArgument("axpy: block count mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need at least two paired samples");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw InvalidArgument("loglog_slope: samples must be positive");
    mx += std::log(x[k]) / n;
    my += std::log(y[k]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median: empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace liftrec
