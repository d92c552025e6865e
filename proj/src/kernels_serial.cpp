#include <cmath>

#include "glyfe/errors.hpp"
#include "glyfe/kernels.hpp"

namespace glyfe::kernels {

double dot(const double* a, const double* b, Eigen::Index n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  Eigen::Index k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

double squared_distance(const double* a, const double* b, Eigen::Index n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  Eigen::Index k = 0;
  for (; k + 4 <= n; k += 4) {
    const double d0 = a[k] - b[k];
    const double d1 = a[k + 1] - b[k + 1];
    const double d2 = a[k + 2] - b[k + 2];
    const double d3 = a[k + 3] - b[k + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

namespace serial {

RowMatrix rbf_gram(const RowMatrix& a, const RowMatrix& b, double gamma) {
  if (a.cols() != b.cols()) throw ArgumentError("rbf_gram: feature counts differ");
  RowMatrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = std::exp(-gamma * squared_distance(a.row(i).data(), b.row(j).data(), a.cols()));
  return k;
}

RowMatrix dot_gram(const RowMatrix& a, const RowMatrix& b, double sigma0_sq) {
  if (a.cols() != b.cols()) throw ArgumentError("dot_gram: feature counts differ");
  RowMatrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = sigma0_sq + dot(a.row(i).data(), b.row(j).data(), a.cols());
  return k;
}

RowMatrix logistic_hidden(const RowMatrix& x, const RowMatrix& w, const Eigen::VectorXd& bias) {
  if (x.cols() != w.cols() || w.rows() != bias.size())
    throw ArgumentError("logistic_hidden: shape mismatch");
  RowMatrix h(x.rows(), w.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index k = 0; k < w.rows(); ++k)
      h(i, k) = 1.0 / (1.0 + std::exp(-(bias[k] + dot(x.row(i).data(), w.row(k).data(), x.cols()))));
  return h;
}

void rbf_row(const RowMatrix& a, Eigen::Index row, double gamma, std::span<double> out) {
  const double* r = a.row(row).data();
  for (Eigen::Index j = 0; j < a.rows(); ++j)
    out[j] = std::exp(-gamma * squared_distance(r, a.row(j).data(), a.cols()));
}

}  // namespace serial
}  // namespace glyfe::kernels
