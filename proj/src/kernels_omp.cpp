#include <cmath>

#include <omp.h>

#include "glyfe/errors.hpp"
#include "glyfe/kernels.hpp"

namespace glyfe::kernels {

int max_threads() { return omp_get_max_threads(); }

namespace omp {

RowMatrix rbf_gram(const RowMatrix& a, const RowMatrix& b, double gamma) {
  if (a.cols() != b.cols()) throw ArgumentError("rbf_gram: feature counts differ");
  RowMatrix k(a.rows(), b.rows());
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = b.rows();
  const Eigen::Index dim = a.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      k(i, j) = std::exp(-gamma * squared_distance(a.row(i).data(), b.row(j).data(), dim));
  return k;
}

RowMatrix dot_gram(const RowMatrix& a, const RowMatrix& b, double sigma0_sq) {
  if (a.cols() != b.cols()) throw ArgumentError("dot_gram: feature counts differ");
  RowMatrix k(a.rows(), b.rows());
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = b.rows();
  const Eigen::Index dim = a.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      k(i, j) = sigma0_sq + dot(a.row(i).data(), b.row(j).data(), dim);
  return k;
}

RowMatrix logistic_hidden(const RowMatrix& x, const RowMatrix& w, const Eigen::VectorXd& bias) {
  if (x.cols() != w.cols() || w.rows() != bias.size())
    throw ArgumentError("logistic_hidden: shape mismatch");
  RowMatrix h(x.rows(), w.rows());
  const Eigen::Index rows = x.rows();
  const Eigen::Index units = w.rows();
  const Eigen::Index dim = x.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < units; ++k)
      h(i, k) = 1.0 / (1.0 + std::exp(-(bias[k] + dot(x.row(i).data(), w.row(k).data(), dim))));
  return h;
}

void rbf_row(const RowMatrix& a, Eigen::Index row, double gamma, std::span<double> out) {
  const double* r = a.row(row).data();
  const Eigen::Index n = a.rows();
  const Eigen::Index dim = a.cols();
#pragma omp parallel for schedule(static) if (n > 2048)
  for (Eigen::Index j = 0; j < n; ++j)
    out[j] = std::exp(-gamma * squared_distance(r, a.row(j).data(), dim));
}

}  // namespace omp
}  // namespace glyfe::kernels
