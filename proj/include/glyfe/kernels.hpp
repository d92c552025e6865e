#pragma once

// Dense data-parallel kernels used by the kernel machines and the ELM.
// Every kernel has a serial reference and an OpenMP implementation; both
// compute each output element with the same scalar reduction order, so
// their results are bitwise identical for any thread count.

#include <span>

#include <Eigen/Core>

#include "glyfe/preprocess.hpp"

namespace glyfe::kernels {

// Fixed-order dot product of two length-n rows.
double dot(const double* a, const double* b, Eigen::Index n);
double squared_distance(const double* a, const double* b, Eigen::Index n);

namespace serial {
// K(i, j) = exp(-gamma * ||a_i - b_j||^2)
RowMatrix rbf_gram(const RowMatrix& a, const RowMatrix& b, double gamma);
// K(i, j) = sigma0_sq + a_i . b_j
RowMatrix dot_gram(const RowMatrix& a, const RowMatrix& b, double sigma0_sq);
// H(i, k) = logistic(bias_k + x_i . w_k)
RowMatrix logistic_hidden(const RowMatrix& x, const RowMatrix& w, const Eigen::VectorXd& bias);
// out[j] = exp(-gamma * ||x_row - a_j||^2)
void rbf_row(const RowMatrix& a, Eigen::Index row, double gamma, std::span<double> out);
}  // namespace serial

namespace omp {
RowMatrix rbf_gram(const RowMatrix& a, const RowMatrix& b, double gamma);
RowMatrix dot_gram(const RowMatrix& a, const RowMatrix& b, double sigma0_sq);
RowMatrix logistic_hidden(const RowMatrix& x, const RowMatrix& w, const Eigen::VectorXd& bias);
void rbf_row(const RowMatrix& a, Eigen::Index row, double gamma, std::span<double> out);
}  // namespace omp

// Default dispatch used by the models.
using omp::dot_gram;
using omp::logistic_hidden;
using omp::rbf_gram;
using omp::rbf_row;

int max_threads();

}  // namespace glyfe::kernels
