#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "glyfe/models/network.hpp"
#include "glyfe/rng.hpp"

namespace glyfe::test {

inline RowMatrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal(0.0, scale);
  return m;
}

// Worst per-parameter |a - n| / max(|a| + |n|, 1e-6) against central differences.
inline double gradient_error(const models::Network& net, const Eigen::VectorXd& theta,
                             const RowMatrix& x, const Eigen::VectorXd& y) {
  Eigen::VectorXd g;
  net.loss(theta, x, y, &g);
  double worst = 0.0;
  const double h = 1e-6;
  Eigen::VectorXd tp = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    tp[k] = theta[k] + h;
    const double up = net.loss(tp, x, y, nullptr);
    tp[k] = theta[k] - h;
    const double dn = net.loss(tp, x, y, nullptr);
    tp[k] = theta[k];
    const double num = (up - dn) / (2 * h);
    worst = std::max(worst, std::abs(g[k] - num) / std::max(std::abs(g[k]) + std::abs(num), 1e-6));
  }
  return worst;
}

// Brute-force solution of the SVR dual in (a+, a-) form by accelerated
// projected gradient. The projection onto {0 <= a <= C, sum a+ = sum a-} is
// found by bisection on the multiplier of the equality constraint.
inline double svr_qp_oracle(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c,
                            double eps) {
  const Eigen::Index l = y.size();
  const Eigen::Index n = 2 * l;
  Eigen::MatrixXd q(n, n);
  Eigen::VectorXd s(n), p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s[i] = i < l ? 1.0 : -1.0;
    p[i] = i < l ? eps - y[i] : eps + y[i - l];
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) q(i, j) = s[i] * s[j] * k(i % l, j % l);

  auto project = [&](const Eigen::VectorXd& v) {
    auto at = [&](double mu) {
      return (v - mu * s).cwiseMax(0.0).cwiseMin(c).eval();
    };
    double lo = -1e6, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (s.dot(at(mid)) > 0) lo = mid;
      else hi = mid;
    }
    return at(0.5 * (lo + hi));
  };
  auto objective = [&](const Eigen::VectorXd& a) { return 0.5 * a.dot(q * a) + p.dot(a); };

  const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), z = a, prev = a;
  double t = 1.0;
  for (int it = 0; it < 20000; ++it) {
    prev = a;
    a = project(z - (q * z + p) / lip);
    const double tn = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    z = a + ((t - 1) / tn) * (a - prev);
    t = tn;
  }
  return objective(a);
}

}  // namespace glyfe::test
