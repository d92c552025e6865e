#pragma once

#include <functional>
#include <memory>

#include "glyfe/core.hpp"
#include "glyfe/preprocess.hpp"
#include "glyfe/rng.hpp"

namespace glyfe::test {

inline constexpr Timestamp kT0 = 1577836800;

// Unscaled windows with every glucose cell at g and no CHO or insulin.
inline Dataset constant_dataset(Eigen::Index n, double g) {
  Dataset d;
  const int H = kHistoryLength;
  d.X = RowMatrix::Zero(n, kChannels * H);
  d.X.leftCols(H).setConstant(g);
  d.y = Eigen::VectorXd::Constant(n, g);
  for (Eigen::Index i = 0; i < n; ++i) d.t.push_back(kT0 + i * kCgmStep);
  return d;
}

// Glucose cells and target scaled by (mean, std); CHO and insulin untouched.
inline Scaler uniform_scaler(double mean, double stddev) {
  const int H = kHistoryLength;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(kChannels * H);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(kChannels * H);
  m.head(H).setConstant(mean);
  s.head(H).setConstant(stddev);
  return Scaler(m, s, mean, stddev, std::vector<bool>(kChannels * H, false), false);
}

inline Dataset scaled(Dataset d, std::shared_ptr<const Scaler> scaler) {
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    for (Eigen::Index j = 0; j < d.X.cols(); ++j) d.X(i, j) = scaler->scale_feature(j, d.X(i, j));
    d.y[i] = scaler->scale_target(d.y[i]);
  }
  d.scaler = std::move(scaler);
  return d;
}

// Each row is an independent noiseless trajectory g_{k+1} = law(g_k)
// from a random start; the target continues the trajectory over the horizon.
inline Dataset trajectory_dataset(Rng& rng, Eigen::Index n, Horizon horizon,
                                  const std::function<double(double)>& law) {
  Dataset d = constant_dataset(n, 0.0);
  d.horizon = horizon;
  const int H = kHistoryLength;
  for (Eigen::Index i = 0; i < n; ++i) {
    double g = rng.uniform(50.0, 250.0);
    for (int k = 0; k < H; ++k) {
      d.X(i, k) = g;
      if (k + 1 < H) g = law(g);
    }
    for (int s = 0; s < d.ph_steps(); ++s) g = law(g);
    d.y[i] = g;
  }
  return d;
}

// Arbitrary feature matrix; models that read history cells get H = cols / 3.
inline Dataset raw_dataset(const RowMatrix& x, const Eigen::VectorXd& y) {
  Dataset d;
  d.X = x;
  d.y = y;
  d.history = static_cast<int>(x.cols() / kChannels);
  for (Eigen::Index i = 0; i < x.rows(); ++i) d.t.push_back(kT0 + i * kCgmStep);
  return d;
}

inline Dataset random_window_dataset(Rng& rng, Eigen::Index n) {
  RowMatrix x(n, kChannels * kHistoryLength);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    y[i] = rng.normal();
  }
  Dataset d = raw_dataset(x, y);
  for (Eigen::Index i = 0; i < n; ++i) d.t[i] = kT0 + static_cast<Timestamp>(rng.below(86400 / 300)) * 300;
  return d;
}

}  // namespace glyfe::test
