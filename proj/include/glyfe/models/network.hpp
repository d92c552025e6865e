#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "glyfe/preprocess.hpp"
#include "glyfe/rng.hpp"

namespace glyfe::models {

// A differentiable regressor over a flat parameter vector.
class Network {
 public:
  virtual ~Network() = default;

  virtual Eigen::Index parameter_count() const = 0;
  virtual Eigen::VectorXd initial_parameters(Rng& rng) const = 0;
  virtual Eigen::VectorXd forward(const Eigen::VectorXd& theta, const RowMatrix& x) const = 0;
  // Mean squared error on (x, y) plus the network's weight penalty; writes
  // d loss / d theta into grad when given.
  virtual double loss(const Eigen::VectorXd& theta, const RowMatrix& x, const Eigen::VectorXd& y,
                      Eigen::VectorXd* grad) const = 0;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch = 32;
  int patience = 10;
  int max_epochs = 100;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Eigen::VectorXd theta;       // snapshot with the lowest validation MSE
  std::vector<double> curve;   // validation MSE per epoch
  std::size_t best_epoch = 0;  // 1-based
};

class Adam {
 public:
  Adam(Eigen::Index n, double lr) : lr_(lr), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  double lr_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

// Shuffled mini-batch Adam with early stopping on validation MSE. An empty
// validation set falls back to the training MSE.
TrainResult train(const Network& net, const Dataset& train, const Dataset& valid,
                  const TrainConfig& config);

Eigen::VectorXd predict_chunked(const Network& net, const Eigen::VectorXd& theta,
                                const RowMatrix& x, Eigen::Index chunk = 4096);

}  // namespace glyfe::models
