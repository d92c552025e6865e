#include "glyfe/models/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "glyfe/errors.hpp"

namespace glyfe::models {

void Adam::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
  v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
}

Eigen::VectorXd predict_chunked(const Network& net, const Eigen::VectorXd& theta,
                                const RowMatrix& x, Eigen::Index chunk) {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); r += chunk) {
    const Eigen::Index len = std::min(chunk, x.rows() - r);
    out.segment(r, len) = net.forward(theta, x.middleRows(r, len));
  }
  return out;
}

TrainResult train(const Network& net, const Dataset& train, const Dataset& valid,
                  const TrainConfig& cfg) {
  if (cfg.learning_rate <= 0) throw FitError("learning rate must be positive");
  if (cfg.patience < 1 || cfg.batch < 1 || cfg.max_epochs < 1)
    throw FitError("invalid training budget");
  Rng init_rng(mix_seed(cfg.seed, 1));
  Rng shuffle_rng(mix_seed(cfg.seed, 2));

  Eigen::VectorXd theta = net.initial_parameters(init_rng);
  Adam adam(theta.size(), cfg.learning_rate);
  const Dataset& monitor = valid.empty() ? train : valid;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch, train.size());
  RowMatrix xb;
  Eigen::VectorXd yb;
  Eigen::VectorXd grad(theta.size());

  TrainResult res;
  res.theta = theta;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    for (Eigen::Index start = 0; start < train.size(); start += batch) {
      const Eigen::Index len = std::min(batch, train.size() - start);
      xb.resize(len, train.X.cols());
      yb.resize(len);
      for (Eigen::Index k = 0; k < len; ++k) {
        const Eigen::Index i = order[static_cast<std::size_t>(start + k)];
        xb.row(k) = train.X.row(i);
        yb[k] = train.y[i];
      }
      const double l = net.loss(theta, xb, yb, &grad);
      if (!std::isfinite(l) || !grad.allFinite())
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
      adam.step(theta, grad);
    }
    const Eigen::VectorXd pred = predict_chunked(net, theta, monitor.X);
    const double v = (pred - monitor.y).squaredNorm() / static_cast<double>(monitor.size());
    if (!std::isfinite(v)) throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    res.curve.push_back(v);
    if (v < best) {
      best = v;
      res.theta = theta;
      res.best_epoch = static_cast<std::size_t>(epoch);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return res;
}

}  // namespace glyfe::models
