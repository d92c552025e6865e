#include "glyfe/models/ffnn.hpp"

#include <cmath>

#include "glyfe/errors.hpp"

namespace glyfe::models {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;

double selu(double z) {
  return z > 0 ? DenseNet::kSeluLambda * z
               : DenseNet::kSeluLambda * DenseNet::kSeluAlpha * std::expm1(z);
}

double selu_grad(double z) {
  return z > 0 ? DenseNet::kSeluLambda : DenseNet::kSeluLambda * DenseNet::kSeluAlpha * std::exp(z);
}

}  // namespace

DenseNet::DenseNet(int inputs, std::vector<int> hidden, double l2) : l2_(l2) {
  if (inputs < 1) throw ArgumentError("DenseNet: needs inputs");
  sizes_.push_back(inputs);
  for (int h : hidden) {
    if (h < 1) throw ArgumentError("DenseNet: layer sizes must be positive");
    sizes_.push_back(h);
  }
  sizes_.push_back(1);
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    offsets_.push_back(count_);
    count_ += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l - 1] + sizes_[l];
  }
}

// LeCun normal weights, zero biases.
Eigen::VectorXd DenseNet::initial_parameters(Rng& rng) const {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(count_);
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(sizes_[l - 1]));
    const Eigen::Index nw = static_cast<Eigen::Index>(sizes_[l]) * sizes_[l - 1];
    for (Eigen::Index k = 0; k < nw; ++k) theta[offsets_[l - 1] + k] = rng.normal(0.0, sd);
  }
  return theta;
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& theta, const RowMatrix& x) const {
  RowMatrix a = x;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    ConstMap w(theta.data() + offsets_[l], out, in);
    const Eigen::Map<const Eigen::RowVectorXd> b(theta.data() + offsets_[l] + out * in, out);
    RowMatrix z = a * w.transpose();
    z.rowwise() += b;
    if (l + 1 < layers) z = z.unaryExpr(&selu);
    a = std::move(z);
  }
  return a.col(0);
}

double DenseNet::loss(const Eigen::VectorXd& theta, const RowMatrix& x, const Eigen::VectorXd& y,
                      Eigen::VectorXd* grad) const {
  const std::size_t layers = sizes_.size() - 1;
  const double n = static_cast<double>(x.rows());
  std::vector<RowMatrix> acts{x};  // inputs to each layer
  std::vector<RowMatrix> pre;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    ConstMap w(theta.data() + offsets_[l], out, in);
    const Eigen::Map<const Eigen::RowVectorXd> b(theta.data() + offsets_[l] + out * in, out);
    RowMatrix z = acts.back() * w.transpose();
    z.rowwise() += b;
    pre.push_back(z);
    if (l + 1 < layers) acts.push_back(z.unaryExpr(&selu));
  }
  const Eigen::VectorXd resid = pre.back().col(0) - y;
  double penalty = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    const Eigen::Index nw = static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l];
    penalty += theta.segment(offsets_[l], nw).squaredNorm();
  }
  const double value = resid.squaredNorm() / n + 0.5 * l2_ * penalty;
  if (!grad) return value;

  grad->setZero(count_);
  RowMatrix dz = (2.0 / n) * resid;
  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    ConstMap w(theta.data() + offsets_[l], out, in);
    Eigen::Map<RowMatrix> dw(grad->data() + offsets_[l], out, in);
    Eigen::Map<Eigen::RowVectorXd> db(grad->data() + offsets_[l] + out * in, out);
    dw = dz.transpose() * acts[l];
    dw += l2_ * w;
    db = dz.colwise().sum();
    if (l > 0) {
      RowMatrix da = dz * w;
      dz = da.cwiseProduct(pre[l - 1].unaryExpr(&selu_grad));
    }
  }
  return value;
}

void FfnnModel::do_fit(const Dataset& train, const Dataset& valid) {
  inputs_ = static_cast<int>(train.X.cols());
  const DenseNet net(inputs_, layers_);
  TrainConfig cfg;
  cfg.learning_rate = hp_.at("lr");
  cfg.batch = batch_;
  cfg.patience = patience_;
  cfg.max_epochs = max_epochs_;
  cfg.seed = seed_;
  TrainResult res = models::train(net, train, valid, cfg);
  theta_ = std::move(res.theta);
  curve_ = std::move(res.curve);
  best_epoch_ = res.best_epoch;
}

Eigen::VectorXd FfnnModel::do_predict(const Dataset& samples) const {
  const DenseNet net(inputs_, layers_);
  return predict_chunked(net, theta_, samples.X);
}

void FfnnModel::save_params(ParamBlob& blob) const {
  blob.meta["inputs"] = inputs_;
  blob.meta["layers"] = layers_;
  blob.arrays.emplace_back("theta", theta_);
}

void FfnnModel::load_params(const ParamBlob& blob) {
  inputs_ = blob.meta.at("inputs").get<int>();
  layers_ = blob.meta.at("layers").get<std::vector<int>>();
  theta_ = blob.array("theta").col(0);
}

}  // namespace glyfe::models
