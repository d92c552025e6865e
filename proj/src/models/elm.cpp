#include "glyfe/models/elm.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "glyfe/errors.hpp"
#include "glyfe/kernels.hpp"
#include "glyfe/rng.hpp"

namespace glyfe::models {

namespace {
constexpr Eigen::Index kPredictChunk = 1024;
}

Eigen::VectorXd ElmModel::ridge(const RowMatrix& h, const Eigen::VectorXd& y, double lambda) {
  const Eigen::Index n = h.rows();
  const Eigen::Index m = h.cols();
  if (n < m) {
    Eigen::MatrixXd g = h * h.transpose();
    g.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    if (ldlt.info() != Eigen::Success) throw FitError("ELM: singular ridge system");
    return h.transpose() * ldlt.solve(y);
  }
  Eigen::MatrixXd g = h.transpose() * h;
  g.diagonal().array() += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success) throw FitError("ELM: singular ridge system");
  return ldlt.solve(h.transpose() * y);
}

void ElmModel::do_fit(const Dataset& train, const Dataset&) {
  const auto neurons = static_cast<Eigen::Index>(std::lround(hp_.at("neurons")));
  const double lambda = hp_.at("lambda");
  if (neurons < 1) throw FitError("ELM: needs at least one hidden unit");
  const Eigen::Index d = train.X.cols();
  Rng rng(mix_seed(seed_, 1));
  w_.resize(neurons, d);
  for (Eigen::Index k = 0; k < neurons; ++k)
    for (Eigen::Index j = 0; j < d; ++j) w_(k, j) = rng.uniform(-1.0, 1.0);
  b_.resize(neurons);
  for (Eigen::Index k = 0; k < neurons; ++k) b_[k] = rng.uniform(-1.0, 1.0);

  const RowMatrix h = kernels::logistic_hidden(train.X, w_, b_);
  beta_ = ridge(h, train.y, lambda);
  if (!beta_.allFinite()) throw FitError("ELM: non-finite output weights");
}

Eigen::VectorXd ElmModel::do_predict(const Dataset& samples) const {
  Eigen::VectorXd out(samples.size());
  for (Eigen::Index r = 0; r < samples.size(); r += kPredictChunk) {
    const Eigen::Index len = std::min(kPredictChunk, samples.size() - r);
    const RowMatrix x = samples.X.middleRows(r, len);
    out.segment(r, len) = kernels::logistic_hidden(x, w_, b_) * beta_;
  }
  return out;
}

void ElmModel::save_params(ParamBlob& blob) const {
  blob.arrays.emplace_back("input_weights", Eigen::MatrixXd(w_));
  blob.arrays.emplace_back("hidden_bias", b_);
  blob.arrays.emplace_back("output_weights", beta_);
}

void ElmModel::load_params(const ParamBlob& blob) {
  w_ = blob.array("input_weights");
  b_ = blob.array("hidden_bias").col(0);
  beta_ = blob.array("output_weights").col(0);
}

}  // namespace glyfe::models
