#include "glyfe/models/lstm.hpp"

#include <cmath>

#include "glyfe/errors.hpp"

namespace glyfe::models {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double tanh_(double z) { return std::tanh(z); }

}  // namespace

struct LstmNet::Trace {
  // [layer][t]
  std::vector<std::vector<RowMatrix>> gates;  // activated i, f, g, o blocks
  std::vector<std::vector<RowMatrix>> c;
  std::vector<std::vector<RowMatrix>> tc;  // tanh(c)
  std::vector<std::vector<RowMatrix>> h;
};

LstmNet::LstmNet(int features, int steps, int hidden, int layers, double l2)
    : features_(features), steps_(steps), hidden_(hidden), layers_(layers), l2_(l2) {
  if (features < 1 || steps < 1 || hidden < 1 || layers < 1)
    throw ArgumentError("LstmNet: sizes must be positive");
  const Eigen::Index h4 = 4 * static_cast<Eigen::Index>(hidden);
  for (int l = 0; l < layers; ++l) {
    Layout lay;
    lay.in = l == 0 ? features : hidden;
    lay.w = count_;
    lay.u = lay.w + h4 * lay.in;
    lay.b = lay.u + h4 * hidden;
    count_ = lay.b + h4;
    layout_.push_back(lay);
  }
  head_ = count_;
  count_ += hidden + 1;
}

Eigen::VectorXd LstmNet::initial_parameters(Rng& rng) const {
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden_));
  Eigen::VectorXd theta(count_);
  for (Eigen::Index i = 0; i < count_; ++i) theta[i] = rng.uniform(-k, k);
  for (const auto& lay : layout_)
    theta.segment(lay.b + hidden_, hidden_).setOnes();
  return theta;
}

RowMatrix LstmNet::input_at(const RowMatrix& x, int t) const {
  RowMatrix out(x.rows(), features_);
  for (int c = 0; c < features_; ++c) out.col(c) = x.col(c * steps_ + t);
  return out;
}

Eigen::VectorXd LstmNet::run(const Eigen::VectorXd& theta, const RowMatrix& x,
                             Trace* trace) const {
  if (x.cols() != static_cast<Eigen::Index>(features_) * steps_)
    throw ArgumentError("LstmNet: input width mismatch");
  const Eigen::Index n = x.rows();
  const int h = hidden_;
  if (trace) {
    trace->gates.assign(layers_, std::vector<RowMatrix>(steps_));
    trace->c.assign(layers_, std::vector<RowMatrix>(steps_));
    trace->tc.assign(layers_, std::vector<RowMatrix>(steps_));
    trace->h.assign(layers_, std::vector<RowMatrix>(steps_));
  }
  std::vector<RowMatrix> below(steps_);
  for (int t = 0; t < steps_; ++t) below[t] = input_at(x, t);

  RowMatrix hprev;
  for (int l = 0; l < layers_; ++l) {
    const auto& lay = layout_[l];
    ConstMap w(theta.data() + lay.w, 4 * h, lay.in);
    ConstMap u(theta.data() + lay.u, 4 * h, h);
    const Eigen::Map<const Eigen::RowVectorXd> b(theta.data() + lay.b, 4 * h);
    hprev = RowMatrix::Zero(n, h);
    RowMatrix cprev = RowMatrix::Zero(n, h);
    for (int t = 0; t < steps_; ++t) {
      RowMatrix z = below[t] * w.transpose();
      z.noalias() += hprev * u.transpose();
      z.rowwise() += b;
      z.leftCols(2 * h) = z.leftCols(2 * h).unaryExpr(&sigmoid);
      z.middleCols(2 * h, h) = z.middleCols(2 * h, h).unaryExpr(&tanh_);
      z.rightCols(h) = z.rightCols(h).unaryExpr(&sigmoid);
      RowMatrix c = z.middleCols(h, h).cwiseProduct(cprev) +
                    z.leftCols(h).cwiseProduct(z.middleCols(2 * h, h));
      RowMatrix tc = c.unaryExpr(&tanh_);
      RowMatrix hn = z.rightCols(h).cwiseProduct(tc);
      if (trace) {
        trace->gates[l][t] = std::move(z);
        trace->c[l][t] = c;
        trace->tc[l][t] = std::move(tc);
        trace->h[l][t] = hn;
      }
      below[t] = hn;
      hprev = std::move(hn);
      cprev = std::move(c);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> hw(theta.data() + head_, h);
  return (hprev * hw).array() + theta[head_ + h];
}

Eigen::VectorXd LstmNet::forward(const Eigen::VectorXd& theta, const RowMatrix& x) const {
  return run(theta, x, nullptr);
}

double LstmNet::loss(const Eigen::VectorXd& theta, const RowMatrix& x, const Eigen::VectorXd& y,
                     Eigen::VectorXd* grad) const {
  const Eigen::Index n = x.rows();
  const int h = hidden_;
  Trace tr;
  const Eigen::VectorXd pred = run(theta, x, grad ? &tr : nullptr);
  const Eigen::VectorXd resid = pred - y;

  double penalty = 0.0;
  for (const auto& lay : layout_)
    penalty += theta.segment(lay.w, lay.b - lay.w).squaredNorm();
  penalty += theta.segment(head_, h).squaredNorm();
  const double value = resid.squaredNorm() / static_cast<double>(n) + 0.5 * l2_ * penalty;
  if (!grad) return value;

  grad->setZero(count_);
  const Eigen::VectorXd dy = (2.0 / static_cast<double>(n)) * resid;
  const Eigen::Map<const Eigen::VectorXd> hw(theta.data() + head_, h);
  grad->segment(head_, h) = tr.h[layers_ - 1][steps_ - 1].transpose() * dy + l2_ * hw;
  (*grad)[head_ + h] = dy.sum();

  // gradient flowing into each layer's hidden output from above
  std::vector<RowMatrix> dh_ext(steps_, RowMatrix::Zero(n, h));
  dh_ext[steps_ - 1] = dy * hw.transpose();

  for (int l = layers_ - 1; l >= 0; --l) {
    const auto& lay = layout_[l];
    ConstMap w(theta.data() + lay.w, 4 * h, lay.in);
    ConstMap u(theta.data() + lay.u, 4 * h, h);
    Eigen::Map<RowMatrix> dw(grad->data() + lay.w, 4 * h, lay.in);
    Eigen::Map<RowMatrix> du(grad->data() + lay.u, 4 * h, h);
    Eigen::Map<Eigen::RowVectorXd> db(grad->data() + lay.b, 4 * h);

    RowMatrix dh_next = RowMatrix::Zero(n, h);
    RowMatrix dc_next = RowMatrix::Zero(n, h);
    std::vector<RowMatrix> dx(steps_);
    RowMatrix dz(n, 4 * h);
    for (int t = steps_ - 1; t >= 0; --t) {
      const RowMatrix& g = tr.gates[l][t];
      const auto gi = g.leftCols(h);
      const auto gf = g.middleCols(h, h);
      const auto gg = g.middleCols(2 * h, h);
      const auto go = g.rightCols(h);
      const RowMatrix& tc = tr.tc[l][t];
      const RowMatrix dh = dh_ext[t] + dh_next;
      const RowMatrix dc =
          dc_next + dh.cwiseProduct(go).cwiseProduct((1.0 - tc.array().square()).matrix());
      const RowMatrix cprev = t > 0 ? tr.c[l][t - 1] : RowMatrix::Zero(n, h);
      dz.leftCols(h) = dc.cwiseProduct(gg).array() * gi.array() * (1.0 - gi.array());
      dz.middleCols(h, h) = dc.cwiseProduct(cprev).array() * gf.array() * (1.0 - gf.array());
      dz.middleCols(2 * h, h) = dc.cwiseProduct(gi).array() * (1.0 - gg.array().square());
      dz.rightCols(h) = dh.cwiseProduct(tc).array() * go.array() * (1.0 - go.array());
      dc_next = dc.cwiseProduct(gf);

      const RowMatrix xin = l == 0 ? input_at(x, t) : tr.h[l - 1][t];
      dw.noalias() += dz.transpose() * xin;
      if (t > 0) du.noalias() += dz.transpose() * tr.h[l][t - 1];
      db += dz.colwise().sum();
      if (l > 0) dx[t] = dz * w;
      dh_next = dz * u;
    }
    dw += l2_ * w;
    du += l2_ * u;
    if (l > 0) dh_ext = std::move(dx);
  }
  return value;
}

void LstmModel::do_fit(const Dataset& train, const Dataset& valid) {
  steps_ = train.history;
  const LstmNet net(kChannels, steps_, hidden_, layers_, l2_);
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

Eigen::VectorXd LstmModel::do_predict(const Dataset& samples) const {
  const LstmNet net(kChannels, steps_, hidden_, layers_, l2_);
  return predict_chunked(net, theta_, samples.X);
}

void LstmModel::save_params(ParamBlob& blob) const {
  blob.meta["hidden"] = hidden_;
  blob.meta["layers"] = layers_;
  blob.meta["steps"] = steps_;
  blob.meta["l2"] = l2_;
  blob.arrays.emplace_back("theta", theta_);
}

void LstmModel::load_params(const ParamBlob& blob) {
  hidden_ = blob.meta.at("hidden").get<int>();
  layers_ = blob.meta.at("layers").get<int>();
  steps_ = blob.meta.at("steps").get<int>();
  l2_ = blob.meta.at("l2").get<double>();
  theta_ = blob.array("theta").col(0);
}

}  // namespace glyfe::models
