#pragma once

#include "glyfe/models/model.hpp"
#include "glyfe/models/network.hpp"

namespace glyfe::models {

// Stacked LSTM over a window of `steps` time steps with `features` channels
// per step, read from a flattened row laid out channel-major
// (x[c * steps + t]). A linear head maps the last hidden state of the top
// layer to the output. Gates are ordered i, f, g, o. Per layer the
// parameters are W (4h × in), U (4h × h), b (4h); the head is w (h), b (1).
// The L2 penalty covers W, U and the head weights.
class LstmNet final : public Network {
 public:
  LstmNet(int features, int steps, int hidden, int layers, double l2);

  Eigen::Index parameter_count() const override { return count_; }
  Eigen::VectorXd initial_parameters(Rng& rng) const override;
  Eigen::VectorXd forward(const Eigen::VectorXd& theta, const RowMatrix& x) const override;
  double loss(const Eigen::VectorXd& theta, const RowMatrix& x, const Eigen::VectorXd& y,
              Eigen::VectorXd* grad) const override;

 private:
  struct Layout {
    Eigen::Index w, u, b;
    int in;
  };
  struct Trace;
  RowMatrix input_at(const RowMatrix& x, int t) const;
  Eigen::VectorXd run(const Eigen::VectorXd& theta, const RowMatrix& x, Trace* trace) const;

  int features_;
  int steps_;
  int hidden_;
  int layers_;
  double l2_;
  std::vector<Layout> layout_;
  Eigen::Index head_ = 0;
  Eigen::Index count_ = 0;
};

class LstmModel final : public Predictor {
 public:
  LstmModel(int hidden, int layers, int batch, int patience, int max_epochs, double l2)
      : hidden_(hidden),
        layers_(layers),
        batch_(batch),
        patience_(patience),
        max_epochs_(max_epochs),
        l2_(l2) {}
  ModelKind kind() const override { return ModelKind::lstm; }
  const Eigen::VectorXd& parameters() const { return theta_; }

 protected:
  void do_fit(const Dataset& train, const Dataset& valid) override;
  Eigen::VectorXd do_predict(const Dataset& samples) const override;
  void save_params(ParamBlob& blob) const override;
  void load_params(const ParamBlob& blob) override;

 private:
  int hidden_;
  int layers_;
  int batch_;
  int patience_;
  int max_epochs_;
  double l2_;
  int steps_ = kHistoryLength;
  Eigen::VectorXd theta_;
};

}  // namespace glyfe::models
