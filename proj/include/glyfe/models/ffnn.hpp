#pragma once

#include <vector>

#include "glyfe/models/model.hpp"
#include "glyfe/models/network.hpp"

namespace glyfe::models {

// Dense SELU network with a linear scalar output. Parameters are laid out
// layer by layer as W (out × in, row-major) followed by b.
class DenseNet final : public Network {
 public:
  static constexpr double kSeluLambda = 1.0507009873554804934193349852946;
  static constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

  DenseNet(int inputs, std::vector<int> hidden, double l2 = 0.0);

  Eigen::Index parameter_count() const override { return count_; }
  Eigen::VectorXd initial_parameters(Rng& rng) const override;
  Eigen::VectorXd forward(const Eigen::VectorXd& theta, const RowMatrix& x) const override;
  double loss(const Eigen::VectorXd& theta, const RowMatrix& x, const Eigen::VectorXd& y,
              Eigen::VectorXd* grad) const override;

 private:
  std::vector<int> sizes_;  // inputs, hidden..., 1
  std::vector<Eigen::Index> offsets_;
  Eigen::Index count_ = 0;
  double l2_;
};

class FfnnModel final : public Predictor {
 public:
  FfnnModel(std::vector<int> layers, int batch, int patience, int max_epochs)
      : layers_(std::move(layers)), batch_(batch), patience_(patience), max_epochs_(max_epochs) {}
  ModelKind kind() const override { return ModelKind::ffnn; }
  const Eigen::VectorXd& parameters() const { return theta_; }

 protected:
  void do_fit(const Dataset& train, const Dataset& valid) override;
  Eigen::VectorXd do_predict(const Dataset& samples) const override;
  void save_params(ParamBlob& blob) const override;
  void load_params(const ParamBlob& blob) override;

 private:
  std::vector<int> layers_;
  int batch_;
  int patience_;
  int max_epochs_;
  int inputs_ = 0;
  Eigen::VectorXd theta_;
};

}  // namespace glyfe::models
