#pragma once

#include "glyfe/models/model.hpp"

namespace glyfe::models {

// Random logistic hidden layer with ridge-regressed output weights.
class ElmModel final : public Predictor {
 public:
  ModelKind kind() const override { return ModelKind::elm; }

  const RowMatrix& input_weights() const { return w_; }  // neurons × features
  const Eigen::VectorXd& hidden_bias() const { return b_; }
  const Eigen::VectorXd& output_weights() const { return beta_; }

  // argmin ||H beta - y||^2 + lambda ||beta||^2, through whichever normal
  // system is smaller.
  static Eigen::VectorXd ridge(const RowMatrix& h, const Eigen::VectorXd& y, double lambda);

 protected:
  void do_fit(const Dataset& train, const Dataset& valid) override;
  Eigen::VectorXd do_predict(const Dataset& samples) const override;
  void save_params(ParamBlob& blob) const override;
  void load_params(const ParamBlob& blob) override;

 private:
  RowMatrix w_;
  Eigen::VectorXd b_;
  Eigen::VectorXd beta_;
};

}  // namespace glyfe::models
