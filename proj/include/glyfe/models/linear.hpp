#pragma once

#include "glyfe/models/model.hpp"

namespace glyfe::models {

// Persistence: predicts the glucose value at issue time.
class BaseModel final : public Predictor {
 public:
  ModelKind kind() const override { return ModelKind::base; }

 protected:
  void do_fit(const Dataset&, const Dataset&) override {}
  Eigen::VectorXd do_predict(const Dataset& samples) const override;
  void save_params(ParamBlob&) const override {}
  void load_params(const ParamBlob&) override {}
};

// Least-squares Legendre series in the target's time of day mapped to [-1, 1].
class PolyModel final : public Predictor {
 public:
  ModelKind kind() const override { return ModelKind::poly; }
  const Eigen::VectorXd& coefficients() const { return coef_; }

  static double time_of_day(Timestamp t, std::int64_t utc_offset);  // in [-1, 1)
  static Eigen::VectorXd legendre(double s, int degree);

 protected:
  void do_fit(const Dataset& train, const Dataset& valid) override;
  Eigen::VectorXd do_predict(const Dataset& samples) const override;
  void save_params(ParamBlob& blob) const override;
  void load_params(const ParamBlob& blob) override;

 private:
  Eigen::VectorXd coef_;
};

// AR(p) / ARX(p) fitted by one-step OLS on the history window and iterated
// up to the horizon. Glucose lives on the target's scale, CHO and insulin in
// physical units; exogenous inputs after the issue time are zero.
class ArModel final : public Predictor {
 public:
  explicit ArModel(bool exogenous) : exogenous_(exogenous) {}
  ModelKind kind() const override { return exogenous_ ? ModelKind::arx : ModelKind::ar; }
  const char* strategy() const override { return "recursive"; }

  int order() const { return order_; }
  // alpha_i multiplies g_{t-i}.
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::VectorXd& cho_coef() const { return cho_; }
  const Eigen::VectorXd& insulin_coef() const { return ins_; }
  double intercept() const { return beta_; }

  // Next-step prediction straight from the window, without recursion.
  Eigen::VectorXd predict_one_step(const Dataset& samples) const;

 protected:
  void do_fit(const Dataset& train, const Dataset& valid) override;
  Eigen::VectorXd do_predict(const Dataset& samples) const override;
  void save_params(ParamBlob& blob) const override;
  void load_params(const ParamBlob& blob) override;

 private:
  double step(const double* g, const double* c, const double* u) const;

  bool exogenous_;
  int order_ = 1;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd cho_;
  Eigen::VectorXd ins_;
  double beta_ = 0.0;
};

}  // namespace glyfe::models
