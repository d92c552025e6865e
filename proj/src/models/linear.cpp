#include "glyfe/models/linear.hpp"

#include <cmath>

#include <Eigen/QR>

#include "glyfe/errors.hpp"

namespace glyfe::models {

Eigen::VectorXd BaseModel::do_predict(const Dataset& samples) const {
  Eigen::VectorXd out(samples.size());
  const int last = samples.history - 1;
  for (Eigen::Index i = 0; i < samples.size(); ++i)
    out[i] = samples.scale_target(samples.raw(i, kGlucose, last));
  return out;
}

// ------------------------------------------------------------------ Poly

double PolyModel::time_of_day(Timestamp t, std::int64_t utc_offset) {
  const std::int64_t sec = t - local_midnight(t, utc_offset);
  return 2.0 * static_cast<double>(sec) / static_cast<double>(kSecondsPerDay) - 1.0;
}

Eigen::VectorXd PolyModel::legendre(double s, int degree) {
  Eigen::VectorXd p(degree + 1);
  p[0] = 1.0;
  if (degree >= 1) p[1] = s;
  for (int k = 1; k < degree; ++k)
    p[k + 1] = ((2.0 * k + 1.0) * s * p[k] - k * p[k - 1]) / (k + 1.0);
  return p;
}

void PolyModel::do_fit(const Dataset& train, const Dataset&) {
  const int degree = static_cast<int>(std::lround(hp_.at("degree")));
  if (degree < 0) throw FitError("Poly: negative degree");
  Eigen::MatrixXd A(train.size(), degree + 1);
  for (Eigen::Index i = 0; i < train.size(); ++i)
    A.row(i) = legendre(time_of_day(train.target_time(i), train.utc_offset), degree).transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < degree + 1)
    throw FitError("Poly: singular least-squares system for degree " + std::to_string(degree));
  coef_ = qr.solve(train.y);
}

Eigen::VectorXd PolyModel::do_predict(const Dataset& samples) const {
  const int degree = static_cast<int>(coef_.size()) - 1;
  Eigen::VectorXd out(samples.size());
  for (Eigen::Index i = 0; i < samples.size(); ++i)
    out[i] = legendre(time_of_day(samples.target_time(i), samples.utc_offset), degree).dot(coef_);
  return out;
}

void PolyModel::save_params(ParamBlob& blob) const { blob.arrays.emplace_back("coef", coef_); }

void PolyModel::load_params(const ParamBlob& blob) { coef_ = blob.array("coef").col(0); }

// -------------------------------------------------------------------- AR

double ArModel::step(const double* g, const double* c, const double* u) const {
  double v = beta_;
  for (int j = 0; j < order_; ++j) v += alpha_[j] * g[j];
  if (exogenous_) {
    for (int j = 0; j < order_; ++j) v += cho_[j] * c[j];
    for (int j = 0; j < order_; ++j) v += ins_[j] * u[j];
  }
  return v;
}

void ArModel::do_fit(const Dataset& train, const Dataset&) {
  const int p = static_cast<int>(std::lround(hp_.at("p")));
  const int H = train.history;
  if (p < 1 || p >= H) throw FitError(std::string(name(kind())) + ": order out of range");
  order_ = p;
  const int cols = (exogenous_ ? 3 * p : p) + 1;
  Eigen::MatrixXd A(train.size(), cols);
  Eigen::VectorXd b(train.size());
  for (Eigen::Index i = 0; i < train.size(); ++i) {
    for (int j = 0; j < p; ++j) {
      A(i, j) = train.scale_target(train.raw(i, kGlucose, H - 2 - j));
      if (exogenous_) {
        A(i, p + j) = train.raw(i, kCho, H - 2 - j);
        A(i, 2 * p + j) = train.raw(i, kInsulin, H - 2 - j);
      }
    }
    A(i, cols - 1) = 1.0;
    b[i] = train.scale_target(train.raw(i, kGlucose, H - 1));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < cols)
    throw FitError(std::string(name(kind())) + ": singular least-squares system for p=" +
                   std::to_string(p));
  const Eigen::VectorXd w = qr.solve(b);
  alpha_ = w.head(p);
  cho_ = exogenous_ ? Eigen::VectorXd(w.segment(p, p)) : Eigen::VectorXd::Zero(p);
  ins_ = exogenous_ ? Eigen::VectorXd(w.segment(2 * p, p)) : Eigen::VectorXd::Zero(p);
  beta_ = w[cols - 1];
}

Eigen::VectorXd ArModel::do_predict(const Dataset& samples) const {
  const int H = samples.history;
  const int steps = samples.ph_steps();
  const int p = order_;
  Eigen::VectorXd out(samples.size());
  std::vector<double> g(p), c(p), u(p);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    for (int j = 0; j < p; ++j) {
      g[j] = samples.scale_target(samples.raw(i, kGlucose, H - 1 - j));
      c[j] = samples.raw(i, kCho, H - 1 - j);
      u[j] = samples.raw(i, kInsulin, H - 1 - j);
    }
    double next = 0.0;
    for (int s = 0; s < steps; ++s) {
      next = step(g.data(), c.data(), u.data());
      for (int j = p - 1; j > 0; --j) {
        g[j] = g[j - 1];
        c[j] = c[j - 1];
        u[j] = u[j - 1];
      }
      g[0] = next;
      c[0] = 0.0;
      u[0] = 0.0;
    }
    out[i] = next;
  }
  return out;
}

Eigen::VectorXd ArModel::predict_one_step(const Dataset& samples) const {
  const int H = samples.history;
  const int p = order_;
  Eigen::VectorXd out(samples.size());
  std::vector<double> g(p), c(p), u(p);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    for (int j = 0; j < p; ++j) {
      g[j] = samples.scale_target(samples.raw(i, kGlucose, H - 1 - j));
      c[j] = samples.raw(i, kCho, H - 1 - j);
      u[j] = samples.raw(i, kInsulin, H - 1 - j);
    }
    out[i] = step(g.data(), c.data(), u.data());
  }
  return out;
}

void ArModel::save_params(ParamBlob& blob) const {
  blob.meta["order"] = order_;
  blob.meta["exogenous"] = exogenous_;
  blob.meta["intercept"] = beta_;
  blob.arrays.emplace_back("alpha", alpha_);
  blob.arrays.emplace_back("cho", cho_);
  blob.arrays.emplace_back("insulin", ins_);
}

void ArModel::load_params(const ParamBlob& blob) {
  order_ = blob.meta.at("order").get<int>();
  beta_ = blob.meta.at("intercept").get<double>();
  alpha_ = blob.array("alpha").col(0);
  cho_ = blob.array("cho").col(0);
  ins_ = blob.array("insulin").col(0);
}

}  // namespace glyfe::models
