#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "glyfe/core.hpp"

namespace glyfe {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-feature standardization fitted on a training set. Feature j is the
// flattened history cell (channel * H + step); the target has its own pair.
class Scaler {
 public:
  Scaler(Eigen::VectorXd mean, Eigen::VectorXd stddev, double target_mean, double target_std,
         std::vector<bool> degenerate, bool target_degenerate);

  static Scaler identity(int features);

  Eigen::Index features() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& stddev() const { return std_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  const std::vector<bool>& degenerate() const { return degenerate_; }
  bool target_degenerate() const { return target_degenerate_; }
  bool any_degenerate() const;

  double scale_feature(Eigen::Index j, double v) const { return (v - mean_[j]) / std_[j]; }
  double unscale_feature(Eigen::Index j, double z) const { return z * std_[j] + mean_[j]; }
  double scale_target(double v) const { return (v - target_mean_) / target_std_; }
  double invert_target(double z) const { return z * target_std_ + target_mean_; }

  bool operator==(const Scaler&) const = default;

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
  double target_mean_;
  double target_std_;
  std::vector<bool> degenerate_;
  bool target_degenerate_;
};

// Model-facing view of a SampleSet: one row per sample in scaled space.
struct Dataset {
  RowMatrix X;                    // n × (kChannels * history)
  Eigen::VectorXd y;              // scaled targets
  std::vector<Timestamp> t;       // issue times
  std::shared_ptr<const Scaler> scaler;  // null means identity
  int history = kHistoryLength;
  std::int64_t step = kCgmStep;
  Horizon horizon;
  std::int64_t utc_offset = 0;

  Eigen::Index size() const { return X.rows(); }
  bool empty() const { return X.rows() == 0; }
  int ph_steps() const { return horizon.steps(step); }
  Timestamp target_time(Eigen::Index i) const { return t[i] + horizon.seconds(); }
  Eigen::Index cell(int channel, int k) const { return channel * history + k; }

  // Physical value of a history cell.
  double raw(Eigen::Index i, int channel, int k) const {
    const double z = X(i, cell(channel, k));
    return scaler ? scaler->unscale_feature(cell(channel, k), z) : z;
  }
  double scale_target(double v) const { return scaler ? scaler->scale_target(v) : v; }
  double invert_target(double z) const { return scaler ? scaler->invert_target(z) : z; }
};

namespace preprocess {

// Bins a finer-grained record into target_step slots: glucose is the mean of
// present readings, CHO and insulin are sums.
PatientRecord resample(const PatientRecord& record, std::int64_t target_step = kCgmStep);

SampleSet make_samples(const PatientRecord& record, Horizon horizon,
                       int history = kHistoryLength);

SplitPlan make_split_plan(const PatientRecord& record,
                          TestAnchor anchor = TestAnchor::last_glucose);

struct SplitResult {
  SplitPlan plan;
  SampleSet test;
  std::array<SampleSet, kFolds> train;
  std::array<SampleSet, kFolds> valid;
};

SplitResult split(const PatientRecord& record, const SampleSet& samples,
                  TestAnchor anchor = TestAnchor::last_glucose);

// Fills glucose history gaps (interpolation inside, extrapolation at the
// recent edge, constant extension at the old edge) and removes samples
// without a target or with fewer than two known readings.
SampleSet recover_missing(const SampleSet& samples);

Scaler fit_scaler(const SampleSet& train);
Dataset apply(const Scaler& scaler, const SampleSet& set);
Dataset apply(std::shared_ptr<const Scaler> scaler, const SampleSet& set);
// Unscaled view (identity scaler); used by tests and exporters.
Dataset as_dataset(const SampleSet& set);
std::vector<double> invert_target(const Scaler& scaler, std::span<const double> values);

// One row per sample: t, 108 history cells, target (empty if missing).
std::string samples_to_csv(const SampleSet& set, std::string_view content_hash = {});
SampleSet samples_from_csv(std::string_view text, Horizon horizon, int history = kHistoryLength,
                           std::int64_t step = kCgmStep);
std::string csv_content_hash(std::string_view text);  // from the leading comment, or ""

}  // namespace preprocess
}  // namespace glyfe
