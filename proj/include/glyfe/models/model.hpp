#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "glyfe/preprocess.hpp"

namespace glyfe::models {

enum class ModelKind { base, poly, ar, arx, svr, gp, elm, ffnn, lstm };

const char* name(ModelKind kind);
ModelKind parse_kind(std::string_view name);
const std::vector<ModelKind>& all_kinds();

enum class AxisScale { linear, log10 };

struct HyperparamAxis {
  std::string name;
  AxisScale scale = AxisScale::log10;
  double lo = 0.0;
  double hi = 0.0;
  int points = 3;
  bool integer = false;
  std::optional<double> frozen;
  std::vector<double> explicit_points;  // overrides lo/hi/points when set

  // Ascending coarse grid along this axis.
  std::vector<double> grid() const;
  // Midpoint of two axis values (geometric on log axes, rounded on integer axes).
  double midpoint(double a, double b) const;
  void validate() const;
};

struct HyperparamSpace {
  std::vector<HyperparamAxis> axes;

  std::size_t grid_size() const;
  std::size_t free_axes() const;
};

// Ordered name -> value assignment; order follows the space declaration.
struct Hyperparams {
  std::vector<std::pair<std::string, double>> values;

  double at(std::string_view name) const;
  bool operator==(const Hyperparams&) const = default;
  // Lexicographic on the value vector.
  bool operator<(const Hyperparams& other) const;
  nlohmann::json to_json() const;
  static Hyperparams from_json(const nlohmann::json& j);
  std::string key() const;  // stable text form
};

enum class Profile { full, desk };
const char* to_string(Profile p);
Profile parse_profile(std::string_view s);

// Profile-dependent model sizes and budgets.
struct ModelSettings {
  Profile profile = Profile::full;
  int coarse_points = 3;         // per axis, multi-axis spaces
  int coarse_points_single = 5;  // single-axis spaces
  std::vector<double> elm_widths{2000, 5000, 10000, 20000};
  std::vector<int> ffnn_layers{128, 64, 32, 16};
  int ffnn_batch = 1500;
  int ffnn_patience = 100;
  int ffnn_max_epochs = 500;
  int lstm_hidden = 256;
  int lstm_layers = 2;
  int lstm_batch = 50;
  int lstm_patience = 50;
  int lstm_max_epochs = 500;
  double lstm_l2 = 1e-4;
  double svr_tolerance = 1e-3;
  double svr_max_passes = 1e4;
  double svr_cache_mb = 512;

  static ModelSettings for_profile(Profile p);
  nlohmann::json to_json() const;
};

HyperparamSpace space_for(ModelKind kind, const ModelSettings& settings);

// Self-describing parameter container: JSON metadata plus named arrays.
struct ParamBlob {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> arrays;

  const Eigen::MatrixXd& array(std::string_view name) const;
  // "GLYFEMDL" | u32 version | u64 header size | JSON header | raw f64 data
  std::string encode() const;
  static ParamBlob decode(std::string_view bytes);
};

class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual ModelKind kind() const = 0;
  // "direct" or "recursive" multi-step strategy.
  virtual const char* strategy() const { return "direct"; }

  void fit(const Dataset& train, const Dataset& valid, const Hyperparams& hp, std::uint64_t seed);
  // Scaled-space predictions; throws PredictionError on non-finite output.
  Eigen::VectorXd predict(const Dataset& samples) const;

  ParamBlob save() const;
  void load(const ParamBlob& blob);

  const Hyperparams& hyperparams() const { return hp_; }
  std::uint64_t seed() const { return seed_; }
  // Validation MSE per epoch for iterative models.
  const std::vector<double>& validation_curve() const { return curve_; }
  std::size_t best_epoch() const { return best_epoch_; }

 protected:
  virtual void do_fit(const Dataset& train, const Dataset& valid) = 0;
  virtual Eigen::VectorXd do_predict(const Dataset& samples) const = 0;
  virtual void save_params(ParamBlob& blob) const = 0;
  virtual void load_params(const ParamBlob& blob) = 0;

  Hyperparams hp_;
  std::uint64_t seed_ = 0;
  std::vector<double> curve_;
  std::size_t best_epoch_ = 0;
  bool fitted_ = false;
};

std::unique_ptr<Predictor> make_predictor(ModelKind kind, const ModelSettings& settings);
std::unique_ptr<Predictor> load_predictor(std::string_view bytes, const ModelSettings& settings);

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

}  // namespace glyfe::models
