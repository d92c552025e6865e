#include "glyfe/models/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "glyfe/errors.hpp"
#include "glyfe/ingest.hpp"
#include "glyfe/models/elm.hpp"
#include "glyfe/models/ffnn.hpp"
#include "glyfe/models/kernel_machines.hpp"
#include "glyfe/models/linear.hpp"
#include "glyfe/models/lstm.hpp"

namespace glyfe::models {

namespace {

struct KindName {
  ModelKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {{ModelKind::base, "Base"}, {ModelKind::poly, "Poly"},
                               {ModelKind::ar, "AR"},     {ModelKind::arx, "ARX"},
                               {ModelKind::svr, "SVR"},   {ModelKind::gp, "GP"},
                               {ModelKind::elm, "ELM"},   {ModelKind::ffnn, "FFNN"},
                               {ModelKind::lstm, "LSTM"}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Pins values like 10^-3.0000000000000004 to the exact exponent.
double pow10_snapped(double e) {
  const double r = std::round(e);
  if (std::abs(e - r) < 1e-12) e = r;
  return std::pow(10.0, e);
}

}  // namespace

const char* name(ModelKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "?";
}

ModelKind parse_kind(std::string_view s) {
  const std::string l = lower(s);
  for (const auto& k : kKinds)
    if (lower(k.name) == l) return k.kind;
  if (l == "ref") return ModelKind::base;
  throw ArgumentError("unknown model '" + std::string(s) + "'");
}

const std::vector<ModelKind>& all_kinds() {
  static const std::vector<ModelKind> kinds = [] {
    std::vector<ModelKind> v;
    for (const auto& k : kKinds) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

// ------------------------------------------------------------------ axes

void HyperparamAxis::validate() const {
  if (frozen) return;
  if (!explicit_points.empty()) {
    if (!std::is_sorted(explicit_points.begin(), explicit_points.end()))
      throw ArgumentError("axis " + name + ": explicit points must be ascending");
    return;
  }
  if (!(lo < hi)) throw ArgumentError("axis " + name + ": lower bound must be below upper bound");
  if (scale == AxisScale::log10 && lo <= 0.0)
    throw ArgumentError("axis " + name + ": log axis needs positive bounds");
  if (points < 1) throw ArgumentError("axis " + name + ": needs at least one point");
}

std::vector<double> HyperparamAxis::grid() const {
  validate();
  if (frozen) return {*frozen};
  std::vector<double> g;
  if (!explicit_points.empty()) {
    g = explicit_points;
  } else if (points == 1) {
    g.push_back(scale == AxisScale::log10 ? std::sqrt(lo * hi) : 0.5 * (lo + hi));
  } else {
    for (int k = 0; k < points; ++k) {
      const double w = static_cast<double>(k) / (points - 1);
      if (scale == AxisScale::log10) {
        const double a = std::log10(lo);
        const double b = std::log10(hi);
        g.push_back(k == 0 ? lo : k == points - 1 ? hi : pow10_snapped(a + w * (b - a)));
      } else {
        g.push_back(k == 0 ? lo : k == points - 1 ? hi : lo + w * (hi - lo));
      }
    }
  }
  if (integer) {
    for (auto& v : g) v = std::round(v);
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }
  return g;
}

double HyperparamAxis::midpoint(double a, double b) const {
  double m = scale == AxisScale::log10
                 ? pow10_snapped(0.5 * (std::log10(a) + std::log10(b)))
                 : 0.5 * (a + b);
  if (integer) m = std::round(m);
  return m;
}

std::size_t HyperparamSpace::grid_size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.grid().size();
  return n;
}

std::size_t HyperparamSpace::free_axes() const {
  return static_cast<std::size_t>(
      std::count_if(axes.begin(), axes.end(), [](const auto& a) { return !a.frozen; }));
}

// ----------------------------------------------------------- hyperparams

double Hyperparams::at(std::string_view n) const {
  for (const auto& [k, v] : values)
    if (k == n) return v;
  throw ArgumentError("missing hyperparameter '" + std::string(n) + "'");
}

bool Hyperparams::operator<(const Hyperparams& other) const {
  const std::size_t n = std::min(values.size(), other.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i].second < other.values[i].second) return true;
    if (other.values[i].second < values[i].second) return false;
  }
  return values.size() < other.values.size();
}

nlohmann::json Hyperparams::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [k, v] : values) j.push_back({k, v});
  return j;
}

Hyperparams Hyperparams::from_json(const nlohmann::json& j) {
  Hyperparams hp;
  for (const auto& e : j) hp.values.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
  return hp;
}

std::string Hyperparams::key() const {
  std::string s;
  for (const auto& [k, v] : values) {
    if (!s.empty()) s += ';';
    s += k + "=" + ingest::format_number(v);
  }
  return s;
}

// -------------------------------------------------------------- settings

const char* to_string(Profile p) { return p == Profile::full ? "full" : "desk"; }

Profile parse_profile(std::string_view s) {
  if (s == "full") return Profile::full;
  if (s == "desk") return Profile::desk;
  throw ArgumentError("unknown profile '" + std::string(s) + "'");
}

ModelSettings ModelSettings::for_profile(Profile p) {
  ModelSettings s;
  s.profile = p;
  if (p == Profile::desk) {
    s.coarse_points = 3;
    s.coarse_points_single = 3;
    s.elm_widths = {200, 500, 1000, 2000};
    s.ffnn_max_epochs = 100;
    s.lstm_hidden = 16;
    s.lstm_max_epochs = 20;
    s.lstm_patience = 10;
  }
  return s;
}

nlohmann::json ModelSettings::to_json() const {
  return {{"profile", to_string(profile)},
          {"coarse_points", coarse_points},
          {"coarse_points_single", coarse_points_single},
          {"elm_widths", elm_widths},
          {"ffnn_layers", ffnn_layers},
          {"ffnn_batch", ffnn_batch},
          {"ffnn_patience", ffnn_patience},
          {"ffnn_max_epochs", ffnn_max_epochs},
          {"lstm_hidden", lstm_hidden},
          {"lstm_layers", lstm_layers},
          {"lstm_batch", lstm_batch},
          {"lstm_patience", lstm_patience},
          {"lstm_max_epochs", lstm_max_epochs},
          {"lstm_l2", lstm_l2},
          {"svr_tolerance", svr_tolerance},
          {"svr_max_passes", svr_max_passes}};
}

HyperparamSpace space_for(ModelKind kind, const ModelSettings& s) {
  auto log_axis = [](std::string n, double lo, double hi, int pts) {
    HyperparamAxis a;
    a.name = std::move(n);
    a.scale = AxisScale::log10;
    a.lo = lo;
    a.hi = hi;
    a.points = pts;
    return a;
  };
  const int single = s.coarse_points_single;
  const int multi = s.coarse_points;
  HyperparamSpace space;
  switch (kind) {
    case ModelKind::base:
      break;
    case ModelKind::poly: {
      auto a = log_axis("degree", 1, 100, single);
      a.integer = true;
      space.axes.push_back(a);
      break;
    }
    case ModelKind::ar:
    case ModelKind::arx: {
      HyperparamAxis p;
      p.name = "p";
      p.scale = AxisScale::linear;
      p.lo = 1;
      p.hi = 12;
      p.points = single;
      p.integer = true;
      space.axes.push_back(p);
      break;
    }
    case ModelKind::svr:
      space.axes.push_back(log_axis("gamma", 1e-4, 1e-2, multi));
      space.axes.push_back(log_axis("C", 1e0, 1e3, multi));
      space.axes.push_back(log_axis("epsilon", 1e-3, 1e0, multi));
      break;
    case ModelKind::gp:
      space.axes.push_back(log_axis("alpha", 1e-3, 1e2, single));
      break;
    case ModelKind::elm: {
      HyperparamAxis w;
      w.name = "neurons";
      w.scale = AxisScale::log10;
      w.integer = true;
      w.explicit_points = s.elm_widths;
      space.axes.push_back(w);
      space.axes.push_back(log_axis("lambda", 1e0, 1e3, multi));
      break;
    }
    case ModelKind::ffnn:
      space.axes.push_back(log_axis("lr", 1e-4, 1e-2, single));
      break;
    case ModelKind::lstm:
      space.axes.push_back(log_axis("lr", 1e-4, 1e-3, single));
      break;
  }
  return space;
}

// ------------------------------------------------------------------ blob

const Eigen::MatrixXd& ParamBlob::array(std::string_view n) const {
  for (const auto& [k, m] : arrays)
    if (k == n) return m;
  throw FormatError("model blob lacks array '" + std::string(n) + "'");
}

namespace {
constexpr char kMagic[8] = {'G', 'L', 'Y', 'F', 'E', 'M', 'D', 'L'};
constexpr std::uint32_t kBlobVersion = 1;
}  // namespace

std::string ParamBlob::encode() const {
  nlohmann::json header = {{"meta", meta}, {"arrays", nlohmann::json::array()}};
  for (const auto& [k, m] : arrays) header["arrays"].push_back({{"name", k}, {"rows", m.rows()}, {"cols", m.cols()}});
  const std::string h = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  const std::uint32_t version = kBlobVersion;
  const std::uint64_t hsize = h.size();
  out.append(reinterpret_cast<const char*>(&version), sizeof(version));
  out.append(reinterpret_cast<const char*>(&hsize), sizeof(hsize));
  out += h;
  for (const auto& [k, m] : arrays)
    out.append(reinterpret_cast<const char*>(m.data()),
               static_cast<std::size_t>(m.size()) * sizeof(double));
  return out;
}

ParamBlob ParamBlob::decode(std::string_view bytes) {
  const std::size_t fixed = sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (bytes.size() < fixed || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a model blob");
  std::uint32_t version = 0;
  std::uint64_t hsize = 0;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
  std::memcpy(&hsize, bytes.data() + sizeof(kMagic) + sizeof(version), sizeof(hsize));
  if (version != kBlobVersion) throw FormatError("unsupported model blob version");
  if (bytes.size() < fixed + hsize) throw FormatError("truncated model blob");
  const auto header = nlohmann::json::parse(bytes.substr(fixed, hsize));
  ParamBlob blob;
  blob.meta = header.at("meta");
  std::size_t pos = fixed + hsize;
  for (const auto& a : header.at("arrays")) {
    const auto rows = a.at("rows").get<Eigen::Index>();
    const auto cols = a.at("cols").get<Eigen::Index>();
    Eigen::MatrixXd m(rows, cols);
    const std::size_t n = static_cast<std::size_t>(rows * cols) * sizeof(double);
    if (bytes.size() < pos + n) throw FormatError("truncated model blob");
    std::memcpy(m.data(), bytes.data() + pos, n);
    pos += n;
    blob.arrays.emplace_back(a.at("name").get<std::string>(), std::move(m));
  }
  return blob;
}

// ------------------------------------------------------------- predictor

void Predictor::fit(const Dataset& train, const Dataset& valid, const Hyperparams& hp,
                    std::uint64_t seed) {
  if (train.empty()) throw FitError(std::string(name(kind())) + ": empty training set");
  hp_ = hp;
  seed_ = seed;
  curve_.clear();
  best_epoch_ = 0;
  do_fit(train, valid);
  fitted_ = true;
}

Eigen::VectorXd Predictor::predict(const Dataset& samples) const {
  if (!fitted_) throw Error(std::string(name(kind())) + ": predict called before fit");
  if (samples.empty()) return Eigen::VectorXd(0);
  Eigen::VectorXd out = do_predict(samples);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i]))
      throw PredictionError(std::string(name(kind())) + ": non-finite prediction for sample at t=" +
                            std::to_string(samples.t[i]));
  }
  return out;
}

ParamBlob Predictor::save() const {
  ParamBlob blob;
  blob.meta = {{"kind", name(kind())},
               {"strategy", strategy()},
               {"hp", hp_.to_json()},
               {"seed", seed_},
               {"best_epoch", best_epoch_},
               {"validation_curve", curve_}};
  save_params(blob);
  return blob;
}

void Predictor::load(const ParamBlob& blob) {
  if (parse_kind(blob.meta.at("kind").get<std::string>()) != kind())
    throw FormatError("model blob holds a different model kind");
  hp_ = Hyperparams::from_json(blob.meta.at("hp"));
  seed_ = blob.meta.at("seed").get<std::uint64_t>();
  best_epoch_ = blob.meta.value("best_epoch", std::size_t{0});
  curve_ = blob.meta.value("validation_curve", std::vector<double>{});
  load_params(blob);
  fitted_ = true;
}

std::unique_ptr<Predictor> make_predictor(ModelKind kind, const ModelSettings& s) {
  switch (kind) {
    case ModelKind::base:
      return std::make_unique<BaseModel>();
    case ModelKind::poly:
      return std::make_unique<PolyModel>();
    case ModelKind::ar:
      return std::make_unique<ArModel>(false);
    case ModelKind::arx:
      return std::make_unique<ArModel>(true);
    case ModelKind::svr:
      return std::make_unique<SvrModel>(s.svr_tolerance, s.svr_max_passes, s.svr_cache_mb);
    case ModelKind::gp:
      return std::make_unique<GpModel>();
    case ModelKind::elm:
      return std::make_unique<ElmModel>();
    case ModelKind::ffnn:
      return std::make_unique<FfnnModel>(s.ffnn_layers, s.ffnn_batch, s.ffnn_patience,
                                         s.ffnn_max_epochs);
    case ModelKind::lstm:
      return std::make_unique<LstmModel>(s.lstm_hidden, s.lstm_layers, s.lstm_batch,
                                         s.lstm_patience, s.lstm_max_epochs, s.lstm_l2);
  }
  throw ArgumentError("unknown model kind");
}

std::unique_ptr<Predictor> load_predictor(std::string_view bytes, const ModelSettings& s) {
  const ParamBlob blob = ParamBlob::decode(bytes);
  auto model = make_predictor(parse_kind(blob.meta.at("kind").get<std::string>()), s);
  model->load(blob);
  return model;
}

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size() || pred.size() == 0)
    throw ArgumentError("mse: empty or mismatched vectors");
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

}  // namespace glyfe::models
