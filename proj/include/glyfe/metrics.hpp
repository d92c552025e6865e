#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glyfe/core.hpp"

namespace glyfe::metrics {

double rmse(const PredictionSeries& series);
double mape(const PredictionSeries& series);
// PH minus the lag (minutes) maximizing the correlation between the truth
// and the shifted predictions.
double time_gain(const PredictionSeries& series);

enum class Region { hypo, eu, hyper };
const char* to_string(Region r);
inline constexpr std::array<Region, 3> kRegions{Region::hypo, Region::eu, Region::hyper};

struct RatePoint {
  Timestamp t = 0;
  double y_true = 0.0;
  double y_pred = 0.0;
  double true_rate = 0.0;  // mg/dL/min
  double pred_rate = 0.0;
};

// Linear predicate x*X + y*Y <op> rhs with optional rate expansion.
struct Constraint {
  enum class Op { lt, le, gt, ge };
  enum class Expand { none, upper, lower };
  double x = 0.0;
  double y = 0.0;
  Op op = Op::le;
  double rhs = 0.0;
  Expand expand = Expand::none;

  bool holds(double X, double Y, double upper, double lower) const;
};

struct Zone {
  std::string name;
  std::vector<std::vector<Constraint>> any;
};

struct ZoneGrid {
  std::vector<Zone> zones;  // priority order
  std::string fallback;

  std::string classify(double x, double y, double upper = 0.0, double lower = 0.0) const;
};

struct Expansion {
  std::optional<double> min, max;
  bool min_inclusive = true;
  bool max_inclusive = true;
  double upper = 0.0;
  double lower = 0.0;

  bool contains(double rate) const;
};

enum class Outcome { AP, BE, EP };
const char* to_string(Outcome o);

struct CgEgaTables {
  int version = 0;
  double hypo_below = 70.0;
  double hyper_above = 180.0;
  std::vector<Expansion> expansion;
  ZoneGrid p_grid;
  ZoneGrid r_grid;
  double rate_clamp = 4.0;
  // region -> (P zone, R zone) -> outcome; pairs not listed map to `otherwise`
  std::array<std::map<std::pair<std::string, std::string>, Outcome>, 3> lookup;
  Outcome otherwise = Outcome::EP;

  static CgEgaTables from_json(const nlohmann::json& j);
  static CgEgaTables load(const std::filesystem::path& path);
  // cg_ega_tables_v1.json from the data directory, else from the source tree.
  static const CgEgaTables& standard();

  Region region(double y_true) const;
  std::string p_ega(const RatePoint& p) const;
  std::string r_ega(const RatePoint& p) const;
  Outcome outcome(Region region, const std::string& p_zone, const std::string& r_zone) const;
};

// GLYFE_DATA_DIR if set, else the data directory of the source tree.
std::filesystem::path data_dir();

// Points with a complete predecessor one grid step earlier.
std::vector<RatePoint> rate_points(const PredictionSeries& series, std::size_t* excluded = nullptr);

struct RegionCounts {
  std::size_t ap = 0, be = 0, ep = 0;
  std::size_t total() const { return ap + be + ep; }
  // Fractions in [0, 1]; absent for an empty region.
  std::optional<double> rate(Outcome o) const;
};

struct CgEgaReport {
  std::array<RegionCounts, 3> regions;
  std::map<std::string, std::size_t> p_hist;
  std::map<std::string, std::size_t> r_hist;
  std::size_t classified = 0;
  std::size_t excluded = 0;
  std::vector<RatePoint> points;
  std::vector<std::pair<std::string, std::string>> zones;  // per point (P, R)

  const RegionCounts& at(Region r) const { return regions[static_cast<int>(r)]; }
  nlohmann::json to_json() const;
};

CgEgaReport cg_ega(const PredictionSeries& series, const CgEgaTables& tables = CgEgaTables::standard());

// Named metric values for one (patient, model, PH, fold). CG-EGA rates are in
// percent; entries are absent when undefined.
std::map<std::string, double> evaluate(const PredictionSeries& series,
                                       const CgEgaTables& tables = CgEgaTables::standard());

// Metric names in table order.
const std::vector<std::string>& accuracy_metrics();  // RMSE, MAPE, TG
const std::vector<std::string>& cg_ega_metrics();    // AP/BE/EP per region

struct MetricRow {
  std::string dataset;
  std::string patient;
  std::string model;
  int horizon = 30;
  int fold = 0;
  std::map<std::string, double> values;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population, over patients
  std::size_t patients = 0;
};

struct AggregateKey {
  std::string dataset;
  std::string model;
  int horizon = 30;
  std::string metric;
  auto operator<=>(const AggregateKey&) const = default;
};

// Fold mean per patient, then mean and population std over patients. Keys
// without any value are left out, so absent cells stay absent.
std::map<AggregateKey, Summary> aggregate(const std::vector<MetricRow>& rows);

}  // namespace glyfe::metrics
