#include "glyfe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "glyfe/errors.hpp"
#include "glyfe/ingest.hpp"

#ifndef GLYFE_SOURCE_DATA_DIR
#define GLYFE_SOURCE_DATA_DIR "data"
#endif

namespace glyfe::metrics {

namespace {

template <typename F>
void for_complete(const PredictionSeries& s, F&& f) {
  for (std::size_t k = 0; k < s.entries.size(); ++k)
    if (s.entries[k]) f(k, *s.entries[k]);
}

}  // namespace

double rmse(const PredictionSeries& series) {
  double sum = 0.0;
  std::size_t n = 0;
  for_complete(series, [&](std::size_t, const PredictionEntry& e) {
    sum += (e.pred - e.truth) * (e.pred - e.truth);
    ++n;
  });
  if (n == 0) throw MetricUndefined("RMSE of an empty series");
  return std::sqrt(sum / static_cast<double>(n));
}

double mape(const PredictionSeries& series) {
  double sum = 0.0;
  std::size_t n = 0;
  for_complete(series, [&](std::size_t k, const PredictionEntry& e) {
    if (!(e.truth > 0))
      throw MetricUndefined("MAPE with non-positive reference at t=" +
                            std::to_string(series.grid.time_at(k)));
    sum += std::abs(e.truth - e.pred) / e.truth;
    ++n;
  });
  if (n == 0) throw MetricUndefined("MAPE of an empty series");
  return 100.0 * sum / static_cast<double>(n);
}

double time_gain(const PredictionSeries& series) {
  const int max_shift = series.horizon.steps(series.grid.step);
  const std::size_t n = series.entries.size();
  std::optional<int> best_shift;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> a, b;
  for (int i = 0; i <= max_shift; ++i) {
    a.clear();
    b.clear();
    for (std::size_t k = 0; k + static_cast<std::size_t>(i) < n; ++k) {
      const auto& g = series.entries[k];
      const auto& p = series.entries[k + i];
      if (g && p) {
        a.push_back(g->truth);
        b.push_back(p->pred);
      }
    }
    if (a.size() < 3) continue;
    const double m = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      ma += a[k];
      mb += b[k];
    }
    ma /= m;
    mb /= m;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      sab += (a[k] - ma) * (b[k] - mb);
      saa += (a[k] - ma) * (a[k] - ma);
      sbb += (b[k] - mb) * (b[k] - mb);
    }
    if (saa <= 0 || sbb <= 0) continue;
    const double corr = (sab / m) / (std::sqrt(saa / m) * std::sqrt(sbb / m));
    if (corr > best) {
      best = corr;
      best_shift = i;
    }
  }
  if (!best_shift) throw MetricUndefined("time gain: no shift with enough varying pairs");
  return series.horizon.minutes -
         static_cast<double>(*best_shift) * static_cast<double>(series.grid.step) / 60.0;
}

// ------------------------------------------------------------- CG-EGA

const char* to_string(Region r) {
  switch (r) {
    case Region::hypo:
      return "hypo";
    case Region::eu:
      return "eu";
    case Region::hyper:
      return "hyper";
  }
  return "?";
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::AP:
      return "AP";
    case Outcome::BE:
      return "BE";
    case Outcome::EP:
      return "EP";
  }
  return "?";
}

bool Constraint::holds(double X, double Y, double upper, double lower) const {
  double r = rhs;
  if (expand == Expand::upper) r += upper;
  if (expand == Expand::lower) r -= lower;
  const double v = x * X + y * Y;
  switch (op) {
    case Op::lt:
      return v < r;
    case Op::le:
      return v <= r;
    case Op::gt:
      return v > r;
    case Op::ge:
      return v >= r;
  }
  return false;
}

std::string ZoneGrid::classify(double x, double y, double upper, double lower) const {
  for (const auto& z : zones)
    for (const auto& all : z.any)
      if (std::all_of(all.begin(), all.end(),
                      [&](const Constraint& c) { return c.holds(x, y, upper, lower); }))
        return z.name;
  return fallback;
}

bool Expansion::contains(double rate) const {
  if (min && (min_inclusive ? rate < *min : rate <= *min)) return false;
  if (max && (max_inclusive ? rate > *max : rate >= *max)) return false;
  return true;
}

namespace {

Constraint parse_constraint(const nlohmann::json& j) {
  Constraint c;
  c.x = j.at("x").get<double>();
  c.y = j.at("y").get<double>();
  c.rhs = j.at("rhs").get<double>();
  const auto op = j.at("op").get<std::string>();
  if (op == "<") c.op = Constraint::Op::lt;
  else if (op == "<=") c.op = Constraint::Op::le;
  else if (op == ">") c.op = Constraint::Op::gt;
  else if (op == ">=") c.op = Constraint::Op::ge;
  else throw FormatError("CG-EGA tables: unknown operator '" + op + "'");
  const auto ex = j.value("expand", std::string("none"));
  if (ex == "upper") c.expand = Constraint::Expand::upper;
  else if (ex == "lower") c.expand = Constraint::Expand::lower;
  else if (ex != "none") throw FormatError("CG-EGA tables: unknown expansion '" + ex + "'");
  return c;
}

ZoneGrid parse_grid(const nlohmann::json& j) {
  ZoneGrid g;
  for (const auto& z : j.at("zones")) {
    Zone zone;
    zone.name = z.at("name").get<std::string>();
    for (const auto& alt : z.at("any")) {
      std::vector<Constraint> cs;
      for (const auto& c : alt) cs.push_back(parse_constraint(c));
      zone.any.push_back(std::move(cs));
    }
    g.zones.push_back(std::move(zone));
  }
  g.fallback = j.at("default").get<std::string>();
  return g;
}

Outcome parse_outcome(const std::string& s) {
  if (s == "AP") return Outcome::AP;
  if (s == "BE") return Outcome::BE;
  if (s == "EP") return Outcome::EP;
  throw FormatError("CG-EGA tables: unknown outcome '" + s + "'");
}

std::optional<double> opt_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

CgEgaTables CgEgaTables::from_json(const nlohmann::json& j) {
  CgEgaTables t;
  try {
    t.version = j.at("version").get<int>();
    t.hypo_below = j.at("regions").at("hypo_below").get<double>();
    t.hyper_above = j.at("regions").at("hyper_above").get<double>();
    const auto& p = j.at("p_ega");
    for (const auto& e : p.at("expansion")) {
      Expansion x;
      x.min = opt_number(e, "min");
      x.max = opt_number(e, "max");
      x.min_inclusive = e.value("min_inclusive", true);
      x.max_inclusive = e.value("max_inclusive", true);
      x.upper = e.value("upper", 0.0);
      x.lower = e.value("lower", 0.0);
      t.expansion.push_back(x);
    }
    t.p_grid = parse_grid(p);
    t.r_grid = parse_grid(j.at("r_ega"));
    t.rate_clamp = j.at("r_ega").value("clamp", 4.0);
    const auto& lk = j.at("lookup");
    for (Region r : kRegions) {
      for (const auto& [outcome, blocks] : lk.at(to_string(r)).items()) {
        const Outcome o = parse_outcome(outcome);
        for (const auto& b : blocks)
          for (const auto& pz : b.at("p"))
            for (const auto& rz : b.at("r"))
              t.lookup[static_cast<int>(r)][{pz.get<std::string>(), rz.get<std::string>()}] = o;
      }
    }
    t.otherwise = parse_outcome(lk.value("otherwise", std::string("EP")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("CG-EGA tables: ") + e.what());
  }
  return t;
}

CgEgaTables CgEgaTables::load(const std::filesystem::path& path) {
  const std::string text = ingest::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("CG-EGA tables " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::filesystem::path data_dir() {
  if (const char* d = std::getenv("GLYFE_DATA_DIR"); d && *d) return d;
  return GLYFE_SOURCE_DATA_DIR;
}

const CgEgaTables& CgEgaTables::standard() {
  static const CgEgaTables tables = [] {
    const auto name = "cg_ega_tables_v1.json";
    const auto p = data_dir() / name;
    return load(std::filesystem::exists(p) ? p : std::filesystem::path(GLYFE_SOURCE_DATA_DIR) / name);
  }();
  return tables;
}

Region CgEgaTables::region(double y_true) const {
  if (y_true < hypo_below) return Region::hypo;
  if (y_true > hyper_above) return Region::hyper;
  return Region::eu;
}

std::string CgEgaTables::p_ega(const RatePoint& p) const {
  double upper = 0.0, lower = 0.0;
  for (const auto& e : expansion) {
    if (e.contains(p.true_rate)) {
      upper = e.upper;
      lower = e.lower;
      break;
    }
  }
  return p_grid.classify(p.y_true, p.y_pred, upper, lower);
}

std::string CgEgaTables::r_ega(const RatePoint& p) const {
  const double x = std::clamp(p.true_rate, -rate_clamp, rate_clamp);
  const double y = std::clamp(p.pred_rate, -rate_clamp, rate_clamp);
  return r_grid.classify(x, y);
}

Outcome CgEgaTables::outcome(Region region, const std::string& pz, const std::string& rz) const {
  const auto& m = lookup[static_cast<int>(region)];
  const auto it = m.find({pz, rz});
  return it == m.end() ? otherwise : it->second;
}

std::vector<RatePoint> rate_points(const PredictionSeries& series, std::size_t* excluded) {
  std::vector<RatePoint> out;
  std::size_t skipped = 0;
  const double minutes = static_cast<double>(series.grid.step) / 60.0;
  for (std::size_t k = 0; k < series.entries.size(); ++k) {
    const auto& e = series.entries[k];
    if (!e) continue;
    const auto* prev = k > 0 && series.entries[k - 1] ? &*series.entries[k - 1] : nullptr;
    if (!prev) {
      ++skipped;
      continue;
    }
    RatePoint p;
    p.t = series.grid.time_at(k);
    p.y_true = e->truth;
    p.y_pred = e->pred;
    p.true_rate = (e->truth - prev->truth) / minutes;
    p.pred_rate = (e->pred - prev->pred) / minutes;
    out.push_back(p);
  }
  if (excluded) *excluded = skipped;
  return out;
}

std::optional<double> RegionCounts::rate(Outcome o) const {
  const std::size_t n = total();
  if (n == 0) return std::nullopt;
  const std::size_t c = o == Outcome::AP ? ap : o == Outcome::BE ? be : ep;
  return static_cast<double>(c) / static_cast<double>(n);
}

CgEgaReport cg_ega(const PredictionSeries& series, const CgEgaTables& tables) {
  CgEgaReport rep;
  rep.points = rate_points(series, &rep.excluded);
  if (rep.points.empty()) throw MetricUndefined("CG-EGA: no point with a defined rate");
  for (const auto& p : rep.points) {
    const std::string pz = tables.p_ega(p);
    const std::string rz = tables.r_ega(p);
    ++rep.p_hist[pz];
    ++rep.r_hist[rz];
    auto& c = rep.regions[static_cast<int>(tables.region(p.y_true))];
    switch (tables.outcome(tables.region(p.y_true), pz, rz)) {
      case Outcome::AP:
        ++c.ap;
        break;
      case Outcome::BE:
        ++c.be;
        break;
      case Outcome::EP:
        ++c.ep;
        break;
    }
    rep.zones.emplace_back(pz, rz);
  }
  rep.classified = rep.points.size();
  return rep;
}

nlohmann::json CgEgaReport::to_json() const {
  nlohmann::json j;
  for (Region r : kRegions) {
    const auto& c = at(r);
    j["regions"][to_string(r)] = {{"points", c.total()}, {"AP", c.ap}, {"BE", c.be}, {"EP", c.ep}};
  }
  j["p_ega"] = p_hist;
  j["r_ega"] = r_hist;
  j["classified"] = classified;
  j["excluded"] = excluded;
  return j;
}

const std::vector<std::string>& accuracy_metrics() {
  static const std::vector<std::string> m{"RMSE", "MAPE", "TG"};
  return m;
}

const std::vector<std::string>& cg_ega_metrics() {
  static const std::vector<std::string> m = [] {
    std::vector<std::string> v;
    for (Region r : kRegions)
      for (Outcome o : {Outcome::AP, Outcome::BE, Outcome::EP})
        v.push_back(std::string(to_string(o)) + "_" + to_string(r));
    return v;
  }();
  return m;
}

std::map<std::string, double> evaluate(const PredictionSeries& series, const CgEgaTables& tables) {
  std::map<std::string, double> v;
  v["RMSE"] = rmse(series);
  v["MAPE"] = mape(series);
  try {
    v["TG"] = time_gain(series);
  } catch (const MetricUndefined&) {
  }
  try {
    const CgEgaReport rep = cg_ega(series, tables);
    for (Region r : kRegions)
      for (Outcome o : {Outcome::AP, Outcome::BE, Outcome::EP})
        if (const auto x = rep.at(r).rate(o))
          v[std::string(to_string(o)) + "_" + to_string(r)] = 100.0 * *x;
  } catch (const MetricUndefined&) {
  }
  return v;
}

std::map<AggregateKey, Summary> aggregate(const std::vector<MetricRow>& rows) {
  // (key, patient) -> fold values
  std::map<std::pair<AggregateKey, std::string>, std::pair<double, std::size_t>> per_patient;
  for (const auto& row : rows) {
    for (const auto& [metric, value] : row.values) {
      auto& acc = per_patient[{{row.dataset, row.model, row.horizon, metric}, row.patient}];
      acc.first += value;
      ++acc.second;
    }
  }
  std::map<AggregateKey, std::vector<double>> patients;
  for (const auto& [k, acc] : per_patient)
    patients[k.first].push_back(acc.first / static_cast<double>(acc.second));
  std::map<AggregateKey, Summary> out;
  for (const auto& [k, vals] : patients) {
    Summary s;
    s.patients = vals.size();
    const double n = static_cast<double>(vals.size());
    for (double v : vals) s.mean += v;
    s.mean /= n;
    double ss = 0.0;
    for (double v : vals) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / n);
    out[k] = s;
  }
  return out;
}

}  // namespace glyfe::metrics
