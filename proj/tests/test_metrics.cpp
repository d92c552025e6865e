#include <doctest.h>

#include <cmath>

#include "glyfe/errors.hpp"
#include "glyfe/metrics.hpp"
#include "glyfe/rng.hpp"

using namespace glyfe;
using namespace glyfe::metrics;

namespace {

PredictionSeries series(const std::vector<double>& truth, const std::vector<double>& pred,
                        int ph = 30) {
  PredictionSeries s;
  s.grid = TimeGrid{1577836800, 300, truth.size()};
  s.horizon = Horizon{ph};
  for (std::size_t k = 0; k < truth.size(); ++k) s.entries.push_back(PredictionEntry{truth[k], pred[k]});
  return s;
}

std::vector<double> ramp_sine(int n) {
  std::vector<double> g;
  for (int k = 0; k < n; ++k) g.push_back(100 + 0.3 * k + 40 * std::sin(k / 11.0) + 7 * std::sin(k / 3.7));
  return g;
}

// Brute-force TG: correlation through explicit sums at every shift.
double brute_tg(const std::vector<double>& g, const std::vector<double>& p, int ph) {
  int best = -1;
  double bestc = -2;
  for (int i = 0; i <= ph / 5; ++i) {
    const int n = static_cast<int>(g.size()) - i;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int k = 0; k < n; ++k) {
      sx += g[k];
      sy += p[k + i];
      sxx += g[k] * g[k];
      syy += p[k + i] * p[k + i];
      sxy += g[k] * p[k + i];
    }
    const double c = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    if (c > bestc + 1e-12) {
      bestc = c;
      best = i;
    }
  }
  return ph - 5.0 * best;
}

RatePoint point(double g, double p, double tr = 0, double pr = 0) {
  RatePoint r;
  r.y_true = g;
  r.y_pred = p;
  r.true_rate = tr;
  r.pred_rate = pr;
  return r;
}

// Classic Clarke-style zones written out directly.
std::string clarke(double g, double p) {
  if ((g <= 70 && p >= 180) || (g >= 180 && p <= 70)) return g <= 70 ? "uE" : "lE";
  if (g < 70 && p >= 70 && p <= 180) return "uD";
  if (g > 240 && p >= 70 && p <= 180) return "lD";
  if (g >= 70 && g <= 290 && p >= g + 110) return "uC";
  if (g >= 130 && g <= 180 && p <= 1.4 * g - 182) return "lC";
  if (std::abs(p - g) <= 0.2 * g || (g < 70 && p < 70)) return "A";
  return "B";
}

}  // namespace

TEST_CASE("RMSE") {
  CHECK(rmse(series({100, 120}, {100, 120})) == 0.0);
  CHECK(rmse(series({100, 120}, {110, 130})) == doctest::Approx(10.0));
  CHECK(rmse(series({100}, {130})) == doctest::Approx(30.0));
  PredictionSeries gap = series({100, 120}, {110, 130});
  gap.entries[1].reset();
  CHECK(rmse(gap) == doctest::Approx(10.0));
  gap.entries[0].reset();
  CHECK_THROWS_AS(rmse(gap), MetricUndefined);
}

TEST_CASE("MAPE") {
  CHECK(mape(series({100, 200}, {100, 200})) == 0.0);
  CHECK(mape(series({100, 200}, {110, 180})) == doctest::Approx(10.0));
  CHECK(mape(series({50}, {100})) == doctest::Approx(100.0));
  CHECK_THROWS_AS(mape(series({0, 100}, {1, 100})), MetricUndefined);
}

TEST_CASE("Time gain") {
  const auto g = ramp_sine(300);
  SUBCASE("perfect prediction gains the full horizon") {
    for (int ph : {30, 60, 120}) CHECK(time_gain(series(g, g, ph)) == ph);
  }
  SUBCASE("persistence gains nothing") {
    for (int ph : {30, 60, 120}) {
      const int s = ph / 5;
      std::vector<double> truth(g.begin() + s, g.end());
      std::vector<double> pred(g.begin(), g.end() - s);
      CHECK(time_gain(series(truth, pred, ph)) == 0.0);
    }
  }
  SUBCASE("a 10-minute lag at PH 30 gains 20 minutes") {
    std::vector<double> truth(g.begin() + 2, g.end());
    std::vector<double> pred(g.begin(), g.end() - 2);
    const double tg = time_gain(series(truth, pred, 30));
    CHECK(tg == 20.0);
    CHECK(tg == brute_tg(truth, pred, 30));
  }
  SUBCASE("too few pairs") {
    CHECK_THROWS_AS(time_gain(series({1, 2}, {1, 2})), MetricUndefined);
    CHECK_THROWS_AS(time_gain(series({5, 5, 5, 5}, {1, 2, 3, 4})), MetricUndefined);
  }
}

TEST_CASE("P-EGA examples") {
  const auto& t = CgEgaTables::standard();
  CHECK(t.version == 1);
  CHECK(t.p_ega(point(100, 110)) == "A");
  CHECK(t.p_ega(point(60, 60)) == "A");
  CHECK(t.p_ega(point(200, 60)) == "lE");
  CHECK(t.p_ega(point(60, 150)) == "uD");
  // 125 is above 1.2 * 100 unless a falling rate widens A
  CHECK(t.p_ega(point(100, 125, 0)) == "B");
  CHECK(t.p_ega(point(100, 125, -1.5)) == "A");
  CHECK(t.p_ega(point(100, 135, -1.5)) == "B");
  CHECK(t.p_ega(point(100, 135, -3)) == "A");
  CHECK(t.p_ega(point(100, 75, 1.5)) == "A");
  CHECK(t.p_ega(point(100, 75, 0)) == "B");
}

TEST_CASE("P-EGA with zero rate reduces to the classic zones") {
  const auto& t = CgEgaTables::standard();
  for (double g = 20; g <= 400; g += 3.5)
    for (double p = 20; p <= 400; p += 3.5) {
      CAPTURE(g);
      CAPTURE(p);
      CHECK(t.p_ega(point(g, p)) == clarke(g, p));
    }
}

TEST_CASE("R-EGA examples and symmetry") {
  const auto& t = CgEgaTables::standard();
  CHECK(t.r_ega(point(0, 0, 1.3, 1.3)) == "A");
  CHECK(t.r_ega(point(0, 0, -2, 2)) == "uE");
  CHECK(t.r_ega(point(0, 0, 0, 2.5)) == "uC");
  CHECK(t.r_ega(point(0, 0, 2, 0)) == "lD");
  CHECK(t.r_ega(point(0, 0, 0, 1.5)) == "uB");
  CHECK(t.r_ega(point(0, 0, 0, -1.5)) == "lB");
  // clamped to +-4 before classification
  CHECK(t.r_ega(point(0, 0, 6, 4)) == "A");

  auto flip = [](std::string z) {
    if (z[0] == 'u') z[0] = 'l';
    else if (z[0] == 'l') z[0] = 'u';
    return z;
  };
  for (double x = -5; x <= 5; x += 0.25)
    for (double y = -5; y <= 5; y += 0.25)
      CHECK(t.r_ega(point(0, 0, -x, -y)) == flip(t.r_ega(point(0, 0, x, y))));
}

TEST_CASE("CG-EGA lookup examples") {
  const auto& t = CgEgaTables::standard();
  CHECK(t.outcome(Region::hypo, t.p_ega(point(60, 150, -1, 0)), t.r_ega(point(60, 150, -1, 0))) ==
        Outcome::EP);
  const RatePoint eu = point(120, 125, 0.2, 0.2);
  CHECK(t.region(120) == Region::eu);
  CHECK(t.outcome(Region::eu, t.p_ega(eu), t.r_ega(eu)) == Outcome::AP);
  CHECK(t.outcome(Region::eu, "B", "uD") == Outcome::BE);
  CHECK(t.outcome(Region::hypo, "B", "A") == Outcome::EP);
  CHECK(t.outcome(Region::hyper, "C", "A") == Outcome::EP);
  CHECK(t.region(70) == Region::eu);
  CHECK(t.region(180) == Region::eu);
  CHECK(t.region(180.5) == Region::hyper);
}

TEST_CASE("CG-EGA on a perfect series is all AP") {
  std::vector<double> g;
  for (int k = 0; k < 600; ++k) g.push_back(150 + 110 * std::sin(k / 25.0));
  const auto rep = cg_ega(series(g, g));
  CHECK(rep.excluded == 1);
  CHECK(rep.classified + rep.excluded == g.size());
  for (Region r : kRegions) {
    REQUIRE(rep.at(r).total() > 0);
    CHECK(*rep.at(r).rate(Outcome::AP) == 1.0);
  }
}

TEST_CASE("CG-EGA bookkeeping") {
  Rng rng(4);
  std::vector<double> g, p;
  for (int k = 0; k < 500; ++k) {
    g.push_back(150 + 100 * std::sin(k / 20.0));
    p.push_back(g.back() + rng.normal(0, 25));
  }
  PredictionSeries s = series(g, p);
  for (int k = 40; k < 60; ++k) s.entries[k].reset();
  const auto rep = cg_ega(s);
  CHECK(rep.classified + rep.excluded == s.complete());
  CHECK(rep.excluded == 2);
  for (Region r : kRegions) {
    const auto& c = rep.at(r);
    if (c.total() == 0) continue;
    CHECK(std::abs(*c.rate(Outcome::AP) + *c.rate(Outcome::BE) + *c.rate(Outcome::EP) - 1.0) < 1e-12);
  }
  std::size_t hist = 0;
  for (const auto& [z, n] : rep.p_hist) hist += n;
  CHECK(hist == rep.classified);
  PredictionSeries lone = series({100, 100}, {100, 100});
  lone.entries[1].reset();
  CHECK_THROWS_AS(cg_ega(lone), MetricUndefined);
}

TEST_CASE("Tables file errors are reported") {
  nlohmann::json j = nlohmann::json::parse(
      R"({"version":1,"regions":{"hypo_below":70,"hyper_above":180},
          "p_ega":{"expansion":[],"zones":[{"name":"A","any":[[{"x":1,"y":0,"op":"~","rhs":0}]]}],"default":"B"},
          "r_ega":{"zones":[],"default":"A"},"lookup":{"hypo":{},"eu":{},"hyper":{}}})");
  CHECK_THROWS_AS(CgEgaTables::from_json(j), FormatError);
  CHECK_THROWS_AS(CgEgaTables::from_json(nlohmann::json::object()), FormatError);
}

TEST_CASE("Aggregation over folds then patients") {
  std::vector<MetricRow> rows;
  for (int f = 0; f < 5; ++f) {
    rows.push_back({"synthetic", "p1", "AR", 30, f, {{"RMSE", 10.0}}});
    rows.push_back({"synthetic", "p2", "AR", 30, f, {{"RMSE", f % 2 ? 18.0 : 22.0}}});
  }
  rows.push_back({"synthetic", "p1", "SVR", 30, 0, {{"RMSE", 5.0}}});
  // p2 has 22, 18, 22, 18, 22 -> 20.4
  const auto agg = aggregate(rows);
  const auto& ar = agg.at({"synthetic", "AR", 30, "RMSE"});
  CHECK(ar.mean == doctest::Approx(15.2));
  CHECK(ar.stddev == doctest::Approx(5.2));
  CHECK(ar.patients == 2);
  CHECK(agg.at({"synthetic", "SVR", 30, "RMSE"}).patients == 1);
  CHECK(agg.count({"synthetic", "SVR", 30, "MAPE"}) == 0);

  std::vector<MetricRow> two{{"s", "a", "M", 30, 0, {{"RMSE", 10}}}, {"s", "b", "M", 30, 0, {{"RMSE", 20}}}};
  const auto s = aggregate(two).at({"s", "M", 30, "RMSE"});
  CHECK(s.mean == 15.0);
  CHECK(s.stddev == 5.0);
}

TEST_CASE("evaluate names every metric") {
  const auto g = ramp_sine(200);
  const auto v = evaluate(series(g, g));
  CHECK(v.at("RMSE") == 0.0);
  CHECK(v.at("MAPE") == 0.0);
  CHECK(v.at("TG") == 30.0);
  for (const char* r : {"hypo", "eu", "hyper"})
    if (v.count(std::string("AP_") + r)) CHECK(v.at(std::string("AP_") + r) == 100.0);
  CHECK(v.count("AP_eu") == 1);
  CHECK(evaluate(series({100, 110}, {100, 110})).count("TG") == 0);
}
