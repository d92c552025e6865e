#include <doctest.h>

#include <cmath>
#include <set>

#include "glyfe/errors.hpp"
#include "glyfe/models/linear.hpp"
#include "glyfe/synthgen.hpp"
#include "glyfe/tuning.hpp"

using namespace glyfe;
using namespace glyfe::tuning;
using models::HyperparamAxis;
using models::ModelKind;

namespace {

HyperparamSpace one_axis(double lo, double hi, int points) {
  HyperparamAxis a;
  a.name = "x";
  a.lo = lo;
  a.hi = hi;
  a.points = points;
  return HyperparamSpace{{a}};
}

const PatientRecord& two_week_patient() {
  static const PatientRecord rec = [] {
    const auto params = synthgen::patient_params(0);
    const auto sc = synthgen::generate_scenario(14, params, 42);
    return synthgen::simulate(sc, params, 43, "synthetic_01");
  }();
  return rec;
}

const Prepared& prepared() {
  static const Prepared p = [] {
    const auto& rec = two_week_patient();
    const auto samples = preprocess::make_samples(rec, Horizon{30});
    return prepare(preprocess::split(rec, samples));
  }();
  return p;
}

}  // namespace

TEST_CASE("Coarse grid over a log axis") {
  const auto space = one_axis(1e-4, 1e-2, 3);
  const auto grid = coarse_grid(space);
  REQUIRE(grid.size() == 3);
  CHECK(grid[0].at("x") == 1e-4);
  CHECK(grid[1].at("x") == 1e-3);
  CHECK(grid[2].at("x") == 1e-2);
  const auto best = coarse_search(space, [](const Hyperparams& h) {
    return std::pow(h.at("x") - 1e-3, 2);
  });
  CHECK(best.at("x") == 1e-3);
}

TEST_CASE("Frozen axes contribute a single value") {
  auto space = one_axis(1e-4, 1e-2, 3);
  HyperparamAxis f;
  f.name = "d";
  f.frozen = 0.0;
  space.axes.push_back(f);
  CHECK(space.grid_size() == 3);
  CHECK(space.free_axes() == 1);
  for (const auto& h : coarse_grid(space)) CHECK(h.at("d") == 0.0);
}

TEST_CASE("Refinement probes geometric midpoints") {
  const auto space = one_axis(1e-4, 1e-2, 3);
  std::vector<double> seen;
  auto obj = [&](const Hyperparams& h) {
    seen.push_back(h.at("x"));
    return std::pow(std::log10(h.at("x")) + 3.4, 2);
  };
  Search s(space, [&](const Hyperparams& h) {
    TrialResult r;
    r.mean = obj(h);
    return r;
  });
  const auto coarse = s.coarse();
  CHECK(coarse.at("x") == 1e-3);
  const auto fine = s.refine(coarse);
  REQUIRE(seen.size() == 5);
  CHECK(seen[3] == doctest::Approx(std::pow(10.0, -3.5)).epsilon(1e-14));
  CHECK(seen[4] == doctest::Approx(std::pow(10.0, -2.5)).epsilon(1e-14));
  CHECK(fine.at("x") == doctest::Approx(std::pow(10.0, -3.5)));
  CHECK(s.trial(fine).mean <= s.trial(coarse).mean);
  CHECK(s.trials().size() <= s.budget());
  CHECK(s.refine_evaluations() == 2);
}

TEST_CASE("Refinement at a grid boundary only adds the inward midpoint") {
  const auto space = one_axis(1e-4, 1e-2, 3);
  std::set<double> seen;
  Search s(space, [&](const Hyperparams& h) {
    seen.insert(h.at("x"));
    TrialResult r;
    r.mean = h.at("x");
    return r;
  });
  const auto best = s.run();
  CHECK(seen.size() == 4);
  CHECK(seen.count(std::pow(10.0, -3.5)) == 1);
  CHECK(best.at("x") == 1e-4);
}

TEST_CASE("Ties go to the lexicographically smallest hp") {
  auto space = one_axis(1, 100, 3);
  HyperparamAxis b;
  b.name = "y";
  b.lo = 1;
  b.hi = 100;
  b.points = 3;
  space.axes.push_back(b);
  const auto best = coarse_search(space, [](const Hyperparams&) { return 1.0; });
  CHECK(best.at("x") == 1);
  CHECK(best.at("y") == 1);
}

TEST_CASE("Failed trials score +inf and all-failed searches raise") {
  const auto space = one_axis(1e-4, 1e-2, 3);
  const auto best = coarse_search(space, [](const Hyperparams& h) {
    return h.at("x") > 5e-3 ? std::numeric_limits<double>::infinity() : 1.0 / h.at("x");
  });
  CHECK(best.at("x") == 1e-3);
  Search s(space, [](const Hyperparams& h) {
    TrialResult r;
    r.mean = std::numeric_limits<double>::infinity();
    r.errors.push_back("diverged at " + h.key());
    return r;
  });
  try {
    s.coarse();
    FAIL("expected SearchError");
  } catch (const SearchError& e) {
    const std::string what = e.what();
    for (const auto& h : coarse_grid(space))
      CHECK(what.find("diverged at " + h.key()) != std::string::npos);
  }
}

TEST_CASE("Traces round-trip and replay to the same hp") {
  const auto space = models::space_for(ModelKind::svr, models::ModelSettings{});
  auto obj = [](const Hyperparams& h) {
    return std::pow(std::log10(h.at("gamma")) + 2.7, 2) + std::pow(std::log10(h.at("C")) - 1.2, 2) +
           (h.at("epsilon") > 0.5 ? std::numeric_limits<double>::infinity() : h.at("epsilon"));
  };
  Search s(space, [&](const Hyperparams& h) {
    TrialResult r;
    r.mean = obj(h);
    r.fold_mse.fill(r.mean);
    return r;
  });
  const auto final_hp = s.run();
  CHECK(s.trials().size() <= s.budget());
  const std::string text = trace_to_jsonl(s.trials());
  const auto back = trace_from_jsonl(text);
  REQUIRE(back.size() == s.trials().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].hp == s.trials()[i].hp);
    CHECK(back[i].mean == s.trials()[i].mean);
  }
  CHECK(replay(space, back) == final_hp);
  CHECK_THROWS_AS(replay(space, std::vector<TrialResult>(back.begin(), back.begin() + 5)), SearchError);
  CHECK_THROWS_AS(trace_from_jsonl("{\"hp\": [}\n"), ParseError);
}

TEST_CASE("Prepared folds are scaled with their own training statistics") {
  const auto& p = prepared();
  CHECK_FALSE(p.plan.day_aligned);
  for (const auto& f : p.folds) {
    REQUIRE_FALSE(f.train.empty());
    REQUIRE_FALSE(f.valid.empty());
    CHECK(std::abs(f.train.y.mean()) < 1e-9);
    CHECK(f.train.scaler == f.valid.scaler);
  }
  CHECK(!p.test.empty());
}

TEST_CASE("Cross-validation of Base ignores hp and is deterministic") {
  const auto& p = prepared();
  const models::ModelSettings s;
  const auto a = cv_evaluate(ModelKind::base, s, {}, p.folds, 1);
  const auto b = cv_evaluate(ModelKind::base, s, {}, p.folds, 99);
  CHECK(a.fold_mse == b.fold_mse);
  CHECK(a.mean == doctest::Approx((a.fold_mse[0] + a.fold_mse[1] + a.fold_mse[2] + a.fold_mse[3] + a.fold_mse[4]) / 5));
  const auto c = cv_evaluate(ModelKind::ar, s, Hyperparams{{{"p", 3}}}, p.folds, 1);
  const auto d = cv_evaluate(ModelKind::ar, s, Hyperparams{{{"p", 3}}}, p.folds, 1);
  CHECK(c.fold_mse == d.fold_mse);
  CHECK(c.mean < a.mean);
}

TEST_CASE("One diverging fold fails the trial without aborting") {
  auto folds = prepared().folds;
  folds[2].train.y[0] = std::numeric_limits<double>::quiet_NaN();
  models::ModelSettings s;
  s.ffnn_layers = {4};
  s.ffnn_max_epochs = 2;
  const auto r = cv_evaluate(ModelKind::ffnn, s, Hyperparams{{{"lr", 1e-3}}}, folds, 0);
  CHECK(std::isinf(r.fold_mse[2]));
  CHECK(std::isfinite(r.fold_mse[0]));
  CHECK(r.failed());
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].rfind("fold 2:", 0) == 0);
}

TEST_CASE("Final fit yields five series; Base series agree") {
  const auto& p = prepared();
  const models::ModelSettings s;
  const auto series = final_fit_and_test(ModelKind::base, s, {}, p.folds, p.test, 0);
  REQUIRE(series.size() == kFolds);
  for (const auto& sr : series) {
    CHECK(sr.complete() == p.test.size());
    for (std::size_t k = 0; k < sr.entries.size(); ++k) {
      if (!sr.entries[k]) continue;
      CHECK(std::abs(sr.entries[k]->pred - series[0].entries[k]->pred) < 1e-9);
      CHECK(sr.entries[k]->truth == series[0].entries[k]->truth);
    }
  }
}

TEST_CASE("Kept fold models reproduce the final fit") {
  const auto& p = prepared();
  const models::ModelSettings s;
  const Hyperparams hp{{{"p", 2}}};
  FoldModels kept;
  cv_evaluate(ModelKind::arx, s, hp, p.folds, 5, &kept);
  const auto reused = predict_test(kept, p.folds, p.test);
  const auto refit = final_fit_and_test(ModelKind::arx, s, hp, p.folds, p.test, 5);
  for (int f = 0; f < kFolds; ++f)
    for (std::size_t k = 0; k < reused[f].entries.size(); ++k)
      if (reused[f].entries[k]) CHECK(reused[f].entries[k]->pred == refit[f].entries[k]->pred);
}
