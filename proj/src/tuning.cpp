#include "glyfe/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "glyfe/errors.hpp"

namespace glyfe::tuning {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_or_inf(double v) { return std::isnan(v) ? kInf : v; }

bool better(const TrialResult& a, const TrialResult& b) {
  const double ma = finite_or_inf(a.mean);
  const double mb = finite_or_inf(b.mean);
  if (ma != mb) return ma < mb;
  return a.hp < b.hp;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double from_number_or_null(const nlohmann::json& j) {
  return j.is_null() ? kInf : j.get<double>();
}

}  // namespace

// ---------------------------------------------------------------- trials

bool TrialResult::failed() const { return !std::isfinite(mean); }

nlohmann::json TrialResult::to_json() const {
  nlohmann::json folds = nlohmann::json::array();
  for (double v : fold_mse) folds.push_back(number_or_null(v));
  return {{"stage", stage},      {"hp", hp.to_json()},   {"fold_mse", folds},
          {"mean", number_or_null(mean)}, {"seed", seed}, {"wall_seconds", wall_seconds},
          {"errors", errors}};
}

TrialResult TrialResult::from_json(const nlohmann::json& j) {
  TrialResult t;
  t.stage = j.value("stage", std::string());
  t.hp = Hyperparams::from_json(j.at("hp"));
  const auto& folds = j.at("fold_mse");
  if (folds.size() != kFolds) throw FormatError("trace entry needs one MSE per fold");
  for (int k = 0; k < kFolds; ++k) t.fold_mse[k] = from_number_or_null(folds[k]);
  t.mean = from_number_or_null(j.at("mean"));
  t.seed = j.value("seed", std::uint64_t{0});
  t.wall_seconds = j.value("wall_seconds", 0.0);
  t.errors = j.value("errors", std::vector<std::string>{});
  return t;
}

// ----------------------------------------------------------------- folds

Prepared prepare(const preprocess::SplitResult& split) {
  Prepared p;
  p.plan = split.plan;
  p.test = preprocess::recover_missing(split.test);
  p.dropped = p.test.dropped - split.test.dropped;
  for (int f = 0; f < kFolds; ++f) {
    const SampleSet train = preprocess::recover_missing(split.train[f]);
    const SampleSet valid = preprocess::recover_missing(split.valid[f]);
    p.dropped += valid.dropped - split.valid[f].dropped;
    if (train.empty()) throw SplitError("fold " + std::to_string(f) + " has no training sample");
    auto scaler = std::make_shared<const Scaler>(preprocess::fit_scaler(train));
    p.folds[f] = Fold{scaler, preprocess::apply(scaler, train), preprocess::apply(scaler, valid)};
  }
  return p;
}

TrialResult cv_evaluate(models::ModelKind kind, const models::ModelSettings& settings,
                        const Hyperparams& hp, const std::array<Fold, kFolds>& folds,
                        std::uint64_t seed, FoldModels* keep) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialResult r;
  r.hp = hp;
  r.seed = seed;
  double sum = 0.0;
  for (int f = 0; f < kFolds; ++f) {
    auto model = models::make_predictor(kind, settings);
    try {
      if (folds[f].valid.empty()) throw FitError("empty validation fold");
      model->fit(folds[f].train, folds[f].valid, hp, seed + static_cast<std::uint64_t>(f));
      r.fold_mse[f] = models::mse(model->predict(folds[f].valid), folds[f].valid.y);
    } catch (const Error& e) {
      r.fold_mse[f] = kInf;
      r.errors.push_back("fold " + std::to_string(f) + ": " + e.what());
    }
    sum += r.fold_mse[f];
    if (keep) (*keep)[f] = std::move(model);
  }
  r.mean = sum / kFolds;
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// ---------------------------------------------------------------- search

std::vector<Hyperparams> coarse_grid(const HyperparamSpace& space) {
  std::vector<Hyperparams> out{Hyperparams{}};
  for (const auto& axis : space.axes) {
    const auto g = axis.grid();
    std::vector<Hyperparams> next;
    next.reserve(out.size() * g.size());
    for (const auto& partial : out)
      for (double v : g) {
        Hyperparams h = partial;
        h.values.emplace_back(axis.name, v);
        next.push_back(std::move(h));
      }
    out = std::move(next);
  }
  return out;
}

Search::Search(HyperparamSpace space, Evaluator evaluate, OnBest on_best)
    : space_(std::move(space)), eval_(std::move(evaluate)), on_best_(std::move(on_best)) {}

std::size_t Search::budget() const { return space_.grid_size() + 2 * space_.free_axes(); }

const TrialResult& Search::trial(const Hyperparams& hp) const {
  const auto it = index_.find(hp.key());
  if (it == index_.end()) throw SearchError("no trial for " + hp.key());
  return trials_[it->second];
}

const TrialResult& Search::evaluate(const Hyperparams& hp, const char* stage) {
  const std::string key = hp.key();
  if (const auto it = index_.find(key); it != index_.end()) return trials_[it->second];
  TrialResult r = eval_(hp);
  r.hp = hp;
  r.stage = stage;
  if (std::isnan(r.mean)) r.mean = kInf;
  trials_.push_back(std::move(r));
  index_[key] = trials_.size() - 1;
  const TrialResult& added = trials_.back();
  if (!has_best_ || better(added, trials_[best_index_])) {
    has_best_ = true;
    best_index_ = trials_.size() - 1;
    if (on_best_) on_best_(added);
  }
  return added;
}

Hyperparams Search::argmin(const std::vector<Hyperparams>& candidates) const {
  const TrialResult* best = nullptr;
  for (const auto& hp : candidates) {
    const TrialResult& t = trial(hp);
    if (!best || better(t, *best)) best = &t;
  }
  if (!best || best->failed()) {
    std::ostringstream msg;
    msg << "every trial failed";
    for (const auto& hp : candidates)
      for (const auto& e : trial(hp).errors) msg << "\n  [" << hp.key() << "] " << e;
    throw SearchError(msg.str());
  }
  return best->hp;
}

Hyperparams Search::coarse() {
  const auto grid = coarse_grid(space_);
  for (const auto& hp : grid) evaluate(hp, "coarse");
  return argmin(grid);
}

Hyperparams Search::refine(const Hyperparams& coarse_best) {
  Hyperparams current = coarse_best;
  const std::size_t before = trials_.size();
  for (std::size_t a = 0; a < space_.axes.size(); ++a) {
    const auto& axis = space_.axes[a];
    if (axis.frozen) continue;
    const auto g = axis.grid();
    if (g.size() < 2) continue;
    const double v = current.values[a].second;
    std::vector<double> values;
    const auto lower = std::lower_bound(g.begin(), g.end(), v);
    if (lower != g.begin()) values.push_back(axis.midpoint(*(lower - 1), v));
    values.push_back(v);
    const auto upper = std::upper_bound(g.begin(), g.end(), v);
    if (upper != g.end()) values.push_back(axis.midpoint(v, *upper));
    values.erase(std::unique(values.begin(), values.end()), values.end());

    std::vector<Hyperparams> candidates;
    for (double x : values) {
      Hyperparams h = current;
      h.values[a].second = x;
      evaluate(h, "refine");
      candidates.push_back(std::move(h));
    }
    current = argmin(candidates);
  }
  refine_evals_ += trials_.size() - before;
  if (refine_evals_ > 2 * space_.free_axes())
    throw SearchError("refinement exceeded its budget of " +
                      std::to_string(2 * space_.free_axes()) + " trials");
  return current;
}

namespace {

Search::Evaluator scalar(const std::function<double(const Hyperparams&)>& objective) {
  return [objective](const Hyperparams& hp) {
    TrialResult r;
    r.mean = objective(hp);
    r.fold_mse.fill(r.mean);
    return r;
  };
}

}  // namespace

Hyperparams coarse_search(const HyperparamSpace& space,
                          const std::function<double(const Hyperparams&)>& objective) {
  Search s(space, scalar(objective));
  return s.coarse();
}

Hyperparams refine(const HyperparamSpace& space, const Hyperparams& coarse_best,
                   const std::function<double(const Hyperparams&)>& objective) {
  Search s(space, scalar(objective));
  return s.refine(coarse_best);
}

std::string trace_to_jsonl(const std::vector<TrialResult>& trials) {
  std::string out;
  for (const auto& t : trials) out += t.to_json().dump() + "\n";
  return out;
}

std::vector<TrialResult> trace_from_jsonl(std::string_view text) {
  std::vector<TrialResult> out;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view l = text.substr(pos, end - pos);
    ++line;
    pos = end + 1;
    if (l.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(TrialResult::from_json(nlohmann::json::parse(l)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("trace: ") + e.what(), line, 0);
    }
  }
  return out;
}

Hyperparams replay(const HyperparamSpace& space, const std::vector<TrialResult>& trace) {
  std::map<std::string, const TrialResult*> by_key;
  for (const auto& t : trace) by_key.emplace(t.hp.key(), &t);
  Search s(space, [&](const Hyperparams& hp) {
    const auto it = by_key.find(hp.key());
    if (it == by_key.end()) throw SearchError("trace lacks trial " + hp.key());
    return *it->second;
  });
  return s.run();
}

// ------------------------------------------------------------------ test

std::vector<PredictionSeries> predict_test(const FoldModels& fold_models,
                                           const std::array<Fold, kFolds>& folds,
                                           const SampleSet& test) {
  PredictionSeries base;
  base.horizon = test.horizon;
  base.grid.step = test.step;
  if (!test.empty()) {
    Timestamp lo = std::numeric_limits<Timestamp>::max();
    Timestamp hi = std::numeric_limits<Timestamp>::min();
    for (const auto& s : test.samples) {
      lo = std::min(lo, s.target_time);
      hi = std::max(hi, s.target_time);
    }
    base.grid.start = lo;
    base.grid.length = static_cast<std::size_t>((hi - lo) / test.step + 1);
  }
  base.entries.assign(base.grid.length, std::nullopt);

  std::vector<PredictionSeries> out;
  for (int f = 0; f < kFolds; ++f) {
    PredictionSeries s = base;
    if (!test.empty()) {
      const Dataset ds = preprocess::apply(folds[f].scaler, test);
      const Eigen::VectorXd pred = fold_models[f]->predict(ds);
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& smp = test.samples[i];
        const auto slot = static_cast<std::size_t>((smp.target_time - base.grid.start) / test.step);
        s.entries[slot] = PredictionEntry{*smp.target, ds.invert_target(pred[static_cast<Eigen::Index>(i)])};
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<PredictionSeries> final_fit_and_test(models::ModelKind kind,
                                                 const models::ModelSettings& settings,
                                                 const Hyperparams& hp,
                                                 const std::array<Fold, kFolds>& folds,
                                                 const SampleSet& test, std::uint64_t seed,
                                                 FoldModels* fitted) {
  FoldModels m;
  for (int f = 0; f < kFolds; ++f) {
    m[f] = models::make_predictor(kind, settings);
    m[f]->fit(folds[f].train, folds[f].valid, hp, seed + static_cast<std::uint64_t>(f));
  }
  auto out = predict_test(m, folds, test);
  if (fitted) *fitted = std::move(m);
  return out;
}

}  // namespace glyfe::tuning
