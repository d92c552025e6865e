#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "glyfe/models/model.hpp"
#include "glyfe/preprocess.hpp"

namespace glyfe::tuning {

using models::Hyperparams;
using models::HyperparamSpace;

struct TrialResult {
  Hyperparams hp;
  std::array<double, kFolds> fold_mse{};  // +inf for a failed fold
  double mean = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string stage;  // "coarse" or "refine"
  std::vector<std::string> errors;

  bool failed() const;
  nlohmann::json to_json() const;
  static TrialResult from_json(const nlohmann::json& j);
};

// One cross-validation fold in model space.
struct Fold {
  std::shared_ptr<const Scaler> scaler;
  Dataset train;
  Dataset valid;
};

struct Prepared {
  std::array<Fold, kFolds> folds;
  SampleSet test;  // recovered, unscaled
  SplitPlan plan;
  std::size_t dropped = 0;
};

// Gap recovery and per-fold scaling of a split.
Prepared prepare(const preprocess::SplitResult& split);

using FoldModels = std::array<std::unique_ptr<models::Predictor>, kFolds>;

// Trains one model per fold (seed + fold) and records each validation MSE in
// scaled space. Fit or prediction failures mark the fold +inf.
TrialResult cv_evaluate(models::ModelKind kind, const models::ModelSettings& settings,
                        const Hyperparams& hp, const std::array<Fold, kFolds>& folds,
                        std::uint64_t seed, FoldModels* keep = nullptr);

// Every point of the Cartesian coarse grid, axes in declaration order.
std::vector<Hyperparams> coarse_grid(const HyperparamSpace& space);

// Memoizing coarse-to-fine search. The evaluator runs once per distinct hp.
class Search {
 public:
  using Evaluator = std::function<TrialResult(const Hyperparams&)>;
  // Called whenever a trial becomes the best seen so far.
  using OnBest = std::function<void(const TrialResult&)>;

  Search(HyperparamSpace space, Evaluator evaluate, OnBest on_best = {});

  Hyperparams coarse();
  Hyperparams refine(const Hyperparams& coarse_best);
  Hyperparams run() { return refine(coarse()); }

  const std::vector<TrialResult>& trials() const { return trials_; }
  const TrialResult& trial(const Hyperparams& hp) const;
  std::size_t refine_evaluations() const { return refine_evals_; }
  std::size_t budget() const;

 private:
  const TrialResult& evaluate(const Hyperparams& hp, const char* stage);
  Hyperparams argmin(const std::vector<Hyperparams>& candidates) const;

  HyperparamSpace space_;
  Evaluator eval_;
  OnBest on_best_;
  std::vector<TrialResult> trials_;
  std::map<std::string, std::size_t> index_;
  std::size_t best_index_ = 0;
  bool has_best_ = false;
  std::size_t refine_evals_ = 0;
};

// Simple forms over a scalar objective.
Hyperparams coarse_search(const HyperparamSpace& space,
                          const std::function<double(const Hyperparams&)>& objective);
Hyperparams refine(const HyperparamSpace& space, const Hyperparams& coarse_best,
                   const std::function<double(const Hyperparams&)>& objective);

// Trials as JSON lines, and back.
std::string trace_to_jsonl(const std::vector<TrialResult>& trials);
std::vector<TrialResult> trace_from_jsonl(std::string_view text);
// Re-runs the search against recorded trials only; throws SearchError when
// the trace lacks a trial the search asks for.
Hyperparams replay(const HyperparamSpace& space, const std::vector<TrialResult>& trace);

// Fold model predictions of the test set, unscaled with each fold's scaler,
// on the test target-time grid.
std::vector<PredictionSeries> predict_test(const FoldModels& fold_models,
                                           const std::array<Fold, kFolds>& folds,
                                           const SampleSet& test);

std::vector<PredictionSeries> final_fit_and_test(models::ModelKind kind,
                                                 const models::ModelSettings& settings,
                                                 const Hyperparams& hp,
                                                 const std::array<Fold, kFolds>& folds,
                                                 const SampleSet& test, std::uint64_t seed,
                                                 FoldModels* fitted = nullptr);

}  // namespace glyfe::tuning
