#include "glyfe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "glyfe/errors.hpp"
#include "glyfe/ingest.hpp"

namespace glyfe {

Scaler::Scaler(Eigen::VectorXd mean, Eigen::VectorXd stddev, double target_mean,
               double target_std, std::vector<bool> degenerate, bool target_degenerate)
    : mean_(std::move(mean)),
      std_(std::move(stddev)),
      target_mean_(target_mean),
      target_std_(target_std),
      degenerate_(std::move(degenerate)),
      target_degenerate_(target_degenerate) {
  if (mean_.size() != std_.size() || static_cast<Eigen::Index>(degenerate_.size()) != mean_.size())
    throw ArgumentError("scaler: inconsistent feature counts");
  for (Eigen::Index j = 0; j < std_.size(); ++j)
    if (!(std_[j] > 0.0)) throw ArgumentError("scaler: non-positive standard deviation");
  if (!(target_std_ > 0.0)) throw ArgumentError("scaler: non-positive target deviation");
}

Scaler Scaler::identity(int features) {
  return Scaler(Eigen::VectorXd::Zero(features), Eigen::VectorXd::Ones(features), 0.0, 1.0,
                std::vector<bool>(features, false), false);
}

bool Scaler::any_degenerate() const {
  return target_degenerate_ || std::find(degenerate_.begin(), degenerate_.end(), true) !=
                                   degenerate_.end();
}

namespace preprocess {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

PatientRecord resample(const PatientRecord& record, std::int64_t target_step) {
  const auto& grid = record.grid();
  if (target_step <= 0 || target_step % grid.step != 0)
    throw ArgumentError("resample: grid step " + std::to_string(grid.step) +
                        " s does not divide " + std::to_string(target_step) + " s");
  const std::size_t bin = static_cast<std::size_t>(target_step / grid.step);
  const std::size_t out_len = (record.size() + bin - 1) / bin;
  std::vector<std::optional<double>> g(out_len);
  std::vector<double> cho(out_len, 0.0);
  std::vector<double> ins(out_len, 0.0);
  for (std::size_t b = 0; b < out_len; ++b) {
    double sum = 0.0;
    int count = 0;
    const std::size_t hi = std::min(record.size(), (b + 1) * bin);
    for (std::size_t i = b * bin; i < hi; ++i) {
      if (record.glucose()[i]) {
        sum += *record.glucose()[i];
        ++count;
      }
      cho[b] += record.cho()[i];
      ins[b] += record.insulin()[i];
    }
    if (count > 0) g[b] = sum / count;
  }
  return PatientRecord(record.id(), record.source(), TimeGrid{grid.start, target_step, out_len},
                       std::move(g), std::move(cho), std::move(ins), record.utc_offset());
}

SampleSet make_samples(const PatientRecord& record, Horizon horizon, int history) {
  SampleSet set;
  set.history = history;
  set.horizon = horizon;
  set.step = record.grid().step;
  set.utc_offset = record.utc_offset();
  const int ph = horizon.steps(set.step);
  const std::size_t n = record.size();
  if (history < 1) throw ArgumentError("history length must be positive");
  if (n < static_cast<std::size_t>(history + ph)) {
    set.warnings.push_back("record " + record.id() + " too short for H=" +
                           std::to_string(history) + " and PH=" + std::to_string(horizon.minutes));
    return set;
  }
  const auto& grid = record.grid();
  set.samples.reserve(n - history - ph + 1);
  for (std::size_t t = history - 1; t + ph < n; ++t) {
    Sample s;
    s.t = grid.time_at(t);
    s.target_time = s.t + horizon.seconds();
    s.history.resize(kChannels, history);
    s.imputed.assign(history, false);
    for (int k = 0; k < history; ++k) {
      const std::size_t slot = t + 1 - history + k;
      const auto& g = record.glucose()[slot];
      s.history(kGlucose, k) = g ? *g : kNaN;
      s.history(kCho, k) = record.cho()[slot];
      s.history(kInsulin, k) = record.insulin()[slot];
    }
    s.target = record.glucose()[t + ph];
    set.samples.push_back(std::move(s));
  }
  return set;
}

SplitPlan make_split_plan(const PatientRecord& record, TestAnchor anchor) {
  const auto& grid = record.grid();
  std::size_t last_slot = record.size() - 1;
  if (anchor == TestAnchor::last_glucose) {
    auto lg = record.last_glucose_slot();
    if (!lg) throw SplitError("record " + record.id() + " holds no glucose reading");
    last_slot = *lg;
  }
  const std::int64_t last_day = day_index(grid, last_slot, record.utc_offset());
  const std::int64_t pool_days = last_day + 1 - kTestDays;
  if (pool_days < 1)
    throw SplitError("record " + record.id() + " spans " + std::to_string(last_day + 1) +
                     " days; more than " + std::to_string(kTestDays) + " are required");
  SplitPlan plan;
  plan.pool_start = local_midnight(grid.start, record.utc_offset());
  plan.test_start = plan.pool_start + pool_days * kSecondsPerDay;
  for (std::int64_t d = pool_days; d <= last_day; ++d) plan.test_days.push_back(d);

  plan.day_aligned = pool_days >= kFolds;
  for (int k = 0; k <= kFolds; ++k) {
    if (plan.day_aligned) {
      plan.block_edges[k] = plan.pool_start + (k * pool_days / kFolds) * kSecondsPerDay;
    } else {
      plan.block_edges[k] =
          plan.pool_start + k * (plan.test_start - plan.pool_start) / kFolds;
    }
  }
  for (int k = 0; k < kFolds; ++k) {
    for (std::int64_t d = 0; d < pool_days; ++d) {
      const Timestamp day_lo = plan.pool_start + d * kSecondsPerDay;
      const Timestamp day_hi = day_lo + kSecondsPerDay;
      const bool in_block = day_lo < plan.block_edges[k + 1] && day_hi > plan.block_edges[k];
      if (in_block) plan.folds[k].valid_days.push_back(d);
      const bool outside = day_lo < plan.block_edges[k] || day_hi > plan.block_edges[k + 1];
      if (outside) plan.folds[k].train_days.push_back(d);
    }
  }
  return plan;
}

SplitResult split(const PatientRecord& record, const SampleSet& samples, TestAnchor anchor) {
  SplitResult r;
  r.plan = make_split_plan(record, anchor);
  std::vector<Sample> test;
  std::array<std::vector<Sample>, kFolds> blocks;
  for (const auto& s : samples.samples) {
    const int b = r.plan.block_of(s.t);
    if (b < 0) {
      test.push_back(s);
    } else if (s.t >= r.plan.pool_start) {
      blocks[b].push_back(s);
    }
  }
  r.test = samples.with_samples(std::move(test));
  for (int k = 0; k < kFolds; ++k) {
    std::vector<Sample> train;
    for (int j = 0; j < kFolds; ++j)
      if (j != k) train.insert(train.end(), blocks[j].begin(), blocks[j].end());
    std::sort(train.begin(), train.end(),
              [](const Sample& a, const Sample& b) { return a.t < b.t; });
    r.train[k] = samples.with_samples(std::move(train));
    r.valid[k] = samples.with_samples(blocks[k]);
  }
  return r;
}

SampleSet recover_missing(const SampleSet& samples) {
  SampleSet out = samples.with_samples({});
  out.dropped = samples.dropped;
  out.warnings = samples.warnings;
  out.samples.reserve(samples.size());
  const int H = samples.history;
  for (const auto& src : samples.samples) {
    if (!src.target || !std::isfinite(*src.target)) continue;
    std::vector<int> known;
    for (int k = 0; k < H; ++k)
      if (std::isfinite(src.history(kGlucose, k))) known.push_back(k);
    if (known.size() < 2) {
      ++out.dropped;
      continue;
    }
    Sample s = src;
    if (s.imputed.size() != static_cast<std::size_t>(H)) s.imputed.assign(H, false);
    auto g = [&](int k) -> double& { return s.history(kGlucose, k); };
    for (int k = 0; k < known.front(); ++k) {
      g(k) = g(known.front());
      s.imputed[k] = true;
    }
    for (std::size_t j = 0; j + 1 < known.size(); ++j) {
      const int a = known[j];
      const int b = known[j + 1];
      for (int k = a + 1; k < b; ++k) {
        const double w = static_cast<double>(k - a) / static_cast<double>(b - a);
        g(k) = g(a) + w * (g(b) - g(a));
        s.imputed[k] = true;
      }
    }
    const int a = known[known.size() - 2];
    const int b = known.back();
    const double slope = (g(b) - g(a)) / static_cast<double>(b - a);
    for (int k = b + 1; k < H; ++k) {
      g(k) = g(b) + slope * static_cast<double>(k - b);
      s.imputed[k] = true;
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

Scaler fit_scaler(const SampleSet& train) {
  if (train.empty()) throw FitError("scaler: empty training set");
  const int H = train.history;
  const int F = kChannels * H;
  const double n = static_cast<double>(train.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(F);
  double tmean = 0.0;
  for (const auto& s : train.samples) {
    for (int c = 0; c < kChannels; ++c)
      for (int k = 0; k < H; ++k) mean[c * H + k] += s.history(c, k);
    tmean += *s.target;
  }
  mean /= n;
  tmean /= n;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(F);
  double tvar = 0.0;
  for (const auto& s : train.samples) {
    for (int c = 0; c < kChannels; ++c)
      for (int k = 0; k < H; ++k) {
        const double d = s.history(c, k) - mean[c * H + k];
        var[c * H + k] += d * d;
      }
    const double d = *s.target - tmean;
    tvar += d * d;
  }
  Eigen::VectorXd sd(F);
  std::vector<bool> degenerate(F, false);
  for (int j = 0; j < F; ++j) {
    sd[j] = std::sqrt(var[j] / n);
    if (!(sd[j] > 0.0) || !std::isfinite(sd[j])) {
      sd[j] = 1.0;
      degenerate[j] = true;
    }
  }
  double tsd = std::sqrt(tvar / n);
  bool tdeg = false;
  if (!(tsd > 0.0) || !std::isfinite(tsd)) {
    tsd = 1.0;
    tdeg = true;
  }
  return Scaler(std::move(mean), std::move(sd), tmean, tsd, std::move(degenerate), tdeg);
}

namespace {

Dataset build(std::shared_ptr<const Scaler> scaler, const SampleSet& set) {
  Dataset d;
  const int H = set.history;
  const Eigen::Index n = static_cast<Eigen::Index>(set.size());
  d.X.resize(n, kChannels * H);
  d.y.resize(n);
  d.t.resize(n);
  d.history = H;
  d.step = set.step;
  d.horizon = set.horizon;
  d.utc_offset = set.utc_offset;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = set.samples[i];
    for (int c = 0; c < kChannels; ++c)
      for (int k = 0; k < H; ++k) {
        const double v = s.history(c, k);
        d.X(i, c * H + k) = scaler ? scaler->scale_feature(c * H + k, v) : v;
      }
    const double target = s.target ? *s.target : kNaN;
    d.y[i] = scaler ? scaler->scale_target(target) : target;
    d.t[i] = s.t;
  }
  d.scaler = std::move(scaler);
  return d;
}

}  // namespace

Dataset apply(std::shared_ptr<const Scaler> scaler, const SampleSet& set) {
  if (!scaler) throw ArgumentError("apply: null scaler");
  if (scaler->features() != kChannels * set.history)
    throw ArgumentError("apply: scaler feature count does not match sample history");
  return build(std::move(scaler), set);
}

Dataset apply(const Scaler& scaler, const SampleSet& set) {
  return apply(std::make_shared<const Scaler>(scaler), set);
}

Dataset as_dataset(const SampleSet& set) { return build(nullptr, set); }

std::vector<double> invert_target(const Scaler& scaler, std::span<const double> values) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = scaler.invert_target(values[i]);
  return out;
}

std::string samples_to_csv(const SampleSet& set, std::string_view content_hash) {
  std::string out;
  if (!content_hash.empty()) {
    out += "# hash=";
    out += content_hash;
    out += '\n';
  }
  const int H = set.history;
  const char* prefix[kChannels] = {"g", "c", "i"};
  out += "t";
  for (int c = 0; c < kChannels; ++c)
    for (int k = 0; k < H; ++k) out += "," + std::string(prefix[c]) + std::to_string(k);
  out += ",target\n";
  for (const auto& s : set.samples) {
    out += std::to_string(s.t);
    for (int c = 0; c < kChannels; ++c)
      for (int k = 0; k < H; ++k) {
        out += ',';
        if (std::isfinite(s.history(c, k))) out += ingest::format_number(s.history(c, k));
      }
    out += ',';
    if (s.target) out += ingest::format_number(*s.target);
    out += '\n';
  }
  return out;
}

std::string csv_content_hash(std::string_view text) {
  constexpr std::string_view tag = "# hash=";
  if (text.substr(0, tag.size()) != tag) return {};
  const auto nl = text.find('\n');
  return std::string(text.substr(tag.size(), nl - tag.size()));
}

SampleSet samples_from_csv(std::string_view text, Horizon horizon, int history,
                           std::int64_t step) {
  SampleSet set;
  set.history = history;
  set.horizon = horizon;
  set.step = step;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const auto c = line.find(',', pos);
      cells.push_back(line.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    if (cells.size() != static_cast<std::size_t>(2 + kChannels * history))
      throw CellError("sample csv: wrong cell count", row);
    Sample s;
    s.t = std::stoll(cells[0]);
    s.target_time = s.t + horizon.seconds();
    s.history.resize(kChannels, history);
    s.imputed.assign(history, false);
    for (int c = 0; c < kChannels; ++c)
      for (int k = 0; k < history; ++k) {
        const auto& cell = cells[1 + c * history + k];
        s.history(c, k) = cell.empty() ? kNaN : ingest::parse_number(cell);
      }
    if (!cells.back().empty()) s.target = ingest::parse_number(cells.back());
    set.samples.push_back(std::move(s));
  }
  return set;
}

}  // namespace preprocess
}  // namespace glyfe
