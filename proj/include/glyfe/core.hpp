#pragma once

// Shared data model: time grids, patient signals, supervised samples,
// train/valid/test plans and prediction timelines. All types are immutable
// values once built.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace glyfe {

using Timestamp = std::int64_t;  // seconds since the Unix epoch

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kCgmStep = 300;  // 5 min
inline constexpr int kHistoryLength = 36;      // 3 h at 5 min
inline constexpr int kChannels = 3;            // glucose, cho, insulin
inline constexpr int kFolds = 5;
inline constexpr int kTestDays = 10;

struct TimeGrid {
  Timestamp start = 0;
  std::int64_t step = kCgmStep;
  std::size_t length = 1;

  Timestamp time_at(std::size_t slot) const {
    return start + static_cast<std::int64_t>(slot) * step;
  }
  Timestamp end() const { return time_at(length); }  // exclusive
  void validate() const;

  bool operator==(const TimeGrid&) const = default;
};

// Slot holding timestamp t (floor). Throws RangeError outside the grid.
std::size_t slot_of(const TimeGrid& grid, Timestamp t);

// Calendar-day ordinal of a slot relative to the grid's first day. Day edges
// are local midnights for the given UTC offset.
std::int64_t day_index(const TimeGrid& grid, std::size_t slot, std::int64_t utc_offset = 0);
std::int64_t day_of(Timestamp t, Timestamp reference, std::int64_t utc_offset = 0);
// Local midnight at or before t.
Timestamp local_midnight(Timestamp t, std::int64_t utc_offset = 0);

enum class Source { synthetic, ohio_xml, csv };
const char* to_string(Source s);

// One patient's signals on a uniform grid. CHO (g) and insulin (U) are
// per-slot totals; glucose (mg/dL) is optional per slot.
class PatientRecord {
 public:
  PatientRecord(std::string id, Source source, TimeGrid grid,
                std::vector<std::optional<double>> glucose, std::vector<double> cho,
                std::vector<double> insulin, std::int64_t utc_offset = 0);

  const std::string& id() const { return id_; }
  Source source() const { return source_; }
  const TimeGrid& grid() const { return grid_; }
  std::int64_t utc_offset() const { return utc_offset_; }
  const std::vector<std::optional<double>>& glucose() const { return glucose_; }
  const std::vector<double>& cho() const { return cho_; }
  const std::vector<double>& insulin() const { return insulin_; }
  std::size_t size() const { return grid_.length; }

  // Last slot holding a glucose reading (nullopt if none).
  std::optional<std::size_t> last_glucose_slot() const;

  // Same signals, different identity; used by tests that compare content.
  bool same_signals(const PatientRecord& other) const;

 private:
  std::string id_;
  Source source_;
  TimeGrid grid_;
  std::vector<std::optional<double>> glucose_;
  std::vector<double> cho_;
  std::vector<double> insulin_;
  std::int64_t utc_offset_;
};

struct Horizon {
  int minutes = 30;

  // Number of grid steps covered by the horizon; throws if not divisible.
  int steps(std::int64_t grid_step = kCgmStep) const;
  std::int64_t seconds() const { return std::int64_t{minutes} * 60; }
  static Horizon from_minutes(int minutes);  // validates {30, 60, 120}
};

enum Channel : int { kGlucose = 0, kCho = 1, kInsulin = 2 };

// One supervised instance. history is kChannels × H, columns oldest first;
// missing glucose cells hold NaN until recovered.
struct Sample {
  Timestamp t = 0;
  Eigen::MatrixXd history;
  std::optional<double> target;
  Timestamp target_time = 0;
  std::vector<bool> imputed;  // per glucose history cell
};

struct SampleSet {
  std::vector<Sample> samples;
  int history = kHistoryLength;
  Horizon horizon;
  std::int64_t step = kCgmStep;
  std::int64_t utc_offset = 0;
  std::size_t dropped = 0;  // removed for lack of known history
  std::vector<std::string> warnings;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  SampleSet with_samples(std::vector<Sample> s) const;
};

// Which day a "last 10 days" window is anchored on.
enum class TestAnchor { last_glucose, last_timestamp };

struct FoldDays {
  std::vector<std::int64_t> train_days;
  std::vector<std::int64_t> valid_days;
};

// Test period plus five contiguous validation blocks over the remaining
// time. Blocks are whole days when at least five non-test days exist and
// fall back to equal time spans otherwise.
struct SplitPlan {
  std::vector<std::int64_t> test_days;
  std::array<FoldDays, kFolds> folds;
  Timestamp pool_start = 0;  // local midnight of the first day
  Timestamp test_start = 0;  // local midnight of the first test day
  std::array<Timestamp, kFolds + 1> block_edges{};
  bool day_aligned = true;

  bool is_test(Timestamp t) const { return t >= test_start; }
  // Validation block containing t, or -1 for test-period times.
  int block_of(Timestamp t) const;
};

struct PredictionEntry {
  double truth = 0.0;  // mg/dL
  double pred = 0.0;   // mg/dL
};

// Predictions laid out on the 5-min target-time grid; absent entries are
// gaps and never bridged.
struct PredictionSeries {
  TimeGrid grid;
  std::vector<std::optional<PredictionEntry>> entries;
  Horizon horizon;

  std::size_t complete() const;
};

}  // namespace glyfe
