#include "glyfe/core.hpp"

#include <algorithm>
#include <cmath>

#include "glyfe/errors.hpp"

namespace glyfe {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

void TimeGrid::validate() const {
  if (step <= 0) throw ArgumentError("time grid step must be positive");
  if (length < 1) throw ArgumentError("time grid must hold at least one slot");
}

std::size_t slot_of(const TimeGrid& grid, Timestamp t) {
  if (t < grid.start || t >= grid.end()) {
    throw RangeError("timestamp " + std::to_string(t) + " outside grid [" +
                     std::to_string(grid.start) + ", " + std::to_string(grid.end()) + ")");
  }
  return static_cast<std::size_t>((t - grid.start) / grid.step);
}

Timestamp local_midnight(Timestamp t, std::int64_t utc_offset) {
  return floor_div(t + utc_offset, kSecondsPerDay) * kSecondsPerDay - utc_offset;
}

std::int64_t day_of(Timestamp t, Timestamp reference, std::int64_t utc_offset) {
  return floor_div(t + utc_offset, kSecondsPerDay) -
         floor_div(reference + utc_offset, kSecondsPerDay);
}

std::int64_t day_index(const TimeGrid& grid, std::size_t slot, std::int64_t utc_offset) {
  return day_of(grid.time_at(slot), grid.start, utc_offset);
}

const char* to_string(Source s) {
  switch (s) {
    case Source::synthetic:
      return "synthetic";
    case Source::ohio_xml:
      return "ohio-xml";
    case Source::csv:
      return "csv";
  }
  return "unknown";
}

PatientRecord::PatientRecord(std::string id, Source source, TimeGrid grid,
                             std::vector<std::optional<double>> glucose, std::vector<double> cho,
                             std::vector<double> insulin, std::int64_t utc_offset)
    : id_(std::move(id)),
      source_(source),
      grid_(grid),
      glucose_(std::move(glucose)),
      cho_(std::move(cho)),
      insulin_(std::move(insulin)),
      utc_offset_(utc_offset) {
  grid_.validate();
  if (glucose_.size() != grid_.length || cho_.size() != grid_.length ||
      insulin_.size() != grid_.length) {
    throw ArgumentError("patient " + id_ + ": signal lengths differ from grid length");
  }
  for (std::size_t i = 0; i < grid_.length; ++i) {
    if (!(cho_[i] >= 0.0) || !std::isfinite(cho_[i]))
      throw ArgumentError("patient " + id_ + ": negative or non-finite CHO at slot " +
                          std::to_string(i));
    if (!(insulin_[i] >= 0.0) || !std::isfinite(insulin_[i]))
      throw ArgumentError("patient " + id_ + ": negative or non-finite insulin at slot " +
                          std::to_string(i));
    if (glucose_[i] && (!std::isfinite(*glucose_[i]) || *glucose_[i] <= 0.0))
      throw ArgumentError("patient " + id_ + ": invalid glucose at slot " + std::to_string(i));
  }
}

std::optional<std::size_t> PatientRecord::last_glucose_slot() const {
  for (std::size_t i = glucose_.size(); i-- > 0;) {
    if (glucose_[i]) return i;
  }
  return std::nullopt;
}

bool PatientRecord::same_signals(const PatientRecord& other) const {
  return grid_ == other.grid_ && glucose_ == other.glucose_ && cho_ == other.cho_ &&
         insulin_ == other.insulin_ && utc_offset_ == other.utc_offset_;
}

int Horizon::steps(std::int64_t grid_step) const {
  const std::int64_t s = seconds();
  if (grid_step <= 0 || s % grid_step != 0)
    throw ArgumentError("horizon of " + std::to_string(minutes) +
                        " min is not a multiple of the grid step");
  return static_cast<int>(s / grid_step);
}

Horizon Horizon::from_minutes(int minutes) {
  if (minutes != 30 && minutes != 60 && minutes != 120)
    throw ArgumentError("prediction horizon must be 30, 60 or 120 minutes, got " +
                        std::to_string(minutes));
  return Horizon{minutes};
}

SampleSet SampleSet::with_samples(std::vector<Sample> s) const {
  SampleSet out;
  out.samples = std::move(s);
  out.history = history;
  out.horizon = horizon;
  out.step = step;
  out.utc_offset = utc_offset;
  return out;
}

int SplitPlan::block_of(Timestamp t) const {
  if (is_test(t)) return -1;
  for (int k = 0; k < kFolds; ++k) {
    if (t < block_edges[k + 1]) return k;
  }
  return kFolds - 1;
}

std::size_t PredictionSeries::complete() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.has_value(); }));
}

}  // namespace glyfe
