#pragma once

// Run orchestration: configuration, the (patient x model x PH) run matrix,
// resumable per-cell results, and report tables.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "glyfe/ingest.hpp"
#include "glyfe/metrics.hpp"
#include "glyfe/models/model.hpp"

namespace glyfe::bench {

enum class DatasetKind { synthetic, ohio, csv_dir };
const char* to_string(DatasetKind k);
DatasetKind parse_dataset(std::string_view s);

struct DatasetConfig {
  DatasetKind kind = DatasetKind::synthetic;
  std::string path;  // relative paths resolve under GLYFE_DATA_DIR
  std::vector<std::string> patients;  // empty keeps every patient
  int synthetic_patients = 10;
  int synthetic_days = 56;
  ingest::CsvSchema csv;
  ingest::OhioOptions ohio;
  TestAnchor anchor = TestAnchor::last_glucose;
};

struct RunConfig {
  DatasetConfig dataset;
  std::vector<models::ModelKind> models = models::all_kinds();
  std::vector<int> horizons{30, 60, 120};
  std::uint64_t seed = 0;
  models::Profile profile = models::Profile::full;
  std::filesystem::path out = "runs/glyfe";
  int jobs = 0;  // 0 lets OpenMP decide

  void validate() const;
  // Fields that determine results; out and jobs are left out.
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  // JSON text; // and /* */ comments are allowed.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig for_profile(models::Profile p);

  models::ModelSettings settings() const;
  std::string run_id() const;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct ResultRecord {
  std::string run_id;
  std::string dataset;
  std::string patient;
  std::string model;
  int horizon = 30;
  int fold = 0;
  models::Hyperparams hp;
  std::map<std::string, double> metrics;
  std::string content_hash;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ResultRecord from_json(const nlohmann::json& j);
  metrics::MetricRow row() const;
};

struct Cell {
  std::string patient;
  models::ModelKind model = models::ModelKind::base;
  int horizon = 30;

  std::string name() const;  // "<patient>_<model>_ph<PH>"
};

// One patient's 5-min record plus the hash of its canonical CSV.
struct PatientData {
  PatientRecord record;
  std::string hash;
};

// Resolves the dataset root: the config path if absolute, otherwise under
// GLYFE_DATA_DIR (or the working directory when that is unset).
std::filesystem::path dataset_root(const DatasetConfig& d);

std::vector<PatientData> load_patients(const RunConfig& config);

// Writes 1-min CSVs and scenario sidecars of the synthetic cohort.
std::vector<std::filesystem::path> simulate_cohort(int patients, int days, std::uint64_t seed,
                                                   const std::filesystem::path& dir);

// Writes per-fold sample CSVs (train/valid/test) for every patient and PH.
std::size_t export_samples(const RunConfig& config, const std::filesystem::path& dir);

struct RunSummary {
  std::filesystem::path dir;
  std::string run_id;
  std::size_t cells = 0;
  std::size_t resumed = 0;
  std::size_t failed = 0;
  std::vector<std::string> errors;
  std::vector<ResultRecord> records;
};

using Progress = std::function<void(const std::string&)>;

// Executes every cell and writes results.jsonl plus models/, trace/ and
// predictions/. Cells whose stored hash matches are read back, not rerun.
RunSummary run(const RunConfig& config, const Progress& progress = {});

std::vector<ResultRecord> read_results(const std::filesystem::path& run_dir);

struct Report {
  std::string accuracy_csv;
  std::string cg_ega_csv;
  std::string text;  // aligned tables, one block per PH
  nlohmann::json bundle;
};

Report make_report(const std::vector<ResultRecord>& records);
// Writes the tables, the JSON bundle and the error-grid SVGs under
// run_dir/report/.
Report report(const std::filesystem::path& run_dir);

}  // namespace glyfe::bench
