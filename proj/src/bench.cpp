#include "glyfe/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <omp.h>

#include "glyfe/errors.hpp"
#include "glyfe/preprocess.hpp"
#include "glyfe/rng.hpp"
#include "glyfe/synthgen.hpp"
#include "glyfe/tuning.hpp"

namespace glyfe::bench {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

const char* to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::synthetic: return "synthetic";
    case DatasetKind::ohio: return "ohio";
    case DatasetKind::csv_dir: return "csv-dir";
  }
  return "?";
}

DatasetKind parse_dataset(std::string_view s) {
  if (s == "synthetic") return DatasetKind::synthetic;
  if (s == "ohio") return DatasetKind::ohio;
  if (s == "csv-dir" || s == "csv") return DatasetKind::csv_dir;
  throw ArgumentError("unknown dataset kind '" + std::string(s) + "'");
}

namespace {

const char* to_string(TestAnchor a) {
  return a == TestAnchor::last_glucose ? "last_glucose" : "last_timestamp";
}

TestAnchor parse_anchor(const std::string& s) {
  if (s == "last_glucose") return TestAnchor::last_glucose;
  if (s == "last_timestamp") return TestAnchor::last_timestamp;
  throw ArgumentError("unknown test anchor '" + s + "'");
}

json schema_json(const ingest::CsvSchema& s) {
  return {{"timestamp_column", s.timestamp_column}, {"glucose_column", s.glucose_column},
          {"cho_column", s.cho_column},             {"insulin_column", s.insulin_column},
          {"timestamp_format", s.timestamp_format}, {"step", s.step},
          {"utc_offset", s.utc_offset}};
}

ingest::CsvSchema schema_from(const json& j) {
  ingest::CsvSchema s;
  s.timestamp_column = j.value("timestamp_column", s.timestamp_column);
  s.glucose_column = j.value("glucose_column", s.glucose_column);
  s.cho_column = j.value("cho_column", s.cho_column);
  s.insulin_column = j.value("insulin_column", s.insulin_column);
  s.timestamp_format = j.value("timestamp_format", s.timestamp_format);
  s.step = j.value("step", s.step);
  s.utc_offset = j.value("utc_offset", s.utc_offset);
  return s;
}

}  // namespace

void RunConfig::validate() const {
  if (models.empty()) throw ArgumentError("config: no models");
  if (horizons.empty()) throw ArgumentError("config: no horizons");
  for (int h : horizons) Horizon::from_minutes(h);
  std::set<int> hs(horizons.begin(), horizons.end());
  if (hs.size() != horizons.size()) throw ArgumentError("config: repeated horizon");
  std::set<models::ModelKind> ms(models.begin(), models.end());
  if (ms.size() != models.size()) throw ArgumentError("config: repeated model");
  if (jobs < 0) throw ArgumentError("config: jobs must be >= 0");
  if (dataset.kind == DatasetKind::synthetic) {
    if (dataset.synthetic_patients < 1) throw ArgumentError("config: need at least one patient");
    if (dataset.synthetic_days <= kTestDays)
      throw ArgumentError("config: synthetic records need more than " +
                          std::to_string(kTestDays) + " days");
  } else {
    if (dataset.path.empty()) throw ArgumentError("config: dataset path required");
    if (dataset.kind == DatasetKind::csv_dir) dataset.csv.validate();
  }
}

json RunConfig::to_json() const {
  json d = {{"kind", to_string(dataset.kind)},
            {"patients", dataset.patients},
            {"anchor", to_string(dataset.anchor)}};
  switch (dataset.kind) {
    case DatasetKind::synthetic:
      d["synthetic"] = {{"patients", dataset.synthetic_patients}, {"days", dataset.synthetic_days}};
      break;
    case DatasetKind::ohio:
      d["path"] = dataset.path;
      d["ohio"] = {{"timestamp_format", dataset.ohio.timestamp_format},
                   {"bolus_only", dataset.ohio.bolus_only},
                   {"utc_offset", dataset.ohio.utc_offset}};
      break;
    case DatasetKind::csv_dir:
      d["path"] = dataset.path;
      d["csv"] = schema_json(dataset.csv);
      break;
  }
  json m = json::array();
  for (auto k : models) m.push_back(models::name(k));
  return {{"dataset", d},
          {"models", m},
          {"horizons", horizons},
          {"seed", seed},
          {"profile", models::to_string(profile)}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    if (j.contains("profile")) c = for_profile(models::parse_profile(j.at("profile").get<std::string>()));
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      c.dataset.kind = parse_dataset(d.value("kind", std::string("synthetic")));
      c.dataset.path = d.value("path", std::string());
      c.dataset.patients = d.value("patients", std::vector<std::string>{});
      c.dataset.anchor = parse_anchor(d.value("anchor", std::string("last_glucose")));
      if (d.contains("synthetic")) {
        c.dataset.synthetic_patients = d["synthetic"].value("patients", c.dataset.synthetic_patients);
        c.dataset.synthetic_days = d["synthetic"].value("days", c.dataset.synthetic_days);
      }
      if (d.contains("ohio")) {
        const json& o = d["ohio"];
        c.dataset.ohio.timestamp_format = o.value("timestamp_format", c.dataset.ohio.timestamp_format);
        c.dataset.ohio.bolus_only = o.value("bolus_only", false);
        c.dataset.ohio.utc_offset = o.value("utc_offset", std::int64_t{0});
      }
      if (d.contains("csv")) c.dataset.csv = schema_from(d["csv"]);
    }
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) c.models.push_back(models::parse_kind(m.get<std::string>()));
    }
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<int>>();
    c.seed = j.value("seed", c.seed);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    c.jobs = j.value("jobs", c.jobs);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), 0, 0);
  }
  return from_json(j);
}

RunConfig RunConfig::load(const fs::path& path) { return parse(ingest::read_file(path)); }

RunConfig RunConfig::for_profile(models::Profile p) {
  RunConfig c;
  c.profile = p;
  if (p == models::Profile::desk) {
    c.dataset.synthetic_patients = 2;
    c.dataset.synthetic_days = 14;
    c.out = "runs/desk";
  }
  return c;
}

models::ModelSettings RunConfig::settings() const { return models::ModelSettings::for_profile(profile); }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string RunConfig::run_id() const { return hex64(fnv1a64(to_json().dump())); }

// --------------------------------------------------------------- records

json ResultRecord::to_json() const {
  json m = json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  return {{"run_id", run_id},   {"dataset", dataset}, {"patient", patient},
          {"model", model},     {"horizon", horizon}, {"fold", fold},
          {"hp", hp.to_json()}, {"metrics", m},       {"content_hash", content_hash},
          {"seed", seed}};
}

ResultRecord ResultRecord::from_json(const json& j) {
  ResultRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.patient = j.at("patient").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.horizon = j.at("horizon").get<int>();
  r.fold = j.at("fold").get<int>();
  r.hp = models::Hyperparams::from_json(j.at("hp"));
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
  r.content_hash = j.at("content_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

metrics::MetricRow ResultRecord::row() const {
  return {dataset, patient, model, horizon, fold, metrics};
}

std::string Cell::name() const {
  return patient + "_" + models::name(model) + "_ph" + std::to_string(horizon);
}

// ------------------------------------------------------------------ data

fs::path dataset_root(const DatasetConfig& d) {
  const fs::path p = d.path;
  if (p.is_absolute()) return p;
  if (const char* env = std::getenv("GLYFE_DATA_DIR"); env && *env) return fs::path(env) / p;
  return p;
}

namespace {

std::vector<fs::path> files_with(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error("dataset directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

PatientRecord synthetic_patient(int i, int days, std::uint64_t seed) {
  const auto params = synthgen::patient_params(i);
  const auto sc = synthgen::generate_scenario(days, params, mix_seed(seed, 2 * i));
  return synthgen::simulate(sc, params, mix_seed(seed, 2 * i + 1), synthgen::patient_name(i));
}

PatientRecord to_cgm_grid(const PatientRecord& r) {
  return r.grid().step == kCgmStep ? r : preprocess::resample(r, kCgmStep);
}

}  // namespace

std::vector<PatientData> load_patients(const RunConfig& config) {
  const auto& d = config.dataset;
  std::vector<PatientRecord> recs;
  switch (d.kind) {
    case DatasetKind::synthetic:
      for (int i = 0; i < d.synthetic_patients; ++i) {
        const std::string id = synthgen::patient_name(i);
        if (!d.patients.empty() && std::find(d.patients.begin(), d.patients.end(), id) == d.patients.end())
          continue;
        recs.push_back(synthetic_patient(i, d.synthetic_days, config.seed));
      }
      break;
    case DatasetKind::ohio:
      for (const auto& f : files_with(dataset_root(d), ".xml")) recs.push_back(ingest::read_ohio_file(f, d.ohio));
      break;
    case DatasetKind::csv_dir:
      for (const auto& f : files_with(dataset_root(d), ".csv")) {
        auto r = ingest::read_csv_file(f, d.csv);
        recs.emplace_back(f.stem().string(), r.source(), r.grid(), r.glucose(), r.cho(), r.insulin(),
                          r.utc_offset());
      }
      break;
  }
  std::vector<PatientData> out;
  std::set<std::string> seen;
  for (auto& r : recs) {
    if (!d.patients.empty() && std::find(d.patients.begin(), d.patients.end(), r.id()) == d.patients.end())
      continue;
    if (!seen.insert(r.id()).second) throw Error("duplicate patient id " + r.id());
    PatientRecord g = to_cgm_grid(r);
    std::string hash = hex64(fnv1a64(ingest::write_csv(g)));
    out.push_back({std::move(g), std::move(hash)});
  }
  if (out.empty()) throw Error("dataset holds no selected patient");
  return out;
}

std::vector<fs::path> simulate_cohort(int patients, int days, std::uint64_t seed, const fs::path& dir) {
  std::vector<fs::path> out;
  ingest::CsvSchema schema;
  schema.step = synthgen::kSimStep;
  for (int i = 0; i < patients; ++i) {
    const auto params = synthgen::patient_params(i);
    const auto sc = synthgen::generate_scenario(days, params, mix_seed(seed, 2 * i));
    const auto rec = synthgen::simulate(sc, params, mix_seed(seed, 2 * i + 1), synthgen::patient_name(i));
    const fs::path csv = dir / (rec.id() + ".csv");
    ingest::write_file(csv, ingest::write_csv(rec, schema));
    json side = {{"patient", rec.id()}, {"seed", seed}, {"params", params.to_json()},
                 {"scenario", synthgen::scenario_to_json(sc)}};
    ingest::write_file(dir / (rec.id() + ".scenario.json"), side.dump(1) + "\n");
    out.push_back(csv);
  }
  return out;
}

std::size_t export_samples(const RunConfig& config, const fs::path& dir) {
  std::size_t files = 0;
  for (const auto& p : load_patients(config)) {
    for (int h : config.horizons) {
      const auto samples = preprocess::make_samples(p.record, Horizon::from_minutes(h));
      const auto sp = preprocess::split(p.record, samples, config.dataset.anchor);
      const std::string stem = p.record.id() + "_ph" + std::to_string(h);
      const std::string tag = hex64(fnv1a64(p.hash + stem));
      ingest::write_file(dir / (stem + "_test.csv"), preprocess::samples_to_csv(sp.test, tag));
      ++files;
      for (int f = 0; f < kFolds; ++f) {
        const std::string fold = "_fold" + std::to_string(f);
        ingest::write_file(dir / (stem + fold + "_train.csv"), preprocess::samples_to_csv(sp.train[f], tag));
        ingest::write_file(dir / (stem + fold + "_valid.csv"), preprocess::samples_to_csv(sp.valid[f], tag));
        files += 2;
      }
    }
  }
  return files;
}

// ------------------------------------------------------------------- run

namespace {

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  ingest::write_file(tmp, content);
  fs::rename(tmp, path);
}

std::string predictions_csv(const std::vector<PredictionSeries>& series) {
  std::string out = "fold,target_time,truth,pred\n";
  for (std::size_t f = 0; f < series.size(); ++f) {
    const auto& s = series[f];
    for (std::size_t k = 0; k < s.entries.size(); ++k) {
      if (!s.entries[k]) continue;
      out += std::to_string(f) + "," + std::to_string(s.grid.time_at(k)) + "," +
             ingest::format_number(s.entries[k]->truth) + "," + ingest::format_number(s.entries[k]->pred) + "\n";
    }
  }
  return out;
}

struct CellOutcome {
  std::vector<ResultRecord> records;
  bool resumed = false;
  std::string error;
};

CellOutcome run_cell(const RunConfig& config, const std::string& run_id, const PatientData& p,
                     const Cell& cell, const fs::path& dir) {
  CellOutcome out;
  const auto settings = config.settings();
  const std::string hash =
      hex64(fnv1a64(run_id + "|" + p.hash + "|" + cell.name() + "|" + settings.to_json().dump()));
  const fs::path cell_file = dir / "cells" / (cell.name() + ".json");
  if (fs::exists(cell_file)) {
    try {
      const json j = json::parse(ingest::read_file(cell_file));
      if (j.at("content_hash").get<std::string>() == hash) {
        for (const auto& r : j.at("records")) out.records.push_back(ResultRecord::from_json(r));
        out.resumed = true;
        return out;
      }
    } catch (const json::exception&) {
      // unreadable leftovers are recomputed
    }
  }

  const std::uint64_t seed = mix_seed(config.seed, fnv1a64(cell.name()));
  const Horizon horizon = Horizon::from_minutes(cell.horizon);
  const auto samples = preprocess::make_samples(p.record, horizon);
  const auto prepared = tuning::prepare(preprocess::split(p.record, samples, config.dataset.anchor));

  tuning::FoldModels last, best;
  std::string best_key;
  tuning::Search search(
      models::space_for(cell.model, settings),
      [&](const models::Hyperparams& hp) {
        return tuning::cv_evaluate(cell.model, settings, hp, prepared.folds, seed, &last);
      },
      [&](const tuning::TrialResult& t) {
        best = std::move(last);
        best_key = t.hp.key();
      });
  const models::Hyperparams hp = search.run();
  ingest::write_file(dir / "trace" / (cell.name() + ".jsonl"), tuning::trace_to_jsonl(search.trials()));

  std::vector<PredictionSeries> series;
  if (best_key == hp.key()) {
    series = tuning::predict_test(best, prepared.folds, prepared.test);
  } else {
    series = tuning::final_fit_and_test(cell.model, settings, hp, prepared.folds, prepared.test, seed, &best);
  }
  ingest::write_file(dir / "predictions" / (cell.name() + ".csv"), predictions_csv(series));

  json records = json::array();
  for (int f = 0; f < kFolds; ++f) {
    ingest::write_file(dir / "models" / (cell.name() + "_fold" + std::to_string(f) + ".bin"),
                       best[f]->save().encode());
    ResultRecord r;
    r.run_id = run_id;
    r.dataset = to_string(config.dataset.kind);
    r.patient = cell.patient;
    r.model = models::name(cell.model);
    r.horizon = cell.horizon;
    r.fold = f;
    r.hp = hp;
    r.metrics = metrics::evaluate(series[f]);
    r.content_hash = hash;
    r.seed = seed;
    records.push_back(r.to_json());
    out.records.push_back(std::move(r));
  }
  write_atomic(cell_file, json{{"content_hash", hash}, {"cell", cell.name()}, {"records", records}}.dump(1) + "\n");
  return out;
}

}  // namespace

RunSummary run(const RunConfig& config, const Progress& progress) {
  config.validate();
  RunSummary s;
  s.dir = config.out;
  s.run_id = config.run_id();
  for (const char* sub : {"cells", "models", "trace", "predictions"}) fs::create_directories(s.dir / sub);

  const auto patients = load_patients(config);
  std::vector<std::pair<std::size_t, Cell>> cells;
  for (std::size_t p = 0; p < patients.size(); ++p)
    for (auto m : config.models)
      for (int h : config.horizons) cells.push_back({p, Cell{patients[p].record.id(), m, h}});
  s.cells = cells.size();

  json meta = config.to_json();
  meta["run_id"] = s.run_id;
  meta["settings"] = config.settings().to_json();
  json hashes = json::object();
  json layout = json::object();
  for (const auto& p : patients) {
    hashes[p.record.id()] = p.hash;
    layout[p.record.id()] = {{"validation", "contiguous"},
                             {"day_aligned", preprocess::make_split_plan(p.record, config.dataset.anchor).day_aligned}};
  }
  meta["data"] = hashes;
  meta["split"] = layout;
  // multi-step strategy and frozen axes of every model in the run
  json per_model = json::object();
  for (auto m : config.models) {
    json frozen = json::object();
    for (const auto& a : models::space_for(m, config.settings()).axes)
      if (a.frozen) frozen[a.name] = *a.frozen;
    per_model[models::name(m)] = {{"strategy", models::make_predictor(m, config.settings())->strategy()},
                                  {"frozen", frozen}};
  }
  meta["model_detail"] = per_model;
  ingest::write_file(s.dir / "run.json", meta.dump(1) + "\n");

  std::vector<CellOutcome> outcomes(cells.size());
  const int n = static_cast<int>(cells.size());
  const int threads = config.jobs > 0 ? config.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < n; ++i) {
    const auto& [p, cell] = cells[static_cast<std::size_t>(i)];
    try {
      outcomes[i] = run_cell(config, s.run_id, patients[p], cell, s.dir);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
    if (progress) {
#pragma omp critical(glyfe_progress)
      progress(cell.name() + (outcomes[i].error.empty() ? (outcomes[i].resumed ? ": resumed" : ": done")
                                                         : ": FAILED " + outcomes[i].error));
    }
  }

  std::string lines;
  json errors = json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.error.empty()) {
      ++s.failed;
      s.errors.push_back(cells[i].second.name() + ": " + o.error);
      errors.push_back({{"cell", cells[i].second.name()}, {"error", o.error}});
      continue;
    }
    if (o.resumed) ++s.resumed;
    for (auto& r : o.records) {
      lines += r.to_json().dump() + "\n";
      s.records.push_back(std::move(r));
    }
  }
  write_atomic(s.dir / "results.jsonl", lines);
  ingest::write_file(s.dir / "errors.json", errors.dump(1) + "\n");
  if (s.failed == s.cells) {
    std::string msg = "every cell failed";
    for (const auto& e : s.errors) msg += "\n  " + e;
    throw Error(msg);
  }
  return s;
}

std::vector<ResultRecord> read_results(const fs::path& run_dir) {
  const std::string text = ingest::read_file(run_dir / "results.jsonl");
  std::vector<ResultRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(ResultRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("results.jsonl: ") + e.what(), n, 0);
    }
  }
  return out;
}

// ---------------------------------------------------------------- report

namespace {

std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

int model_rank(const std::string& m) {
  const auto& kinds = models::all_kinds();
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (models::name(kinds[i]) == m) return static_cast<int>(i);
  return static_cast<int>(kinds.size());
}

struct Block {
  std::string dataset;
  int horizon;
  std::vector<std::string> models;
};

std::vector<Block> blocks_of(const std::vector<ResultRecord>& records) {
  std::map<std::pair<std::string, int>, std::set<std::pair<int, std::string>>> by;
  for (const auto& r : records) by[{r.dataset, r.horizon}].insert({model_rank(r.model), r.model});
  std::vector<Block> out;
  for (const auto& [k, ms] : by) {
    Block b{k.first, k.second, {}};
    for (const auto& m : ms) b.models.push_back(m.second);
    out.push_back(std::move(b));
  }
  return out;
}

std::string table_text(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    w[c] = header[c].size();
    for (const auto& r : rows) w[c] = std::max(w[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) s += "  ";
      s += c == 0 ? cells[c] + std::string(w[c] - cells[c].size(), ' ')
                  : std::string(w[c] - cells[c].size(), ' ') + cells[c];
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = line(header);
  for (const auto& r : rows) out += line(r);
  return out;
}

}  // namespace

Report make_report(const std::vector<ResultRecord>& records) {
  if (records.empty()) throw ArgumentError("report: no result records");
  std::vector<metrics::MetricRow> rows;
  for (const auto& r : records) rows.push_back(r.row());
  const auto agg = metrics::aggregate(rows);
  auto find = [&](const Block& b, const std::string& model, const std::string& metric)
      -> std::optional<metrics::Summary> {
    const auto it = agg.find({b.dataset, model, b.horizon, metric});
    if (it == agg.end()) return std::nullopt;
    return it->second;
  };

  Report rep;
  rep.bundle = {{"accuracy", json::array()}, {"cg_ega", json::array()}};
  std::string acc = "dataset,horizon,model,patients";
  for (const auto& m : metrics::accuracy_metrics()) acc += "," + m + "_mean," + m + "_std";
  acc += "\n";
  std::string cg = "dataset,horizon,model,patients";
  for (const auto& m : metrics::cg_ega_metrics()) cg += "," + m + "_mean," + m + "_std";
  cg += "\n";

  for (const auto& b : blocks_of(records)) {
    rep.text += "Dataset " + b.dataset + ", PH = " + std::to_string(b.horizon) + " min\n";
    std::vector<std::string> ah{"Model"}, ch{"Model"};
    for (const auto& m : metrics::accuracy_metrics()) ah.push_back(m);
    for (const auto& m : metrics::cg_ega_metrics()) ch.push_back(m);
    std::vector<std::vector<std::string>> arows, crows;
    for (const auto& model : b.models) {
      std::size_t patients = 0;
      for (const auto& name : {std::string("RMSE"), std::string("MAPE")})
        if (auto s = find(b, model, name)) patients = std::max(patients, s->patients);
      const std::string prefix = b.dataset + "," + std::to_string(b.horizon) + "," + model + "," + std::to_string(patients);
      auto emit = [&](const std::vector<std::string>& names, std::string& csv, std::vector<std::string>& trow,
                      json& entry) {
        csv += prefix;
        for (const auto& m : names) {
          const auto s = find(b, model, m);
          if (s) {
            csv += "," + fixed2(s->mean) + "," + fixed2(s->stddev);
            trow.push_back(fixed2(s->mean) + " (" + fixed2(s->stddev) + ")");
            entry[m] = {{"mean", s->mean}, {"std", s->stddev}, {"patients", s->patients}};
          } else {
            csv += ",,";
            trow.push_back("-");
            entry[m] = nullptr;
          }
        }
        csv += "\n";
      };
      std::vector<std::string> ar{model}, cr{model};
      json ae = {{"dataset", b.dataset}, {"horizon", b.horizon}, {"model", model}, {"patients", patients}};
      json ce = ae;
      emit(metrics::accuracy_metrics(), acc, ar, ae);
      emit(metrics::cg_ega_metrics(), cg, cr, ce);
      arows.push_back(std::move(ar));
      crows.push_back(std::move(cr));
      rep.bundle["accuracy"].push_back(std::move(ae));
      rep.bundle["cg_ega"].push_back(std::move(ce));
    }
    rep.text += table_text(ah, arows) + "\n" + table_text(ch, crows) + "\n";
  }
  rep.accuracy_csv = std::move(acc);
  rep.cg_ega_csv = std::move(cg);
  return rep;
}

namespace {

PredictionSeries read_fold_series(const fs::path& csv, int fold, int horizon) {
  std::istringstream in(ingest::read_file(csv));
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<Timestamp, PredictionEntry>> pts;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 4 || std::stoi(f[0]) != fold) continue;
    pts.push_back({std::stoll(f[1]), {ingest::parse_number(f[2]), ingest::parse_number(f[3])}});
  }
  PredictionSeries s;
  s.horizon = Horizon{horizon};
  if (pts.empty()) {
    s.entries.assign(1, std::nullopt);
    return s;
  }
  s.grid.start = pts.front().first;
  s.grid.length = static_cast<std::size_t>((pts.back().first - s.grid.start) / kCgmStep + 1);
  s.entries.assign(s.grid.length, std::nullopt);
  for (const auto& [t, e] : pts) s.entries[static_cast<std::size_t>((t - s.grid.start) / kCgmStep)] = e;
  return s;
}

const char* zone_color(const std::string& z) {
  if (z == "A") return "#2a9d8f";
  if (z == "uB" || z == "lB" || z == "B") return "#8ab17d";
  if (z == "uC" || z == "lC") return "#e9c46a";
  if (z == "uD" || z == "lD") return "#f4a261";
  return "#e76f51";
}

std::string scatter_svg(const std::string& title, const std::vector<std::array<double, 2>>& xy,
                        const std::vector<std::string>& zones, double lo, double hi,
                        const std::string& xlabel, const std::string& ylabel) {
  const double size = 420, pad = 50;
  auto px = [&](double v) { return pad + (std::clamp(v, lo, hi) - lo) / (hi - lo) * size; };
  auto py = [&](double v) { return pad + size - (std::clamp(v, lo, hi) - lo) / (hi - lo) * size; };
  std::ostringstream o;
  o << std::fixed << std::setprecision(1);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * pad << "\" height=\""
    << size + 2 * pad << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << size << "\" height=\"" << size
    << "\" fill=\"white\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << px(lo) << "\" y1=\"" << py(lo) << "\" x2=\"" << px(hi) << "\" y2=\"" << py(hi)
    << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t i = 0; i < xy.size(); ++i)
    o << "<circle cx=\"" << px(xy[i][0]) << "\" cy=\"" << py(xy[i][1]) << "\" r=\"1.6\" fill=\""
      << zone_color(zones[i]) << "\"/>\n";
  o << "<text x=\"" << pad << "\" y=\"" << pad - 15 << "\">" << title << "</text>\n";
  o << "<text x=\"" << pad + size / 2 << "\" y=\"" << size + pad + 35 << "\" text-anchor=\"middle\">"
    << xlabel << "</text>\n";
  o << "<text transform=\"translate(15," << pad + size / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << ylabel << "</text>\n";
  o << "<text x=\"" << pad - 5 << "\" y=\"" << pad + size + 15 << "\" text-anchor=\"end\">" << lo
    << "</text>\n<text x=\"" << pad + size << "\" y=\"" << pad + size + 15 << "\" text-anchor=\"end\">"
    << hi << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace

Report report(const fs::path& run_dir) {
  const auto records = read_results(run_dir);
  Report rep = make_report(records);
  const fs::path out = run_dir / "report";
  ingest::write_file(out / "accuracy.csv", rep.accuracy_csv);
  ingest::write_file(out / "cg_ega.csv", rep.cg_ega_csv);
  ingest::write_file(out / "tables.txt", rep.text);
  ingest::write_file(out / "report.json", rep.bundle.dump(1) + "\n");

  std::set<std::string> done;
  const auto& tables = metrics::CgEgaTables::standard();
  for (const auto& r : records) {
    if (r.fold != 0) continue;
    const std::string cell = Cell{r.patient, models::parse_kind(r.model), r.horizon}.name();
    const fs::path csv = run_dir / "predictions" / (cell + ".csv");
    if (!done.insert(cell).second || !fs::exists(csv)) continue;
    const auto cg = metrics::cg_ega(read_fold_series(csv, 0, r.horizon), tables);
    std::vector<std::array<double, 2>> p, q;
    std::vector<std::string> pz, rz;
    for (std::size_t i = 0; i < cg.points.size(); ++i) {
      p.push_back({cg.points[i].y_true, cg.points[i].y_pred});
      q.push_back({cg.points[i].true_rate, cg.points[i].pred_rate});
      pz.push_back(cg.zones[i].first);
      rz.push_back(cg.zones[i].second);
    }
    ingest::write_file(out / "svg" / (cell + "_pega.svg"),
                       scatter_svg("P-EGA " + cell, p, pz, 0, 400, "reference (mg/dL)", "prediction (mg/dL)"));
    ingest::write_file(out / "svg" / (cell + "_rega.svg"),
                       scatter_svg("R-EGA " + cell, q, rz, -4, 4, "reference rate (mg/dL/min)",
                                   "predicted rate (mg/dL/min)"));
  }
  return rep;
}

}  // namespace glyfe::bench
