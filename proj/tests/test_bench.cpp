#include <doctest.h>

#include <filesystem>

#include "glyfe/bench.hpp"
#include "glyfe/errors.hpp"

using namespace glyfe;
namespace fs = std::filesystem;

namespace {

bench::RunConfig small_run(const std::string& dir) {
  auto cfg = bench::RunConfig::for_profile(models::Profile::desk);
  cfg.dataset.synthetic_patients = 1;
  cfg.models = {models::ModelKind::base, models::ModelKind::ar};
  cfg.horizons = {30};
  cfg.seed = 3;
  cfg.jobs = 1;
  cfg.out = fs::temp_directory_path() / dir;
  fs::remove_all(cfg.out);
  return cfg;
}

}  // namespace

TEST_CASE("Config text allows comments and round-trips") {
  const auto cfg = bench::RunConfig::parse(R"(
    // desk run
    { "profile": "desk", /* two weeks */
      "dataset": { "kind": "synthetic", "synthetic": { "patients": 3, "days": 12 } },
      "models": ["Base", "SVR"], "horizons": [60], "seed": 12 })");
  CHECK(cfg.profile == models::Profile::desk);
  CHECK(cfg.dataset.synthetic_patients == 3);
  CHECK(cfg.dataset.synthetic_days == 12);
  REQUIRE(cfg.models.size() == 2);
  CHECK(cfg.models[1] == models::ModelKind::svr);
  CHECK(cfg.horizons == std::vector<int>{60});
  CHECK(cfg.seed == 12);
  const auto back = bench::RunConfig::from_json(cfg.to_json());
  CHECK(back.run_id() == cfg.run_id());
  auto other = cfg;
  other.seed = 13;
  CHECK(other.run_id() != cfg.run_id());
  other = cfg;
  other.out = "elsewhere";
  other.jobs = 4;
  CHECK(other.run_id() == cfg.run_id());
}

TEST_CASE("Invalid configs are rejected") {
  CHECK_THROWS_AS(bench::RunConfig::parse("{ \"horizons\": [45] }"), Error);
  CHECK_THROWS_AS(bench::RunConfig::parse("{ \"models\": [\"Prophet\"] }"), Error);
  CHECK_THROWS_AS(bench::RunConfig::parse("{ not json"), Error);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(bench::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(bench::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(bench::hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("A run writes one record per fold and resumes from stored cells") {
  const auto cfg = small_run("glyfe_bench_resume");
  const auto first = bench::run(cfg);
  CHECK(first.cells == 2);
  CHECK(first.resumed == 0);
  CHECK(first.failed == 0);
  REQUIRE(first.records.size() == 2 * kFolds);
  CHECK(first.records[0].model == "Base");
  CHECK(first.records[kFolds].model == "AR");
  for (int f = 0; f < kFolds; ++f) CHECK(first.records[f].fold == f);
  for (const char* p : {"results.jsonl", "run.json", "errors.json"}) CHECK(fs::exists(first.dir / p));
  const auto meta = nlohmann::json::parse(ingest::read_file(first.dir / "run.json"));
  CHECK(meta.at("run_id") == first.run_id);
  CHECK(meta.at("model_detail").at("AR").at("strategy") == "recursive");
  CHECK(meta.at("model_detail").at("Base").at("strategy") == "direct");
  CHECK(meta.at("split").at(first.records[0].patient).at("validation") == "contiguous");

  const auto second = bench::run(cfg);
  CHECK(second.resumed == 2);
  const auto a = bench::read_results(first.dir);
  REQUIRE(a.size() == first.records.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].to_json() == first.records[i].to_json());
    CHECK(second.records[i].to_json() == first.records[i].to_json());
  }
}

TEST_CASE("Report tables aggregate over patients") {
  const auto cfg = small_run("glyfe_bench_report");
  bench::run(cfg);
  const auto rep = bench::report(cfg.out);
  const auto& acc = rep.bundle.at("accuracy");
  REQUIRE(acc.size() == 2);
  for (const auto& row : acc) CHECK(row.at("RMSE").at("std").get<double>() == 0.0);
  CHECK(acc[0].at("TG").at("mean").get<double>() == 0.0);
  CHECK(rep.accuracy_csv.find("Base") != std::string::npos);
  CHECK(fs::exists(cfg.out / "report" / "accuracy.csv"));
  CHECK(fs::exists(cfg.out / "report" / "tables.txt"));
}
