// glyfe: simulate cohorts, export samples, run the benchmark, print tables.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "glyfe/bench.hpp"
#include "glyfe/errors.hpp"

using namespace glyfe;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string profile;
  std::optional<int> jobs;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration (JSON, comments allowed)");
  cmd->add_option("--seed", c.seed, "base seed");
  cmd->add_option("--profile", c.profile, "full or desk")->check(CLI::IsMember({"full", "desk"}));
  cmd->add_option("--jobs", c.jobs, "parallel cells (0 = all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", c.out, "output directory");
}

bench::RunConfig resolve(const Common& c) {
  bench::RunConfig cfg = c.config.empty()
                             ? bench::RunConfig::for_profile(c.profile.empty() ? models::Profile::desk
                                                                               : models::parse_profile(c.profile))
                             : bench::RunConfig::load(c.config);
  if (!c.config.empty() && !c.profile.empty()) cfg.profile = models::parse_profile(c.profile);
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  if (!c.out.empty()) cfg.out = c.out;
  cfg.validate();
  return cfg;
}

bench::RunSummary do_run(const bench::RunConfig& cfg) {
  std::cerr << "run " << cfg.run_id() << " -> " << cfg.out.string() << "\n";
  auto s = bench::run(cfg, [](const std::string& msg) { std::cerr << "  " << msg << "\n"; });
  std::cerr << s.cells << " cells, " << s.resumed << " resumed, " << s.failed << " failed\n";
  for (const auto& e : s.errors) std::cerr << "  error: " << e << "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blood-glucose forecasting benchmark"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "write synthetic patients as 1-min CSV files");
  int patients = 10, days = 56;
  std::uint64_t sim_seed = 0;
  std::string sim_out = "data/synthetic";
  sim->add_option("--patients", patients, "number of patients")->check(CLI::PositiveNumber);
  sim->add_option("--days", days, "days per patient")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "base seed");
  sim->add_option("--out", sim_out, "output directory");

  Common pre_c, run_c, all_c;
  auto* pre = app.add_subcommand("preprocess", "export per-fold sample CSVs");
  add_common(pre, pre_c);
  auto* run = app.add_subcommand("run", "train, tune and evaluate every cell");
  add_common(run, run_c);
  auto* rep = app.add_subcommand("report", "tables and error-grid plots of a run");
  std::string rep_dir;
  rep->add_option("--out,dir", rep_dir, "run directory")->required();
  auto* all = app.add_subcommand("all", "run then report");
  add_common(all, all_c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      for (const auto& p : bench::simulate_cohort(patients, days, sim_seed, sim_out))
        std::cout << p.string() << "\n";
    } else if (pre->parsed()) {
      const auto cfg = resolve(pre_c);
      const auto dir = cfg.out / "samples";
      std::cout << bench::export_samples(cfg, dir) << " files under " << dir.string() << "\n";
    } else if (run->parsed()) {
      do_run(resolve(run_c));
    } else if (rep->parsed()) {
      std::cout << bench::report(rep_dir).text;
    } else if (all->parsed()) {
      const auto s = do_run(resolve(all_c));
      std::cout << bench::report(s.dir).text;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
