#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "srb/oracle.hpp"
#include "srb/population.hpp"
#include "srb/simlab.hpp"

namespace fs = std::filesystem;

namespace {

// Thread precedence: command line, then SRBLAB_THREADS, then the config file.
std::int64_t resolve_threads(std::int64_t config_threads, std::int64_t cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("SRBLAB_THREADS")) {
    try {
      const std::int64_t parsed = std::stoll(env);
      if (parsed > 0) return parsed;
      std::cerr << "ignoring SRBLAB_THREADS=" << env << " (must be positive)\n";
    } catch (const std::exception&) {
      std::cerr << "ignoring SRBLAB_THREADS=" << env << " (not an integer)\n";
    }
  }
  return config_threads;
}

srb::ExperimentConfig starter_config() {
  srb::ExperimentConfig cfg;
  cfg.population.size = 500;
  cfg.population.mixture = {{srb::Generator::M1, 0.5}, {srb::Generator::M2, 0.5}};
  cfg.replicates = 50;
  cfg.sampling.kind = srb::SamplingKind::SrsWor;
  cfg.sampling.sample_size = 100;
  cfg.split.fraction = 0.7;
  cfg.split.draws = 20;
  srb::LearnerSpec ols;
  ols.kind = srb::LearnerKind::Ols;
  srb::LearnerSpec forest;
  forest.kind = srb::LearnerKind::RandomForest;
  srb::LearnerSpec knn;
  knn.kind = srb::LearnerKind::Knn;
  cfg.learners = {ols, forest, knn};
  cfg.seed = 20260822;
  cfg.output_dir = "out";
  return cfg;
}

int cmd_generate(std::int64_t size, double m2_share, std::uint64_t seed, const fs::path& out_dir,
                 const std::string& config_template) {
  fs::create_directories(out_dir);
  srb::PopulationSpec spec;
  spec.size = size;
  if (m2_share <= 0.0) {
    spec.mixture = {{srb::Generator::M1, 1.0}};
  } else if (m2_share >= 1.0) {
    spec.mixture = {{srb::Generator::M2, 1.0}};
  } else {
    spec.mixture = {{srb::Generator::M1, 1.0 - m2_share}, {srb::Generator::M2, m2_share}};
  }
  spec.seed = seed;
  spec.validate();
  const srb::Population pop = srb::generate_population(spec);
  const fs::path csv = out_dir / "population.csv";
  srb::save_population(pop, csv);
  std::cout << "wrote " << csv.string() << " (" << pop.size() << " units)\n";
  if (!config_template.empty()) {
    srb::save_config(starter_config(), config_template);
    std::cout << "wrote starter experiment config " << config_template << "\n";
  }
  return 0;
}

int cmd_run(const fs::path& config_path, const std::string& out_override,
            std::int64_t seed_override, bool seed_given, std::int64_t cli_threads) {
  srb::ExperimentConfig cfg = srb::load_config(config_path);
  if (seed_given) cfg.seed = static_cast<std::uint64_t>(seed_override);
  cfg.threads = resolve_threads(cfg.threads, cli_threads);
  const fs::path out_dir = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
  fs::create_directories(out_dir);

  const srb::ExperimentResult result = srb::run_experiment(cfg);
  srb::write_replicates_csv(result, out_dir / "replicates.csv");
  srb::write_run_meta(cfg, result, out_dir / "run_meta.json");
  if (!result.records.empty()) srb::write_summary_csv(result, out_dir / "summary.csv");

  std::cout << result.records.size() << " of " << cfg.replicates
            << " replicates completed; outputs in " << out_dir.string() << "\n";
  for (const auto& [replicate, reason] : result.failures)
    std::cerr << "replicate " << (replicate + 1) << " failed: " << reason << "\n";
  if (result.records.empty()) {
    std::cerr << "error: every replicate failed\n";
    return 1;
  }
  return 0;
}

int cmd_verify(std::int64_t max_n, std::uint64_t seed, const std::string& out_dir) {
  const std::vector<srb::IdentityReport> reports = srb::standard_oracle_suite(max_n, seed);
  std::cout << srb::report_text(reports);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    srb::write_report_csv(reports, fs::path(out_dir) / "verify_report.csv");
    std::cout << "wrote " << (fs::path(out_dir) / "verify_report.csv").string() << "\n";
  }
  if (!srb::all_pass(reports)) {
    std::cerr << "error: at least one checked identity failed\n";
    return 1;
  }
  return 0;
}

int cmd_report(const fs::path& dir) {
  const srb::ExperimentResult result = srb::load_replicates_csv(dir / "replicates.csv");
  if (result.records.empty()) {
    std::cerr << "error: no replicate rows in " << (dir / "replicates.csv").string() << "\n";
    return 1;
  }
  const std::vector<srb::SummaryRow> rows = srb::summarize(result);
  std::string group;
  for (const srb::SummaryRow& row : rows) {
    if (row.group != group) {
      group = row.group;
      std::cout << "\n[" << group << "]\n";
    }
    char value[64];
    std::snprintf(value, sizeof value, "%.6g", row.value);
    std::cout << "  " << row.name << " " << row.stat << " = " << value << "\n";
  }
  srb::write_summary_csv(result, dir / "summary.csv");
  std::cout << "\nwrote " << (dir / "summary.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-based subsampling toolkit: ensemble prediction on finite populations"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic population CSV");
  std::int64_t gen_size = 500;
  double gen_m2 = 0.5;
  std::uint64_t gen_seed = 1;
  std::string gen_out = ".";
  std::string gen_template;
  gen->add_option("--size", gen_size, "Number of units")->check(CLI::PositiveNumber);
  gen->add_option("--m2-share", gen_m2, "Proportion of units from the skewed-residual generator")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", gen_seed, "Generation seed");
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--config-template", gen_template,
                  "Also write a starter experiment config to this path");

  // run
  auto* run = app.add_subcommand("run", "Run a replicated sampling experiment");
  std::string run_config;
  std::string run_out;
  std::int64_t run_seed = 0;
  std::int64_t run_threads = 0;
  run->add_option("--config", run_config, "Experiment config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory (default: config output_dir)");
  auto* seed_opt = run->add_option("--seed", run_seed, "Master seed override");
  run->add_option("--threads", run_threads, "Worker thread count (overrides SRBLAB_THREADS)")
      ->check(CLI::PositiveNumber);

  // verify
  auto* verify = app.add_subcommand("verify", "Exact-enumeration identity checks");
  std::int64_t verify_max_n = 8;
  std::uint64_t verify_seed = 991;
  std::string verify_out = ".";
  verify->add_option("--max-n", verify_max_n, "Largest universe size to enumerate")
      ->check(CLI::Range(static_cast<std::int64_t>(4), static_cast<std::int64_t>(10)));
  verify->add_option("--seed", verify_seed, "Seed for the generated test populations");
  verify->add_option("--out", verify_out, "Directory for verify_report.csv (empty: skip)");

  // report
  auto* report = app.add_subcommand("report", "Aggregate a run's replicate table");
  std::string report_dir = ".";
  report->add_option("--out", report_dir, "Run output directory holding replicates.csv")
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_generate(gen_size, gen_m2, gen_seed, gen_out, gen_template);
    if (run->parsed())
      return cmd_run(run_config, run_out, run_seed, seed_opt->count() > 0, run_threads);
    if (verify->parsed()) return cmd_verify(verify_max_n, verify_seed, verify_out);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
