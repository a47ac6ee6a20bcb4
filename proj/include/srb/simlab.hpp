#ifndef SRB_SIMLAB_HPP
#define SRB_SIMLAB_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srb/ensemble.hpp"
#include "srb/population.hpp"
#include "srb/srb.hpp"

namespace srb {

struct SamplingSpec {
  SamplingKind kind = SamplingKind::SrsWor;
  std::int64_t sample_size = 0;  // fixed size, or expected size when independent
  double alpha = 0.0;            // independent sampling skew parameter

  void validate() const;
};

struct SplitSpec {
  double fraction = 0.7;
  std::int64_t draws = 50;

  void validate() const;
};

struct ExperimentConfig {
  PopulationSpec population;
  std::int64_t replicates = 1;
  SamplingSpec sampling;
  SplitSpec split;
  std::vector<LearnerSpec> learners;
  std::string weight_mode = "auto";  // "auto", "exact" or "phi"
  std::uint64_t seed = 0;
  std::int64_t threads = 1;
  std::string output_dir = ".";

  void validate() const;
  WeightMode resolved_weight_mode() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

// The five predictors tracked per replicate.
enum class TrackedPredictor : int {
  Selected = 0,
  Optimal = 1,
  Robust = 2,
  HypSelected = 3,
  HypOptimal = 4,
};
inline constexpr int kTrackedPredictors = 5;
const char* tracked_predictor_name(TrackedPredictor p);

struct PredictorReport {
  double true_msep = 0.0;      // region mean squared prediction error
  double design_est = 0.0;     // weighted design-based estimate, standardized
  double cv_est = 0.0;         // cross-validation estimate
  double residual_est = 0.0;   // residual estimate over the sample
};

struct ReplicateRecord {
  std::int64_t replicate = 0;  // zero-based
  double cv_pi = 0.0;
  std::int64_t selected = 0;
  std::int64_t hyp_selected = 0;
  std::vector<double> vote_share;
  std::vector<double> optimal_w;
  std::vector<double> robust_w;
  std::vector<double> hyp_w;
  std::array<PredictorReport, kTrackedPredictors> reports;
};

struct ExperimentResult {
  std::vector<std::string> learner_names;
  std::vector<ReplicateRecord> records;                           // successful replicates
  std::vector<std::pair<std::int64_t, std::string>> failures;     // (replicate, reason)
};

struct HypotheticalBenchmarks {
  std::int64_t selected = 0;
  MixWeights weights;
};

// Selection and mixing weights from the true region errors of the averaged
// predictors; a simulation-only privilege.
HypotheticalBenchmarks hypothetical_benchmarks(std::span<const SplitRun* const> runs,
                                               std::span<const SrbPredictor* const> preds,
                                               const Population& pop);

ReplicateRecord run_replicate(const ExperimentConfig& config, std::int64_t replicate);
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_replicates_csv(const ExperimentResult& result, const std::filesystem::path& path);
void write_summary_csv(const ExperimentResult& result, const std::filesystem::path& path);
void write_run_meta(const ExperimentConfig& config, const ExperimentResult& result,
                    const std::filesystem::path& path);

// Reads records back from a replicate table; learner names come from the
// run metadata file when present next to it.
ExperimentResult load_replicates_csv(const std::filesystem::path& path);

// (group, name, stat, value) rows of the summary table.
struct SummaryRow {
  std::string group;
  std::string name;
  std::string stat;
  double value = 0.0;
};
std::vector<SummaryRow> summarize(const ExperimentResult& result);

}  // namespace srb

#endif
