#ifndef SRB_SRB_HPP
#define SRB_SRB_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "srb/design.hpp"
#include "srb/learners.hpp"
#include "srb/population.hpp"
#include "srb/split.hpp"

namespace srb {

// Weighting rule for the risk estimator: the exact conditional test-set
// inclusion probability (valid under twice-SRS) or its phi surrogate based
// on first-order inclusion probabilities only.
enum class WeightMode { ExactPi2, Phi2 };

WeightMode choose_weight_mode(SamplingKind sampling, SplitKind split);

// T Monte Carlo subsamples of one sample, with the learner refit on each
// training set and its predictions stored for the whole universe.
struct SplitRun {
  std::int64_t universe_size = 0;
  std::vector<std::int64_t> sample_units;       // s, sorted
  Eigen::VectorXd outcomes;                     // y over U
  std::vector<Split> splits;                    // T entries
  std::vector<Eigen::VectorXd> predictions;     // per split, over U
  WeightMode weight_mode = WeightMode::ExactPi2;
  std::vector<double> split_pi2;                // ExactPi2: one value per split
  std::vector<double> unit_phi;                 // Phi2: one value per unit
  std::string learner_name;

  std::int64_t draw_count() const { return static_cast<std::int64_t>(splits.size()); }
  std::int64_t region_size() const {
    return universe_size - static_cast<std::int64_t>(sample_units.size());
  }
  // Risk-estimation weight for a test unit of split t.
  double weight(std::int64_t t, std::int64_t unit) const;
  // Identical split sequences are required wherever runs are combined.
  bool same_splits_as(const SplitRun& other) const;

  void validate() const;
};

// Monte Carlo SRB predictions: the all-splits average (the SRB prediction
// on the region R) and the out-of-bag average on the sample.
struct SrbPredictor {
  Eigen::VectorXd mu_tilde;        // all-splits average, defined on all of U
  Eigen::VectorXd mu_ring;         // out-of-bag average; NaN outside the sample
  std::vector<std::int64_t> oob_count;  // T_i, zero outside the sample
};

struct RiskEstimate {
  double total = 0.0;         // estimated total squared error of prediction on R
  double standardized = 0.0;  // total / |R|
  double e2_term = 0.0;       // squared-error component
  double a2_term = 0.0;       // subtracted variance component (enters negatively)
  WeightMode mode = WeightMode::ExactPi2;
};

// Draws the split sequence for a run. For T-fold designs the sequence is one
// systematic pass over the folds and draw_count must equal the fold count.
std::vector<Split> draw_split_sequence(const Sample& sample, const SplitDesign& design,
                                       std::int64_t draw_count, RngStream& rng);

// Refits the learner on each training set of a pre-drawn split sequence.
// A fit or prediction failure is reported with the offending split index.
SplitRun run_splits(const FitFunction& learner, std::string learner_name, const Population& pop,
                    const Sample& sample, const SplitDesign& design,
                    const std::vector<Split>& splits, WeightMode mode);

// Convenience: draws the sequence internally; forest seeds are derived per
// split from the spec seed.
SplitRun run_splits(const LearnerSpec& spec, const Population& pop, const Sample& sample,
                    const SplitDesign& design, std::int64_t draw_count, RngStream& rng);
SplitRun run_splits(const LearnerSpec& spec, const Population& pop, const Sample& sample,
                    const SplitDesign& design, const std::vector<Split>& splits, WeightMode mode);

// Per-split learner wrapper giving each refit its own derived forest seed.
FitFunction per_split_fit(const LearnerSpec& spec, std::int64_t split_index);

SrbPredictor srb_predict(const SplitRun& run);

RiskEstimate risk_estimate(const SplitRun& run, const SrbPredictor& ring);

// Cross-risk estimate between two learners sharing the same split sequence;
// the diagonal case equals risk_estimate.
double pairwise_risk(const SplitRun& run_k, const SplitRun& run_l, const SrbPredictor& ring_k,
                     const SrbPredictor& ring_l);

// Residual-based baseline: mean squared residual of the averaged predictions
// over the sample.
double residual_msep(std::span<const double> tilde_on_sample, std::span<const double> y_sample);
double residual_msep(const SplitRun& run, const SrbPredictor& pred);

// Cross-validation baseline: unweighted mean over splits of test-set MSE.
double cv_msep(const SplitRun& run);
// Same for a convex combination of learners sharing one split sequence.
double cv_msep_mixed(std::span<const SplitRun* const> runs, std::span<const double> weights);

// Audit export: one row per (split, test unit) with prediction, error and
// weight.
void export_split_run_csv(const SplitRun& run, const std::filesystem::path& path);

}  // namespace srb

#endif
