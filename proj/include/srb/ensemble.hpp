#ifndef SRB_ENSEMBLE_HPP
#define SRB_ENSEMBLE_HPP

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "srb/srb.hpp"

namespace srb {

// Matrix of pairwise risk estimates; the diagonal holds per-learner risks.
struct RiskMatrix {
  Eigen::MatrixXd values;  // K x K, symmetric
  WeightMode mode = WeightMode::ExactPi2;
  std::vector<std::string> learner_names;

  Eigen::Index size() const { return values.rows(); }
  void validate() const;
};

enum class WeightProvenance { Optimal, Robust, Hypothetical };

struct MixWeights {
  Eigen::VectorXd w;
  WeightProvenance provenance = WeightProvenance::Optimal;

  void validate() const;  // sums to one, all components nonnegative
};

struct SelectorResult {
  std::int64_t selected = 0;            // attains the maximum vote share
  std::vector<double> vote_share;       // sums to one

  void validate() const;
};

RiskMatrix build_risk_matrix(std::span<const SplitRun* const> runs,
                             std::span<const SrbPredictor* const> rings);

// Majority vote over splits: each split votes for the learner with the least
// test-set sum of squared errors, ties splitting the vote equally. The
// selected index maximizes the averaged vote, lowest index on a tie.
SelectorResult srb_select(std::span<const SplitRun* const> runs);

// Exact minimizer of w' Q w over the probability simplex, by enumeration of
// all face subsets: each face's equality-constrained stationary point is
// solved in closed form and infeasible candidates are discarded. Handles
// indefinite Q; intended for small K.
Eigen::VectorXd minimize_quadratic_on_simplex(const Eigen::MatrixXd& Q);

// Mixing weights minimizing the estimated quadratic risk w' D w on the
// simplex. Zero components are permitted: the estimated optimum may lie on
// the boundary.
MixWeights optimal_weights(const RiskMatrix& D_hat);

// Proportional-vote weights: per split each learner's single-split risk
// summand is compared and the winner takes the vote, ties splitting equally.
MixWeights robust_weights(std::span<const SplitRun* const> runs,
                          std::span<const SrbPredictor* const> rings);
MixWeights robust_weights(std::span<const SplitRun* const> runs);

// Convex combination of the averaged predictions at one unit.
double mixed_predict(std::span<const SrbPredictor* const> preds, const MixWeights& w,
                     std::int64_t unit);

}  // namespace srb

#endif
