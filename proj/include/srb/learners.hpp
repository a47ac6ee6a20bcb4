#ifndef SRB_LEARNERS_HPP
#define SRB_LEARNERS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

namespace srb {

enum class LearnerKind { Ols, RandomForest, Knn };

struct ForestParams {
  int tree_count = 100;
  int features_per_split = 1;  // features tried per node
  int min_leaf = 5;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct KnnParams {
  int neighbors = 5;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Ols;
  ForestParams forest;
  KnnParams knn;

  std::string name() const;
  void validate() const;
};

// A fitted predictor. Immutable; predictions are deterministic functions of
// the fitted state.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual double predict(const Eigen::RowVectorXd& x) const = 0;

  Eigen::VectorXd predict_all(const Eigen::MatrixXd& features) const;
};

// Trains a predictor on the given rows. Refitting with identical inputs and
// seed gives an identical predictor.
std::unique_ptr<const Predictor> fit(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& outcomes);

// Generic training hook used where a full LearnerSpec is unnecessary
// (enumeration checks, constructed test learners).
using FitFunction = std::function<std::unique_ptr<const Predictor>(const Eigen::MatrixXd&,
                                                                   const Eigen::VectorXd&)>;

FitFunction fit_function(const LearnerSpec& spec);
FitFunction constant_learner(double value);
FitFunction training_mean_learner();
FitFunction ols_learner();

}  // namespace srb

#endif
