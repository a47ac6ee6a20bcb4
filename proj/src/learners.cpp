#include "srb/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "srb/rng.hpp"

namespace srb {

namespace {

void check_training_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw std::invalid_argument("fit: feature/outcome row mismatch");
  if (y.size() < 1) throw std::invalid_argument("fit: empty training set");
  if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("fit: non-finite training data");
}

class OlsModel final : public Predictor {
 public:
  OlsModel(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Eigen::MatrixXd design(x.rows(), x.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(x.cols()) = x;
    // Minimal-norm least squares; tolerates rank-deficient subsamples.
    coef_ = design.completeOrthogonalDecomposition().solve(y);
  }

  double predict(const Eigen::RowVectorXd& x) const override {
    double out = coef_[0];
    for (Eigen::Index j = 0; j < x.size(); ++j) out += coef_[j + 1] * x[j];
    return out;
  }

  const Eigen::VectorXd& coefficients() const { return coef_; }

 private:
  Eigen::VectorXd coef_;
};

class ConstantModel final : public Predictor {
 public:
  explicit ConstantModel(double value) : value_(value) {}
  double predict(const Eigen::RowVectorXd&) const override { return value_; }

 private:
  double value_;
};

// Regression tree with variance-reduction splits on sorted feature values.
class RegressionTree {
 public:
  void build(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
             std::vector<std::int64_t> rows, int features_per_split, int min_leaf,
             RngStream& rng) {
    nodes_.clear();
    grow(x, y, std::move(rows), features_per_split, min_leaf, rng);
  }

  double predict(const Eigen::RowVectorXd& x) const {
    std::size_t node = 0;
    while (nodes_[node].feature >= 0) {
      node = x[nodes_[node].feature] <= nodes_[node].threshold
                 ? nodes_[node].left
                 : nodes_[node].right;
    }
    return nodes_[node].value;
  }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::size_t left = 0, right = 0;
    double value = 0.0;
  };

  std::size_t grow(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   std::vector<std::int64_t> rows, int features_per_split, int min_leaf,
                   RngStream& rng) {
    const std::size_t index = nodes_.size();
    nodes_.emplace_back();

    double sum = 0.0;
    for (std::int64_t r : rows) sum += y[r];
    const double mean = sum / static_cast<double>(rows.size());

    const int dim = static_cast<int>(x.cols());
    int best_feature = -1;
    double best_threshold = 0.0, best_score = std::numeric_limits<double>::infinity();

    if (rows.size() >= 2 * static_cast<std::size_t>(min_leaf)) {
      // Candidate features without replacement, in random order.
      std::vector<std::int64_t> feats(static_cast<std::size_t>(dim));
      std::iota(feats.begin(), feats.end(), 0);
      shuffle_indices(feats, rng);
      const int tried = std::min(features_per_split, dim);

      std::vector<std::int64_t> order(rows);
      for (int f = 0; f < tried; ++f) {
        const int feature = static_cast<int>(feats[static_cast<std::size_t>(f)]);
        std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
          if (x(a, feature) != x(b, feature)) return x(a, feature) < x(b, feature);
          return a < b;
        });
        // Prefix sums give each candidate split's SSE in O(1).
        double left_sum = 0.0, left_sq = 0.0, total_sq = 0.0;
        for (std::int64_t r : order) total_sq += y[r] * y[r];
        const double total_sum = sum;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
          const double yk = y[order[k]];
          left_sum += yk;
          left_sq += yk * yk;
          const double xv = x(order[k], feature);
          const double xn = x(order[k + 1], feature);
          if (xv == xn) continue;
          const auto nl = static_cast<double>(k + 1);
          const auto nr = static_cast<double>(order.size() - k - 1);
          if (nl < min_leaf || nr < min_leaf) continue;
          const double right_sum = total_sum - left_sum;
          const double right_sq = total_sq - left_sq;
          const double score =
              (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
          if (score < best_score) {
            best_score = score;
            best_feature = feature;
            best_threshold = 0.5 * (xv + xn);
          }
        }
      }
    }

    if (best_feature < 0) {
      nodes_[index].value = mean;
      return index;
    }

    std::vector<std::int64_t> left_rows, right_rows;
    for (std::int64_t r : rows) {
      (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[index].feature = best_feature;
    nodes_[index].threshold = best_threshold;
    const std::size_t left = grow(x, y, std::move(left_rows), features_per_split, min_leaf, rng);
    const std::size_t right = grow(x, y, std::move(right_rows), features_per_split, min_leaf, rng);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  std::vector<Node> nodes_;
};

class ForestModel final : public Predictor {
 public:
  ForestModel(const ForestParams& params, const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
      : trees_(static_cast<std::size_t>(params.tree_count)) {
    const std::int64_t n = y.size();
    const RngStream base(params.seed);
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      RngStream tree_rng = base.derive({0x74726565ULL, static_cast<std::uint64_t>(t)});
      std::vector<std::int64_t> rows(static_cast<std::size_t>(n));
      if (params.bootstrap) {
        for (auto& r : rows) {
          r = static_cast<std::int64_t>(tree_rng.uniform_below(static_cast<std::uint64_t>(n)));
        }
        std::sort(rows.begin(), rows.end());
      } else {
        std::iota(rows.begin(), rows.end(), 0);
      }
      trees_[t].build(x, y, std::move(rows), params.features_per_split, params.min_leaf, tree_rng);
    }
  }

  double predict(const Eigen::RowVectorXd& x) const override {
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.predict(x);
    return sum / static_cast<double>(trees_.size());
  }

 private:
  std::vector<RegressionTree> trees_;
};

class KnnModel final : public Predictor {
 public:
  KnnModel(const KnnParams& params, const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
      : neighbors_(std::min<std::int64_t>(params.neighbors, y.size())),
        outcomes_(y),
        center_(x.colwise().mean()) {
    // Standardization uses training-set moments only.
    scale_.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - center_[j]).square().mean();
      scale_[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    standardized_ = (x.rowwise() - center_).array().rowwise() / scale_.transpose().array();
  }

  double predict(const Eigen::RowVectorXd& x) const override {
    const Eigen::RowVectorXd q = (x - center_).array() / scale_.transpose().array();
    // (distance, row) pairs; row index breaks distance ties.
    std::vector<std::pair<double, std::int64_t>> dist(static_cast<std::size_t>(outcomes_.size()));
    for (Eigen::Index i = 0; i < standardized_.rows(); ++i) {
      dist[static_cast<std::size_t>(i)] = {(standardized_.row(i) - q).squaredNorm(), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + neighbors_, dist.end());
    double sum = 0.0;
    for (std::int64_t k = 0; k < neighbors_; ++k) sum += outcomes_[dist[static_cast<std::size_t>(k)].second];
    return sum / static_cast<double>(neighbors_);
  }

 private:
  std::int64_t neighbors_;
  Eigen::VectorXd outcomes_;
  Eigen::RowVectorXd center_;
  Eigen::VectorXd scale_;
  Eigen::MatrixXd standardized_;
};

}  // namespace

std::string LearnerSpec::name() const {
  switch (kind) {
    case LearnerKind::Ols: return "ols";
    case LearnerKind::RandomForest: return "forest";
    case LearnerKind::Knn: return "knn";
  }
  return "unknown";
}

void LearnerSpec::validate() const {
  if (kind == LearnerKind::RandomForest) {
    if (forest.tree_count < 1 || forest.features_per_split < 1 || forest.min_leaf < 1) {
      throw std::invalid_argument("forest hyperparameters must be positive");
    }
  }
  if (kind == LearnerKind::Knn && knn.neighbors < 1) {
    throw std::invalid_argument("knn neighbor count must be positive");
  }
}

Eigen::VectorXd Predictor::predict_all(const Eigen::MatrixXd& features) const {
  Eigen::VectorXd out(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out[i] = predict(features.row(i));
  }
  return out;
}

std::unique_ptr<const Predictor> fit(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& outcomes) {
  spec.validate();
  check_training_data(features, outcomes);
  switch (spec.kind) {
    case LearnerKind::Ols:
      return std::make_unique<OlsModel>(features, outcomes);
    case LearnerKind::RandomForest:
      return std::make_unique<ForestModel>(spec.forest, features, outcomes);
    case LearnerKind::Knn:
      return std::make_unique<KnnModel>(spec.knn, features, outcomes);
  }
  throw std::logic_error("fit: unhandled learner kind");
}

FitFunction fit_function(const LearnerSpec& spec) {
  return [spec](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) { return fit(spec, x, y); };
}

FitFunction constant_learner(double value) {
  return [value](const Eigen::MatrixXd&, const Eigen::VectorXd&) {
    return std::make_unique<const ConstantModel>(value);
  };
}

FitFunction training_mean_learner() {
  return [](const Eigen::MatrixXd&, const Eigen::VectorXd& y) {
    if (y.size() < 1) throw std::invalid_argument("fit: empty training set");
    if (!y.allFinite()) throw std::invalid_argument("fit: non-finite training data");
    return std::make_unique<const ConstantModel>(y.mean());
  };
}

FitFunction ols_learner() {
  return [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    check_training_data(x, y);
    return std::make_unique<const OlsModel>(x, y);
  };
}

}  // namespace srb
