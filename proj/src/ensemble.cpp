#include "srb/ensemble.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace srb {

namespace {

void check_runs(std::span<const SplitRun* const> runs) {
  if (runs.empty()) throw std::invalid_argument("no runs");
  for (const SplitRun* r : runs) {
    if (r == nullptr) throw std::invalid_argument("null run");
    r->validate();
    if (!runs.front()->same_splits_as(*r))
      throw std::invalid_argument("ensemble operations require runs sharing one split sequence");
  }
}

// Vote shares from per-split scores: each split's vote goes to the minimal
// score, exact ties splitting it equally.
std::vector<double> vote_shares(const std::vector<std::vector<double>>& scores) {
  const std::size_t T = scores.size();
  const std::size_t K = scores.front().size();
  std::vector<double> votes(K, 0.0);
  for (const std::vector<double>& row : scores) {
    double best = row.front();
    for (double v : row) best = std::min(best, v);
    std::size_t winners = 0;
    for (double v : row) winners += v == best ? 1 : 0;
    for (std::size_t k = 0; k < K; ++k)
      if (row[k] == best) votes[k] += 1.0 / static_cast<double>(winners);
  }
  for (double& v : votes) v /= static_cast<double>(T);
  return votes;
}

}  // namespace

void RiskMatrix::validate() const {
  if (values.rows() < 1 || values.rows() != values.cols())
    throw std::invalid_argument("risk matrix must be square and nonempty");
  if (!values.allFinite()) throw std::invalid_argument("risk matrix has non-finite entries");
  const double scale = 1.0 + values.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < values.rows(); ++k)
    for (Eigen::Index l = 0; l < k; ++l)
      if (std::abs(values(k, l) - values(l, k)) > 1e-12 * scale)
        throw std::invalid_argument("risk matrix must be symmetric");
  if (!learner_names.empty() &&
      learner_names.size() != static_cast<std::size_t>(values.rows()))
    throw std::invalid_argument("one learner name per row required");
}

void MixWeights::validate() const {
  if (w.size() < 1) throw std::invalid_argument("empty weight vector");
  if (!w.allFinite()) throw std::invalid_argument("non-finite weights");
  if ((w.array() < 0.0).any()) throw std::invalid_argument("weights must be nonnegative");
  if (std::abs(w.sum() - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to one");
}

void SelectorResult::validate() const {
  if (vote_share.empty()) throw std::invalid_argument("empty vote shares");
  double total = 0.0;
  double best = -1.0;
  for (double v : vote_share) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("invalid vote share");
    total += v;
    best = std::max(best, v);
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("vote shares must sum to one");
  if (selected < 0 || selected >= static_cast<std::int64_t>(vote_share.size()))
    throw std::invalid_argument("selected index out of range");
  if (vote_share[static_cast<std::size_t>(selected)] != best)
    throw std::invalid_argument("selected index must attain the maximum vote share");
}

RiskMatrix build_risk_matrix(std::span<const SplitRun* const> runs,
                             std::span<const SrbPredictor* const> rings) {
  check_runs(runs);
  if (runs.size() != rings.size())
    throw std::invalid_argument("one predictor per run required");
  const Eigen::Index K = static_cast<Eigen::Index>(runs.size());
  RiskMatrix out;
  out.values.resize(K, K);
  out.mode = runs.front()->weight_mode;
  for (Eigen::Index k = 0; k < K; ++k) out.learner_names.push_back(runs[k]->learner_name);
  for (Eigen::Index k = 0; k < K; ++k) {
    out.values(k, k) = risk_estimate(*runs[k], *rings[k]).total;
    for (Eigen::Index l = 0; l < k; ++l) {
      const double d = pairwise_risk(*runs[k], *runs[l], *rings[k], *rings[l]);
      out.values(k, l) = d;
      out.values(l, k) = d;
    }
  }
  out.validate();
  return out;
}

SelectorResult srb_select(std::span<const SplitRun* const> runs) {
  check_runs(runs);
  const std::size_t K = runs.size();
  const std::size_t T = static_cast<std::size_t>(runs.front()->draw_count());
  std::vector<std::vector<double>> sse(T, std::vector<double>(K, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    const Split& sp = runs.front()->splits[t];
    for (std::size_t k = 0; k < K; ++k) {
      double total = 0.0;
      const Eigen::VectorXd& pred = runs[k]->predictions[t];
      for (std::int64_t i : sp.test) {
        const double e = pred(i) - runs[k]->outcomes(i);
        total += e * e;
      }
      sse[t][k] = total;
    }
  }
  SelectorResult out;
  out.vote_share = vote_shares(sse);
  out.selected = 0;
  for (std::size_t k = 1; k < K; ++k)
    if (out.vote_share[k] > out.vote_share[static_cast<std::size_t>(out.selected)])
      out.selected = static_cast<std::int64_t>(k);
  out.validate();
  return out;
}

Eigen::VectorXd minimize_quadratic_on_simplex(const Eigen::MatrixXd& Q) {
  const Eigen::Index K = Q.rows();
  if (K < 1 || Q.cols() != K) throw std::invalid_argument("square matrix required");
  if (!Q.allFinite()) throw std::invalid_argument("non-finite matrix entries");
  if (K > 16) throw std::invalid_argument("face enumeration limited to 16 components");
  const Eigen::MatrixXd S = 0.5 * (Q + Q.transpose());

  constexpr double kFeasTol = 1e-10;
  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best;

  for (std::uint32_t mask = 1; mask < (1u << K); ++mask) {
    std::vector<Eigen::Index> face;
    for (Eigen::Index k = 0; k < K; ++k)
      if (mask & (1u << k)) face.push_back(k);
    const Eigen::Index m = static_cast<Eigen::Index>(face.size());

    Eigen::VectorXd w_face;
    if (m == 1) {
      w_face = Eigen::VectorXd::Ones(1);
    } else {
      // Stationary point of w'Sw on the face's affine hull:
      // [2S 1; 1' 0] [w; lambda] = [0; 1].
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) kkt(a, b) = 2.0 * S(face[a], face[b]);
      kkt.col(m).head(m).setOnes();
      kkt.row(m).head(m).setOnes();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
      rhs(m) = 1.0;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      if (!lu.isInvertible()) continue;  // a boundary face carries the minimum instead
      w_face = lu.solve(rhs).head(m);
      if (!w_face.allFinite()) continue;
      if ((w_face.array() < -kFeasTol).any()) continue;
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
    for (Eigen::Index a = 0; a < m; ++a) w(face[a]) = std::max(w_face(a), 0.0);
    w /= w.sum();
    const double obj = w.dot(S * w);
    if (obj < best_obj) {
      best_obj = obj;
      best = w;
    }
  }
  // Exact ties resolve to the symmetric point, consistent with the equal
  // tie-splitting used everywhere else.
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  const double uniform_obj = uniform.dot(S * uniform);
  if (uniform_obj <= best_obj + 1e-12 * (1.0 + std::abs(best_obj))) return uniform;
  return best;
}

MixWeights optimal_weights(const RiskMatrix& D_hat) {
  D_hat.validate();
  if (D_hat.size() < 2) throw std::invalid_argument("mixing requires at least two learners");
  MixWeights out;
  out.w = minimize_quadratic_on_simplex(D_hat.values);
  out.provenance = WeightProvenance::Optimal;
  out.validate();
  return out;
}

MixWeights robust_weights(std::span<const SplitRun* const> runs,
                          std::span<const SrbPredictor* const> rings) {
  check_runs(runs);
  if (runs.size() != rings.size())
    throw std::invalid_argument("one predictor per run required");
  const std::size_t K = runs.size();
  const std::size_t T = static_cast<std::size_t>(runs.front()->draw_count());
  // Single-split risk summand per learner; the per-split winner takes the vote.
  std::vector<std::vector<double>> tau(T, std::vector<double>(K, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    const Split& sp = runs.front()->splits[t];
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::VectorXd& pred = runs[k]->predictions[t];
      double total = 0.0;
      for (std::int64_t i : sp.test) {
        const double w = runs[k]->weight(static_cast<std::int64_t>(t), i);
        const double factor = 1.0 / w - 1.0;
        const double e = pred(i) - runs[k]->outcomes(i);
        const double a = pred(i) - rings[k]->mu_ring(i);
        total += factor * (e * e - a * a);
      }
      tau[t][k] = total;
    }
  }
  MixWeights out;
  std::vector<double> votes = vote_shares(tau);
  out.w = Eigen::Map<const Eigen::VectorXd>(votes.data(), static_cast<Eigen::Index>(K));
  out.provenance = WeightProvenance::Robust;
  out.validate();
  return out;
}

MixWeights robust_weights(std::span<const SplitRun* const> runs) {
  check_runs(runs);
  std::vector<SrbPredictor> rings;
  rings.reserve(runs.size());
  for (const SplitRun* r : runs) rings.push_back(srb_predict(*r));
  std::vector<const SrbPredictor*> ring_ptrs;
  ring_ptrs.reserve(rings.size());
  for (const SrbPredictor& r : rings) ring_ptrs.push_back(&r);
  return robust_weights(runs, ring_ptrs);
}

double mixed_predict(std::span<const SrbPredictor* const> preds, const MixWeights& w,
                     std::int64_t unit) {
  w.validate();
  if (preds.size() != static_cast<std::size_t>(w.w.size()))
    throw std::invalid_argument("one predictor per weight required");
  double out = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (preds[k] == nullptr) throw std::invalid_argument("null predictor");
    if (unit < 0 || unit >= preds[k]->mu_tilde.size())
      throw std::invalid_argument("unit out of range");
    const double v = preds[k]->mu_tilde(unit);
    if (!std::isfinite(v))
      throw std::invalid_argument("predictor undefined at unit " + std::to_string(unit));
    out += w.w(static_cast<Eigen::Index>(k)) * v;
  }
  return out;
}

}  // namespace srb
