#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "srb/ensemble.hpp"
#include "srb/learners.hpp"
#include "srb/rng.hpp"
#include "test_support.hpp"

using namespace srb;
using srb::test::make_population;

namespace {

// Run over 6 units, sample {0,1,2}, five single-unit test sets; each split
// predicts one constant everywhere, so per-split errors are dialed in
// directly.
SplitRun constant_run(const std::vector<double>& split_values, const Eigen::VectorXd& outcomes,
                      std::string name) {
  SplitRun run;
  run.universe_size = 6;
  run.sample_units = {0, 1, 2};
  run.outcomes = outcomes;
  run.splits = {Split{{1, 2}, {0}}, Split{{0, 2}, {1}}, Split{{0, 1}, {2}},
                Split{{1, 2}, {0}}, Split{{0, 2}, {1}}};
  for (double v : split_values)
    run.predictions.push_back(Eigen::VectorXd::Constant(6, v));
  run.weight_mode = WeightMode::ExactPi2;
  run.split_pi2.assign(5, 0.25);
  run.learner_name = std::move(name);
  run.validate();
  return run;
}

double simplex_objective(const Eigen::MatrixXd& Q, const Eigen::VectorXd& w) {
  return w.dot(0.5 * (Q + Q.transpose()) * w);
}

}  // namespace

TEST_CASE("weight and vote containers validate their invariants") {
  MixWeights w;
  w.w = Eigen::Vector2d(0.5, 0.5);
  CHECK_NOTHROW(w.validate());
  w.w = Eigen::Vector2d(0.7, 0.4);
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w.w = Eigen::Vector2d(1.2, -0.2);
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);

  SelectorResult sel;
  sel.selected = 0;
  sel.vote_share = {0.4, 0.6};
  CHECK_THROWS_AS(sel.validate(), std::invalid_argument);  // not the arg max
  sel.selected = 1;
  CHECK_NOTHROW(sel.validate());
  sel.vote_share = {0.4, 0.4};
  CHECK_THROWS_AS(sel.validate(), std::invalid_argument);  // does not sum to one

  RiskMatrix d;
  d.values = Eigen::MatrixXd::Zero(2, 3);
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d.values = Eigen::MatrixXd::Zero(2, 2);
  d.values(0, 1) = 1.0;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);  // asymmetric
  d.values(1, 0) = 1.0;
  CHECK_NOTHROW(d.validate());
  d.learner_names = {"only_one"};
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("risk matrix diagonal holds the per-learner estimates") {
  const Population pop = make_population({1, 2, 3, 4, 5, 6, 7, 8});
  Sample s;
  s.design = SamplingDesign::srs_wor(8, 4);
  s.units = {0, 2, 5, 7};
  RngStream rng(41);
  const std::vector<Split> splits =
      draw_split_sequence(s, SplitDesign::srs_fraction(0.5), 8, rng);
  const SplitRun a =
      run_splits(training_mean_learner(), "mean", pop, s, SplitDesign::srs_fraction(0.5), splits,
                 WeightMode::ExactPi2);
  const SplitRun b = run_splits(constant_learner(3.0), "const", pop, s,
                                SplitDesign::srs_fraction(0.5), splits, WeightMode::ExactPi2);
  const SrbPredictor pa = srb_predict(a);
  const SrbPredictor pb = srb_predict(b);
  const std::vector<const SplitRun*> runs = {&a, &b};
  const std::vector<const SrbPredictor*> rings = {&pa, &pb};
  const RiskMatrix d = build_risk_matrix(runs, rings);

  CHECK(d.size() == 2);
  CHECK(d.learner_names == std::vector<std::string>{"mean", "const"});
  CHECK(d.values(0, 0) == doctest::Approx(risk_estimate(a, pa).total).epsilon(1e-13));
  CHECK(d.values(1, 1) == doctest::Approx(risk_estimate(b, pb).total).epsilon(1e-13));
  CHECK(d.values(0, 1) == d.values(1, 0));
  CHECK(d.values(0, 1) == doctest::Approx(pairwise_risk(a, b, pa, pb)).epsilon(1e-13));
}

TEST_CASE("the selector awards each split to the smallest test error") {
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(6);
  const SplitRun a = constant_run({0.1, 0.1, 0.1, 1.0, 1.0}, y, "a");
  const SplitRun b = constant_run({0.5, 0.5, 0.5, 0.2, 0.2}, y, "b");
  const std::vector<const SplitRun*> runs = {&a, &b};
  const SelectorResult sel = srb_select(runs);
  CHECK(sel.selected == 0);
  CHECK(sel.vote_share[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(sel.vote_share[1] == doctest::Approx(0.4).epsilon(1e-15));

  // Reversing the order relabels the winner without changing shares.
  const std::vector<const SplitRun*> swapped = {&b, &a};
  const SelectorResult rev = srb_select(swapped);
  CHECK(rev.selected == 1);
  CHECK(rev.vote_share[0] == doctest::Approx(0.4).epsilon(1e-15));

  // A lone learner takes every vote.
  const std::vector<const SplitRun*> solo = {&a};
  const SelectorResult single = srb_select(solo);
  CHECK(single.selected == 0);
  CHECK(single.vote_share == std::vector<double>{1.0});
}

TEST_CASE("exact ties split the vote equally") {
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(6);
  const SplitRun a = constant_run({0.3, 0.3, 0.3, 0.3, 0.3}, y, "a");
  const SplitRun b = constant_run({-0.3, -0.3, -0.3, -0.3, -0.3}, y, "b");
  const std::vector<const SplitRun*> runs = {&a, &b};
  const SelectorResult sel = srb_select(runs);
  CHECK(sel.vote_share[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sel.vote_share[1] == doctest::Approx(0.5).epsilon(1e-15));
  // The lowest index wins a tied share.
  CHECK(sel.selected == 0);
}

TEST_CASE("selection is invariant to a common scale") {
  Eigen::VectorXd y(6);
  y << 0.1, -0.2, 0.3, 0, 0, 0;
  const SplitRun a = constant_run({0.15, 0.1, 0.4, 0.9, 1.0}, y, "a");
  const SplitRun b = constant_run({0.5, 0.45, 0.2, 0.12, 0.3}, y, "b");
  const std::vector<const SplitRun*> runs = {&a, &b};
  const SelectorResult base = srb_select(runs);

  auto scaled = [](const SplitRun& r) {
    SplitRun out = r;
    out.outcomes *= 2.0;
    for (Eigen::VectorXd& p : out.predictions) p *= 2.0;
    return out;
  };
  const SplitRun a2 = scaled(a);
  const SplitRun b2 = scaled(b);
  const std::vector<const SplitRun*> runs2 = {&a2, &b2};
  const SelectorResult twice = srb_select(runs2);
  CHECK(twice.selected == base.selected);
  CHECK(twice.vote_share[0] == doctest::Approx(base.vote_share[0]).epsilon(1e-14));
}

TEST_CASE("quadratic minimization solves the two-learner case in closed form") {
  Eigen::MatrixXd q(2, 2);
  q << 1, 0, 0, 3;
  const Eigen::VectorXd w = minimize_quadratic_on_simplex(q);
  CHECK(w(0) == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(w(1) == doctest::Approx(0.25).epsilon(1e-10));

  q << 3, 0, 0, 1;
  const Eigen::VectorXd flipped = minimize_quadratic_on_simplex(q);
  CHECK(flipped(0) == doctest::Approx(0.25).epsilon(1e-10));

  // One-hot optimum on the boundary.
  q << 1, 2, 2, 100;
  const Eigen::VectorXd corner = minimize_quadratic_on_simplex(q);
  CHECK(corner(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(corner(1) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("indistinguishable components resolve to the symmetric point") {
  const Eigen::VectorXd w2 = minimize_quadratic_on_simplex(Eigen::MatrixXd::Ones(2, 2));
  CHECK(w2(0) == doctest::Approx(0.5).epsilon(1e-12));
  const Eigen::VectorXd w3 = minimize_quadratic_on_simplex(Eigen::MatrixXd::Ones(3, 3));
  for (int k = 0; k < 3; ++k) CHECK(w3(k) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // Singular but not flat: the interior minimum still wins.
  Eigen::MatrixXd q(2, 2);
  q << 1, -1, -1, 1;
  const Eigen::VectorXd w = minimize_quadratic_on_simplex(q);
  CHECK(simplex_objective(q, w) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(w(0) == doctest::Approx(0.5).epsilon(1e-10));

  CHECK(minimize_quadratic_on_simplex(Eigen::MatrixXd::Ones(1, 1))(0) == 1.0);
  CHECK_THROWS_AS(minimize_quadratic_on_simplex(Eigen::MatrixXd::Zero(2, 3)),
                  std::invalid_argument);
}

TEST_CASE("quadratic minimization beats every grid point") {
  RngStream rng(606);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::MatrixXd m(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = rng.normal();
    const Eigen::MatrixXd q =
        m.transpose() * m + 0.05 * Eigen::MatrixXd::Identity(3, 3);

    const Eigen::VectorXd w = minimize_quadratic_on_simplex(q);
    CHECK(std::abs(w.sum() - 1.0) < 1e-10);
    CHECK(w.minCoeff() > -1e-12);

    const double obj = simplex_objective(q, w);
    const double scale = 1.0 + q.cwiseAbs().maxCoeff();

    // Vertices and the centroid never do better.
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
      e(k) = 1.0;
      CHECK(obj <= simplex_objective(q, e) + 1e-10 * scale);
    }
    CHECK(obj <= simplex_objective(q, Eigen::VectorXd::Constant(3, 1.0 / 3.0)) + 1e-10 * scale);

    // Exhaustive grid at step 0.01.
    double grid_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j + i <= 100; ++j) {
        const Eigen::Vector3d g(i / 100.0, j / 100.0, (100 - i - j) / 100.0);
        grid_best = std::min(grid_best, simplex_objective(q, g));
      }
    }
    CHECK(obj <= grid_best + 1e-9 * scale);
  }
}

TEST_CASE("optimal weights come from the estimated risk matrix") {
  RiskMatrix d;
  d.values.resize(2, 2);
  d.values << 1, 0, 0, 3;
  const MixWeights w = optimal_weights(d);
  CHECK(w.provenance == WeightProvenance::Optimal);
  CHECK(w.w(0) == doctest::Approx(0.75).epsilon(1e-10));

  RiskMatrix lone;
  lone.values = Eigen::MatrixXd::Ones(1, 1);
  CHECK_THROWS_AS(optimal_weights(lone), std::invalid_argument);
}

TEST_CASE("proportional votes reward per-split winners") {
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(6);
  const SplitRun a = constant_run({0.1, 0.1, 0.1, 1.0, 1.0}, y, "a");
  const SplitRun b = constant_run({0.5, 0.5, 0.5, 0.2, 0.2}, y, "b");
  const std::vector<const SplitRun*> runs = {&a, &b};
  const MixWeights w = robust_weights(runs);
  CHECK(w.provenance == WeightProvenance::Robust);
  CHECK(w.w(0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(w.w(1) == doctest::Approx(0.4).epsilon(1e-12));

  // Identical runs tie every split.
  const std::vector<const SplitRun*> twins = {&a, &a};
  const MixWeights even = robust_weights(twins);
  CHECK(even.w(0) == doctest::Approx(0.5).epsilon(1e-15));

  // A uniformly better learner takes everything.
  const SplitRun dom = constant_run({0.01, 0.01, 0.01, 0.01, 0.01}, y, "dom");
  const SplitRun weak = constant_run({2.0, 2.0, 2.0, 2.0, 2.0}, y, "weak");
  const std::vector<const SplitRun*> pair = {&dom, &weak};
  const MixWeights onehot = robust_weights(pair);
  CHECK(onehot.w(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(onehot.w(1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("mixing combines averaged predictions pointwise") {
  SrbPredictor pa, pb;
  pa.mu_tilde = Eigen::VectorXd::Constant(4, 1.0);
  pb.mu_tilde = Eigen::VectorXd::Constant(4, 3.0);
  const std::vector<const SrbPredictor*> preds = {&pa, &pb};

  MixWeights w;
  w.w = Eigen::Vector2d(0.25, 0.75);
  w.provenance = WeightProvenance::Optimal;
  CHECK(mixed_predict(preds, w, 2) == doctest::Approx(2.5).epsilon(1e-15));

  w.w = Eigen::Vector2d(1.0, 0.0);
  CHECK(mixed_predict(preds, w, 0) == doctest::Approx(1.0).epsilon(1e-15));

  w.w = Eigen::Vector3d(0.2, 0.3, 0.5);
  CHECK_THROWS_AS(mixed_predict(preds, w, 0), std::invalid_argument);
}

TEST_CASE("region error of a mixture expands as a quadratic form") {
  const Population pop = make_population({2, -1, 4, 0, 3, -2, 5, 1});
  Sample s;
  s.design = SamplingDesign::srs_wor(8, 4);
  s.units = {1, 3, 4, 6};
  RngStream rng(71);
  const std::vector<Split> splits =
      draw_split_sequence(s, SplitDesign::srs_fraction(0.5), 6, rng);
  const SplitRun a =
      run_splits(training_mean_learner(), "mean", pop, s, SplitDesign::srs_fraction(0.5), splits,
                 WeightMode::ExactPi2);
  const SplitRun b = run_splits(fit_function(LearnerSpec{}), "ols", pop, s,
                                SplitDesign::srs_fraction(0.5), splits, WeightMode::ExactPi2);
  const SrbPredictor pa = srb_predict(a);
  const SrbPredictor pb = srb_predict(b);

  const Eigen::Vector2d w(0.3, 0.7);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(2, 2);
  double direct = 0.0;
  for (std::int64_t i = 0; i < pop.size(); ++i) {
    if (s.contains(i)) continue;
    const double ea = pa.mu_tilde(i) - pop.outcome(i);
    const double eb = pb.mu_tilde(i) - pop.outcome(i);
    cross(0, 0) += ea * ea;
    cross(0, 1) += ea * eb;
    cross(1, 0) += ea * eb;
    cross(1, 1) += eb * eb;
    const double mixed = w(0) * pa.mu_tilde(i) + w(1) * pb.mu_tilde(i) - pop.outcome(i);
    direct += mixed * mixed;
  }
  CHECK(direct == doctest::Approx(w.dot(cross * w)).epsilon(1e-8));
}
