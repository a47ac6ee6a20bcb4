// Acceptance battery. Each criterion exercises the toolkit end to end,
// prints the individual checks it makes and one final [PASS]/[FAIL] line;
// the exit code reflects the verdict. Run with a criterion number 1..8, or
// with no argument to run everything.

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "srb/design.hpp"
#include "srb/ensemble.hpp"
#include "srb/learners.hpp"
#include "srb/oracle.hpp"
#include "srb/population.hpp"
#include "srb/simlab.hpp"
#include "srb/split.hpp"
#include "srb/srb.hpp"
#include "test_support.hpp"

using namespace srb;
using srb::test::for_each_combination;
using srb::test::make_population;
using srb::test::scratch_dir;

namespace {

// Collects per-check verdicts; every check is echoed so a failing criterion
// shows exactly which inequality broke.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    std::printf("    %-4s %s\n", ok ? "ok" : "FAIL", what.c_str());
    pass_ = pass_ && ok;
  }
  void note(const std::string& what) { std::printf("         %s\n", what.c_str()); }
  bool pass() const { return pass_; }

 private:
  bool pass_ = true;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Population mixed_universe(std::int64_t n, std::uint64_t seed) {
  PopulationSpec spec;
  spec.size = n;
  spec.mixture = {{Generator::M1, 0.5}, {Generator::M2, 0.5}};
  return generate_population(spec, seed);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Criterion 1: expected total squared prediction error of the sample-mean
// predictor over the out-of-sample units, under simple random sampling.
bool criterion_1() {
  Checker c;
  const std::vector<double> y{1, 2, 3, 4, 5};
  double total = 0.0;
  int draws = 0;
  for_each_combination(5, 2, [&](const std::vector<std::int64_t>& s) {
    const double mean =
        (y[static_cast<std::size_t>(s[0])] + y[static_cast<std::size_t>(s[1])]) / 2.0;
    double t = 0.0;
    for (std::int64_t i = 0; i < 5; ++i) {
      if (i == s[0] || i == s[1]) continue;
      const double d = mean - y[static_cast<std::size_t>(i)];
      t += d * d;
    }
    total += t;
    ++draws;
  });
  const double mean_total = total / draws;
  c.expect(std::abs(mean_total - 11.25) <= 1e-9,
           "outcomes 1..5, samples of 2: enumerated expected total " + num(mean_total) +
               " equals 11.25");
  const std::vector<IdentityReport> fixed = verify_intro_identity(make_population(y), 2, 1e-9);
  c.expect(all_pass(fixed),
           "closed-form identity and sample-variance unbiasedness hold on the same universe");

  RngStream rng(20260822);
  int failures = 0;
  for (int r = 0; r < 20; ++r) {
    const std::int64_t n = 5 + r % 4;  // universe sizes 5..8
    std::vector<double> outcomes(static_cast<std::size_t>(n));
    for (double& v : outcomes) v = rng.normal(0.0, 3.0);
    const std::int64_t m = 2 + r % (n - 2);  // sample sizes 2..n-1
    if (!all_pass(verify_intro_identity(make_population(outcomes), m, 1e-9))) ++failures;
  }
  c.expect(failures == 0,
           "20 random outcome vectors on universes of 5..8 pass at tolerance 1e-9");
  return c.pass();
}

DesignEnumeration eight_unit_two_stage() {
  OracleSplitSpec split;
  split.scheme = OracleSplitScheme::SrsFixed;
  split.train_size = 2;
  return enumerate_design(mixed_universe(8, 71), SamplingDesign::srs_wor(8, 4), split);
}

// Criterion 2: for every training set of a fixed-size two-stage design, the
// conditional mean of the single-split risk estimator equals the conditional
// mean of the region total, for three learner classes.
bool criterion_2() {
  Checker c;
  const DesignEnumeration e = eight_unit_two_stage();
  const std::vector<std::pair<FitFunction, std::string>> learners = {
      {constant_learner(1.5), "constant"},
      {training_mean_learner(), "training mean"},
      {ols_learner(), "least squares"},
  };
  for (const auto& [fit, label] : learners) {
    const IdentityReport r = verify_subsample_identity(e, fit, label, 1e-9);
    c.expect(r.gated && r.pass,
             label + ": conditional unbiasedness for every training set, deviation " +
                 num(r.max_abs_deviation));
  }
  return c.pass();
}

// Criterion 3: over the whole design, the mean of the averaged risk
// estimator equals the true total error of the averaged predictor, and the
// cross-risk version agrees for a pair of distinct deterministic learners.
bool criterion_3() {
  Checker c;
  const DesignEnumeration e = eight_unit_two_stage();
  const IdentityReport rc = verify_risk_estimator_mean(e, constant_learner(1.5), "constant", 1e-9);
  c.expect(rc.gated && rc.pass,
           "constant: estimator mean matches the averaged predictor's total error, deviation " +
               num(rc.max_abs_deviation));
  const IdentityReport rm =
      verify_risk_estimator_mean(e, training_mean_learner(), "training mean", 1e-9);
  c.expect(rm.gated && rm.pass,
           "training mean: estimator mean matches the total error, deviation " +
               num(rm.max_abs_deviation));
  const IdentityReport rx = verify_cross_risk(e, constant_learner(1.5), training_mean_learner(),
                                              "constant vs training mean", 1e-9);
  c.expect(rx.gated && rx.pass,
           "cross risk of two distinct deterministic learners, deviation " +
               num(rx.max_abs_deviation));
  const IdentityReport info =
      verify_risk_estimator_mean(e, ols_learner(), "least squares", 1e-9, false);
  c.note("informational, unit-varying learner: least-squares deviation " +
         num(info.max_abs_deviation));
  return c.pass();
}

// Criterion 4: the closed-form test-inclusion weight matches the enumerated
// conditional expectation under calibrated unequal-probability sampling, and
// reduces exactly to the conditional inclusion probability under fixed-size
// sampling with a fixed-size split.
bool criterion_4() {
  Checker c;
  const Population pop = mixed_universe(6, 402);
  const Eigen::VectorXd& y = pop.outcomes();
  const std::span<const double> ys{y.data(), static_cast<std::size_t>(y.size())};
  const std::vector<double> pi = calibrate_poisson(ys, 3, -0.5);
  std::ostringstream pis;
  for (double v : pi) pis << (pis.tellp() > 0 ? ", " : "") << num(v);
  c.note("calibrated inclusion probabilities: " + pis.str());
  const auto [lo, hi] = std::minmax_element(pi.begin(), pi.end());
  c.expect(*hi - *lo > 0.05, "calibrated probabilities are heterogeneous, spread " +
                                 num(*hi - *lo));

  OracleSplitSpec split;
  split.scheme = OracleSplitScheme::Bernoulli;
  split.train_prob = 0.5;
  const DesignEnumeration e = enumerate_design(pop, SamplingDesign::poisson(pi), split);
  const IdentityReport r = verify_phi2(e, 1e-10);
  c.expect(r.gated && r.pass,
           "closed form matches enumerated E[test inclusion | unit outside train] for every "
           "unit, deviation " +
               num(r.max_abs_deviation));

  double worst = 0.0;
  for (std::int64_t n_univ = 3; n_univ <= 40; ++n_univ)
    for (std::int64_t n = 2; n < n_univ; ++n)
      for (std::int64_t n1 = 1; n1 < n; ++n1) {
        const double closed = phi2(static_cast<double>(n) / static_cast<double>(n_univ),
                                   static_cast<double>(n1) / static_cast<double>(n));
        const double exact = pi2_exact_srs(n_univ, n1, n - n1);
        worst = std::max(worst, std::abs(closed - exact));
      }
  c.expect(worst <= 1e-14,
           "closed form equals n2/(N - n1) for every fixed-size two-stage shape up to N=40, "
           "worst gap " +
               num(worst));

  OracleSplitSpec fixed;
  fixed.scheme = OracleSplitScheme::SrsFixed;
  fixed.train_size = 1;
  const DesignEnumeration es = enumerate_design(pop, SamplingDesign::srs_wor(6, 3), fixed);
  const IdentityReport rs = verify_phi2(es, 1e-14);
  c.expect(rs.gated && rs.pass,
           "enumerated fixed-size design agrees to 1e-14, deviation " +
               num(rs.max_abs_deviation));
  return c.pass();
}

// Criterion 5: inclusion-probability calibration hits the expected size
// exactly, its spread moves monotonically with the skew parameter and lands
// near the three documented coefficient-of-variation targets.
bool criterion_5() {
  Checker c;
  const Population pop = mixed_universe(2000, 33);
  const Eigen::VectorXd& y = pop.outcomes();
  const std::span<const double> ys{y.data(), static_cast<std::size_t>(y.size())};
  const std::int64_t n = 200;
  struct Case {
    double alpha;
    double target;
  };
  const std::vector<Case> cases = {{1.0, 0.15}, {-0.1, 0.30}, {-1.0, 0.45}};
  std::vector<double> spreads;
  for (const auto& [alpha, target] : cases) {
    const std::vector<double> pi = calibrate_poisson(ys, n, alpha);
    const double sum = std::accumulate(pi.begin(), pi.end(), 0.0);
    c.expect(std::abs(sum - static_cast<double>(n)) <= 1e-10,
             "alpha " + num(alpha) + ": probabilities sum to the expected size, gap " +
                 num(std::abs(sum - static_cast<double>(n))));
    const double cv = cv_pi(pi);
    spreads.push_back(cv);
    c.expect(std::abs(cv - target) <= 0.10, "alpha " + num(alpha) +
                                                ": coefficient of variation " + num(cv) +
                                                " within 10 points of " + num(target));
  }
  c.expect(spreads[0] < spreads[1] && spreads[1] < spreads[2],
           "coefficient of variation decreases as alpha increases");
  return c.pass();
}

// Criterion 6: the simplex minimizer is exact on the closed-form diagonal
// case and never beaten by a fine grid on random positive-definite problems.
bool criterion_6() {
  Checker c;
  Eigen::MatrixXd q(2, 2);
  q << 1, 0, 0, 3;
  const Eigen::VectorXd w = minimize_quadratic_on_simplex(q);
  c.expect(std::abs(w[0] - 0.75) <= 1e-10 && std::abs(w[1] - 0.25) <= 1e-10,
           "diagonal risks 1 and 3 mix to (0.75, 0.25), got (" + num(w[0]) + ", " + num(w[1]) +
               ")");

  RngStream rng(606);
  int beaten = 0;
  double worst_shortfall = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::MatrixXd b(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) b(i, j) = rng.normal();
    const Eigen::MatrixXd qq =
        b.transpose() * b + 1e-3 * Eigen::MatrixXd::Identity(3, 3);
    const Eigen::VectorXd sol = minimize_quadratic_on_simplex(qq);
    const double obj = sol.dot(qq * sol);
    double best_grid = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100 - i; ++j) {
        const Eigen::Vector3d v(i / 100.0, j / 100.0, (100 - i - j) / 100.0);
        best_grid = std::min(best_grid, v.dot(qq * v));
      }
    if (obj > best_grid + 1e-12) {
      ++beaten;
      worst_shortfall = std::max(worst_shortfall, obj - best_grid);
    }
  }
  c.expect(beaten == 0,
           "100 random positive-definite three-learner risks: solver objective never above any "
           "0.01-step grid point");
  if (beaten > 0) c.note("largest shortfall " + num(worst_shortfall));
  return c.pass();
}

LearnerSpec ols_spec() {
  LearnerSpec s;
  s.kind = LearnerKind::Ols;
  return s;
}

LearnerSpec forest_spec() {
  LearnerSpec s;
  s.kind = LearnerKind::RandomForest;
  s.forest.tree_count = 50;
  s.forest.features_per_split = 1;
  s.forest.min_leaf = 5;
  return s;
}

LearnerSpec knn_spec() {
  LearnerSpec s;
  s.kind = LearnerKind::Knn;
  s.knn.neighbors = 5;
  return s;
}

// Shared simulation shape for criteria 7 and 8. With a 0.7 train fraction
// and 20 split draws, a sampled unit occasionally stays out of every test
// set; those replicates abort by design and are counted as failures.
ExperimentConfig benchmark_config() {
  ExperimentConfig cfg;
  cfg.population.size = 500;
  cfg.population.mixture = {{Generator::M1, 0.5}, {Generator::M2, 0.5}};
  cfg.replicates = 50;
  cfg.sampling.kind = SamplingKind::SrsWor;
  cfg.sampling.sample_size = 100;
  cfg.split.fraction = 0.7;
  cfg.split.draws = 20;
  cfg.learners = {ols_spec(), forest_spec(), knn_spec()};
  cfg.weight_mode = "auto";
  cfg.seed = 13;
  cfg.threads = 1;
  return cfg;
}

double mean_of(const ExperimentResult& result, TrackedPredictor p,
               double PredictorReport::*field) {
  double sum = 0.0;
  for (const ReplicateRecord& rec : result.records)
    sum += rec.reports[static_cast<std::size_t>(p)].*field;
  return sum / static_cast<double>(result.records.size());
}

// Observations of the residual baseline against the same replicate's true
// region error, for the two mixed predictors.
void tally_residual_vs_true(const ExperimentResult& result, std::int64_t& below,
                            std::int64_t& pairs) {
  for (const ReplicateRecord& rec : result.records)
    for (TrackedPredictor p : {TrackedPredictor::Optimal, TrackedPredictor::Robust}) {
      const PredictorReport& rep = rec.reports[static_cast<std::size_t>(p)];
      ++pairs;
      if (rep.residual_est < rep.true_msep) ++below;
    }
}

// Criterion 7: simulation benchmarks. (a) the design-based estimate of the
// hypothetical predictors is calibrated against their true error under
// fixed-size sampling; (b) the residual baseline is optimistic for the mixed
// predictors across both sampling designs; (c) unweighted cross-validation
// understates the selected predictor's error under strongly unequal
// probabilities; (d) the selector settles on least squares when the
// population mean is linear.
bool criterion_7() {
  Checker c;
  const ExperimentResult srs = run_experiment(benchmark_config());
  c.note("fixed-size mixed run: " + std::to_string(srs.records.size()) + " of 50 replicates, " +
         std::to_string(srs.failures.size()) + " failures");
  c.expect(!srs.records.empty(), "fixed-size mixed run produced replicates");
  if (srs.records.empty()) return false;

  const std::vector<std::pair<TrackedPredictor, std::string>> hypos = {
      {TrackedPredictor::HypSelected, "hypothetical selection"},
      {TrackedPredictor::HypOptimal, "hypothetical mix"},
  };
  for (const auto& [p, label] : hypos) {
    const double truth = mean_of(srs, p, &PredictorReport::true_msep);
    const double design = mean_of(srs, p, &PredictorReport::design_est);
    const double rel = std::abs(design - truth) / truth;
    c.expect(rel <= 0.05, label + ": mean design estimate " + num(design) +
                              " within 5% of mean true error " + num(truth) +
                              ", relative gap " + num(rel));
  }

  ExperimentConfig pois_cfg = benchmark_config();
  pois_cfg.sampling.kind = SamplingKind::Poisson;
  pois_cfg.sampling.alpha = -1.0;
  const ExperimentResult pois = run_experiment(pois_cfg);
  c.note("unequal-probability run: " + std::to_string(pois.records.size()) +
         " of 50 replicates, " + std::to_string(pois.failures.size()) + " failures");
  c.expect(!pois.records.empty(), "unequal-probability run produced replicates");
  if (pois.records.empty()) return false;
  double cv_sum = 0.0;
  for (const ReplicateRecord& rec : pois.records) cv_sum += rec.cv_pi;
  c.note("mean inclusion-probability coefficient of variation " +
         num(cv_sum / static_cast<double>(pois.records.size())));

  std::int64_t below_srs = 0, pairs_srs = 0, below_pois = 0, pairs_pois = 0;
  tally_residual_vs_true(srs, below_srs, pairs_srs);
  tally_residual_vs_true(pois, below_pois, pairs_pois);
  c.note("residual below true per design: fixed-size " +
         num(100.0 * static_cast<double>(below_srs) / static_cast<double>(pairs_srs)) +
         "%, unequal-probability " +
         num(100.0 * static_cast<double>(below_pois) / static_cast<double>(pairs_pois)) + "%");
  const double frac = static_cast<double>(below_srs + below_pois) /
                      static_cast<double>(pairs_srs + pairs_pois);
  c.expect(frac >= 0.9,
           "residual estimate strictly below the same replicate's true error in " +
               num(100.0 * frac) + "% of mixed-predictor replicates over both designs, needs 90%");
  const double truth_sel = mean_of(pois, TrackedPredictor::Selected, &PredictorReport::true_msep);
  const double cv_sel = mean_of(pois, TrackedPredictor::Selected, &PredictorReport::cv_est);
  const double shortfall = (truth_sel - cv_sel) / truth_sel;
  c.note("selected predictor: mean true error " + num(truth_sel) +
         ", mean cross-validation estimate " + num(cv_sel));
  c.expect(shortfall >= 0.10, "cross-validation understates the selected predictor's error by " +
                                  num(100.0 * shortfall) + "%, needs 10%");

  ExperimentConfig linear_cfg = benchmark_config();
  linear_cfg.population.mixture = {{Generator::M2, 1.0}};
  const ExperimentResult linear = run_experiment(linear_cfg);
  c.note("linear-mean run: " + std::to_string(linear.records.size()) + " of 50 replicates, " +
         std::to_string(linear.failures.size()) + " failures");
  c.expect(!linear.records.empty(), "linear-mean run produced replicates");
  if (linear.records.empty()) return false;
  std::int64_t hits = 0;
  for (const ReplicateRecord& rec : linear.records)
    if (rec.selected == 0) ++hits;
  const double share =
      static_cast<double>(hits) / static_cast<double>(linear.records.size());
  c.expect(share >= 0.8, "least squares selected in " + num(100.0 * share) +
                             "% of replicates on the linear-mean population, needs 80%");
  return c.pass();
}

// Criterion 8: rerunning the criterion-7 configuration with a different
// worker count leaves the replicate table byte-identical.
bool criterion_8() {
  Checker c;
  const std::filesystem::path dir = scratch_dir("acceptance_threads");
  ExperimentConfig four = benchmark_config();
  four.threads = 4;
  const ExperimentResult r1 = run_experiment(benchmark_config());
  const ExperimentResult r4 = run_experiment(four);
  const std::filesystem::path p1 = dir / "one_thread.csv";
  const std::filesystem::path p4 = dir / "four_threads.csv";
  write_replicates_csv(r1, p1);
  write_replicates_csv(r4, p4);
  const std::string a = slurp(p1);
  const std::string b = slurp(p4);
  c.expect(!a.empty(), "one-thread run wrote a nonempty replicate table");
  c.expect(a == b, "replicate tables byte-identical across 1 and 4 worker threads");
  std::filesystem::remove_all(dir);
  return c.pass();
}

struct Criterion {
  const char* headline;
  bool (*run)();
};

constexpr Criterion kCriteria[] = {
    {"expected total squared error of the sample-mean predictor", criterion_1},
    {"conditional unbiasedness of the single-split risk estimator", criterion_2},
    {"mean of the averaged risk estimator, single and cross-learner", criterion_3},
    {"closed-form test-inclusion weight against exact enumeration", criterion_4},
    {"inclusion-probability calibration: size, spread targets, monotonicity", criterion_5},
    {"exact quadratic minimization on the probability simplex", criterion_6},
    {"simulation benchmarks: calibration, baseline optimism, selection", criterion_7},
    {"thread-count invariance of the replicate table", criterion_8},
};

bool run_criterion(int k) {
  const Criterion& cr = kCriteria[k - 1];
  std::printf("criterion %d: %s\n", k, cr.headline);
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = cr.run();
  } catch (const std::exception& ex) {
    std::printf("    FAIL unexpected exception: %s\n", ex.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] criterion %d (%.1fs)\n", ok ? "PASS" : "FAIL", k, secs);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 2) {
    std::fprintf(stderr, "usage: %s [criterion, 1..8]\n", argv[0]);
    return 2;
  }
  if (argc == 2) {
    const int k = std::atoi(argv[1]);
    if (k < 1 || k > 8) {
      std::fprintf(stderr, "usage: %s [criterion, 1..8]\n", argv[0]);
      return 2;
    }
    return run_criterion(k) ? 0 : 1;
  }
  int failed = 0;
  for (int k = 1; k <= 8; ++k)
    if (!run_criterion(k)) ++failed;
  return failed == 0 ? 0 : 1;
}
