#include "srb/srb.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

#include "srb/detail/csv.hpp"

namespace srb {

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<std::int64_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(idx[r]);
  return out;
}

Eigen::VectorXd entries_of(const Eigen::VectorXd& y, const std::vector<std::int64_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Eigen::Index>(r)) = y(idx[r]);
  return out;
}

}  // namespace

WeightMode choose_weight_mode(SamplingKind sampling, SplitKind split) {
  if (sampling == SamplingKind::SrsWor && split == SplitKind::SrsSplit) return WeightMode::ExactPi2;
  return WeightMode::Phi2;
}

double SplitRun::weight(std::int64_t t, std::int64_t unit) const {
  if (t < 0 || t >= draw_count()) throw std::out_of_range("split index out of range");
  if (unit < 0 || unit >= universe_size) throw std::out_of_range("unit out of range");
  if (weight_mode == WeightMode::ExactPi2) return split_pi2[static_cast<std::size_t>(t)];
  return unit_phi[static_cast<std::size_t>(unit)];
}

bool SplitRun::same_splits_as(const SplitRun& other) const {
  if (universe_size != other.universe_size) return false;
  if (sample_units != other.sample_units) return false;
  return splits == other.splits;
}

void SplitRun::validate() const {
  if (universe_size <= 0) throw std::invalid_argument("split run: empty universe");
  if (sample_units.empty()) throw std::invalid_argument("split run: empty sample");
  if (splits.empty()) throw std::invalid_argument("split run: no splits");
  if (predictions.size() != splits.size())
    throw std::invalid_argument("split run: prediction count does not match split count");
  if (outcomes.size() != universe_size)
    throw std::invalid_argument("split run: outcome length does not match universe");
  for (std::size_t t = 0; t < splits.size(); ++t) {
    const Split& sp = splits[t];
    if (sp.train.empty() || sp.test.empty())
      throw std::invalid_argument("split run: degenerate split");
    if (sp.train.size() + sp.test.size() != sample_units.size())
      throw std::invalid_argument("split run: split is not a partition of the sample");
    if (predictions[t].size() != universe_size)
      throw std::invalid_argument("split run: prediction length does not match universe");
    if (!predictions[t].allFinite())
      throw std::invalid_argument("split run: non-finite prediction in split " +
                                  std::to_string(t));
  }
  if (weight_mode == WeightMode::ExactPi2) {
    if (split_pi2.size() != splits.size())
      throw std::invalid_argument("split run: one test inclusion probability per split required");
  } else {
    if (unit_phi.size() != static_cast<std::size_t>(universe_size))
      throw std::invalid_argument("split run: one weight per unit required");
  }
}

std::vector<Split> draw_split_sequence(const Sample& sample, const SplitDesign& design,
                                       std::int64_t draw_count, RngStream& rng) {
  if (draw_count <= 0) throw std::invalid_argument("draw count must be positive");
  if (design.kind == SplitKind::TFold) {
    std::vector<Split> folds = tfold_splits(sample, design.fold_count, rng);
    if (draw_count != static_cast<std::int64_t>(folds.size()))
      throw std::invalid_argument("draw count must equal the fold count for fold splitting");
    return folds;
  }
  std::vector<Split> out;
  out.reserve(static_cast<std::size_t>(draw_count));
  for (std::int64_t t = 0; t < draw_count; ++t) out.push_back(draw_split(sample, design, rng));
  return out;
}

FitFunction per_split_fit(const LearnerSpec& spec, std::int64_t split_index) {
  LearnerSpec derived = spec;
  if (spec.kind == LearnerKind::RandomForest) {
    derived.forest.seed = RngStream(spec.forest.seed)
                              .derive({0x666974ULL, static_cast<std::uint64_t>(split_index)})
                              .seed();
  }
  return fit_function(derived);
}

SplitRun run_splits(const FitFunction& learner, std::string learner_name, const Population& pop,
                    const Sample& sample, const SplitDesign& design,
                    const std::vector<Split>& splits, WeightMode mode) {
  if (pop.size() != sample.design.universe_size)
    throw std::invalid_argument("sample universe does not match the population");
  if (mode == WeightMode::ExactPi2 &&
      (sample.design.kind != SamplingKind::SrsWor || design.kind != SplitKind::SrsSplit))
    throw std::invalid_argument(
        "exact test inclusion probabilities require simple random sampling at both stages");
  if (splits.empty()) throw std::invalid_argument("split sequence is empty");

  SplitRun run;
  run.universe_size = pop.size();
  run.sample_units = sample.units;
  run.outcomes = pop.outcomes();
  run.splits = splits;
  run.weight_mode = mode;
  run.learner_name = std::move(learner_name);
  run.predictions.reserve(splits.size());

  const std::int64_t N = pop.size();
  for (std::size_t t = 0; t < splits.size(); ++t) {
    const Split& sp = splits[t];
    try {
      Eigen::MatrixXd X_train = rows_of(pop.features(), sp.train);
      Eigen::VectorXd y_train = entries_of(pop.outcomes(), sp.train);
      std::unique_ptr<const Predictor> model = learner(X_train, y_train);
      if (!model) throw std::runtime_error("learner returned no model");
      Eigen::VectorXd pred = model->predict_all(pop.features());
      if (pred.size() != N) throw std::runtime_error("prediction length does not match universe");
      if (!pred.allFinite()) throw std::runtime_error("non-finite prediction");
      run.predictions.push_back(std::move(pred));
    } catch (const std::exception& e) {
      throw std::runtime_error("learner " + run.learner_name + " failed on split " +
                               std::to_string(t) + ": " + e.what());
    }
  }

  if (mode == WeightMode::ExactPi2) {
    run.split_pi2.reserve(splits.size());
    for (const Split& sp : splits)
      run.split_pi2.push_back(pi2_exact_srs(N, static_cast<std::int64_t>(sp.train.size()),
                                            static_cast<std::int64_t>(sp.test.size())));
  } else {
    const double p1 = design.p1(static_cast<std::int64_t>(sample.units.size()));
    run.unit_phi.assign(static_cast<std::size_t>(N),
                        std::numeric_limits<double>::quiet_NaN());
    for (std::int64_t i : sample.units)
      run.unit_phi[static_cast<std::size_t>(i)] = phi2(sample.design.inclusion_of(i), p1);
  }

  run.validate();
  return run;
}

SplitRun run_splits(const LearnerSpec& spec, const Population& pop, const Sample& sample,
                    const SplitDesign& design, const std::vector<Split>& splits, WeightMode mode) {
  spec.validate();
  if (spec.kind != LearnerKind::RandomForest)
    return run_splits(fit_function(spec), spec.name(), pop, sample, design, splits, mode);
  // Each refit gets its own derived stream so forests on different splits
  // are independent yet reproducible.
  SplitRun run;
  bool first = true;
  for (std::size_t t = 0; t < splits.size(); ++t) {
    SplitRun one = run_splits(per_split_fit(spec, static_cast<std::int64_t>(t)), spec.name(), pop,
                              sample, design, {splits[t]}, mode);
    if (first) {
      run = std::move(one);
      first = false;
    } else {
      run.splits.push_back(one.splits.front());
      run.predictions.push_back(std::move(one.predictions.front()));
      if (mode == WeightMode::ExactPi2) run.split_pi2.push_back(one.split_pi2.front());
    }
  }
  run.validate();
  return run;
}

SplitRun run_splits(const LearnerSpec& spec, const Population& pop, const Sample& sample,
                    const SplitDesign& design, std::int64_t draw_count, RngStream& rng) {
  std::vector<Split> splits = draw_split_sequence(sample, design, draw_count, rng);
  WeightMode mode = choose_weight_mode(sample.design.kind, design.kind);
  return run_splits(spec, pop, sample, design, splits, mode);
}

SrbPredictor srb_predict(const SplitRun& run) {
  run.validate();
  const std::int64_t N = run.universe_size;
  const std::int64_t T = run.draw_count();

  SrbPredictor out;
  out.mu_tilde = Eigen::VectorXd::Zero(N);
  for (const Eigen::VectorXd& pred : run.predictions) out.mu_tilde += pred;
  out.mu_tilde /= static_cast<double>(T);

  out.mu_ring =
      Eigen::VectorXd::Constant(N, std::numeric_limits<double>::quiet_NaN());
  out.oob_count.assign(static_cast<std::size_t>(N), 0);
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(N);
  for (std::int64_t t = 0; t < T; ++t) {
    const Split& sp = run.splits[static_cast<std::size_t>(t)];
    for (std::int64_t i : sp.test) {
      sums(i) += run.predictions[static_cast<std::size_t>(t)](i);
      ++out.oob_count[static_cast<std::size_t>(i)];
    }
  }
  for (std::int64_t i : run.sample_units) {
    const std::int64_t ti = out.oob_count[static_cast<std::size_t>(i)];
    if (ti == 0)
      throw std::runtime_error("unit " + std::to_string(i) +
                               " never appeared in a test set; increase the number of splits");
    out.mu_ring(i) = sums(i) / static_cast<double>(ti);
  }
  return out;
}

namespace {

void check_weight(double w) {
  if (!std::isfinite(w) || w <= 0.0)
    throw std::invalid_argument("risk estimation requires positive finite weights");
}

void check_pairable(const SplitRun& a, const SplitRun& b) {
  if (!a.same_splits_as(b))
    throw std::invalid_argument("cross-risk requires runs sharing one split sequence");
  if (a.weight_mode != b.weight_mode)
    throw std::invalid_argument("cross-risk requires runs sharing the same weights");
  bool same = true;
  if (a.weight_mode == WeightMode::ExactPi2) {
    same = a.split_pi2 == b.split_pi2;
  } else {
    for (std::int64_t i : a.sample_units)
      same = same && a.unit_phi[static_cast<std::size_t>(i)] ==
                         b.unit_phi[static_cast<std::size_t>(i)];
  }
  if (!same) throw std::invalid_argument("cross-risk requires runs sharing the same weights");
}

}  // namespace

RiskEstimate risk_estimate(const SplitRun& run, const SrbPredictor& ring) {
  run.validate();
  if (run.region_size() <= 0)
    throw std::invalid_argument("risk estimation requires a nonempty prediction region");
  const std::int64_t T = run.draw_count();
  double e2_sum = 0.0;
  double a2_sum = 0.0;
  for (std::int64_t t = 0; t < T; ++t) {
    const Split& sp = run.splits[static_cast<std::size_t>(t)];
    const Eigen::VectorXd& pred = run.predictions[static_cast<std::size_t>(t)];
    for (std::int64_t i : sp.test) {
      const double w = run.weight(t, i);
      check_weight(w);
      const double factor = 1.0 / w - 1.0;
      const double e = pred(i) - run.outcomes(i);
      const double a = pred(i) - ring.mu_ring(i);
      e2_sum += factor * e * e;
      a2_sum += factor * a * a;
    }
  }
  RiskEstimate out;
  out.mode = run.weight_mode;
  out.e2_term = e2_sum / static_cast<double>(T);
  out.a2_term = -a2_sum / static_cast<double>(T);
  out.total = out.e2_term + out.a2_term;
  out.standardized = out.total / static_cast<double>(run.region_size());
  return out;
}

double pairwise_risk(const SplitRun& run_k, const SplitRun& run_l, const SrbPredictor& ring_k,
                     const SrbPredictor& ring_l) {
  run_k.validate();
  run_l.validate();
  check_pairable(run_k, run_l);
  if (run_k.region_size() <= 0)
    throw std::invalid_argument("risk estimation requires a nonempty prediction region");
  const std::int64_t T = run_k.draw_count();
  double total = 0.0;
  for (std::int64_t t = 0; t < T; ++t) {
    const Split& sp = run_k.splits[static_cast<std::size_t>(t)];
    const Eigen::VectorXd& pk = run_k.predictions[static_cast<std::size_t>(t)];
    const Eigen::VectorXd& pl = run_l.predictions[static_cast<std::size_t>(t)];
    for (std::int64_t i : sp.test) {
      const double w = run_k.weight(t, i);
      check_weight(w);
      const double factor = 1.0 / w - 1.0;
      const double ek = pk(i) - run_k.outcomes(i);
      const double el = pl(i) - run_l.outcomes(i);
      const double ak = pk(i) - ring_k.mu_ring(i);
      const double al = pl(i) - ring_l.mu_ring(i);
      total += factor * (ek * el - ak * al);
    }
  }
  return total / static_cast<double>(T);
}

double residual_msep(std::span<const double> tilde_on_sample, std::span<const double> y_sample) {
  if (tilde_on_sample.size() != y_sample.size())
    throw std::invalid_argument("prediction and outcome lengths differ");
  if (tilde_on_sample.empty()) throw std::invalid_argument("empty sample");
  double total = 0.0;
  for (std::size_t i = 0; i < y_sample.size(); ++i) {
    const double r = tilde_on_sample[i] - y_sample[i];
    total += r * r;
  }
  return total / static_cast<double>(y_sample.size());
}

double residual_msep(const SplitRun& run, const SrbPredictor& pred) {
  std::vector<double> tilde;
  std::vector<double> y;
  tilde.reserve(run.sample_units.size());
  y.reserve(run.sample_units.size());
  for (std::int64_t i : run.sample_units) {
    tilde.push_back(pred.mu_tilde(i));
    y.push_back(run.outcomes(i));
  }
  return residual_msep(tilde, y);
}

double cv_msep(const SplitRun& run) {
  run.validate();
  const std::int64_t T = run.draw_count();
  double total = 0.0;
  for (std::int64_t t = 0; t < T; ++t) {
    const Split& sp = run.splits[static_cast<std::size_t>(t)];
    const Eigen::VectorXd& pred = run.predictions[static_cast<std::size_t>(t)];
    double sse = 0.0;
    for (std::int64_t i : sp.test) {
      const double e = pred(i) - run.outcomes(i);
      sse += e * e;
    }
    total += sse / static_cast<double>(sp.test.size());
  }
  return total / static_cast<double>(T);
}

double cv_msep_mixed(std::span<const SplitRun* const> runs, std::span<const double> weights) {
  if (runs.empty()) throw std::invalid_argument("no runs");
  if (runs.size() != weights.size())
    throw std::invalid_argument("one weight per run required");
  for (const SplitRun* r : runs) {
    if (r == nullptr) throw std::invalid_argument("null run");
    if (!runs.front()->same_splits_as(*r))
      throw std::invalid_argument("mixing requires runs sharing one split sequence");
  }
  const SplitRun& base = *runs.front();
  const std::int64_t T = base.draw_count();
  double total = 0.0;
  for (std::int64_t t = 0; t < T; ++t) {
    const Split& sp = base.splits[static_cast<std::size_t>(t)];
    double sse = 0.0;
    for (std::int64_t i : sp.test) {
      double mix = 0.0;
      for (std::size_t k = 0; k < runs.size(); ++k)
        mix += weights[k] * runs[k]->predictions[static_cast<std::size_t>(t)](i);
      const double e = mix - base.outcomes(i);
      sse += e * e;
    }
    total += sse / static_cast<double>(sp.test.size());
  }
  return total / static_cast<double>(T);
}

void export_split_run_csv(const SplitRun& run, const std::filesystem::path& path) {
  run.validate();
  std::string out = "split,unit,prediction,outcome,error,weight\n";
  for (std::int64_t t = 0; t < run.draw_count(); ++t) {
    const Split& sp = run.splits[static_cast<std::size_t>(t)];
    const Eigen::VectorXd& pred = run.predictions[static_cast<std::size_t>(t)];
    for (std::int64_t i : sp.test) {
      out += std::to_string(t);
      out += ',';
      out += std::to_string(i);
      out += ',';
      detail::append_double(out, pred(i));
      out += ',';
      detail::append_double(out, run.outcomes(i));
      out += ',';
      detail::append_double(out, pred(i) - run.outcomes(i));
      out += ',';
      detail::append_double(out, run.weight(t, i));
      out += '\n';
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << out;
}

}  // namespace srb
