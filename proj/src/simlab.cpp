#include "srb/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "srb/detail/csv.hpp"

namespace srb {

namespace {

using nlohmann::json;

constexpr std::uint64_t kReplicateTag = 0x726570ULL;

[[noreturn]] void config_error(const std::string& field, const std::string& why) {
  throw std::invalid_argument("config field '" + field + "': " + why);
}

const json& require(const json& j, const std::string& field, const std::string& context) {
  auto it = j.find(field);
  if (it == j.end()) config_error(context.empty() ? field : context + "." + field, "missing");
  return *it;
}

double as_number(const json& j, const std::string& field) {
  if (!j.is_number()) config_error(field, "must be a number");
  return j.get<double>();
}

std::int64_t as_integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) config_error(field, "must be an integer");
  return j.get<std::int64_t>();
}

std::string as_string(const json& j, const std::string& field) {
  if (!j.is_string()) config_error(field, "must be a string");
  return j.get<std::string>();
}

std::span<const double> vector_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

void SamplingSpec::validate() const {
  if (sample_size < 1) throw std::invalid_argument("sample size must be positive");
}

void SplitSpec::validate() const {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split fraction must lie in (0,1)");
  if (draws < 1) throw std::invalid_argument("split draw count must be positive");
}

void ExperimentConfig::validate() const {
  population.validate();
  if (population.size < 2) throw std::invalid_argument("population must have at least two units");
  if (replicates < 1) throw std::invalid_argument("replicate count must be positive");
  sampling.validate();
  if (sampling.sample_size >= population.size)
    throw std::invalid_argument("sample size must leave a nonempty prediction region");
  split.validate();
  if (learners.empty()) throw std::invalid_argument("at least one learner required");
  for (const LearnerSpec& l : learners) l.validate();
  if (weight_mode != "auto" && weight_mode != "exact" && weight_mode != "phi")
    throw std::invalid_argument("weight mode must be auto, exact or phi");
  if (weight_mode == "exact" && sampling.kind != SamplingKind::SrsWor)
    throw std::invalid_argument("exact weights require fixed-size simple random sampling");
  if (threads < 1) throw std::invalid_argument("thread count must be positive");
}

WeightMode ExperimentConfig::resolved_weight_mode() const {
  if (weight_mode == "exact") return WeightMode::ExactPi2;
  if (weight_mode == "phi") return WeightMode::Phi2;
  return choose_weight_mode(sampling.kind, SplitKind::SrsSplit);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file " + path.string() + " is not valid JSON: " +
                                e.what());
  }

  ExperimentConfig cfg;

  const json& jpop = require(j, "population", "");
  cfg.population.size = as_integer(require(jpop, "size", "population"), "population.size");
  cfg.population.mixture.clear();
  const json& jmix = require(jpop, "mixture", "population");
  if (!jmix.is_array() || jmix.empty()) config_error("population.mixture", "must be a nonempty array");
  for (const json& jm : jmix) {
    MixtureComponent c;
    try {
      c.generator = generator_from_name(
          as_string(require(jm, "generator", "population.mixture"), "population.mixture.generator"));
    } catch (const std::invalid_argument& ex) {
      config_error("population.mixture.generator", ex.what());
    }
    c.proportion =
        as_number(require(jm, "proportion", "population.mixture"), "population.mixture.proportion");
    cfg.population.mixture.push_back(c);
  }

  cfg.replicates = as_integer(require(j, "replicates", ""), "replicates");

  const json& jsamp = require(j, "sampling", "");
  const std::string kind = as_string(require(jsamp, "kind", "sampling"), "sampling.kind");
  if (kind == "srs") {
    cfg.sampling.kind = SamplingKind::SrsWor;
    cfg.sampling.sample_size =
        as_integer(require(jsamp, "sample_size", "sampling"), "sampling.sample_size");
  } else if (kind == "poisson") {
    cfg.sampling.kind = SamplingKind::Poisson;
    cfg.sampling.sample_size =
        as_integer(require(jsamp, "expected_size", "sampling"), "sampling.expected_size");
    cfg.sampling.alpha = as_number(require(jsamp, "alpha", "sampling"), "sampling.alpha");
  } else {
    config_error("sampling.kind", "must be \"srs\" or \"poisson\"");
  }

  const json& jsplit = require(j, "split", "");
  cfg.split.fraction = as_number(require(jsplit, "fraction", "split"), "split.fraction");
  cfg.split.draws = as_integer(require(jsplit, "draws", "split"), "split.draws");

  const json& jlearn = require(j, "learners", "");
  if (!jlearn.is_array() || jlearn.empty()) config_error("learners", "must be a nonempty array");
  for (const json& jl : jlearn) {
    LearnerSpec spec;
    const std::string lkind = as_string(require(jl, "kind", "learners"), "learners.kind");
    if (lkind == "ols") {
      spec.kind = LearnerKind::Ols;
    } else if (lkind == "forest") {
      spec.kind = LearnerKind::RandomForest;
      if (jl.contains("trees"))
        spec.forest.tree_count = as_integer(jl["trees"], "learners.trees");
      if (jl.contains("min_leaf"))
        spec.forest.min_leaf = as_integer(jl["min_leaf"], "learners.min_leaf");
      if (jl.contains("features_per_split"))
        spec.forest.features_per_split =
            as_integer(jl["features_per_split"], "learners.features_per_split");
    } else if (lkind == "knn") {
      spec.kind = LearnerKind::Knn;
      if (jl.contains("neighbors"))
        spec.knn.neighbors = as_integer(jl["neighbors"], "learners.neighbors");
    } else {
      config_error("learners.kind", "must be \"ols\", \"forest\" or \"knn\"");
    }
    cfg.learners.push_back(spec);
  }

  if (j.contains("weight_mode")) cfg.weight_mode = as_string(j["weight_mode"], "weight_mode");
  cfg.seed = static_cast<std::uint64_t>(as_integer(require(j, "seed", ""), "seed"));
  if (j.contains("threads")) cfg.threads = as_integer(j["threads"], "threads");
  if (j.contains("output_dir")) cfg.output_dir = as_string(j["output_dir"], "output_dir");

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("config file " + path.string() + ": " + e.what());
  }
  return cfg;
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
  json jmix = json::array();
  for (const MixtureComponent& c : cfg.population.mixture)
    jmix.push_back({{"generator", generator_name(c.generator)}, {"proportion", c.proportion}});
  json jsamp;
  if (cfg.sampling.kind == SamplingKind::SrsWor) {
    jsamp = {{"kind", "srs"}, {"sample_size", cfg.sampling.sample_size}};
  } else {
    jsamp = {{"kind", "poisson"},
             {"expected_size", cfg.sampling.sample_size},
             {"alpha", cfg.sampling.alpha}};
  }
  json jlearn = json::array();
  for (const LearnerSpec& l : cfg.learners) {
    json jl = {{"kind", l.name()}};
    if (l.kind == LearnerKind::RandomForest) {
      jl["trees"] = l.forest.tree_count;
      jl["min_leaf"] = l.forest.min_leaf;
      jl["features_per_split"] = l.forest.features_per_split;
    } else if (l.kind == LearnerKind::Knn) {
      jl["neighbors"] = l.knn.neighbors;
    }
    jlearn.push_back(jl);
  }
  return {{"population", {{"size", cfg.population.size}, {"mixture", jmix}}},
          {"replicates", cfg.replicates},
          {"sampling", jsamp},
          {"split", {{"fraction", cfg.split.fraction}, {"draws", cfg.split.draws}}},
          {"learners", jlearn},
          {"weight_mode", cfg.weight_mode},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"output_dir", cfg.output_dir}};
}

}  // namespace

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << config_to_json(config).dump(2) << "\n";
}

const char* tracked_predictor_name(TrackedPredictor p) {
  switch (p) {
    case TrackedPredictor::Selected: return "selected";
    case TrackedPredictor::Optimal: return "optimal";
    case TrackedPredictor::Robust: return "robust";
    case TrackedPredictor::HypSelected: return "hyp_selected";
    case TrackedPredictor::HypOptimal: return "hyp_optimal";
  }
  throw std::logic_error("unknown predictor");
}

HypotheticalBenchmarks hypothetical_benchmarks(std::span<const SplitRun* const> runs,
                                               std::span<const SrbPredictor* const> preds,
                                               const Population& pop) {
  if (runs.empty() || runs.size() != preds.size())
    throw std::invalid_argument("one predictor per run required");
  const std::int64_t K = static_cast<std::int64_t>(runs.size());
  std::vector<std::int64_t> region;
  for (std::int64_t i = 0; i < pop.size(); ++i)
    if (!std::binary_search(runs.front()->sample_units.begin(),
                            runs.front()->sample_units.end(), i))
      region.push_back(i);
  if (region.empty()) throw std::invalid_argument("empty prediction region");

  Eigen::MatrixXd errors(static_cast<Eigen::Index>(region.size()), K);
  for (std::int64_t k = 0; k < K; ++k)
    for (std::size_t r = 0; r < region.size(); ++r)
      errors(static_cast<Eigen::Index>(r), k) =
          preds[static_cast<std::size_t>(k)]->mu_tilde(region[r]) - pop.outcome(region[r]);

  HypotheticalBenchmarks out;
  Eigen::VectorXd totals = errors.colwise().squaredNorm();
  std::int64_t best = 0;
  for (std::int64_t k = 1; k < K; ++k)
    if (totals(k) < totals(best)) best = k;
  out.selected = best;

  if (K == 1) {
    out.weights.w = Eigen::VectorXd::Ones(1);
  } else {
    Eigen::MatrixXd d_true = errors.transpose() * errors;
    out.weights.w = minimize_quadratic_on_simplex(d_true);
  }
  out.weights.provenance = WeightProvenance::Hypothetical;
  out.weights.validate();
  return out;
}

namespace {

double true_msep_of(const Eigen::VectorXd& mix_tilde, const Population& pop,
                    const std::vector<std::int64_t>& sample_units) {
  double total = 0.0;
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < pop.size(); ++i) {
    if (std::binary_search(sample_units.begin(), sample_units.end(), i)) continue;
    const double e = mix_tilde(i) - pop.outcome(i);
    total += e * e;
    ++count;
  }
  return total / static_cast<double>(count);
}

double residual_of(const Eigen::VectorXd& mix_tilde, const Population& pop,
                   const std::vector<std::int64_t>& sample_units) {
  std::vector<double> tilde;
  std::vector<double> y;
  tilde.reserve(sample_units.size());
  y.reserve(sample_units.size());
  for (std::int64_t i : sample_units) {
    tilde.push_back(mix_tilde(i));
    y.push_back(pop.outcome(i));
  }
  return residual_msep(tilde, y);
}

Eigen::VectorXd mix_tilde_of(std::span<const SrbPredictor* const> preds,
                             const Eigen::VectorXd& w) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(preds.front()->mu_tilde.size());
  for (std::size_t k = 0; k < preds.size(); ++k) out += w(static_cast<Eigen::Index>(k)) * preds[k]->mu_tilde;
  return out;
}

}  // namespace

ReplicateRecord run_replicate(const ExperimentConfig& config, std::int64_t replicate) {
  config.validate();
  const RngStream master(config.seed);
  const std::uint64_t b = static_cast<std::uint64_t>(replicate);

  Population pop = generate_population(config.population,
                                       master.derive({kReplicateTag, b, 0}).seed());

  SamplingDesign design = SamplingDesign::srs_wor(pop.size(), config.sampling.sample_size);
  double cv = 0.0;
  if (config.sampling.kind == SamplingKind::Poisson) {
    std::vector<double> pi = calibrate_poisson(vector_span(pop.outcomes()),
                                               config.sampling.sample_size,
                                               config.sampling.alpha);
    cv = cv_pi(pi);
    design = SamplingDesign::poisson(std::move(pi));
  }

  RngStream sample_rng = master.derive({kReplicateTag, b, 1});
  Sample sample = draw_sample(design, sample_rng);
  if (sample.size() < 2) throw std::runtime_error("realized sample too small to split");
  if (sample.size() >= pop.size()) throw std::runtime_error("realized sample left no region");

  const SplitDesign split_design = SplitDesign::srs_fraction(config.split.fraction);
  RngStream split_rng = master.derive({kReplicateTag, b, 2});
  const std::vector<Split> splits =
      draw_split_sequence(sample, split_design, config.split.draws, split_rng);
  const WeightMode mode = config.resolved_weight_mode();

  const std::size_t K = config.learners.size();
  std::vector<SplitRun> runs;
  std::vector<SrbPredictor> preds;
  runs.reserve(K);
  preds.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    LearnerSpec spec = config.learners[k];
    if (spec.kind == LearnerKind::RandomForest)
      spec.forest.seed = master.derive({kReplicateTag, b, 3, static_cast<std::uint64_t>(k)}).seed();
    runs.push_back(run_splits(spec, pop, sample, split_design, splits, mode));
    preds.push_back(srb_predict(runs.back()));
  }

  std::vector<const SplitRun*> run_ptrs;
  std::vector<const SrbPredictor*> pred_ptrs;
  for (std::size_t k = 0; k < K; ++k) {
    run_ptrs.push_back(&runs[k]);
    pred_ptrs.push_back(&preds[k]);
  }

  const RiskMatrix d_hat = build_risk_matrix(run_ptrs, pred_ptrs);
  const SelectorResult sel = srb_select(run_ptrs);
  const MixWeights w_opt = K >= 2 ? optimal_weights(d_hat) : MixWeights{Eigen::VectorXd::Ones(1),
                                                                        WeightProvenance::Optimal};
  const MixWeights w_rob = robust_weights(run_ptrs, pred_ptrs);
  const HypotheticalBenchmarks hyp = hypothetical_benchmarks(run_ptrs, pred_ptrs, pop);

  const double region_size = static_cast<double>(pop.size() - sample.size());

  ReplicateRecord rec;
  rec.replicate = replicate;
  rec.cv_pi = cv;
  rec.selected = sel.selected;
  rec.hyp_selected = hyp.selected;
  rec.vote_share = sel.vote_share;
  rec.optimal_w.assign(w_opt.w.data(), w_opt.w.data() + w_opt.w.size());
  rec.robust_w.assign(w_rob.w.data(), w_rob.w.data() + w_rob.w.size());
  rec.hyp_w.assign(hyp.weights.w.data(), hyp.weights.w.data() + hyp.weights.w.size());

  auto quadratic_est = [&](const Eigen::VectorXd& w) {
    return w.dot(d_hat.values * w) / region_size;
  };
  auto one_hot = [&](std::int64_t k) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
    w(k) = 1.0;
    return w;
  };

  struct Setup {
    Eigen::VectorXd w;
    bool is_selection;
    std::int64_t index;
  };
  const std::array<Setup, kTrackedPredictors> setups = {
      Setup{one_hot(sel.selected), true, sel.selected},
      Setup{w_opt.w, false, -1},
      Setup{w_rob.w, false, -1},
      Setup{one_hot(hyp.selected), true, hyp.selected},
      Setup{hyp.weights.w, false, -1},
  };
  for (int p = 0; p < kTrackedPredictors; ++p) {
    const Setup& su = setups[static_cast<std::size_t>(p)];
    PredictorReport rep;
    const Eigen::VectorXd tilde = mix_tilde_of(pred_ptrs, su.w);
    rep.true_msep = true_msep_of(tilde, pop, sample.units);
    rep.design_est = su.is_selection
                         ? d_hat.values(su.index, su.index) / region_size
                         : quadratic_est(su.w);
    rep.cv_est = su.is_selection
                     ? cv_msep(runs[static_cast<std::size_t>(su.index)])
                     : cv_msep_mixed(run_ptrs, {su.w.data(), static_cast<std::size_t>(su.w.size())});
    rep.residual_est = residual_of(tilde, pop, sample.units);
    rec.reports[static_cast<std::size_t>(p)] = rep;
  }
  return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::int64_t B = config.replicates;
  std::vector<std::optional<ReplicateRecord>> slots(static_cast<std::size_t>(B));
  std::vector<std::optional<std::string>> errors(static_cast<std::size_t>(B));

  // Worker count follows the request, not the core count: byte-identical
  // output across thread counts is part of the contract, so oversubscribing
  // must stay legal.
  const std::int64_t workers = std::clamp<std::int64_t>(std::min(config.threads, B), 1, 256);
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::int64_t bi = next.fetch_add(1);
      if (bi >= B) return;
      try {
        slots[static_cast<std::size_t>(bi)] = run_replicate(config, bi);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(bi)] = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (std::int64_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  ExperimentResult out;
  for (const LearnerSpec& l : config.learners) out.learner_names.push_back(l.name());
  for (std::int64_t bi = 0; bi < B; ++bi) {
    if (slots[static_cast<std::size_t>(bi)]) {
      out.records.push_back(std::move(*slots[static_cast<std::size_t>(bi)]));
    } else {
      out.failures.emplace_back(bi, errors[static_cast<std::size_t>(bi)].value_or("unknown"));
    }
  }
  return out;
}

namespace {

std::vector<std::string> replicate_header(std::size_t K) {
  std::vector<std::string> cols = {"replicate", "cv_pi", "selected", "hyp_selected"};
  auto add_block = [&](const std::string& prefix) {
    for (std::size_t k = 1; k <= K; ++k) cols.push_back(prefix + "_" + std::to_string(k));
  };
  add_block("vote_share");
  add_block("optimal_w");
  add_block("robust_w");
  add_block("hyp_w");
  for (int p = 0; p < kTrackedPredictors; ++p) {
    const std::string name = tracked_predictor_name(static_cast<TrackedPredictor>(p));
    cols.push_back("true_" + name);
    cols.push_back("design_" + name);
    cols.push_back("cv_" + name);
    cols.push_back("residual_" + name);
  }
  return cols;
}

}  // namespace

void write_replicates_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  const std::size_t K = result.learner_names.size();
  std::string out;
  const std::vector<std::string> cols = replicate_header(K);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out += cols[c];
    out += c + 1 < cols.size() ? ',' : '\n';
  }
  for (const ReplicateRecord& r : result.records) {
    out += std::to_string(r.replicate + 1);
    out += ',';
    detail::append_double(out, r.cv_pi);
    out += ',';
    out += std::to_string(r.selected + 1);
    out += ',';
    out += std::to_string(r.hyp_selected + 1);
    for (const std::vector<double>* block : {&r.vote_share, &r.optimal_w, &r.robust_w, &r.hyp_w}) {
      if (block->size() != K) throw std::logic_error("record block does not match learner count");
      for (double v : *block) {
        out += ',';
        detail::append_double(out, v);
      }
    }
    for (const PredictorReport& rep : r.reports) {
      out += ',';
      detail::append_double(out, rep.true_msep);
      out += ',';
      detail::append_double(out, rep.design_est);
      out += ',';
      detail::append_double(out, rep.cv_est);
      out += ',';
      detail::append_double(out, rep.residual_est);
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << out;
}

void write_run_meta(const ExperimentConfig& config, const ExperimentResult& result,
                    const std::filesystem::path& path) {
  json j;
  j["config"] = config_to_json(config);
  j["learners"] = result.learner_names;
  json jf = json::array();
  for (const auto& [replicate, reason] : result.failures)
    jf.push_back({{"replicate", replicate + 1}, {"reason", reason}});
  j["failures"] = jf;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << j.dump(2) << "\n";
}

ExperimentResult load_replicates_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty replicate table " + path.string());

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  // Learner count from the vote-share block width.
  std::size_t K = 0;
  for (const std::string& col : header)
    if (col.rfind("vote_share_", 0) == 0) ++K;
  if (K == 0) throw std::runtime_error("replicate table has no vote share columns");
  if (header != replicate_header(K))
    throw std::runtime_error("replicate table columns do not match the expected layout");

  ExperimentResult out;
  for (std::size_t k = 1; k <= K; ++k) out.learner_names.push_back("learner_" + std::to_string(k));
  const std::filesystem::path meta = path.parent_path() / "run_meta.json";
  if (std::filesystem::exists(meta)) {
    std::ifstream mf(meta);
    json j = json::parse(mf, nullptr, false);
    if (!j.is_discarded() && j.contains("learners") && j["learners"].is_array() &&
        j["learners"].size() == K) {
      out.learner_names.clear();
      for (const json& name : j["learners"]) out.learner_names.push_back(name.get<std::string>());
    }
  }

  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size())
      throw std::runtime_error("replicate table row has wrong column count");
    std::size_t c = 0;
    auto next_int = [&] { return std::stoll(cells[c++]); };
    auto next_double = [&] { return std::stod(cells[c++]); };
    ReplicateRecord r;
    r.replicate = next_int() - 1;
    r.cv_pi = next_double();
    r.selected = next_int() - 1;
    r.hyp_selected = next_int() - 1;
    for (std::vector<double>* block : {&r.vote_share, &r.optimal_w, &r.robust_w, &r.hyp_w})
      for (std::size_t k = 0; k < K; ++k) block->push_back(next_double());
    for (int p = 0; p < kTrackedPredictors; ++p) {
      PredictorReport rep;
      rep.true_msep = next_double();
      rep.design_est = next_double();
      rep.cv_est = next_double();
      rep.residual_est = next_double();
      r.reports[static_cast<std::size_t>(p)] = rep;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

std::vector<SummaryRow> summarize(const ExperimentResult& result) {
  const std::size_t K = result.learner_names.size();
  const double B = static_cast<double>(result.records.size());
  if (result.records.empty()) throw std::invalid_argument("no successful replicates to summarize");

  std::vector<SummaryRow> rows;
  auto mean_over = [&](auto&& get) {
    double total = 0.0;
    for (const ReplicateRecord& r : result.records) total += get(r);
    return total / B;
  };

  for (std::size_t k = 0; k < K; ++k) {
    const std::string& name = result.learner_names[k];
    rows.push_back({"selection", name, "actual",
                    mean_over([&](const ReplicateRecord& r) {
                      return r.selected == static_cast<std::int64_t>(k) ? 1.0 : 0.0;
                    })});
    rows.push_back({"selection", name, "hypothetical",
                    mean_over([&](const ReplicateRecord& r) {
                      return r.hyp_selected == static_cast<std::int64_t>(k) ? 1.0 : 0.0;
                    })});
    rows.push_back({"weights", name, "optimal",
                    mean_over([&](const ReplicateRecord& r) { return r.optimal_w[k]; })});
    rows.push_back({"weights", name, "robust",
                    mean_over([&](const ReplicateRecord& r) { return r.robust_w[k]; })});
    rows.push_back({"weights", name, "hypothetical",
                    mean_over([&](const ReplicateRecord& r) { return r.hyp_w[k]; })});
    rows.push_back({"vote_share", name, "mean",
                    mean_over([&](const ReplicateRecord& r) { return r.vote_share[k]; })});
  }
  for (int p = 0; p < kTrackedPredictors; ++p) {
    const std::string name = tracked_predictor_name(static_cast<TrackedPredictor>(p));
    const std::size_t pi = static_cast<std::size_t>(p);
    rows.push_back({"msep", name, "true",
                    mean_over([&](const ReplicateRecord& r) { return r.reports[pi].true_msep; })});
    rows.push_back({"msep", name, "design",
                    mean_over([&](const ReplicateRecord& r) { return r.reports[pi].design_est; })});
    rows.push_back({"msep", name, "cv",
                    mean_over([&](const ReplicateRecord& r) { return r.reports[pi].cv_est; })});
    rows.push_back(
        {"msep", name, "residual",
         mean_over([&](const ReplicateRecord& r) { return r.reports[pi].residual_est; })});
  }
  rows.push_back({"meta", "replicates", "count", B});
  rows.push_back({"meta", "cv_pi", "mean",
                  mean_over([&](const ReplicateRecord& r) { return r.cv_pi; })});
  return rows;
}

void write_summary_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::string out = "group,name,stat,value\n";
  for (const SummaryRow& row : summarize(result)) {
    out += row.group;
    out += ',';
    out += row.name;
    out += ',';
    out += row.stat;
    out += ',';
    detail::append_double(out, row.value);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << out;
}

}  // namespace srb
