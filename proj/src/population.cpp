#include "srb/population.hpp"

#include "srb/detail/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace srb {

namespace {

constexpr double kLambdaX2 = 5.0;

double m1_residual_mean(double x2) {
  if (x2 < 3.0) return 0.0;
  if (x2 < 7.0) return -2.0;
  return 2.0;
}

using detail::append_double;

}  // namespace

std::string generator_name(Generator g) { return g == Generator::M1 ? "M1" : "M2"; }

Generator generator_from_name(const std::string& name) {
  if (name == "M1") return Generator::M1;
  if (name == "M2") return Generator::M2;
  throw std::invalid_argument("unknown generator: " + name);
}

void PopulationSpec::validate() const {
  if (size < 0) throw std::invalid_argument("population size must be nonnegative");
  if (mixture.empty()) throw std::invalid_argument("mixture must have at least one component");
  double total = 0.0;
  for (const auto& c : mixture) {
    if (!(c.proportion >= 0.0)) throw std::invalid_argument("mixture proportions must be >= 0");
    total += c.proportion;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("mixture proportions must sum to 1");
  }
}

std::vector<std::int64_t> PopulationSpec::component_counts() const {
  validate();
  const std::size_t k = mixture.size();
  std::vector<std::int64_t> counts(k);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  std::int64_t assigned = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const double exact = mixture[j].proportion * static_cast<double>(size);
    counts[j] = static_cast<std::int64_t>(std::floor(exact + 1e-12));
    remainders[j] = {exact - static_cast<double>(counts[j]), j};
    assigned += counts[j];
  }
  // Largest remainder first; component order breaks ties.
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t r = 0; assigned < size; ++r, ++assigned) {
    counts[remainders[r % k].second] += 1;
  }
  return counts;
}

Population::Population(PopulationSpec spec, Eigen::VectorXd outcomes, Eigen::MatrixXd features,
                       std::vector<Generator> unit_generator)
    : spec_(std::move(spec)),
      outcomes_(std::move(outcomes)),
      features_(std::move(features)),
      unit_generator_(std::move(unit_generator)) {
  const auto n = outcomes_.size();
  if (features_.rows() != n || static_cast<Eigen::Index>(unit_generator_.size()) != n) {
    throw std::invalid_argument("population: outcomes, features and generators must have N entries");
  }
  if (features_.cols() != kFeatureDim) {
    throw std::invalid_argument("population: features must have 2 columns");
  }
}

Population generate_population(const PopulationSpec& spec) {
  spec.validate();
  const std::vector<std::int64_t> counts = spec.component_counts();
  const std::int64_t n = spec.size;

  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, kFeatureDim);
  std::vector<Generator> gen(static_cast<std::size_t>(n));

  RngStream rng = RngStream(spec.seed).derive({0x706f70ULL});  // population stream
  std::int64_t unit = 0;
  for (std::size_t j = 0; j < spec.mixture.size(); ++j) {
    const Generator g = spec.mixture[j].generator;
    for (std::int64_t c = 0; c < counts[j]; ++c, ++unit) {
      const double x1 = rng.normal(0.0, 1.0);
      const double x2 = static_cast<double>(rng.poisson(kLambdaX2));
      double eps;
      if (g == Generator::M1) {
        eps = rng.normal(m1_residual_mean(x2), 1.0);
        y[unit] = x1 + 0.5 * x2 + eps;
      } else {
        const double z = rng.normal(0.0, 1.0);
        eps = z * z + rng.normal(0.0, 0.25);
        y[unit] = 0.5 + 1.5 * x1 + x2 + eps;
      }
      x(unit, 0) = x1;
      x(unit, 1) = x2;
      gen[static_cast<std::size_t>(unit)] = g;
    }
  }
  return Population(spec, std::move(y), std::move(x), std::move(gen));
}

Population generate_population(PopulationSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  return generate_population(spec);
}

std::filesystem::path population_sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void save_population(const Population& pop, const std::filesystem::path& csv_path) {
  std::string out = "id,x1,x2,y,generator\n";
  for (std::int64_t i = 0; i < pop.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    append_double(out, pop.features()(i, 0));
    out += ',';
    out += std::to_string(static_cast<long long>(pop.features()(i, 1)));
    out += ',';
    append_double(out, pop.outcome(i));
    out += ',';
    out += generator_name(pop.unit_generator(i));
    out += '\n';
  }
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot open " + csv_path.string() + " for writing");
  csv << out;

  nlohmann::json meta;
  meta["size"] = pop.spec().size;
  meta["seed"] = pop.spec().seed;
  meta["mixture"] = nlohmann::json::array();
  for (const auto& c : pop.spec().mixture) {
    meta["mixture"].push_back({{"generator", generator_name(c.generator)},
                               {"proportion", c.proportion}});
  }
  std::ofstream side(population_sidecar_path(csv_path), std::ios::binary);
  if (!side) throw std::runtime_error("cannot write population sidecar");
  side << meta.dump(2) << '\n';
}

Population load_population(const std::filesystem::path& csv_path) {
  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open " + csv_path.string());

  PopulationSpec spec;
  std::ifstream side(population_sidecar_path(csv_path));
  if (side) {
    nlohmann::json meta = nlohmann::json::parse(side);
    spec.size = meta.at("size").get<std::int64_t>();
    spec.seed = meta.at("seed").get<std::uint64_t>();
    spec.mixture.clear();
    for (const auto& c : meta.at("mixture")) {
      spec.mixture.push_back({generator_from_name(c.at("generator").get<std::string>()),
                              c.at("proportion").get<double>()});
    }
  }

  std::vector<double> x1s, x2s, ys;
  std::vector<Generator> gens;
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // id
    std::getline(ss, field, ',');
    x1s.push_back(std::stod(field));
    std::getline(ss, field, ',');
    x2s.push_back(std::stod(field));
    std::getline(ss, field, ',');
    ys.push_back(std::stod(field));
    std::getline(ss, field, ',');
    gens.push_back(generator_from_name(field));
  }

  const std::int64_t n = static_cast<std::int64_t>(ys.size());
  if (spec.size == 0 && !side) spec.size = n;
  if (side && spec.size != n) {
    throw std::runtime_error("population CSV row count disagrees with sidecar size");
  }
  spec.size = n;
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, kFeatureDim);
  for (std::int64_t i = 0; i < n; ++i) {
    y[i] = ys[static_cast<std::size_t>(i)];
    x(i, 0) = x1s[static_cast<std::size_t>(i)];
    x(i, 1) = x2s[static_cast<std::size_t>(i)];
  }
  if (!side) {
    // No sidecar: synthesize a single-component spec so invariants hold.
    spec.mixture = {{gens.empty() ? Generator::M1 : gens.front(), 1.0}};
  }
  return Population(spec, std::move(y), std::move(x), std::move(gens));
}

}  // namespace srb
