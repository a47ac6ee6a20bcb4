#ifndef SRB_POPULATION_HPP
#define SRB_POPULATION_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srb/rng.hpp"

namespace srb {

// Unit-level outcome generator. M1 is linear in the features with a
// residual regime keyed to the integer feature; M2 is linear with a
// skewed chi-square-type residual.
enum class Generator { M1, M2 };

std::string generator_name(Generator g);
Generator generator_from_name(const std::string& name);

struct MixtureComponent {
  Generator generator = Generator::M1;
  double proportion = 1.0;
};

struct PopulationSpec {
  std::int64_t size = 0;
  std::vector<MixtureComponent> mixture = {{Generator::M1, 1.0}};
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on negative size, empty mixture,
  // negative proportions or proportions not summing to 1.
  void validate() const;

  // Unit counts per mixture component by largest-remainder apportionment.
  std::vector<std::int64_t> component_counts() const;
};

// A fixed finite universe. Outcomes and features are constants once
// generated; all randomness downstream comes from the sampling design.
class Population {
 public:
  Population(PopulationSpec spec, Eigen::VectorXd outcomes, Eigen::MatrixXd features,
             std::vector<Generator> unit_generator);

  std::int64_t size() const { return static_cast<std::int64_t>(outcomes_.size()); }
  const Eigen::VectorXd& outcomes() const { return outcomes_; }
  const Eigen::MatrixXd& features() const { return features_; }  // N x 2, col 1 integer-valued
  double outcome(std::int64_t i) const { return outcomes_[static_cast<Eigen::Index>(i)]; }
  Generator unit_generator(std::int64_t i) const {
    return unit_generator_[static_cast<std::size_t>(i)];
  }
  const PopulationSpec& spec() const { return spec_; }

 private:
  PopulationSpec spec_;
  Eigen::VectorXd outcomes_;
  Eigen::MatrixXd features_;
  std::vector<Generator> unit_generator_;
};

// Feature dimension used throughout: x1 real, x2 nonnegative integer.
inline constexpr int kFeatureDim = 2;

// Deterministic given (spec, seed): x1 ~ N(0,1), x2 ~ Poisson(5), then the
// component's residual rule. Units are laid out per component in mixture
// order; generation order defines unit ids 0..N-1.
Population generate_population(const PopulationSpec& spec);
Population generate_population(PopulationSpec spec, std::uint64_t seed);

// CSV columns: id,x1,x2,y,generator. A JSON sidecar (same path with a
// .meta.json extension) records the spec and seed so the population can be
// re-derived.
void save_population(const Population& pop, const std::filesystem::path& csv_path);
Population load_population(const std::filesystem::path& csv_path);

std::filesystem::path population_sidecar_path(const std::filesystem::path& csv_path);

}  // namespace srb

#endif
