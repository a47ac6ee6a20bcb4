#ifndef SRB_DESIGN_HPP
#define SRB_DESIGN_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "srb/rng.hpp"

namespace srb {

enum class SamplingKind { SrsWor, Poisson };

// A probability sampling design over a universe of fixed size.
struct SamplingDesign {
  SamplingKind kind = SamplingKind::SrsWor;
  std::int64_t universe_size = 0;
  std::int64_t sample_size = 0;          // SRS only: fixed n
  std::vector<double> inclusion;         // Poisson only: per-unit pi

  static SamplingDesign srs_wor(std::int64_t universe_size, std::int64_t sample_size);
  static SamplingDesign poisson(std::vector<double> inclusion);

  // First-order inclusion probability of a unit.
  double inclusion_of(std::int64_t i) const;

  void validate() const;
};

struct Sample {
  std::vector<std::int64_t> units;  // sorted, unique
  SamplingDesign design;

  std::int64_t size() const { return static_cast<std::int64_t>(units.size()); }
  bool contains(std::int64_t i) const;

  // Units of the universe outside the sample, sorted.
  std::vector<std::int64_t> region() const;
};

Sample draw_srs_wor(std::int64_t universe_size, std::int64_t sample_size, RngStream& rng);

// Inclusion probabilities proportional to 1/(1 + exp(-alpha - 0.5*y_i)),
// scaled so they sum to the target expected size. Probabilities that would
// exceed 1 are clamped and the scaling re-solved on the remaining units.
std::vector<double> calibrate_poisson(std::span<const double> outcomes, std::int64_t expected_size,
                                      double alpha);

Sample draw_poisson(const std::vector<double>& inclusion, RngStream& rng);
Sample draw_sample(const SamplingDesign& design, RngStream& rng);

// Coefficient of variation of the inclusion probabilities: population
// standard deviation divided by the mean.
double cv_pi(std::span<const double> inclusion);

}  // namespace srb

#endif
