#ifndef SRB_RNG_HPP
#define SRB_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace srb {

// Seeded random stream with counter-based derivation of substreams.
// Streams derived from the same (seed, path) are identical across runs,
// platforms and thread counts; distribution sampling below avoids the
// implementation-defined std::*_distribution algorithms for the same reason.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Child stream for (this stream's seed, path...). Derivation is pure:
  // it does not advance or depend on the state of the parent stream.
  RngStream derive(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  // Uniform on (0, 1]; safe for log().
  double uniform01_pos();
  // Uniform integer on [0, bound), bound >= 1, rejection-free modulo bias
  // removed by rejection sampling.
  std::uint64_t uniform_below(std::uint64_t bound);

  double normal(double mean = 0.0, double sd = 1.0);
  std::int64_t poisson(double lambda);
  bool bernoulli(double p);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Sorted simple random sample without replacement of size n from {0..N-1}.
std::vector<std::int64_t> srs_indices(std::int64_t population_size, std::int64_t sample_size,
                                      RngStream& rng);

// Fisher-Yates shuffle of an index vector.
void shuffle_indices(std::vector<std::int64_t>& values, RngStream& rng);

}  // namespace srb

#endif
