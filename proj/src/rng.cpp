#include "srb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace srb {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RngStream RngStream::derive(std::initializer_list<std::uint64_t> path) const {
  std::uint64_t h = seed_;
  for (std::uint64_t p : path) {
    h = splitmix64(h ^ splitmix64(p));
  }
  return RngStream(h);
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform01_pos() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

double RngStream::normal(double mean, double sd) {
  // Box-Muller, one value per pair of uniforms; no cached state.
  const double u1 = uniform01_pos();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t RngStream::poisson(double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda must be nonnegative");
  if (lambda == 0.0) return 0;
  // Knuth's product method; adequate for the small rates used here.
  const double threshold = std::exp(-lambda);
  std::int64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01_pos();
  } while (p > threshold);
  return k - 1;
}

bool RngStream::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli: p outside [0,1]");
  return uniform01() < p;
}

std::vector<std::int64_t> srs_indices(std::int64_t population_size, std::int64_t sample_size,
                                      RngStream& rng) {
  if (population_size < 0 || sample_size < 0 || sample_size > population_size) {
    throw std::invalid_argument("srs_indices: need 0 <= n <= N");
  }
  std::vector<std::int64_t> pool(static_cast<std::size_t>(population_size));
  for (std::int64_t i = 0; i < population_size; ++i) pool[static_cast<std::size_t>(i)] = i;
  // Partial Fisher-Yates: after k swaps the first k entries are an SRS.
  for (std::int64_t k = 0; k < sample_size; ++k) {
    const std::uint64_t j =
        static_cast<std::uint64_t>(k) + rng.uniform_below(static_cast<std::uint64_t>(population_size - k));
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(sample_size));
  std::sort(pool.begin(), pool.end());
  return pool;
}

void shuffle_indices(std::vector<std::int64_t>& values, RngStream& rng) {
  const std::size_t n = values.size();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.uniform_below(n - k));
    std::swap(values[k], values[j]);
  }
}

}  // namespace srb
