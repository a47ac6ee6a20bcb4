#include "srb/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace srb {

SamplingDesign SamplingDesign::srs_wor(std::int64_t universe_size, std::int64_t sample_size) {
  SamplingDesign d;
  d.kind = SamplingKind::SrsWor;
  d.universe_size = universe_size;
  d.sample_size = sample_size;
  d.validate();
  return d;
}

SamplingDesign SamplingDesign::poisson(std::vector<double> inclusion) {
  SamplingDesign d;
  d.kind = SamplingKind::Poisson;
  d.universe_size = static_cast<std::int64_t>(inclusion.size());
  d.inclusion = std::move(inclusion);
  d.validate();
  return d;
}

double SamplingDesign::inclusion_of(std::int64_t i) const {
  if (i < 0 || i >= universe_size) throw std::out_of_range("inclusion_of: unit out of range");
  if (kind == SamplingKind::SrsWor) {
    return static_cast<double>(sample_size) / static_cast<double>(universe_size);
  }
  return inclusion[static_cast<std::size_t>(i)];
}

void SamplingDesign::validate() const {
  if (universe_size < 0) throw std::invalid_argument("sampling design: negative universe size");
  if (kind == SamplingKind::SrsWor) {
    if (sample_size < 0 || sample_size > universe_size) {
      throw std::invalid_argument("sampling design: need 0 <= n <= N");
    }
  } else {
    if (static_cast<std::int64_t>(inclusion.size()) != universe_size) {
      throw std::invalid_argument("sampling design: inclusion vector must have N entries");
    }
    for (double p : inclusion) {
      if (!(p > 0.0 && p <= 1.0)) {
        throw std::invalid_argument("sampling design: inclusion probabilities must be in (0,1]");
      }
    }
  }
}

bool Sample::contains(std::int64_t i) const {
  return std::binary_search(units.begin(), units.end(), i);
}

std::vector<std::int64_t> Sample::region() const {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(design.universe_size - size()));
  std::size_t k = 0;
  for (std::int64_t i = 0; i < design.universe_size; ++i) {
    if (k < units.size() && units[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

Sample draw_srs_wor(std::int64_t universe_size, std::int64_t sample_size, RngStream& rng) {
  if (sample_size > universe_size) throw std::invalid_argument("draw_srs_wor: n > N");
  Sample s;
  s.units = srs_indices(universe_size, sample_size, rng);
  s.design = SamplingDesign::srs_wor(universe_size, sample_size);
  return s;
}

std::vector<double> calibrate_poisson(std::span<const double> outcomes, std::int64_t expected_size,
                                      double alpha) {
  const std::int64_t universe_size = static_cast<std::int64_t>(outcomes.size());
  if (expected_size <= 0 || expected_size >= universe_size) {
    throw std::invalid_argument("calibrate_poisson: need 0 < n < N");
  }
  std::vector<double> base(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const double y = outcomes[i];
    if (!std::isfinite(y)) throw std::invalid_argument("calibrate_poisson: non-finite outcome");
    // pi_i^{-1} proportional to 1 + exp(-alpha - 0.5 y)  =>  base in (0,1)
    base[i] = 1.0 / (1.0 + std::exp(-alpha - 0.5 * y));
  }

  const double target = static_cast<double>(expected_size);
  const auto clamped_sum = [&](double log_c) {
    const double c = std::exp(log_c);
    double total = 0.0;
    for (double b : base) total += std::min(1.0, b / c);
    return total;
  };

  // Sum of min(1, base/c) is monotone decreasing in c; bracket then bisect
  // on log c. Clamping at 1 is absorbed by the bracket: the unclamped units
  // keep the sum strictly monotone until the target is met.
  double lo = std::log(*std::min_element(base.begin(), base.end())) - 1.0;  // sum ~ N
  double hi = std::log(std::accumulate(base.begin(), base.end(), 0.0));    // sum <= 1
  if (clamped_sum(lo) < target || clamped_sum(hi) > target) {
    throw std::runtime_error("calibrate_poisson: no feasible scaling constant");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (clamped_sum(mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double log_c = 0.5 * (lo + hi);
  // Polish: rescale the unclamped part so the sum hits the target exactly.
  double c = std::exp(log_c);
  double clamped_total = 0.0, free_total = 0.0;
  for (double b : base) {
    if (b / c >= 1.0) {
      clamped_total += 1.0;
    } else {
      free_total += b / c;
    }
  }
  const double adjust = free_total > 0.0 ? (target - clamped_total) / free_total : 1.0;
  std::vector<double> pi(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    pi[i] = std::min(1.0, (base[i] / c >= 1.0) ? 1.0 : base[i] / c * adjust);
  }
  return pi;
}

Sample draw_poisson(const std::vector<double>& inclusion, RngStream& rng) {
  Sample s;
  for (std::size_t i = 0; i < inclusion.size(); ++i) {
    const double p = inclusion[i];
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("draw_poisson: pi outside [0,1]");
    if (rng.bernoulli(p)) s.units.push_back(static_cast<std::int64_t>(i));
  }
  std::vector<double> pi = inclusion;
  for (double& p : pi) p = std::max(p, 1e-300);  // design type requires pi > 0
  s.design = SamplingDesign::poisson(std::move(pi));
  return s;
}

Sample draw_sample(const SamplingDesign& design, RngStream& rng) {
  if (design.kind == SamplingKind::SrsWor) {
    return draw_srs_wor(design.universe_size, design.sample_size, rng);
  }
  return draw_poisson(design.inclusion, rng);
}

double cv_pi(std::span<const double> inclusion) {
  if (inclusion.empty()) throw std::invalid_argument("cv_pi: empty input");
  double mean = 0.0;
  for (double p : inclusion) mean += p;
  mean /= static_cast<double>(inclusion.size());
  if (!(mean > 0.0)) throw std::invalid_argument("cv_pi: mean must be positive");
  double ss = 0.0;
  for (double p : inclusion) ss += (p - mean) * (p - mean);
  return std::sqrt(ss / static_cast<double>(inclusion.size())) / mean;
}

}  // namespace srb
