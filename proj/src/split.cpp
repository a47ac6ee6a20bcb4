#include "srb/split.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srb {

SplitDesign SplitDesign::srs_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split design: training fraction must be in (0,1)");
  }
  SplitDesign d;
  d.kind = SplitKind::SrsSplit;
  d.train_fraction = fraction;
  return d;
}

SplitDesign SplitDesign::srs_fixed(std::int64_t train_size) {
  if (train_size <= 0) throw std::invalid_argument("split design: n1 must be positive");
  SplitDesign d;
  d.kind = SplitKind::SrsSplit;
  d.train_size = train_size;
  return d;
}

SplitDesign SplitDesign::tfold(std::int64_t fold_count) {
  if (fold_count < 2) throw std::invalid_argument("split design: fold count must be >= 2");
  SplitDesign d;
  d.kind = SplitKind::TFold;
  d.fold_count = fold_count;
  return d;
}

std::int64_t SplitDesign::resolve_train_size(std::int64_t sample_size) const {
  if (kind == SplitKind::TFold) {
    throw std::logic_error("resolve_train_size: not defined for T-fold designs");
  }
  std::int64_t n1 = train_size;
  if (n1 == 0) {
    if (sample_size < 2) throw std::invalid_argument("split design: need 0 < n1 < n");
    n1 = std::llround(train_fraction * static_cast<double>(sample_size));
    n1 = std::clamp<std::int64_t>(n1, 1, sample_size - 1);
  }
  if (n1 <= 0 || n1 >= sample_size) {
    throw std::invalid_argument("split design: need 0 < n1 < n");
  }
  return n1;
}

double SplitDesign::p1(std::int64_t sample_size) const {
  if (kind == SplitKind::TFold) {
    return static_cast<double>(fold_count - 1) / static_cast<double>(fold_count);
  }
  return static_cast<double>(resolve_train_size(sample_size)) / static_cast<double>(sample_size);
}

Split draw_split(const Sample& sample, const SplitDesign& design, RngStream& rng) {
  if (design.kind == SplitKind::TFold) {
    throw std::invalid_argument("draw_split: T-fold designs must use tfold_splits");
  }
  const std::int64_t n = sample.size();
  const std::int64_t n1 = design.resolve_train_size(n);

  const std::vector<std::int64_t> pick = srs_indices(n, n1, rng);
  Split split;
  split.train.reserve(static_cast<std::size_t>(n1));
  split.test.reserve(static_cast<std::size_t>(n - n1));
  std::size_t k = 0;
  for (std::int64_t pos = 0; pos < n; ++pos) {
    if (k < pick.size() && pick[k] == pos) {
      split.train.push_back(sample.units[static_cast<std::size_t>(pos)]);
      ++k;
    } else {
      split.test.push_back(sample.units[static_cast<std::size_t>(pos)]);
    }
  }
  return split;
}

std::vector<Split> tfold_splits(const Sample& sample, std::int64_t fold_count, RngStream& rng) {
  const std::int64_t n = sample.size();
  if (fold_count < 2 || fold_count > n) {
    throw std::invalid_argument("tfold_splits: need 2 <= T <= |s|");
  }
  std::vector<std::int64_t> order = sample.units;
  shuffle_indices(order, rng);

  // Cluster sizes differ by at most one; the first (n mod T) folds get the
  // extra unit.
  std::vector<Split> splits;
  splits.reserve(static_cast<std::size_t>(fold_count));
  const std::int64_t base = n / fold_count;
  const std::int64_t extra = n % fold_count;
  std::int64_t start = 0;
  for (std::int64_t f = 0; f < fold_count; ++f) {
    const std::int64_t len = base + (f < extra ? 1 : 0);
    Split split;
    split.test.assign(order.begin() + start, order.begin() + start + len);
    split.train.reserve(static_cast<std::size_t>(n - len));
    split.train.insert(split.train.end(), order.begin(), order.begin() + start);
    split.train.insert(split.train.end(), order.begin() + start + len, order.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    splits.push_back(std::move(split));
    start += len;
  }
  return splits;
}

double pi2_exact_srs(std::int64_t universe_size, std::int64_t train_size, std::int64_t test_size) {
  if (train_size < 0 || test_size < 1 || train_size + test_size > universe_size) {
    throw std::invalid_argument("pi2_exact_srs: need n1 >= 0, n2 >= 1, n1 + n2 <= N");
  }
  return static_cast<double>(test_size) / static_cast<double>(universe_size - train_size);
}

double phi2(double pi_i, double p1) {
  if (!(pi_i > 0.0 && pi_i <= 1.0)) throw std::invalid_argument("phi2: pi must be in (0,1]");
  if (!(p1 > 0.0 && p1 < 1.0)) throw std::invalid_argument("phi2: p1 must be in (0,1)");
  return pi_i * (1.0 - p1) / (1.0 - pi_i * p1);
}

}  // namespace srb
