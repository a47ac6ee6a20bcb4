#ifndef SRB_SPLIT_HPP
#define SRB_SPLIT_HPP

#include <cstdint>
#include <vector>

#include "srb/design.hpp"
#include "srb/rng.hpp"

namespace srb {

enum class SplitKind { SrsSplit, TFold };

// A sample-splitting design q(s1|s). Pr(i in s1 | i in s) is constant
// across units for both kinds, which the phi-weight formula relies on.
struct SplitDesign {
  SplitKind kind = SplitKind::SrsSplit;
  double train_fraction = 0.0;   // SrsSplit, if train_size == 0
  std::int64_t train_size = 0;   // SrsSplit, fixed n1 when > 0
  std::int64_t fold_count = 0;   // TFold

  static SplitDesign srs_fraction(double fraction);
  static SplitDesign srs_fixed(std::int64_t train_size);
  static SplitDesign tfold(std::int64_t fold_count);

  // Training-set size for a sample of size n; throws if the design cannot
  // split a sample of that size.
  std::int64_t resolve_train_size(std::int64_t sample_size) const;

  // Pr(i in s1 | i in s): n1/n for SrsSplit, (T-1)/T for TFold.
  double p1(std::int64_t sample_size) const;
};

struct Split {
  std::vector<std::int64_t> train;  // s1, sorted
  std::vector<std::int64_t> test;   // s2, sorted

  bool operator==(const Split&) const = default;
};

// One SRS-without-replacement split of the sample; TFold designs must go
// through tfold_splits instead.
Split draw_split(const Sample& sample, const SplitDesign& design, RngStream& rng);

// Random partition into fold_count near-equal clusters; each cluster serves
// as the test set of one split.
std::vector<Split> tfold_splits(const Sample& sample, std::int64_t fold_count, RngStream& rng);

// Conditional test-set inclusion probability given s1 under twice-SRS:
// n2 / (N - n1).
double pi2_exact_srs(std::int64_t universe_size, std::int64_t train_size, std::int64_t test_size);

// Conditional test-set inclusion probability given i not in s1:
// pi_i (1 - p1) / (1 - pi_i p1).
double phi2(double pi_i, double p1);

}  // namespace srb

#endif
