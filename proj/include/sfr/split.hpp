#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "sfr/ratings.hpp"

namespace sfr {

/**
 * Portable seeded generator.
 *
 * std::mt19937_64 has a fully specified output sequence, but the standard
 * distributions do not, so bounded draws are done here by rejection on the
 * raw 64-bit output. Same seed, same sequence, on every platform.
 */
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = 0;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

struct Split {
  RatingMatrix train;
  std::vector<Entry> test;  ///< indices refer to train's id dictionaries
  double fraction = 0.8;
  std::uint64_t seed = 0;
};

/**
 * Random train/test partition of the records of `matrix`.
 *
 * Exactly round((1 - fraction) * N) records go to the test side; the subset
 * is uniform over all subsets of that size (Fisher-Yates with SeededRng).
 * The training matrix keeps the full user/item dictionaries of the source,
 * so items seen only in test stay addressable. Both sides keep source order.
 */
inline Split split_ratings(const RatingMatrix& matrix, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split_ratings: fraction must be in (0, 1)");
  const auto& entries = matrix.entries();
  const std::size_t n = entries.size();
  const auto n_test = static_cast<std::size_t>(std::llround((1.0 - fraction) * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(seed);
  // partial Fisher-Yates: the first n_test slots become a uniform sample
  for (std::size_t k = 0; k < n_test; ++k) {
    const auto j = k + static_cast<std::size_t>(rng.below(n - k));
    std::swap(order[k], order[j]);
  }
  std::vector<char> is_test(n, 0);
  for (std::size_t k = 0; k < n_test; ++k) is_test[order[k]] = 1;

  std::vector<Entry> train_entries;
  train_entries.reserve(n - n_test);
  Split out;
  out.test.reserve(n_test);
  for (std::size_t k = 0; k < n; ++k) {
    if (is_test[k])
      out.test.push_back(entries[k]);
    else
      train_entries.push_back(entries[k]);
  }
  out.train = RatingMatrix(matrix.users(), matrix.items(), std::move(train_entries), matrix.bounds());
  out.fraction = fraction;
  out.seed = seed;
  return out;
}

/// Replay manifest: one `user,item,rating` line per test record.
inline void write_split_manifest(std::ostream& out, const Split& split) {
  for (const auto& e : split.test)
    out << split.train.users().name(e.user) << ',' << split.train.items().name(e.item) << ','
        << format_rating(e.rating) << '\n';
}

}  // namespace sfr
