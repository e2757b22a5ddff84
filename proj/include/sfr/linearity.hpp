#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "sfr/item_graph.hpp"
#include "sfr/ratings.hpp"

namespace sfr {

/**
 * Histogram of observed second derivatives.
 *
 * Bins have width 0.25 and are centred on multiples of 0.25 from -4 to 4,
 * so bin 16 is the zero bin [-0.125, 0.125). Values outside [-4.125, 4.125)
 * land in the two overflow counters.
 */
struct LinearityHistogram {
  static constexpr double kWidth = 0.25;
  static constexpr int kHalfBins = 16;
  static constexpr int kBins = 2 * kHalfBins + 1;

  std::vector<std::size_t> counts = std::vector<std::size_t>(kBins, 0);
  std::size_t underflow = 0;
  std::size_t overflow = 0;
  std::size_t samples = 0;

  static double bin_left(int b) { return (b - kHalfBins - 0.5) * kWidth; }
  static double bin_right(int b) { return (b - kHalfBins + 0.5) * kWidth; }

  void add(double x) {
    ++samples;
    const double pos = std::floor(x / kWidth + 0.5) + kHalfBins;
    if (pos < 0)
      ++underflow;
    else if (pos >= kBins)
      ++overflow;
    else
      ++counts[static_cast<std::size_t>(pos)];
  }

  std::size_t zero_bin() const { return counts[kHalfBins]; }

  /// The zero bin is strictly the most populated, or tied for it.
  bool zero_is_modal() const {
    for (const auto c : counts)
      if (c > zero_bin()) return false;
    return underflow <= zero_bin() && overflow <= zero_bin();
  }

  /// Counts do not increase over the first `steps` bins moving away from zero on either side.
  bool decays_outward(int steps) const {
    for (int k = 1; k <= steps && k <= kHalfBins; ++k) {
      if (counts[kHalfBins + k] > counts[kHalfBins + k - 1]) return false;
      if (counts[kHalfBins - k] > counts[kHalfBins - k + 1]) return false;
    }
    return true;
  }
};

struct LinearityOptions {
  double coverage = 0.9;
  std::size_t min_neighbor_ratings = 5;
};

/**
 * For every rating r_u(i) where u also rated at least `coverage` of N(i)
 * and at least `min_neighbor_ratings` neighbors, samples the restricted
 * second derivative: weighted average of u's neighbor ratings minus r_u(i).
 */
inline std::vector<double> linearity_samples(const RatingMatrix& ratings, const ItemGraph& g,
                                             const LinearityOptions& opt = {}) {
  if (!(opt.coverage > 0.0 && opt.coverage <= 1.0)) throw std::invalid_argument("examine_linearity: coverage must be in (0, 1]");
  if (g.size() != ratings.item_count()) throw std::invalid_argument("examine_linearity: graph does not match items");
  std::vector<double> out;
  std::vector<double> row(ratings.item_count(), std::numeric_limits<double>::quiet_NaN());
  for (Index u = 0; u < ratings.user_count(); ++u) {
    const auto& rated = ratings.user_ratings(u);
    for (const auto& r : rated) row[r.index] = r.rating;
    for (const auto& r : rated) {
      const auto& nbrs = g.neighbors(r.index);
      if (nbrs.empty()) continue;
      std::size_t hit = 0;
      double num = 0.0, den = 0.0;
      for (const auto& nb : nbrs) {
        const double v = row[nb.node];
        if (std::isnan(v)) continue;
        ++hit;
        num += nb.weight * v;
        den += nb.weight;
      }
      if (hit < opt.min_neighbor_ratings) continue;
      if (static_cast<double>(hit) < opt.coverage * static_cast<double>(nbrs.size())) continue;
      out.push_back(num / den - r.rating);
    }
    for (const auto& r : rated) row[r.index] = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

inline LinearityHistogram examine_linearity(const RatingMatrix& ratings, const ItemGraph& g,
                                            const LinearityOptions& opt = {}) {
  LinearityHistogram h;
  for (const double x : linearity_samples(ratings, g, opt)) h.add(x);
  return h;
}

/// `bin_left<TAB>bin_right<TAB>count`, overflow rows use -inf / inf edges. Empty histogram writes nothing.
inline void write_histogram_tsv(std::ostream& out, const LinearityHistogram& h) {
  if (h.samples == 0) return;
  out << "-inf\t" << LinearityHistogram::bin_left(0) << '\t' << h.underflow << '\n';
  for (int b = 0; b < LinearityHistogram::kBins; ++b)
    out << LinearityHistogram::bin_left(b) << '\t' << LinearityHistogram::bin_right(b) << '\t' << h.counts[b] << '\n';
  out << LinearityHistogram::bin_right(LinearityHistogram::kBins - 1) << "\tinf\t" << h.overflow << '\n';
}

}  // namespace sfr
