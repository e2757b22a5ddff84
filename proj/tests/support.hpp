#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "sfr/item_graph.hpp"
#include "sfr/ratings.hpp"
#include "sfr/split.hpp"

namespace testing_support {

using sfr::Index;

// Random connected graph: a random spanning tree plus extra edges, weights in [0.5, 1].
inline sfr::ItemGraph random_connected_graph(sfr::SeededRng& rng, std::size_t n, double extra_density = 0.3) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
  std::set<std::pair<Index, Index>> seen;
  std::vector<std::tuple<Index, Index, double>> edges;
  auto add = [&](Index a, Index b) {
    if (a == b) return;
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) return;
    edges.emplace_back(a, b, rng.uniform(0.5, 1.0));
  };
  for (Index i = 1; i < n; ++i) add(i, static_cast<Index>(rng.below(i)));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (rng.uniform() < extra_density) add(i, j);
  return sfr::ItemGraph::from_edges(std::move(names), edges);
}

// At least one and at most n - 1 observed nodes with ratings in [low, high].
inline std::map<Index, double> random_observed(sfr::SeededRng& rng, std::size_t n, double low, double high,
                                               bool integral = true) {
  std::map<Index, double> obs;
  const std::size_t k = 1 + rng.below(n - 1);
  while (obs.size() < k) {
    const auto i = static_cast<Index>(rng.below(n));
    obs[i] = integral ? low + static_cast<double>(rng.below(static_cast<std::uint64_t>(high - low) + 1))
                      : rng.uniform(low, high);
  }
  return obs;
}

// Ratings for `users` x `items` where each cell is present with probability `density`.
inline sfr::RatingMatrix random_ratings(sfr::SeededRng& rng, std::size_t users, std::size_t items, double density) {
  sfr::RatingMatrixBuilder b(sfr::RatingBounds{1.0, 5.0});
  std::size_t line = 0;
  for (std::size_t u = 0; u < users; ++u) {
    const double taste = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < items; ++i) {
      if (rng.uniform() >= density) continue;
      const double base = 3.0 + taste * ((i % 3) - 1.0) + rng.uniform(-1.5, 1.5);
      const double r = std::min(5.0, std::max(1.0, std::round(base)));
      b.add("u" + std::to_string(u), "i" + std::to_string(i), r, ++line);
    }
  }
  return std::move(b).build();
}

}  // namespace testing_support
