#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "sfr/ratings.hpp"

namespace sfr {

struct Neighbor {
  Index node = 0;
  double weight = 0.0;
};

/**
 * Weighted undirected item-item network.
 *
 * Adjacency lists are sorted by neighbor index. Construction validates
 * symmetry, positive weights, and the absence of self-loops, then caches
 * degrees d(i) = sum_j w(i, j) and connected-component labels.
 */
class ItemGraph {
 public:
  ItemGraph() = default;

  ItemGraph(std::vector<std::string> names, std::vector<std::vector<Neighbor>> adjacency)
      : names_(std::move(names)), adjacency_(std::move(adjacency)) {
    if (names_.size() != adjacency_.size()) throw std::invalid_argument("ItemGraph: names/adjacency size mismatch");
    const std::size_t n = adjacency_.size();
    for (auto& row : adjacency_)
      std::sort(row.begin(), row.end(), [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    degree_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = adjacency_[i];
      for (std::size_t k = 0; k < row.size(); ++k) {
        const auto& nb = row[k];
        if (nb.node >= n) throw std::invalid_argument("ItemGraph: neighbor index out of range");
        if (nb.node == i) throw std::invalid_argument("ItemGraph: self-loop on node " + std::to_string(i));
        if (!(nb.weight > 0.0) || !std::isfinite(nb.weight))
          throw std::invalid_argument("ItemGraph: non-positive weight");
        if (k > 0 && row[k - 1].node == nb.node) throw std::invalid_argument("ItemGraph: duplicate edge");
        const auto back = weight(nb.node, static_cast<Index>(i));
        if (!back || *back != nb.weight) throw std::invalid_argument("ItemGraph: asymmetric edge");
        degree_[i] += nb.weight;
      }
    }
    label_components();
  }

  /// Builds from an undirected edge list (each edge once).
  static ItemGraph from_edges(std::vector<std::string> names,
                              const std::vector<std::tuple<Index, Index, double>>& edges) {
    std::vector<std::vector<Neighbor>> adj(names.size());
    for (const auto& [a, b, w] : edges) {
      if (a >= names.size() || b >= names.size()) throw std::invalid_argument("ItemGraph: edge index out of range");
      adj[a].push_back({b, w});
      adj[b].push_back({a, w});
    }
    return ItemGraph(std::move(names), std::move(adj));
  }

  std::size_t size() const { return adjacency_.size(); }
  std::size_t edge_count() const {
    std::size_t s = 0;
    for (const auto& row : adjacency_) s += row.size();
    return s / 2;
  }
  std::size_t isolated_count() const {
    return static_cast<std::size_t>(std::count(degree_.begin(), degree_.end(), 0.0));
  }

  const std::vector<Neighbor>& neighbors(Index i) const { return adjacency_.at(i); }
  double degree(Index i) const { return degree_.at(i); }
  bool isolated(Index i) const { return adjacency_.at(i).empty(); }
  const std::string& name(Index i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<Index> find(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<Index>(it - names_.begin());
  }

  std::optional<double> weight(Index i, Index j) const {
    const auto& row = adjacency_.at(i);
    auto it = std::lower_bound(row.begin(), row.end(), j, [](const Neighbor& n, Index x) { return n.node < x; });
    if (it == row.end() || it->node != j) return std::nullopt;
    return it->weight;
  }

  /// Component label per node; isolated nodes get their own label.
  Index component(Index i) const { return component_.at(i); }
  std::size_t component_count() const { return component_count_; }

  friend bool operator==(const ItemGraph& a, const ItemGraph& b) {
    if (a.names_ != b.names_ || a.adjacency_.size() != b.adjacency_.size()) return false;
    for (std::size_t i = 0; i < a.adjacency_.size(); ++i) {
      const auto& x = a.adjacency_[i];
      const auto& y = b.adjacency_[i];
      if (x.size() != y.size()) return false;
      for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k].node != y[k].node || x[k].weight != y[k].weight) return false;
    }
    return true;
  }

 private:
  void label_components() {
    const std::size_t n = adjacency_.size();
    constexpr Index unset = UINT32_MAX;
    component_.assign(n, unset);
    component_count_ = 0;
    std::vector<Index> stack;
    for (std::size_t s = 0; s < n; ++s) {
      if (component_[s] != unset) continue;
      const auto label = static_cast<Index>(component_count_++);
      component_[s] = label;
      stack.push_back(static_cast<Index>(s));
      while (!stack.empty()) {
        const Index v = stack.back();
        stack.pop_back();
        for (const auto& nb : adjacency_[v]) {
          if (component_[nb.node] == unset) {
            component_[nb.node] = label;
            stack.push_back(nb.node);
          }
        }
      }
    }
  }

  std::vector<std::string> names_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<double> degree_;
  std::vector<Index> component_;
  std::size_t component_count_ = 0;
};

namespace detail {

// Two-pass Pearson over aligned co-rated pairs.
inline std::optional<double> pearson_pairs(const std::vector<std::pair<double, double>>& pairs,
                                           std::size_t min_support) {
  if (pairs.size() < min_support || pairs.size() < 2) return std::nullopt;
  const auto n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pairs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& [x, y] : pairs) {
    const double dx = x - mx;
    const double dy = y - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}


/// Decimal text with 12 significant digits in fixed notation, e.g. 0.250000000000 or 1.00000000000.
inline std::string format_sig12(double w) {
  char text[64];
  std::snprintf(text, sizeof text, "%.11e", w);
  const double rounded = std::strtod(text, nullptr);
  // digits left of the first significant one: 0 for 0.25, -1 for 0.05, 1 for 1.5
  const int digits_before = rounded == 0.0 ? 1 : static_cast<int>(std::floor(std::log10(std::fabs(rounded)))) + 1;
  std::snprintf(text, sizeof text, "%.*f", std::max(0, 12 - digits_before), rounded);
  return text;
}

/// Rounds to the value that format_sig12 writes, so stored weights survive a file round trip exactly.
inline double round_sig12(double w) {
  char text[64];
  std::snprintf(text, sizeof text, "%.11e", w);
  return std::strtod(text, nullptr);
}

}  // namespace detail

/**
 * Pearson correlation between two items over their co-rating users.
 *
 * Absent when fewer than `min_support` users rated both, or when either
 * co-rated sub-vector is constant.
 */
inline std::optional<double> pearson_similarity(const std::map<std::string, double>& ratings_i,
                                                const std::map<std::string, double>& ratings_j,
                                                std::size_t min_support = 3) {
  if (min_support < 2) throw std::invalid_argument("pearson_similarity: min_support must be >= 2");
  std::vector<std::pair<double, double>> pairs;
  for (const auto& [user, r] : ratings_i) {
    auto it = ratings_j.find(user);
    if (it != ratings_j.end()) pairs.emplace_back(r, it->second);
  }
  return detail::pearson_pairs(pairs, min_support);
}

/// Same as above over index-sorted rating columns of a RatingMatrix.
inline std::optional<double> pearson_similarity(const std::vector<IndexedRating>& col_i,
                                                const std::vector<IndexedRating>& col_j,
                                                std::size_t min_support = 3) {
  if (min_support < 2) throw std::invalid_argument("pearson_similarity: min_support must be >= 2");
  std::vector<std::pair<double, double>> pairs;
  std::size_t a = 0, b = 0;
  while (a < col_i.size() && b < col_j.size()) {
    if (col_i[a].index < col_j[b].index)
      ++a;
    else if (col_j[b].index < col_i[a].index)
      ++b;
    else
      pairs.emplace_back(col_i[a++].rating, col_j[b++].rating);
  }
  return detail::pearson_pairs(pairs, min_support);
}

/// Correlations within this distance of the threshold count as ties (no edge). Small-support
/// integer ratings hit the threshold exactly, and rounding must not decide those.
inline constexpr double kThresholdTieTolerance = 1e-12;

struct GraphBuildOptions {
  double threshold = 0.5;
  std::size_t min_support = 3;
  unsigned jobs = 1;
};

/**
 * Thresholded Pearson item graph over the training ratings.
 *
 * Edge (i, j) with weight corr(i, j) iff the correlation exists and is
 * strictly greater than `threshold` (see kThresholdTieTolerance). Stored weights are rounded to 12
 * significant digits, the precision of the edge-list format. Every pair is computed independently
 * (rows are split across `jobs` threads), so the result does not depend on
 * scheduling.
 */
inline ItemGraph build_item_graph(const RatingMatrix& train, const GraphBuildOptions& opt) {
  if (!(opt.threshold > 0.0 && opt.threshold < 1.0))
    throw std::invalid_argument("build_item_graph: threshold must be in (0, 1)");
  if (opt.min_support < 2) throw std::invalid_argument("build_item_graph: min_support must be >= 2");
  const std::size_t n = train.item_count();
  const std::size_t n_users = train.user_count();

  // upper-triangle edges found for each row i: (j, w) with j > i
  std::vector<std::vector<Neighbor>> upper(n);
  auto work = [&](std::size_t begin, std::size_t step) {
    std::vector<double> dense(n_users, std::nan(""));
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = begin; i < n; i += step) {
      const auto& col_i = train.item_ratings(static_cast<Index>(i));
      if (col_i.size() < opt.min_support) continue;
      for (const auto& r : col_i) dense[r.index] = r.rating;
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& col_j = train.item_ratings(static_cast<Index>(j));
        if (col_j.size() < opt.min_support) continue;
        pairs.clear();
        for (const auto& r : col_j) {
          const double x = dense[r.index];
          if (!std::isnan(x)) pairs.emplace_back(x, r.rating);
        }
        const auto c = detail::pearson_pairs(pairs, opt.min_support);
        if (c && *c > opt.threshold + kThresholdTieTolerance) upper[i].push_back({static_cast<Index>(j), detail::round_sig12(*c)});
      }
      for (const auto& r : col_i) dense[r.index] = std::nan("");
    }
  };
  const unsigned jobs = std::max(1u, opt.jobs);
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(work, t, jobs);
    for (auto& th : pool) th.join();
  }

  std::vector<std::vector<Neighbor>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& nb : upper[i]) {
      adj[i].push_back(nb);
      adj[nb.node].push_back({static_cast<Index>(i), nb.weight});
    }
  return ItemGraph(train.items().names(), std::move(adj));
}

inline ItemGraph build_item_graph(const RatingMatrix& train, double threshold, std::size_t min_support = 3) {
  return build_item_graph(train, GraphBuildOptions{threshold, min_support, 1});
}


/// Edge list TSV: `item_a<TAB>item_b<TAB>weight`, one line per undirected edge (a < b), 12 significant digits.
inline void serialize_graph(std::ostream& out, const ItemGraph& g) {
  for (std::size_t i = 0; i < g.size(); ++i)
    for (const auto& nb : g.neighbors(static_cast<Index>(i))) {
      if (nb.node <= i) continue;
      out << g.name(static_cast<Index>(i)) << '\t' << g.name(nb.node) << '\t' << detail::format_sig12(nb.weight)
          << '\n';
    }
}

inline std::string serialize_graph(const ItemGraph& g) {
  std::ostringstream os;
  serialize_graph(os, g);
  return os.str();
}

/**
 * Parses an edge-list TSV.
 *
 * Node names come from `names` when given (so isolated nodes survive);
 * otherwise nodes are created in first-occurrence order. Repeated edges
 * with equal weight are accepted once; with differing weight they are an
 * error.
 */
inline ItemGraph parse_graph(std::istream& in, std::vector<std::string> names = {}) {
  const bool fixed_names = !names.empty();
  IdIndex index;
  for (const auto& nm : names) index.intern(nm);
  std::map<std::pair<Index, Index>, double> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto f = detail::split_on(body, "\t");
    if (f.size() != 3) throw ParseError(lineno, "expected 3 tab-separated fields");
    const auto a_name = detail::trim(f[0]);
    const auto b_name = detail::trim(f[1]);
    if (fixed_names && (!index.find(a_name) || !index.find(b_name)))
      throw ParseError(lineno, "unknown item in edge list");
    const Index a = index.intern(a_name);
    const Index b = index.intern(b_name);
    if (a == b) throw ParseError(lineno, "self-loop");
    const double w = detail::parse_real(f[2], lineno, "weight");
    if (!(w > 0.0)) throw ParseError(lineno, "non-positive weight");
    const auto key = std::minmax(a, b);
    auto [it, inserted] = edges.emplace(std::pair<Index, Index>{key.first, key.second}, w);
    if (!inserted && it->second != w) throw ParseError(lineno, "conflicting duplicate edge");
  }
  std::vector<std::tuple<Index, Index, double>> list;
  list.reserve(edges.size());
  for (const auto& [k, w] : edges) list.emplace_back(k.first, k.second, w);
  return ItemGraph::from_edges(index.names(), list);
}

inline ItemGraph parse_graph(const std::string& text, std::vector<std::string> names = {}) {
  std::istringstream in(text);
  return parse_graph(in, std::move(names));
}

}  // namespace sfr
