#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "sfr/item_graph.hpp"
#include "sfr/ratings.hpp"
#include "sfr/split.hpp"

namespace sfr {

/// A small analytic fixture: one user's partial ratings on a known network.
struct ToyFixture {
  ItemGraph graph;
  std::map<Index, double> observed;
  std::vector<std::optional<double>> ground_truth;  ///< per node, absent when unknown
  RatingBounds bounds{1.0, 9.0};
  std::string notes;
};

/**
 * Four items on a 4-cycle A-B, C-D, A-C, B-D (unit weights).
 * A and C are observed at 5 and 3; B and D are unknown.
 */
inline ToyFixture square_toy() {
  std::vector<std::string> names{"A", "B", "C", "D"};
  const std::vector<std::tuple<Index, Index, double>> edges{{0, 1, 1.0}, {2, 3, 1.0}, {0, 2, 1.0}, {1, 3, 1.0}};
  ToyFixture t;
  t.graph = ItemGraph::from_edges(std::move(names), edges);
  t.observed = {{0, 5.0}, {2, 3.0}};
  t.ground_truth = {5.0, std::nullopt, 3.0, std::nullopt};
  t.notes = "B and D have no ground truth; harmonic interpolation gives B=13/3, D=11/3";
  return t;
}

/**
 * The 26-item ladder: v1 (rating 2) at the bottom feeds four columns whose
 * rows are rated 3..8, rungs join the two middle columns on every row, and
 * v26 (rating 9) caps the top. Only v1 and v26 are sources of the ground
 * truth. Eight middle items are observed, all within [4, 7].
 *
 * Node k is named "v<k>" and has index k - 1.
 */
inline ToyFixture ladder_toy_26() {
  std::vector<std::string> names;
  for (int k = 1; k <= 26; ++k) names.push_back("v" + std::to_string(k));
  auto v = [](int k) { return static_cast<Index>(k - 1); };

  std::vector<std::tuple<Index, Index, double>> edges;
  for (int c = 2; c <= 5; ++c) edges.emplace_back(v(1), v(c), 1.0);
  std::vector<std::optional<double>> truth(26);
  truth[v(1)] = 2.0;
  truth[v(26)] = 9.0;
  for (int c = 2; c <= 5; ++c) {
    for (int row = 0; row < 6; ++row) {
      const int node = c + 4 * row;
      truth[v(node)] = 3.0 + row;
      if (row < 5) edges.emplace_back(v(node), v(node + 4), 1.0);
    }
    edges.emplace_back(v(c + 20), v(26), 1.0);
  }
  for (int row = 0; row < 6; ++row) edges.emplace_back(v(3 + 4 * row), v(4 + 4 * row), 1.0);

  ToyFixture t;
  t.graph = ItemGraph::from_edges(std::move(names), edges);
  for (int k : {6, 9, 11, 12, 15, 16, 18, 21}) t.observed[v(k)] = *truth[v(k)];
  t.ground_truth = std::move(truth);
  t.notes = "sources at v1 (+1) and v26 (-1); observed ratings span [4, 7]";
  return t;
}

/**
 * A toy as a one-user evaluation problem: observed nodes form the training
 * matrix, unobserved nodes with known ground truth form the test side.
 */
inline Split toy_split(const ToyFixture& toy) {
  IdIndex users;
  users.intern("u");
  IdIndex items;
  for (const auto& name : toy.graph.names()) items.intern(name);
  std::vector<Entry> train;
  for (const auto& [i, r] : toy.observed) train.push_back({0, i, r});
  Split s{RatingMatrix(std::move(users), std::move(items), std::move(train), toy.bounds), {}, 1.0, 0};
  for (Index i = 0; i < toy.graph.size(); ++i)
    if (!toy.observed.count(i) && toy.ground_truth[i]) s.test.push_back({0, i, *toy.ground_truth[i]});
  s.fraction = static_cast<double>(toy.observed.size()) / static_cast<double>(toy.observed.size() + s.test.size());
  return s;
}

/// Looks a toy up by name: "square" or "ladder26".
inline std::optional<ToyFixture> toy_by_name(std::string_view name) {
  if (name == "square") return square_toy();
  if (name == "ladder26") return ladder_toy_26();
  return std::nullopt;
}

}  // namespace sfr
