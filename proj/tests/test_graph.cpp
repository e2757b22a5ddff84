#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "sfr/item_graph.hpp"
#include "sfr/second_derivative.hpp"
#include "sfr/toys.hpp"
#include "support.hpp"

using namespace sfr;

namespace {

// One-pass sums in long double; shares nothing with the library's two-pass code.
std::optional<double> oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const auto n = static_cast<long double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += static_cast<long double>(x[k]) * x[k];
    syy += static_cast<long double>(y[k]) * y[k];
    sxy += static_cast<long double>(x[k]) * y[k];
  }
  const long double vx = n * sxx - sx * sx, vy = n * syy - sy * sy;
  if (vx <= 0 || vy <= 0) return std::nullopt;
  return static_cast<double>((n * sxy - sx * sy) / std::sqrt(vx * vy));
}

std::map<std::string, double> col(std::initializer_list<std::pair<const std::string, double>> v) { return v; }

}  // namespace

TEST(Pearson, SelfCorrelationIsOne) {
  const auto a = col({{"u1", 1}, {"u2", 4}, {"u3", 2}, {"u4", 5}, {"u5", 3}});
  EXPECT_NEAR(*pearson_similarity(a, a), 1.0, 1e-15);
}

TEST(Pearson, PerfectAntiCorrelation) {
  EXPECT_NEAR(*pearson_similarity(col({{"u1", 1}, {"u2", 2}, {"u3", 3}}), col({{"u1", 3}, {"u2", 2}, {"u3", 1}})),
              -1.0, 1e-15);
}

TEST(Pearson, ThreePointValueMatchesOracle) {
  const auto c = pearson_similarity(col({{"u1", 1}, {"u2", 2}, {"u3", 4}}), col({{"u1", 2}, {"u2", 2}, {"u3", 5}}));
  ASSERT_TRUE(c);
  EXPECT_NEAR(*c, *oracle_pearson({1, 2, 4}, {2, 2, 5}), 1e-12);
  // by hand: sxy = 5, sxx = 14/3, syy = 6
  EXPECT_NEAR(*c, 5.0 / std::sqrt(28.0), 1e-12);
}

TEST(Pearson, AbsentCases) {
  // two co-raters only
  EXPECT_FALSE(pearson_similarity(col({{"u1", 1}, {"u2", 2}, {"u3", 4}}), col({{"u1", 2}, {"u2", 3}})));
  // zero variance on the co-rated part
  EXPECT_FALSE(pearson_similarity(col({{"u1", 3}, {"u2", 3}, {"u3", 3}}), col({{"u1", 1}, {"u2", 2}, {"u3", 4}})));
  EXPECT_THROW(pearson_similarity(col({}), col({}), 1), std::invalid_argument);
}

namespace {

// Builds a matrix from item columns over users u0.., NaN meaning unrated.
RatingMatrix from_columns(const std::vector<std::vector<double>>& cols) {
  RatingMatrixBuilder b(RatingBounds{1, 5});
  for (std::size_t i = 0; i < cols.size(); ++i)
    for (std::size_t u = 0; u < cols[i].size(); ++u)
      if (!std::isnan(cols[i][u])) b.add("u" + std::to_string(u), "i" + std::to_string(i), cols[i][u]);
  return std::move(b).build();
}

constexpr double X = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST(BuildGraph, CorrelationAboveThresholdGivesSymmetricEdge) {
  // i0 and i1 correlate strongly over five users
  const auto m = from_columns({{1, 2, 3, 4, 5}, {1, 2, 3, 5, 5}});
  const auto g = build_item_graph(m, 0.5);
  const double c = *oracle_pearson({1, 2, 3, 4, 5}, {1, 2, 3, 5, 5});
  ASSERT_GT(c, 0.9);
  EXPECT_NEAR(*g.weight(0, 1), c, 1e-11);
  EXPECT_EQ(*g.weight(0, 1), *g.weight(1, 0));
}

TEST(BuildGraph, ExactTieIsNoEdge) {
  // x = (1,2,3), y = (1,3,2) correlate at exactly 1/2
  const auto m = from_columns({{1, 2, 3}, {1, 3, 2}});
  ASSERT_NEAR(*oracle_pearson({1, 2, 3}, {1, 3, 2}), 0.5, 1e-15);
  EXPECT_EQ(build_item_graph(m, 0.5).edge_count(), 0u);
  EXPECT_EQ(build_item_graph(m, 0.49).edge_count(), 1u);
}

TEST(BuildGraph, FiveItemsMatchBruteForce) {
  const std::vector<std::vector<double>> cols = {
      {5, 4, 4, 1, 2, X, 3},  // i0
      {4, 4, 5, 2, 1, 3, X},  // i1
      {1, 2, 1, 5, 4, 3, 3},  // i2: opposite taste
      {5, X, 4, 2, X, 2, 3},  // i3
      {X, X, X, 1, 2, 3, X},  // i4: exactly 0.5 with i1 on users 3-5
  };
  const auto m = from_columns(cols);
  for (const unsigned jobs : {1u, 3u}) {
    const auto g = build_item_graph(m, GraphBuildOptions{0.5, 3, jobs});
    std::size_t expected_edges = 0;
    for (Index i = 0; i < 5; ++i)
      for (Index j = i + 1; j < 5; ++j) {
        std::vector<double> x, y;
        for (std::size_t u = 0; u < 7; ++u)
          if (!std::isnan(cols[i][u]) && !std::isnan(cols[j][u])) {
            x.push_back(cols[i][u]);
            y.push_back(cols[j][u]);
          }
        const auto c = x.size() >= 3 ? oracle_pearson(x, y) : std::nullopt;
        const bool edge = c && *c > 0.5 + 1e-9;
        ASSERT_EQ(g.weight(i, j).has_value(), edge) << "pair " << i << "," << j;
        if (edge) {
          ++expected_edges;
          EXPECT_NEAR(*g.weight(i, j), *c, 1e-11);
        }
      }
    EXPECT_EQ(g.edge_count(), expected_edges);
    EXPECT_GE(expected_edges, 2u);
    EXPECT_FALSE(g.weight(1, 4));  // the tie
    EXPECT_FALSE(g.weight(0, 2));  // negative
  }
}

TEST(BuildGraph, RandomMatricesSymmetricAndScheduleIndependent) {
  SeededRng rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    const auto m = testing_support::random_ratings(rng, 60, 30, 0.5);
    const auto g1 = build_item_graph(m, GraphBuildOptions{0.3, 3, 1});
    const auto g4 = build_item_graph(m, GraphBuildOptions{0.3, 3, 4});
    EXPECT_EQ(g1, g4);
    for (Index i = 0; i < g1.size(); ++i) {
      double d = 0;
      for (const auto& nb : g1.neighbors(i)) {
        EXPECT_EQ(*g1.weight(nb.node, i), nb.weight);
        EXPECT_GT(nb.weight, 0.3);
        EXPECT_NE(nb.node, i);
        d += nb.weight;
      }
      EXPECT_NEAR(g1.degree(i), d, 1e-12 * std::max(1.0, d));
    }
  }
}

TEST(BuildGraph, EmptyMatrixGivesEmptyGraph) {
  const auto g = build_item_graph(RatingMatrix{}, 0.5);
  EXPECT_EQ(g.size(), 0u);
  EXPECT_EQ(serialize_graph(g), "");
}

TEST(BuildGraph, RejectsBadOptions) {
  EXPECT_THROW(build_item_graph(RatingMatrix{}, 0.0), std::invalid_argument);
  EXPECT_THROW(build_item_graph(RatingMatrix{}, 1.0), std::invalid_argument);
  EXPECT_THROW(build_item_graph(RatingMatrix{}, 0.5, 1), std::invalid_argument);
}

TEST(ItemGraph, RejectsInvalidAdjacency) {
  EXPECT_THROW(ItemGraph::from_edges({"a", "b"}, {{0, 0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(ItemGraph::from_edges({"a", "b"}, {{0, 1, 0.0}}), std::invalid_argument);
  EXPECT_THROW(ItemGraph({"a", "b"}, {{{1, 1.0}}, {{0, 0.5}}}), std::invalid_argument);
}

TEST(SerializeGraph, SquareToyHasFourLines) {
  const auto text = serialize_graph(square_toy().graph);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_NE(text.find("A\tB\t1.00000000000\n"), std::string::npos);
}

TEST(SerializeGraph, QuarterWeightParsesExactly) {
  const auto g = parse_graph("a\tb\t0.250000000000\n");
  EXPECT_EQ(*g.weight(0, 1), 0.25);
  EXPECT_EQ(serialize_graph(g), "a\tb\t0.250000000000\n");
}

TEST(SerializeGraph, BuiltGraphRoundTripsExactly) {
  SeededRng rng(23);
  const auto m = testing_support::random_ratings(rng, 80, 40, 0.5);
  const auto g = build_item_graph(m, 0.2);
  ASSERT_GT(g.edge_count(), 10u);
  const auto back = parse_graph(serialize_graph(g), m.items().names());
  EXPECT_EQ(back, g);
  EXPECT_EQ(serialize_graph(back), serialize_graph(g));
}

TEST(SerializeGraph, ParseErrors) {
  EXPECT_THROW(parse_graph("a\tb\n"), std::runtime_error);
  EXPECT_THROW(parse_graph("a\tb\tx\n"), std::runtime_error);
  EXPECT_THROW(parse_graph("a\ta\t0.5\n"), std::runtime_error);
  EXPECT_THROW(parse_graph("a\tb\t-0.5\n"), std::runtime_error);
  EXPECT_THROW(parse_graph("a\tb\t0.5\nb\ta\t0.6\n"), std::runtime_error);
  EXPECT_NO_THROW(parse_graph("a\tb\t0.5\nb\ta\t0.5\n"));
  EXPECT_THROW(parse_graph("a\tz\t0.5\n", {"a", "b"}), std::runtime_error);
}

TEST(SecondDerivative, ConstantsVanish) {
  SeededRng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = testing_support::random_connected_graph(rng, 3 + rng.below(15));
    const std::vector<double> c(g.size(), 3.7);
    const auto f = second_derivative(g, c);
    for (Index i = 0; i < g.size(); ++i) EXPECT_LT(std::fabs(*f[i]), 1e-12);
  }
}

TEST(SecondDerivative, SquareToyAtHarmonicPoint) {
  const auto toy = square_toy();
  const std::vector<double> r{5, 13.0 / 3, 3, 11.0 / 3};
  const auto f = second_derivative(toy.graph, r);
  EXPECT_NEAR(*f[0], -4.0 / 3, 1e-12);
  EXPECT_NEAR(*f[1], 0.0, 1e-12);
  EXPECT_NEAR(*f[2], 4.0 / 3, 1e-12);
  EXPECT_NEAR(*f[3], 0.0, 1e-12);
  EXPECT_EQ(f.sources(), (std::vector<Index>{0, 2}));
}

TEST(SecondDerivative, IsolatedItemsHaveNoValue) {
  const auto g = ItemGraph::from_edges({"a", "b", "c"}, {{0, 1, 1.0}});
  const std::vector<double> r{1, 2, 3};
  const auto f = second_derivative(g, r);
  EXPECT_TRUE(f[0]);
  EXPECT_FALSE(f[2]);
  EXPECT_FALSE(f.is_source(2));
}

TEST(SecondDerivative, LinearAndDegreeWeightedSumVanishes) {
  SeededRng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto g = testing_support::random_connected_graph(rng, 2 + rng.below(20));
    std::vector<double> r1(g.size()), r2(g.size()), mix(g.size());
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    for (Index i = 0; i < g.size(); ++i) {
      r1[i] = rng.uniform(1, 5);
      r2[i] = rng.uniform(1, 5);
      mix[i] = a * r1[i] + b * r2[i];
    }
    const auto f1 = second_derivative(g, r1), f2 = second_derivative(g, r2), fm = second_derivative(g, mix);
    double weighted = 0, scale = 0;
    for (Index i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(*fm[i], a * *f1[i] + b * *f2[i], 1e-10);
      weighted += g.degree(i) * *f1[i];
      scale += g.degree(i) * std::fabs(r1[i]);
    }
    EXPECT_LE(std::fabs(weighted), 1e-9 * scale);
  }
}

TEST(Toys, SquareStructure) {
  const auto t = square_toy();
  EXPECT_EQ(t.graph.size(), 4u);
  EXPECT_EQ(t.graph.edge_count(), 4u);
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(t.graph.degree(i), 2.0);
  EXPECT_EQ(t.observed, (std::map<Index, double>{{0, 5.0}, {2, 3.0}}));
  EXPECT_EQ(t.graph.component_count(), 1u);
  EXPECT_EQ(t.bounds.low, 1.0);
  EXPECT_EQ(t.bounds.high, 9.0);
}

TEST(Toys, LadderStructureAndSources) {
  const auto t = ladder_toy_26();
  const auto& g = t.graph;
  EXPECT_EQ(g.size(), 26u);
  EXPECT_EQ(g.component_count(), 1u);
  EXPECT_EQ(t.observed.size(), 8u);
  // 4 bottom + 20 column + 6 rung + 4 top edges
  EXPECT_EQ(g.edge_count(), 34u);
  auto v = [](int k) { return static_cast<Index>(k - 1); };
  for (const auto& [a, b] : std::vector<std::pair<int, int>>{{3, 4}, {7, 8}, {23, 24}, {2, 6}, {18, 22}, {1, 5}, {25, 26}})
    EXPECT_TRUE(g.weight(v(a), v(b))) << a << "-" << b;
  const std::map<int, double> obs{{6, 4}, {9, 4}, {11, 5}, {12, 5}, {15, 6}, {16, 6}, {18, 7}, {21, 7}};
  for (const auto& [k, r] : obs) EXPECT_EQ(t.observed.at(v(k)), r);

  std::vector<double> truth(26);
  for (Index i = 0; i < 26; ++i) truth[i] = *t.ground_truth[i];
  const auto f = second_derivative(g, truth, 1e-9);
  EXPECT_NEAR(*f[v(1)], 1.0, 1e-12);
  EXPECT_NEAR(*f[v(26)], -1.0, 1e-12);
  EXPECT_EQ(f.sources(), (std::vector<Index>{v(1), v(26)}));
}
