#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "sfr/evaluate.hpp"
#include "sfr/linearity.hpp"
#include "sfr/report_io.hpp"
#include "sfr/toys.hpp"
#include "support.hpp"

using namespace sfr;

namespace {

// A path a-b-c-d with unit weights and one user.
struct PathCase {
  ItemGraph graph = ItemGraph::from_edges({"a", "b", "c", "d"}, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
  IdIndex users, items;
  PathCase() {
    users.intern("u");
    for (const auto& n : graph.names()) items.intern(n);
  }
  Split split(std::vector<Entry> train, std::vector<Entry> test) const {
    return Split{RatingMatrix(users, items, std::move(train), RatingBounds{1, 5}), std::move(test), 0.8, 0};
  }
};

}  // namespace

TEST(ClassifyBound, StrictDominanceAndTies) {
  const auto g = ItemGraph::from_edges({"t", "n1", "n2", "far"}, {{0, 1, 1.0}, {0, 2, 1.0}});
  IdIndex users, items;
  users.intern("u");
  for (const auto& n : g.names()) items.intern(n);
  const RatingMatrix train(users, items, {{0, 1, 3.0}, {0, 2, 4.0}, {0, 3, 1.0}}, RatingBounds{1, 5});
  EXPECT_EQ(classify_bound(Entry{0, 0, 5.0}, train, g), BoundClass::higher);
  EXPECT_EQ(classify_bound(Entry{0, 0, 3.0}, train, g), BoundClass::neither);
  EXPECT_EQ(classify_bound(Entry{0, 0, 4.0}, train, g), BoundClass::neither);
  EXPECT_EQ(classify_bound(Entry{0, 0, 2.0}, train, g), BoundClass::lower);
  // "far" is not a neighbor, so its 1 does not count
  EXPECT_EQ(classify_bound(Entry{0, 3, 2.0}, train, g), BoundClass::unclassifiable);
  EXPECT_EQ(classify_bound(RatingRecord{"stranger", "t", 5.0, {}}, train, g), BoundClass::unclassifiable);
  EXPECT_THROW(classify_bound(RatingRecord{"u", "nope", 5.0, {}}, train, g), std::out_of_range);
}

TEST(Evaluate, PerfectPredictionsScoreZero) {
  PathCase pc;
  // constant user: every method returns 3 exactly
  const auto s = pc.split({{0, 0, 3.0}, {0, 2, 3.0}}, {{0, 1, 3.0}, {0, 3, 3.0}});
  EvalOptions opt;
  opt.bound_only = false;
  const auto rep = evaluate(s, pc.graph, opt);
  for (const auto& m : rep.methods) {
    ASSERT_TRUE(m.rmse_every);
    EXPECT_NEAR(*m.rmse_every, 0.0, 1e-12);
    EXPECT_EQ(m.fallbacks, 0u);
  }
  EXPECT_EQ(rep.class_counts[static_cast<int>(BoundClass::neither)], 2u);
  EXPECT_FALSE(rep.methods[0].rmse_bound);
}

TEST(Evaluate, SingleExampleOffByOne) {
  PathCase pc;
  const auto s = pc.split({{0, 0, 3.0}, {0, 2, 3.0}}, {{0, 1, 4.0}});
  EvalOptions opt;
  opt.methods = {Method::knn};
  const auto rep = evaluate(s, pc.graph, opt);
  EXPECT_EQ(rep.class_counts[static_cast<int>(BoundClass::higher)], 1u);
  const auto* knn = rep.find(Method::knn);
  ASSERT_TRUE(knn);
  EXPECT_DOUBLE_EQ(*knn->rmse_bound, 1.0);
  EXPECT_DOUBLE_EQ(*knn->rmse_higher, 1.0);
  EXPECT_FALSE(knn->rmse_lower);
  EXPECT_EQ(rep.methods.size(), 1u);
}

TEST(Evaluate, AbstentionsUseFallbackChain) {
  // d is isolated from the observed part; the user mean answers it
  const auto g = ItemGraph::from_edges({"a", "b", "c", "d"}, {{0, 1, 1.0}, {1, 2, 1.0}});
  IdIndex users, items;
  users.intern("u");
  users.intern("v");
  for (const auto& n : g.names()) items.intern(n);
  const Split s{RatingMatrix(users, items, {{0, 0, 2.0}, {0, 1, 4.0}, {1, 2, 5.0}}, RatingBounds{1, 5}),
                {{0, 3, 1.0}, {1, 0, 4.0}},
                0.8,
                0};
  EvalOptions opt;
  opt.bound_only = false;
  const auto rep = evaluate(s, g, opt);
  for (const auto& m : rep.methods) EXPECT_GE(m.fallbacks, 1u);
  const auto& p = rep.predictions[0];
  EXPECT_EQ(*p.estimate[0], 3.0);  // user u's mean
  EXPECT_TRUE(p.fallback[0]);
}

TEST(Evaluate, ErrorContributionsAddUp) {
  SeededRng rng(21);
  const auto m = testing_support::random_ratings(rng, 80, 40, 0.5);
  const auto s = split_ratings(m, 0.8, 3);
  const auto g = build_item_graph(s.train, 0.3);
  EvalOptions opt;
  opt.methods = {Method::knn, Method::hcp};
  const auto rep = evaluate(s, g, opt);
  const auto* knn = rep.find(Method::knn);
  ASSERT_TRUE(knn->error_contribution);
  double share = 0;
  for (const double x : *knn->error_contribution) share += x;
  EXPECT_NEAR(share, 1.0, 1e-12);
  double frac = 0;
  for (int c = 0; c < 4; ++c) frac += rep.class_fraction(static_cast<BoundClass>(c));
  EXPECT_NEAR(frac, 1.0, 1e-12);
  EXPECT_FALSE(rep.find(Method::hcp)->error_contribution);  // bound examples only
}

TEST(Evaluate, BoundProblemIsLiteral) {
  SeededRng rng(22);
  const auto m = testing_support::random_ratings(rng, 120, 40, 0.5);
  const auto s = split_ratings(m, 0.8, 4);
  const auto g = build_item_graph(s.train, 0.2);
  EvalOptions opt;
  opt.methods = {Method::knn, Method::hcp};
  const auto rep = evaluate(s, g, opt);
  std::size_t checked = 0;
  for (const auto& p : rep.predictions) {
    if (!is_bound_problem(p.cls) || p.fallback[0]) continue;
    ++checked;
    if (p.cls == BoundClass::higher) EXPECT_LT(*p.estimate[0], p.test.rating);
    if (p.cls == BoundClass::lower) EXPECT_GT(*p.estimate[0], p.test.rating);
    double user_max = s.train.bounds().low;
    for (const auto& r : s.train.user_ratings(p.test.user)) user_max = std::max(user_max, r.rating);
    if (p.cls == BoundClass::higher && p.test.rating > user_max && !p.fallback[1])
      EXPECT_LT(*p.estimate[1], p.test.rating);
  }
  EXPECT_GT(checked, 10u);
}

TEST(Evaluate, ReportIndependentOfJobs) {
  SeededRng rng(24);
  const auto m = testing_support::random_ratings(rng, 60, 30, 0.5);
  const auto s = split_ratings(m, 0.8, 9);
  const auto g = build_item_graph(s.train, 0.3);
  EvalOptions one, many;
  many.jobs = 6;
  const auto a = report_to_json(evaluate(s, g, one)).dump();
  const auto b = report_to_json(evaluate(s, g, many)).dump();
  EXPECT_EQ(a, b);
}

TEST(Evaluate, LadderToySfrExact) {
  const auto toy = ladder_toy_26();
  EvalOptions opt;
  opt.bound_only = false;
  const auto rep = evaluate(toy_split(toy), toy.graph, opt);
  EXPECT_EQ(rep.test_examples, 18u);
  EXPECT_LT(*rep.find(Method::sfr)->rmse_every, 1e-6);
  EXPECT_GT(*rep.find(Method::hcp)->rmse_every, 0.5);
}

TEST(ReportIo, JsonTsvAndPredictions) {
  PathCase pc;
  const auto s = pc.split({{0, 0, 3.0}, {0, 2, 3.0}}, {{0, 1, 4.0}, {0, 3, 3.0}});
  const auto rep = evaluate(s, pc.graph, EvalOptions{});
  const auto j = report_to_json(rep);
  EXPECT_EQ(j["test_examples"], 2);
  EXPECT_EQ(j["classes"]["higher"]["count"], 1);
  EXPECT_EQ(j["methods"].size(), 3u);
  EXPECT_EQ(j["methods"][0]["method"], "knn");
  EXPECT_DOUBLE_EQ(j["methods"][0]["rmse"]["all"].get<double>(), 1.0);
  EXPECT_TRUE(j["methods"][1]["rmse"]["lower"].is_null());

  std::ostringstream tsv;
  write_rmse_tsv(tsv, rep);
  EXPECT_EQ(tsv.str().rfind("method\tclass\ttruth\tcount\trmse\n", 0), 0u);
  EXPECT_NE(tsv.str().find("knn\thigher\t4\t1\t1\n"), std::string::npos);

  std::ostringstream csv;
  write_predictions_csv(csv, rep, s.train);
  EXPECT_NE(csv.str().find("u,b,3,knn,0\n"), std::string::npos);
  EXPECT_NE(format_rmse_table(rep).find("Higher"), std::string::npos);
}

TEST(Linearity, SimpleSamples) {
  // item t with five unit-weight neighbors
  std::vector<std::tuple<Index, Index, double>> edges;
  for (Index k = 1; k <= 5; ++k) edges.emplace_back(0, k, 1.0);
  const auto g = ItemGraph::from_edges({"t", "a", "b", "c", "d", "e"}, edges);
  IdIndex users, items;
  users.intern("flat");
  users.intern("low");
  for (const auto& n : g.names()) items.intern(n);
  std::vector<Entry> e;
  for (Index k = 0; k <= 5; ++k) e.push_back({0, k, 4.0});
  e.push_back({1, 0, 2.0});
  for (Index k = 1; k <= 5; ++k) e.push_back({1, k, 3.0});
  const RatingMatrix m(users, items, e, RatingBounds{1, 5});
  const auto samples = linearity_samples(m, g);
  // only t has five neighbors; the leaves have one
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[0], 0.0);
  EXPECT_EQ(samples[1], 1.0);
  const auto h = examine_linearity(m, g);
  EXPECT_EQ(h.zero_bin(), 1u);
  EXPECT_EQ(h.counts[LinearityHistogram::kHalfBins + 4], 1u);
}

TEST(Linearity, ConstantUserFillsOnlyTheZeroBin) {
  SeededRng rng(25);
  const auto g = testing_support::random_connected_graph(rng, 12, 0.8);
  IdIndex users, items;
  users.intern("u");
  for (const auto& n : g.names()) items.intern(n);
  std::vector<Entry> e;
  for (Index i = 0; i < g.size(); ++i) e.push_back({0, i, 3.0});
  const auto h = examine_linearity(RatingMatrix(users, items, e, RatingBounds{1, 5}), g, LinearityOptions{0.9, 1});
  EXPECT_EQ(h.samples, 12u);
  EXPECT_EQ(h.zero_bin(), 12u);
  EXPECT_TRUE(h.zero_is_modal());
  EXPECT_TRUE(h.decays_outward(4));
}

TEST(Linearity, EmptySampleSetWritesEmptyTsv) {
  const auto h = examine_linearity(RatingMatrix{}, ItemGraph{});
  EXPECT_EQ(h.samples, 0u);
  std::ostringstream os;
  write_histogram_tsv(os, h);
  EXPECT_EQ(os.str(), "");
}

TEST(Linearity, BinsAndOverflow) {
  LinearityHistogram h;
  for (const double x : {-0.125, 0.12, 0.125, 4.1, 4.125, -4.2, 10.0}) h.add(x);
  EXPECT_EQ(h.zero_bin(), 2u);
  EXPECT_EQ(h.counts[LinearityHistogram::kHalfBins + 1], 1u);
  EXPECT_EQ(h.counts[LinearityHistogram::kBins - 1], 1u);
  EXPECT_EQ(h.overflow, 2u);
  EXPECT_EQ(h.underflow, 1u);
  std::ostringstream os;
  write_histogram_tsv(os, h);
  const auto text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), LinearityHistogram::kBins + 2);
}
