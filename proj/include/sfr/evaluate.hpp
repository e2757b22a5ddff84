#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "sfr/bound.hpp"
#include "sfr/hcp.hpp"
#include "sfr/knn.hpp"
#include "sfr/sfr_solver.hpp"
#include "sfr/split.hpp"

namespace sfr {

struct EvalOptions {
  std::vector<Method> methods{Method::knn, Method::hcp, Method::sfr};
  SolverConfig solver;
  HcpOptions hcp;
  unsigned jobs = 1;
  /// HCP and SFR only predict higher/lower examples; kNN always predicts every test example.
  bool bound_only = true;
};

/// One held-out rating with each method's (possibly fallback) estimate.
struct Prediction {
  Entry test;
  BoundClass cls = BoundClass::unclassifiable;
  std::vector<std::optional<double>> estimate;  ///< per method slot; absent when the method did not run on it
  std::vector<char> fallback;
};

struct TruthGroup {
  BoundClass cls;
  double truth;
  std::size_t count = 0;
  double rmse = 0.0;
};

struct MethodReport {
  Method method = Method::knn;
  std::optional<double> rmse_bound;  ///< higher + lower
  std::optional<double> rmse_higher;
  std::optional<double> rmse_lower;
  std::optional<double> rmse_every;  ///< every test example, when the method covered all of them
  std::size_t predictions = 0;
  std::size_t fallbacks = 0;
  /// squared-residual share per class (higher, lower, neither, unclassifiable); set when rmse_every is
  std::optional<std::array<double, 4>> error_contribution;
  double total_squared_error = 0.0;
  std::vector<TruthGroup> by_truth;

  // solver aggregates over users that ran the method
  std::size_t users_solved = 0;
  std::size_t solver_failures = 0;
  std::size_t iterations_total = 0;
  std::size_t nonconverged = 0;
  std::size_t sources_total = 0;
  std::size_t warm_start_kept = 0;
};

struct EvaluationReport {
  std::size_t test_examples = 0;
  std::array<std::size_t, 4> class_counts{};  ///< indexed by BoundClass
  std::vector<MethodReport> methods;
  std::vector<Prediction> predictions;  ///< test order

  double class_fraction(BoundClass c) const {
    return test_examples == 0 ? 0.0
                              : static_cast<double>(class_counts[static_cast<int>(c)]) /
                                    static_cast<double>(test_examples);
  }
  double bound_fraction() const { return class_fraction(BoundClass::higher) + class_fraction(BoundClass::lower); }

  const MethodReport* find(Method m) const {
    for (const auto& r : methods)
      if (r.method == m) return &r;
    return nullptr;
  }
};

namespace detail {

struct UserOutcome {
  std::vector<std::size_t> tests;  // indices into the test list
  std::vector<Prediction> predictions;
  std::vector<SolverDiagnostics> diag;  // per method slot
  std::vector<char> ran;
  std::vector<char> failed;
};

inline double fallback_rating(const RatingMatrix& train, Index user, double global_mean) {
  if (user < train.user_count())
    if (const auto m = train.user_mean(user)) return *m;
  return global_mean;
}

inline UserOutcome evaluate_user(Index user, const std::vector<std::size_t>& tests, const Split& split,
                                 const ItemGraph& g, const EvalOptions& opt, double global_mean) {
  const auto& train = split.train;
  const std::size_t n_methods = opt.methods.size();
  UserOutcome out;
  out.tests = tests;
  out.diag.assign(n_methods, {});
  out.ran.assign(n_methods, 0);
  out.failed.assign(n_methods, 0);

  std::map<Index, double> observed;
  if (user < train.user_count())
    for (const auto& r : train.user_ratings(user)) observed.emplace(r.index, r.rating);

  std::vector<Index> all_targets, bound_targets;
  for (const auto t : tests) {
    Prediction p;
    p.test = split.test[t];
    p.cls = classify_bound(p.test, train, g);
    p.estimate.assign(n_methods, std::nullopt);
    p.fallback.assign(n_methods, 0);
    all_targets.push_back(p.test.item);
    if (is_bound_problem(p.cls)) bound_targets.push_back(p.test.item);
    out.predictions.push_back(std::move(p));
  }
  const double fallback = train.bounds().clamp(fallback_rating(train, user, global_mean));

  for (std::size_t s = 0; s < n_methods; ++s) {
    const Method m = opt.methods[s];
    const bool every = m == Method::knn || !opt.bound_only;
    const auto& targets = every ? all_targets : bound_targets;
    if (targets.empty()) continue;
    UserRecovery rec;
    try {
      switch (m) {
        case Method::knn: rec = predict_knn(g, observed, targets); break;
        case Method::hcp: rec = predict_hcp(g, observed, targets, train.bounds(), opt.hcp); break;
        case Method::sfr: {
          auto cfg = opt.solver;
          cfg.bounds = train.bounds();
          rec = predict_sfr(g, observed, targets, cfg, {}, opt.hcp);
          break;
        }
        case Method::l0_oracle: throw std::invalid_argument("evaluate: l0_oracle is a toy-scale oracle, not an evaluation method");
      }
      out.ran[s] = 1;
      out.diag[s] = rec.diagnostics;
    } catch (const SolverError&) {
      out.failed[s] = 1;
      rec = UserRecovery{};
    }
    for (auto& p : out.predictions) {
      if (!every && !is_bound_problem(p.cls)) continue;
      const auto est = rec.estimate(p.test.item);
      if (est) {
        p.estimate[s] = *est;
      } else {
        p.estimate[s] = fallback;
        p.fallback[s] = 1;
      }
    }
  }
  return out;
}

inline std::optional<double> rmse_of(double sq, std::size_t n) {
  if (n == 0) return std::nullopt;
  return std::sqrt(sq / static_cast<double>(n));
}

}  // namespace detail

/**
 * Runs every method per user over that user's test items and aggregates
 * RMSE by bound class, error contributions, fallbacks and solver
 * diagnostics. Users are processed by `jobs` workers; aggregation walks
 * users in index order so the report does not depend on scheduling.
 */
inline EvaluationReport evaluate(const Split& split, const ItemGraph& g, const EvalOptions& opt) {
  opt.solver.validate();
  const auto& train = split.train;
  if (g.size() != train.item_count()) throw std::invalid_argument("evaluate: graph does not match training items");
  const std::size_t n_users = train.user_count();
  std::vector<std::vector<std::size_t>> by_user(n_users);
  for (std::size_t t = 0; t < split.test.size(); ++t) {
    if (split.test[t].user >= n_users) throw std::invalid_argument("evaluate: test user outside dictionary");
    by_user[split.test[t].user].push_back(t);
  }
  const double global_mean = train.mean();

  std::vector<detail::UserOutcome> outcomes(n_users);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t u = next++; u < n_users; u = next++)
      if (!by_user[u].empty())
        outcomes[u] = detail::evaluate_user(static_cast<Index>(u), by_user[u], split, g, opt, global_mean);
  };
  const unsigned jobs = std::max(1u, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  EvaluationReport rep;
  rep.test_examples = split.test.size();
  rep.predictions.resize(split.test.size());
  for (auto& oc : outcomes)
    for (std::size_t k = 0; k < oc.tests.size(); ++k) rep.predictions[oc.tests[k]] = std::move(oc.predictions[k]);
  for (const auto& p : rep.predictions) ++rep.class_counts[static_cast<int>(p.cls)];

  for (std::size_t s = 0; s < opt.methods.size(); ++s) {
    MethodReport mr;
    mr.method = opt.methods[s];
    std::array<double, 4> sq_class{};
    std::array<std::size_t, 4> n_class{};
    std::map<std::pair<int, double>, std::pair<std::size_t, double>> groups;
    double sq_all = 0.0;
    for (std::size_t u = 0; u < n_users; ++u) {
      const auto& oc = outcomes[u];
      if (oc.tests.empty()) continue;
      if (oc.ran[s]) {
        ++mr.users_solved;
        const auto& d = oc.diag[s];
        mr.iterations_total += d.iterations_used;
        mr.nonconverged += d.converged ? 0 : 1;
        mr.sources_total += d.source_count;
        mr.warm_start_kept += d.kept_warm_start ? 1 : 0;
      }
      mr.solver_failures += oc.failed[s];
      for (const auto t : oc.tests) {
        const auto& p = rep.predictions[t];
        if (!p.estimate[s]) continue;
        const double r = *p.estimate[s] - p.test.rating;
        const int c = static_cast<int>(p.cls);
        ++mr.predictions;
        mr.fallbacks += p.fallback[s];
        sq_class[c] += r * r;
        ++n_class[c];
        sq_all += r * r;
        auto& grp = groups[{c, p.test.rating}];
        ++grp.first;
        grp.second += r * r;
      }
    }
    const int hi = static_cast<int>(BoundClass::higher);
    const int lo = static_cast<int>(BoundClass::lower);
    mr.rmse_higher = detail::rmse_of(sq_class[hi], n_class[hi]);
    mr.rmse_lower = detail::rmse_of(sq_class[lo], n_class[lo]);
    mr.rmse_bound = detail::rmse_of(sq_class[hi] + sq_class[lo], n_class[hi] + n_class[lo]);
    mr.total_squared_error = sq_all;
    if (mr.predictions == split.test.size()) {
      mr.rmse_every = detail::rmse_of(sq_all, mr.predictions);
      std::array<double, 4> share{};
      for (int c = 0; c < 4; ++c) share[c] = sq_all > 0.0 ? sq_class[c] / sq_all : 0.0;
      mr.error_contribution = share;
    }
    for (const auto& [key, val] : groups)
      mr.by_truth.push_back({static_cast<BoundClass>(key.first), key.second, val.first,
                             std::sqrt(val.second / static_cast<double>(val.first))});
    rep.methods.push_back(std::move(mr));
  }
  return rep;
}

}  // namespace sfr
