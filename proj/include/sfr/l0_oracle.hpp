#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sfr/recovery.hpp"

namespace sfr {

struct L0Solution {
  std::vector<Index> sources;  ///< node indices, ascending
  std::vector<double> values;  ///< full rating vector, NaN outside active components
  double residual = 0.0;
};

struct L0Result {
  std::optional<std::size_t> min_source_count;  ///< absent when nothing feasible up to max_sources
  std::vector<L0Solution> solutions;            ///< every feasible set of minimal size
  std::size_t candidates_checked = 0;
};

inline constexpr double kL0CandidateLimit = 1e6;

/**
 * Exhaustive minimal-source search (the p = 0 problem).
 *
 * For k = 0, 1, ..., max_sources, every k-subset S of the candidate nodes
 * is tried: the system {grad^2 R(i) = 0, i not in S} with observed entries
 * substituted is solved in the least-squares sense (minimum-norm solution).
 * S is feasible when the residual norm is below residual_tol and every
 * value lies in bounds. Candidates are the non-isolated nodes of components
 * that contain an observation. Refuses to run when the number of subsets
 * exceeds 10^6.
 */
inline L0Result l0_oracle(const ItemGraph& g, const std::map<Index, double>& observed, RatingBounds bounds,
                          std::size_t max_sources, double residual_tol) {
  check_observed(g, observed, bounds);
  const auto active = active_nodes(g, observed);
  std::vector<Index> nodes;  // candidate equation rows
  for (Index i = 0; i < g.size(); ++i)
    if (active[i] && !g.isolated(i)) nodes.push_back(i);
  std::vector<Index> unknowns;
  std::vector<Eigen::Index> col(g.size(), -1);
  for (const Index i : nodes)
    if (!observed.count(i)) {
      col[i] = static_cast<Eigen::Index>(unknowns.size());
      unknowns.push_back(i);
    }

  const std::size_t n = nodes.size();
  double total = 0.0, binom = 1.0;
  for (std::size_t k = 0; k <= std::min(max_sources, n); ++k) {
    if (k > 0) binom = binom * static_cast<double>(n - k + 1) / static_cast<double>(k);
    total += binom;
  }
  if (total > kL0CandidateLimit)
    throw std::invalid_argument("l0_oracle: " + std::to_string(static_cast<long long>(total)) +
                                " candidate sets exceed the 1e6 limit");

  // full row block: row r is grad^2 R(nodes[r]) expressed in unknowns, constant moved right
  const auto m = static_cast<Eigen::Index>(unknowns.size());
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const Index i = nodes[r];
    const double d = g.degree(i);
    auto add = [&](Index j, double c) {
      if (col[j] >= 0)
        rows(static_cast<Eigen::Index>(r), col[j]) += c;
      else
        rhs(static_cast<Eigen::Index>(r)) -= c * observed.at(j);
    };
    for (const auto& nb : g.neighbors(i)) add(nb.node, nb.weight / d);
    add(i, -1.0);
  }

  L0Result out;
  std::vector<std::size_t> pick;
  std::vector<char> excluded(n, 0);
  auto try_subset = [&]() {
    ++out.candidates_checked;
    const auto kept = static_cast<Eigen::Index>(n - pick.size());
    Eigen::MatrixXd a(kept, m);
    Eigen::VectorXd b(kept);
    Eigen::Index r = 0;
    for (std::size_t q = 0; q < n; ++q) {
      if (excluded[q]) continue;
      a.row(r) = rows.row(static_cast<Eigen::Index>(q));
      b(r) = rhs(static_cast<Eigen::Index>(q));
      ++r;
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    if (m > 0 && kept > 0) x = a.completeOrthogonalDecomposition().solve(b);
    const double residual = kept > 0 ? (a * x - b).norm() : 0.0;
    if (!(residual < residual_tol)) return;
    constexpr double slack = 1e-9;
    for (Eigen::Index k = 0; k < m; ++k)
      if (x(k) < bounds.low - slack || x(k) > bounds.high + slack) return;
    L0Solution sol;
    for (const auto q : pick) sol.sources.push_back(nodes[q]);
    sol.values.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& [i, v] : observed) sol.values[i] = v;
    for (Eigen::Index k = 0; k < m; ++k) sol.values[unknowns[k]] = bounds.clamp(x(k));
    sol.residual = residual;
    out.solutions.push_back(std::move(sol));
  };

  // lexicographic k-subsets
  for (std::size_t k = 0; k <= std::min(max_sources, n); ++k) {
    pick.assign(k, 0);
    for (std::size_t q = 0; q < k; ++q) pick[q] = q;
    while (true) {
      std::fill(excluded.begin(), excluded.end(), 0);
      for (const auto q : pick) excluded[q] = 1;
      try_subset();
      std::size_t pos = k;
      while (pos > 0 && pick[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++pick[pos - 1];
      for (std::size_t q = pos; q < k; ++q) pick[q] = pick[q - 1] + 1;
    }
    if (!out.solutions.empty()) {
      out.min_source_count = k;
      return out;
    }
  }
  return out;
}

}  // namespace sfr
