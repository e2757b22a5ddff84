#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sfr/recovery.hpp"
#include "sfr/second_derivative.hpp"

namespace sfr {

struct HcpOptions {
  double relaxation_tol = 1e-8;      ///< max |grad^2 R| over free nodes
  std::size_t sweep_cap_factor = 100;  ///< relaxation cap is factor * free node count
  std::size_t direct_limit = 256;      ///< direct solve below this many free nodes
  std::size_t fallback_limit = 2000;   ///< direct fallback when relaxation stalls
};

/// Harmonic extension of the observations over every component that has one.
struct HarmonicSolution {
  std::vector<double> values;  ///< NaN outside active components
  std::vector<char> active;
  std::vector<Index> free;     ///< active, unobserved nodes in index order
  std::size_t sweeps = 0;
  bool direct = false;
};

namespace detail {

inline void harmonic_direct(const ItemGraph& g, std::span<const Index> free, std::vector<double>& values) {
  const auto m = static_cast<Eigen::Index>(free.size());
  std::vector<Eigen::Index> local(g.size(), -1);
  for (Eigen::Index k = 0; k < m; ++k) local[free[k]] = k;
  // (D - W)_UU x = W_UO r_O, symmetric positive definite on components touching observations
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Index i = free[k];
    a(k, k) = g.degree(i);
    for (const auto& nb : g.neighbors(i)) {
      if (local[nb.node] >= 0)
        a(k, local[nb.node]) -= nb.weight;
      else
        b(k) += nb.weight * values[nb.node];
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  Eigen::VectorXd x;
  if (llt.info() == Eigen::Success) {
    x = llt.solve(b);
  } else {
    x = a.partialPivLu().solve(b);
  }
  for (Eigen::Index k = 0; k < m; ++k) values[free[k]] = x(k);
}

}  // namespace detail

/**
 * Solves grad^2 R(i) = 0 on every unobserved node of each component that
 * holds an observation, observed entries fixed.
 *
 * Small systems are solved directly. Larger ones use Gauss-Seidel relaxation
 * (each free value replaced by its weighted neighbor average, index order)
 * until the largest free-node second derivative drops below relaxation_tol.
 * Throws SolverError when relaxation stalls and the system is too large for
 * the dense fallback.
 */
inline HarmonicSolution harmonic_solution(const ItemGraph& g, const std::map<Index, double>& observed,
                                          const HcpOptions& opt = {}) {
  HarmonicSolution out;
  out.active = active_nodes(g, observed);
  out.values.assign(g.size(), std::numeric_limits<double>::quiet_NaN());

  // start free nodes at their component's observed mean
  std::vector<double> comp_sum(g.component_count(), 0.0);
  std::vector<double> comp_cnt(g.component_count(), 0.0);
  for (const auto& [i, r] : observed) {
    out.values[i] = r;
    comp_sum[g.component(i)] += r;
    comp_cnt[g.component(i)] += 1.0;
  }
  for (Index i = 0; i < g.size(); ++i) {
    if (!out.active[i] || observed.count(i)) continue;
    out.free.push_back(i);
    out.values[i] = comp_sum[g.component(i)] / comp_cnt[g.component(i)];
  }
  if (out.free.empty()) return out;

  if (out.free.size() <= opt.direct_limit) {
    detail::harmonic_direct(g, out.free, out.values);
    out.direct = true;
    return out;
  }

  const std::size_t cap = opt.sweep_cap_factor * out.free.size();
  auto& v = out.values;
  for (out.sweeps = 1; out.sweeps <= cap; ++out.sweeps) {
    for (const Index i : out.free) v[i] = neighbor_average(g, i, v);
    double worst = 0.0;
    for (const Index i : out.free) worst = std::max(worst, std::fabs(neighbor_average(g, i, v) - v[i]));
    if (worst < opt.relaxation_tol) return out;
  }
  if (out.free.size() <= opt.fallback_limit) {
    detail::harmonic_direct(g, out.free, out.values);
    out.direct = true;
    return out;
  }
  throw SolverError("harmonic relaxation did not reach tolerance within " + std::to_string(cap) + " sweeps");
}

/**
 * Heat-conduction (harmonic interpolation) estimates.
 *
 * Targets in components without observations, and isolated unobserved
 * targets, are abstentions. Estimates satisfy the maximum principle; the
 * clamp to bounds is a no-op safety net.
 */
inline UserRecovery predict_hcp(const ItemGraph& g, const std::map<Index, double>& observed,
                                std::span<const Index> targets, RatingBounds bounds, const HcpOptions& opt = {}) {
  check_observed(g, observed, bounds);
  const auto sol = harmonic_solution(g, observed, opt);
  UserRecovery out;
  out.method = Method::hcp;
  out.observed = observed;
  out.estimates = observed;
  out.diagnostics.iterations_used = sol.sweeps;
  for (const Index t : targets) {
    if (t >= g.size()) throw std::invalid_argument("predict_hcp: target index out of range");
    if (observed.count(t)) continue;
    if (!sol.active[t] || g.isolated(t))
      out.abstentions.insert(t);
    else
      out.estimates[t] = bounds.clamp(sol.values[t]);
  }
  return out;
}

}  // namespace sfr
