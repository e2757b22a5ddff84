#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "sfr/hcp.hpp"
#include "sfr/recovery.hpp"
#include "sfr/second_derivative.hpp"
#include "sfr/split.hpp"

namespace sfr {

/// phi(x) = (x^2 + eps^2)^(p/2) - eps^p. Zero at 0, smooth, tends to |x|^p as eps -> 0.
inline double smoothed_penalty(double x, double p, double eps) {
  return std::pow(x * x + eps * eps, 0.5 * p) - std::pow(eps, p);
}

inline double smoothed_penalty_derivative(double x, double p, double eps) {
  return p * x * std::pow(x * x + eps * eps, 0.5 * p - 1.0);
}

/// Sum of smoothed penalties of the second derivative over all non-isolated items.
inline double sfr_penalty_sum(const ItemGraph& g, std::span<const double> values, double p, double eps) {
  if (values.size() != g.size()) throw std::invalid_argument("sfr_penalty_sum: one value per item required");
  double s = 0.0;
  for (Index k = 0; k < g.size(); ++k)
    if (!g.isolated(k)) s += smoothed_penalty(neighbor_average(g, k, values) - values[k], p, eps);
  return s;
}

/// Smoothed l_p norm (sum_k phi(grad^2 R(k)))^(1/p) at config.smoothing_eps.
inline double sfr_objective(const ItemGraph& g, std::span<const double> values, const SolverConfig& config) {
  return std::pow(sfr_penalty_sum(g, values, config.p, config.smoothing_eps), 1.0 / config.p);
}

/**
 * Gradient of the penalty sum with respect to the `free` coordinates.
 *
 * d/dR_i sum_k phi(L_k) = sum_k phi'(L_k) M_ki with M = D^-1 W - I, i.e.
 * -phi'(L_i) + sum_{k in N(i)} phi'(L_k) w(k,i) / d(k).
 */
inline std::vector<double> sfr_gradient(const ItemGraph& g, std::span<const double> values,
                                        std::span<const Index> free, const SolverConfig& config, double eps = 0.0) {
  if (values.size() != g.size()) throw std::invalid_argument("sfr_gradient: one value per item required");
  if (eps <= 0.0) eps = config.smoothing_eps;
  std::vector<double> dphi(g.size(), 0.0);
  for (Index k = 0; k < g.size(); ++k)
    if (!g.isolated(k))
      dphi[k] = smoothed_penalty_derivative(neighbor_average(g, k, values) - values[k], config.p, eps);
  std::vector<double> out;
  out.reserve(free.size());
  for (const Index i : free) {
    if (i >= g.size()) throw std::invalid_argument("sfr_gradient: free index out of range");
    double s = -dphi[i];
    for (const auto& nb : g.neighbors(i)) s += dphi[nb.node] * nb.weight / g.degree(nb.node);
    out.push_back(s);
  }
  return out;
}

/// Called after every accepted descent step: stage, eps, penalty sum, values of the free nodes.
using SfrTrace = std::function<void(std::size_t, double, double, std::span<const double>)>;

namespace detail {

// Compact copy of the active, non-isolated part of the graph for one user.
class LocalProblem {
 public:
  LocalProblem(const ItemGraph& g, const std::vector<char>& active, const std::map<Index, double>& observed) {
    std::vector<Index> local(g.size(), UINT32_MAX);
    for (Index i = 0; i < g.size(); ++i)
      if (active[i] && !g.isolated(i)) {
        local[i] = static_cast<Index>(nodes_.size());
        nodes_.push_back(i);
      }
    const std::size_t m = nodes_.size();
    fwd_start_.assign(m + 1, 0);
    for (std::size_t k = 0; k < m; ++k) fwd_start_[k + 1] = fwd_start_[k] + g.neighbors(nodes_[k]).size();
    fwd_.resize(fwd_start_[m]);
    bwd_.resize(fwd_start_[m]);
    for (std::size_t k = 0; k < m; ++k) {
      const Index gi = nodes_[k];
      std::size_t pos = fwd_start_[k];
      for (const auto& nb : g.neighbors(gi)) {
        fwd_[pos] = {local[nb.node], nb.weight / g.degree(gi)};
        bwd_[pos] = {local[nb.node], nb.weight / g.degree(nb.node)};
        ++pos;
      }
      if (!observed.count(gi)) free_.push_back(static_cast<Index>(k));
    }
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Index>& nodes() const { return nodes_; }
  const std::vector<Index>& free() const { return free_; }

  void laplacian(const std::vector<double>& x, std::vector<double>& lap) const {
    lap.resize(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      double s = 0.0;
      for (std::size_t e = fwd_start_[k]; e < fwd_start_[k + 1]; ++e) s += fwd_[e].coef * x[fwd_[e].node];
      lap[k] = s - x[k];
    }
  }

  double penalty(const std::vector<double>& x, double p, double eps, std::vector<double>& lap) const {
    laplacian(x, lap);
    double s = 0.0;
    for (const double l : lap) s += smoothed_penalty(l, p, eps);
    return s;
  }

  // gradient on free nodes, given the laplacian of the current point
  void gradient(const std::vector<double>& lap, double p, double eps, std::vector<double>& dphi,
                std::vector<double>& grad) const {
    dphi.resize(lap.size());
    for (std::size_t k = 0; k < lap.size(); ++k) dphi[k] = smoothed_penalty_derivative(lap[k], p, eps);
    grad.resize(free_.size());
    for (std::size_t f = 0; f < free_.size(); ++f) {
      const Index i = free_[f];
      double s = -dphi[i];
      for (std::size_t e = fwd_start_[i]; e < fwd_start_[i + 1]; ++e) s += dphi[bwd_[e].node] * bwd_[e].coef;
      grad[f] = s;
    }
  }

 private:
  struct Coef {
    Index node;
    double coef;
  };
  std::vector<Index> nodes_;
  std::vector<Index> free_;
  std::vector<std::size_t> fwd_start_;
  std::vector<Coef> fwd_;  // w(k,j)/d(k) for j in N(k)
  std::vector<Coef> bwd_;  // w(k,j)/d(j), same layout
};

struct DescentResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  std::size_t stages = 0;
  bool converged = true;
};

// eps continuation; each stage is projected gradient descent with backtracking
inline DescentResult continuation_descent(const LocalProblem& prob, std::vector<double> x, const SolverConfig& cfg,
                                          std::size_t iteration_budget, const SfrTrace& trace) {
  DescentResult res;
  std::vector<double> lap, dphi, grad, trial(x.size()), free_vals;
  const auto& free = prob.free();
  double eps = cfg.eps_start;
  while (true) {
    ++res.stages;
    double f = prob.penalty(x, cfg.p, eps, lap);
    bool stage_done = false;
    while (!stage_done) {
      if (res.iterations >= iteration_budget) {
        res.converged = false;
        res.x = std::move(x);
        return res;
      }
      ++res.iterations;
      prob.gradient(lap, cfg.p, eps, dphi, grad);
      double step = cfg.initial_step;
      bool accepted = false;
      double f_new = f;
      for (int halving = 0; halving < 80; ++halving, step *= cfg.backtrack_factor) {
        trial = x;
        bool moved = false;
        for (std::size_t k = 0; k < free.size(); ++k) {
          const Index i = free[k];
          trial[i] = cfg.bounds.clamp(x[i] - step * grad[k]);
          moved = moved || trial[i] != x[i];
        }
        if (!moved) break;
        f_new = prob.penalty(trial, cfg.p, eps, lap);
        if (f_new < f) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        prob.laplacian(x, lap);
        break;
      }
      const double rel = (f - f_new) / std::max(f, 1e-300);
      x.swap(trial);
      f = f_new;
      if (trace) {
        free_vals.resize(free.size());
        for (std::size_t k = 0; k < free.size(); ++k) free_vals[k] = x[free[k]];
        trace(res.stages - 1, eps, f, free_vals);
      }
      stage_done = rel < cfg.objective_rel_tol;
    }
    if (eps <= cfg.smoothing_eps) break;
    eps = std::max(eps * cfg.eps_shrink, cfg.smoothing_eps);
  }
  res.x = std::move(x);
  return res;
}

}  // namespace detail

/**
 * Scalar-function recovery: minimise the l_p norm of the second derivative
 * over every item of the components that hold observations, with observed
 * ratings pinned and all values boxed to config.bounds.
 *
 * Warm start is the harmonic (HCP) solution. Extra starts perturb it with
 * seeded uniform noise. The returned point is the lowest-objective candidate
 * among the descent results and the warm start itself. Abstentions follow
 * predict_hcp.
 */
inline UserRecovery predict_sfr(const ItemGraph& g, const std::map<Index, double>& observed,
                                std::span<const Index> targets, const SolverConfig& cfg,
                                const SfrTrace& trace = {}, const HcpOptions& hcp = {}) {
  cfg.validate();
  check_observed(g, observed, cfg.bounds);
  const auto warm = harmonic_solution(g, observed, hcp);
  const detail::LocalProblem prob(g, warm.active, observed);

  std::vector<double> x0(prob.size());
  for (std::size_t k = 0; k < prob.size(); ++k) x0[k] = cfg.bounds.clamp(warm.values[prob.nodes()[k]]);

  UserRecovery out;
  out.method = Method::sfr;
  out.observed = observed;
  out.estimates = observed;

  std::vector<double> best = x0;
  std::vector<double> lap;
  double best_f = prob.penalty(x0, cfg.p, cfg.smoothing_eps, lap);
  bool kept_warm = true;
  auto& diag = out.diagnostics;
  diag.converged = true;

  if (!prob.free().empty()) {
    SeededRng rng(cfg.seed);
    for (std::size_t start = 0; start <= cfg.extra_starts; ++start) {
      std::vector<double> x = x0;
      if (start > 0)
        for (const Index i : prob.free()) x[i] = cfg.bounds.clamp(x[i] + rng.uniform(-cfg.start_noise, cfg.start_noise));
      const std::size_t budget = cfg.max_iterations - std::min(cfg.max_iterations, diag.iterations_used);
      if (budget == 0) {
        diag.converged = false;
        break;
      }
      auto res = detail::continuation_descent(prob, std::move(x), cfg, budget, trace);
      diag.iterations_used += res.iterations;
      diag.stages += res.stages;
      diag.converged = diag.converged && res.converged;
      const double f = prob.penalty(res.x, cfg.p, cfg.smoothing_eps, lap);
      if (f < best_f) {
        best_f = f;
        best = std::move(res.x);
        kept_warm = false;
      }
    }
  }

  prob.laplacian(best, lap);
  diag.kept_warm_start = kept_warm;
  diag.final_objective = std::pow(best_f, 1.0 / cfg.p);
  diag.source_count = static_cast<std::size_t>(
      std::count_if(lap.begin(), lap.end(), [&](double l) { return std::fabs(l) > cfg.source_tolerance; }));

  std::vector<double> full(g.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < prob.size(); ++k) full[prob.nodes()[k]] = best[k];
  for (const Index t : targets) {
    if (t >= g.size()) throw std::invalid_argument("predict_sfr: target index out of range");
    if (observed.count(t)) continue;
    if (!warm.active[t] || g.isolated(t))
      out.abstentions.insert(t);
    else
      out.estimates[t] = full[t];
  }
  return out;
}

/// Full recovered vector (NaN outside active components); convenience for toys and reports.
inline std::vector<double> recover_sfr_values(const ItemGraph& g, const std::map<Index, double>& observed,
                                              const SolverConfig& cfg, SolverDiagnostics* diag = nullptr) {
  std::vector<Index> all(g.size());
  for (Index i = 0; i < g.size(); ++i) all[i] = i;
  const auto rec = predict_sfr(g, observed, all, cfg);
  std::vector<double> v(g.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& [i, r] : rec.estimates) v[i] = r;
  if (diag) *diag = rec.diagnostics;
  return v;
}

}  // namespace sfr
