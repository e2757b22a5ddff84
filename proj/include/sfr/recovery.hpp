#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sfr/item_graph.hpp"
#include "sfr/ratings.hpp"

namespace sfr {

enum class Method { knn, hcp, sfr, l0_oracle };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::knn: return "knn";
    case Method::hcp: return "hcp";
    case Method::sfr: return "sfr";
    case Method::l0_oracle: return "l0_oracle";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "knn") return Method::knn;
  if (s == "hcp") return Method::hcp;
  if (s == "sfr") return Method::sfr;
  if (s == "l0_oracle" || s == "l0") return Method::l0_oracle;
  return std::nullopt;
}

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Knobs for the l_p recovery solver.
 *
 * The smoothed penalty is phi(x) = (x^2 + eps^2)^(p/2) - eps^p. Solving runs
 * a continuation over eps: eps_start, eps_start * eps_shrink, ... down to
 * smoothing_eps, one projected-gradient stage per value. max_iterations caps
 * the total number of gradient steps over all stages.
 */
struct SolverConfig {
  double p = 0.5;
  double smoothing_eps = 1e-6;
  double eps_start = 0.1;
  double eps_shrink = 0.1;
  std::size_t max_iterations = 10000;
  double objective_rel_tol = 1e-8;
  double initial_step = 0.1;
  double backtrack_factor = 0.5;
  double source_tolerance = 1e-3;
  RatingBounds bounds{1.0, 5.0};
  std::size_t extra_starts = 0;  ///< additional perturbed warm starts
  double start_noise = 0.5;      ///< half-width of the uniform perturbation
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("SolverConfig: " + what); };
    if (!(p > 0.0 && p < 1.0)) fail("p must be in (0, 1)");
    if (!(smoothing_eps > 0.0)) fail("smoothing_eps must be > 0");
    if (!(eps_start >= smoothing_eps)) fail("eps_start must be >= smoothing_eps");
    if (!(eps_shrink > 0.0 && eps_shrink < 1.0)) fail("eps_shrink must be in (0, 1)");
    if (max_iterations == 0) fail("max_iterations must be positive");
    if (!(objective_rel_tol >= 0.0)) fail("objective_rel_tol must be >= 0");
    if (!(initial_step > 0.0)) fail("initial_step must be > 0");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) fail("backtrack_factor must be in (0, 1)");
    if (!(source_tolerance >= 0.0)) fail("source_tolerance must be >= 0");
    if (!(bounds.low < bounds.high)) fail("bounds must satisfy low < high");
    if (!(start_noise >= 0.0)) fail("start_noise must be >= 0");
  }
};

struct SolverDiagnostics {
  std::size_t iterations_used = 0;
  double final_objective = 0.0;  ///< l_p norm of the smoothed second derivative at the final eps
  std::size_t source_count = 0;  ///< |grad^2 R| > source_tolerance on the unsmoothed field
  bool converged = true;
  std::size_t stages = 0;
  bool kept_warm_start = false;  ///< the warm start beat every descent result
};

/// One user's constraints and the recovered ratings.
struct UserRecovery {
  std::map<Index, double> observed;
  std::map<Index, double> estimates;  ///< observed items plus every answered target
  std::set<Index> abstentions;
  Method method = Method::knn;
  SolverDiagnostics diagnostics;

  std::optional<double> estimate(Index i) const {
    auto it = estimates.find(i);
    if (it == estimates.end()) return std::nullopt;
    return it->second;
  }
};

inline void check_observed(const ItemGraph& g, const std::map<Index, double>& observed, RatingBounds bounds) {
  for (const auto& [i, r] : observed) {
    if (i >= g.size()) throw std::invalid_argument("observed item index out of range");
    if (!bounds.contains(r)) throw std::invalid_argument("observed rating outside bounds");
  }
}

/// Marks nodes in components that contain at least one observed item.
inline std::vector<char> active_nodes(const ItemGraph& g, const std::map<Index, double>& observed) {
  std::vector<char> comp_hit(g.component_count(), 0);
  for (const auto& [i, r] : observed) comp_hit[g.component(i)] = 1;
  std::vector<char> active(g.size(), 0);
  for (Index i = 0; i < g.size(); ++i) active[i] = comp_hit[g.component(i)];
  return active;
}

}  // namespace sfr
