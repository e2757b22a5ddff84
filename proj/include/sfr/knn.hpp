#pragma once

#include <map>
#include <span>

#include "sfr/recovery.hpp"

namespace sfr {

/**
 * Item-based kNN (Resnick) estimate: weighted average of the user's observed
 * ratings over the target's neighbors. Abstains when no neighbor is observed.
 */
inline UserRecovery predict_knn(const ItemGraph& g, const std::map<Index, double>& observed,
                                std::span<const Index> targets) {
  UserRecovery out;
  out.method = Method::knn;
  out.observed = observed;
  out.estimates = observed;
  for (const Index t : targets) {
    if (t >= g.size()) throw std::invalid_argument("predict_knn: target index out of range");
    if (observed.count(t)) continue;
    double num = 0.0, den = 0.0;
    for (const auto& nb : g.neighbors(t)) {
      auto it = observed.find(nb.node);
      if (it == observed.end()) continue;
      num += nb.weight * it->second;
      den += nb.weight;
    }
    if (den > 0.0)
      out.estimates[t] = num / den;
    else
      out.abstentions.insert(t);
  }
  return out;
}

}  // namespace sfr
