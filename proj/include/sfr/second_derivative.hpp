#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sfr/item_graph.hpp"

namespace sfr {

/// Weighted neighbor average of `values` around node i, i.e. (D^-1 W R)_i.
inline double neighbor_average(const ItemGraph& g, Index i, std::span<const double> values) {
  double s = 0.0;
  for (const auto& nb : g.neighbors(i)) s += nb.weight * values[nb.node];
  return s / g.degree(i);
}

/**
 * Per-item discrete second derivative (D^-1 W - I) R.
 *
 * Entries for degree-0 items are absent. Items with |value| above
 * `source_tolerance` are sources.
 */
class SecondDerivativeField {
 public:
  SecondDerivativeField(std::vector<std::optional<double>> values, double source_tolerance)
      : values_(std::move(values)), tolerance_(source_tolerance) {}

  std::size_t size() const { return values_.size(); }
  const std::optional<double>& operator[](Index i) const { return values_.at(i); }
  const std::vector<std::optional<double>>& values() const { return values_; }
  double source_tolerance() const { return tolerance_; }

  bool is_source(Index i) const {
    const auto& v = values_.at(i);
    return v && std::fabs(*v) > tolerance_;
  }

  std::vector<Index> sources() const {
    std::vector<Index> out;
    for (Index i = 0; i < values_.size(); ++i)
      if (is_source(i)) out.push_back(i);
    return out;
  }

 private:
  std::vector<std::optional<double>> values_;
  double tolerance_;
};

inline SecondDerivativeField second_derivative(const ItemGraph& g, std::span<const double> values,
                                               double source_tolerance = 1e-3) {
  if (values.size() != g.size()) throw std::invalid_argument("second_derivative: one value per item required");
  std::vector<std::optional<double>> out(g.size());
  for (Index i = 0; i < g.size(); ++i)
    if (!g.isolated(i)) out[i] = neighbor_average(g, i, values) - values[i];
  return {std::move(out), source_tolerance};
}

}  // namespace sfr
