#pragma once

#include <stdexcept>
#include <string_view>

#include "sfr/item_graph.hpp"
#include "sfr/ratings.hpp"

namespace sfr {

/// Where a held-out rating sits relative to the same user's training ratings on the item's neighbors.
enum class BoundClass { higher, lower, neither, unclassifiable };

inline std::string_view bound_class_name(BoundClass c) {
  switch (c) {
    case BoundClass::higher: return "higher";
    case BoundClass::lower: return "lower";
    case BoundClass::neither: return "neither";
    case BoundClass::unclassifiable: return "unclassifiable";
  }
  return "?";
}

inline bool is_bound_problem(BoundClass c) { return c == BoundClass::higher || c == BoundClass::lower; }

struct NeighborRange {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
};

/// Min/max of `user`'s training ratings over N(item).
inline NeighborRange observed_neighbor_range(const RatingMatrix& train, const ItemGraph& g, Index user, Index item) {
  NeighborRange r;
  if (user >= train.user_count()) return r;
  for (const auto& nb : g.neighbors(item)) {
    const auto v = train.rating(user, nb.node);
    if (!v) continue;
    if (r.count == 0) {
      r.min = r.max = *v;
    } else {
      r.min = std::min(r.min, *v);
      r.max = std::max(r.max, *v);
    }
    ++r.count;
  }
  return r;
}

/// Strict comparisons; ties with the neighbor min or max are `neither`.
inline BoundClass classify_bound(const Entry& test, const RatingMatrix& train, const ItemGraph& g) {
  if (test.item >= g.size()) throw std::out_of_range("classify_bound: unknown item");
  const auto range = observed_neighbor_range(train, g, test.user, test.item);
  if (range.count == 0) return BoundClass::unclassifiable;
  if (test.rating > range.max) return BoundClass::higher;
  if (test.rating < range.min) return BoundClass::lower;
  return BoundClass::neither;
}

inline BoundClass classify_bound(const RatingRecord& test, const RatingMatrix& train, const ItemGraph& g) {
  const auto item = train.items().find(test.item);
  if (!item || *item >= g.size()) throw std::out_of_range("classify_bound: unknown item '" + test.item + "'");
  const auto user = train.users().find(test.user);
  if (!user) return BoundClass::unclassifiable;
  return classify_bound(Entry{*user, *item, test.rating}, train, g);
}

}  // namespace sfr
