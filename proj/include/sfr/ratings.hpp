#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sfr {

using Index = std::uint32_t;

/// Legal rating range [low, high].
struct RatingBounds {
  double low = 1.0;
  double high = 5.0;

  bool contains(double r) const { return r >= low && r <= high; }
  double clamp(double r) const { return std::clamp(r, low, high); }
};

/// One observation with opaque string identifiers.
struct RatingRecord {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;
};

/// One observation in dense index space.
struct Entry {
  Index user = 0;
  Index item = 0;
  double rating = 0.0;
};

struct IndexedRating {
  Index index = 0;
  double rating = 0.0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Dense string <-> index dictionary, indices assigned in first-occurrence order.
class IdIndex {
 public:
  Index intern(std::string_view id) {
    auto it = lookup_.find(std::string(id));
    if (it != lookup_.end()) return it->second;
    const auto idx = static_cast<Index>(names_.size());
    names_.emplace_back(id);
    lookup_.emplace(names_.back(), idx);
    return idx;
  }

  std::optional<Index> find(std::string_view id) const {
    auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(Index i) const { return names_.at(i); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Index> lookup_;
};

/**
 * Sparse user x item rating matrix.
 *
 * Immutable once built. Entries are kept in insertion order, plus user-major
 * and item-major views sorted by the opposite index.
 */
class RatingMatrix {
 public:
  RatingMatrix() = default;

  RatingMatrix(IdIndex users, IdIndex items, std::vector<Entry> entries, RatingBounds bounds)
      : users_(std::move(users)), items_(std::move(items)), entries_(std::move(entries)), bounds_(bounds) {
    by_user_.assign(users_.size(), {});
    by_item_.assign(items_.size(), {});
    for (const auto& e : entries_) {
      if (e.user >= users_.size() || e.item >= items_.size())
        throw std::invalid_argument("RatingMatrix: entry index out of range");
      if (!bounds_.contains(e.rating))
        throw std::invalid_argument("RatingMatrix: rating outside bounds");
      by_user_[e.user].push_back({e.item, e.rating});
      by_item_[e.item].push_back({e.user, e.rating});
    }
    auto by_index = [](const IndexedRating& a, const IndexedRating& b) { return a.index < b.index; };
    for (auto& row : by_user_) {
      std::sort(row.begin(), row.end(), by_index);
      for (std::size_t k = 1; k < row.size(); ++k)
        if (row[k].index == row[k - 1].index)
          throw std::invalid_argument("RatingMatrix: duplicate (user, item) entry");
    }
    for (auto& col : by_item_) std::sort(col.begin(), col.end(), by_index);
  }

  std::size_t user_count() const { return users_.size(); }
  std::size_t item_count() const { return items_.size(); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const IdIndex& users() const { return users_; }
  const IdIndex& items() const { return items_; }
  const std::vector<Entry>& entries() const { return entries_; }
  RatingBounds bounds() const { return bounds_; }

  /// Items rated by `user`, sorted by item index.
  const std::vector<IndexedRating>& user_ratings(Index user) const { return by_user_.at(user); }
  /// Users who rated `item`, sorted by user index.
  const std::vector<IndexedRating>& item_ratings(Index item) const { return by_item_.at(item); }

  std::optional<double> rating(Index user, Index item) const {
    const auto& row = by_user_.at(user);
    auto it = std::lower_bound(row.begin(), row.end(), item,
                               [](const IndexedRating& r, Index i) { return r.index < i; });
    if (it == row.end() || it->index != item) return std::nullopt;
    return it->rating;
  }

  RatingRecord record(const Entry& e) const {
    return {users_.name(e.user), items_.name(e.item), e.rating, std::nullopt};
  }

  double mean() const {
    if (entries_.empty()) return 0.5 * (bounds_.low + bounds_.high);
    double s = 0.0;
    for (const auto& e : entries_) s += e.rating;
    return s / static_cast<double>(entries_.size());
  }

  std::optional<double> user_mean(Index user) const {
    const auto& row = by_user_.at(user);
    if (row.empty()) return std::nullopt;
    double s = 0.0;
    for (const auto& r : row) s += r.rating;
    return s / static_cast<double>(row.size());
  }

  friend bool operator==(const RatingMatrix& a, const RatingMatrix& b) {
    if (a.users_.names() != b.users_.names() || a.items_.names() != b.items_.names()) return false;
    if (a.bounds_.low != b.bounds_.low || a.bounds_.high != b.bounds_.high) return false;
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t k = 0; k < a.entries_.size(); ++k) {
      const auto& x = a.entries_[k];
      const auto& y = b.entries_[k];
      if (x.user != y.user || x.item != y.item || x.rating != y.rating) return false;
    }
    return true;
  }

 private:
  IdIndex users_;
  IdIndex items_;
  std::vector<Entry> entries_;
  RatingBounds bounds_;
  std::vector<std::vector<IndexedRating>> by_user_;
  std::vector<std::vector<IndexedRating>> by_item_;
};

/// Accumulates records, rejecting duplicates and out-of-range ratings.
class RatingMatrixBuilder {
 public:
  explicit RatingMatrixBuilder(RatingBounds bounds) : bounds_(bounds) {}

  /// Pre-registers ids so index spaces can be shared with another matrix.
  void adopt_ids(const IdIndex& users, const IdIndex& items) {
    for (const auto& u : users.names()) users_.intern(u);
    for (const auto& i : items.names()) items_.intern(i);
  }

  void add(std::string_view user, std::string_view item, double rating, std::size_t line = 0) {
    if (!bounds_.contains(rating)) {
      std::ostringstream msg;
      msg << "rating " << rating << " outside bounds [" << bounds_.low << ", " << bounds_.high << "]";
      throw ParseError(line, msg.str());
    }
    const Index u = users_.intern(user);
    const Index i = items_.intern(item);
    const auto key = (static_cast<std::uint64_t>(u) << 32) | i;
    if (!seen_.insert(key).second)
      throw ParseError(line, "duplicate rating for user '" + std::string(user) + "' item '" + std::string(item) + "'");
    entries_.push_back({u, i, rating});
  }

  RatingMatrix build() && {
    return RatingMatrix(std::move(users_), std::move(items_), std::move(entries_), bounds_);
  }

 private:
  RatingBounds bounds_;
  IdIndex users_;
  IdIndex items_;
  std::vector<Entry> entries_;
  std::unordered_set<std::uint64_t> seen_;
};

enum class RatingFormat { movielens_dat, csv };

inline std::optional<RatingFormat> parse_rating_format(std::string_view s) {
  if (s == "movielens_dat" || s == "dat") return RatingFormat::movielens_dat;
  if (s == "csv") return RatingFormat::csv;
  return std::nullopt;
}

inline std::string_view rating_format_name(RatingFormat f) {
  return f == RatingFormat::csv ? "csv" : "movielens_dat";
}

struct ParseStats {
  std::size_t lines = 0;
  std::size_t records = 0;
};

namespace detail {

inline std::vector<std::string_view> split_on(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_real(std::string_view s, std::size_t line, const char* field) {
  const std::string tmp(trim(s));
  if (tmp.empty()) throw ParseError(line, std::string("empty ") + field);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tmp, &used);
  } catch (const std::exception&) {
    throw ParseError(line, std::string("malformed ") + field + " '" + tmp + "'");
  }
  if (used != tmp.size() || !std::isfinite(v))
    throw ParseError(line, std::string("malformed ") + field + " '" + tmp + "'");
  return v;
}

inline std::int64_t parse_integer(std::string_view s, std::size_t line, const char* field) {
  const std::string tmp(trim(s));
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(tmp, &used);
  } catch (const std::exception&) {
    throw ParseError(line, std::string("malformed ") + field + " '" + tmp + "'");
  }
  if (used != tmp.size()) throw ParseError(line, std::string("malformed ") + field + " '" + tmp + "'");
  return v;
}

}  // namespace detail

/**
 * Parses a ratings stream.
 *
 * movielens_dat: `user::item::rating::timestamp` per line.
 * csv: header row, then `user,item,rating[,timestamp]`.
 * Blank lines are skipped. Errors carry the 1-based line number.
 */
inline RatingMatrix parse_ratings(std::istream& in, RatingFormat format, RatingBounds bounds,
                                  ParseStats* stats = nullptr) {
  if (!(bounds.low < bounds.high)) throw std::invalid_argument("parse_ratings: bounds must satisfy low < high");
  RatingMatrixBuilder builder(bounds);
  std::string line;
  std::size_t lineno = 0;
  std::size_t records = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    if (format == RatingFormat::csv && !header_seen) {
      header_seen = true;
      const auto cols = detail::split_on(body, ",");
      if (cols.size() < 3 || detail::trim(cols[0]) != "user" || detail::trim(cols[1]) != "item" ||
          detail::trim(cols[2]) != "rating")
        throw ParseError(lineno, "expected csv header 'user,item,rating[,timestamp]'");
      continue;
    }
    const auto fields = detail::split_on(body, format == RatingFormat::csv ? "," : "::");
    const bool timestamp_optional = format == RatingFormat::csv;
    if (fields.size() != 4 && !(timestamp_optional && fields.size() == 3))
      throw ParseError(lineno, "expected " + std::string(timestamp_optional ? "3 or 4" : "4") + " fields, got " +
                                   std::to_string(fields.size()));
    const auto user = detail::trim(fields[0]);
    const auto item = detail::trim(fields[1]);
    if (user.empty() || item.empty()) throw ParseError(lineno, "empty user or item id");
    const double rating = detail::parse_real(fields[2], lineno, "rating");
    if (fields.size() == 4) (void)detail::parse_integer(fields[3], lineno, "timestamp");
    builder.add(user, item, rating, lineno);
    ++records;
  }
  if (stats) *stats = {lineno, records};
  return std::move(builder).build();
}

inline RatingMatrix parse_ratings(std::string_view text, RatingFormat format, RatingBounds bounds,
                                  ParseStats* stats = nullptr) {
  std::istringstream in{std::string(text)};
  return parse_ratings(in, format, bounds, stats);
}

inline std::string format_rating(double r) {
  std::ostringstream os;
  os.precision(17);
  os << r;
  return os.str();
}

/// Writes the matrix as ratings csv (header + one line per entry, insertion order).
inline void write_ratings_csv(std::ostream& out, const RatingMatrix& m) {
  out << "user,item,rating\n";
  for (const auto& e : m.entries())
    out << m.users().name(e.user) << ',' << m.items().name(e.item) << ',' << format_rating(e.rating) << '\n';
}

}  // namespace sfr
