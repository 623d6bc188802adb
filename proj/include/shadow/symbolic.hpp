#pragma once

// Eventually periodic points of one- and two-sided sequence spaces.
//
// One-sided points are u.w^inf with coordinates indexed from 1. Two-sided
// points are inf(l).c.r^inf with c[0] sitting at coordinate `offset`. Both
// types keep a canonical form, so == is equality of the denoted sequences.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shadow {

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline long floor_mod(long a, long m) {
  long r = a % m;
  return r < 0 ? r + m : r;
}

inline Word primitive_root(const Word& w) {
  const std::size_t n = w.size();
  for (std::size_t p = 1; p < n; ++p) {
    if (n % p != 0) continue;
    bool ok = true;
    for (std::size_t i = p; i < n && ok; ++i) ok = w[i] == w[i - p];
    if (ok) return Word(w.begin(), w.begin() + static_cast<long>(p));
  }
  return w;
}

inline Word word_from_string(const std::string& s) {
  Word w;
  w.reserve(s.size());
  for (char c : s) {
    if (c < '0' || c > '9') throw DomainError("symbol '" + std::string(1, c) + "' is not a digit");
    w.push_back(static_cast<Symbol>(c - '0'));
  }
  return w;
}

inline std::string word_to_string(const Word& w) {
  std::string s;
  s.reserve(w.size());
  for (Symbol c : w) s.push_back(static_cast<char>('0' + c));
  return s;
}

inline void hash_combine(std::size_t& seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

inline std::size_t hash_word(const Word& w) {
  std::size_t h = w.size();
  for (Symbol s : w) hash_combine(h, s);
  return h;
}

}  // namespace detail

class OneSidedPoint {
 public:
  OneSidedPoint() : period_{0} {}
  OneSidedPoint(Word preperiod, Word period) : preperiod_(std::move(preperiod)), period_(std::move(period)) {
    if (period_.empty()) throw DomainError("period word must be non-empty");
    canonicalize();
  }

  static OneSidedPoint parse(const std::string& preperiod, const std::string& period) {
    return {detail::word_from_string(preperiod), detail::word_from_string(period)};
  }

  /// Point whose coordinates 1..pre come from fn and which repeats fn(pre+1..pre+per).
  template <class Fn>
  static OneSidedPoint tabulate(std::size_t pre, std::size_t per, Fn&& fn) {
    Word u(pre), w(per);
    for (std::size_t i = 0; i < pre; ++i) u[i] = fn(static_cast<long>(i + 1));
    for (std::size_t i = 0; i < per; ++i) w[i] = fn(static_cast<long>(pre + i + 1));
    return {std::move(u), std::move(w)};
  }

  static OneSidedPoint constant(Symbol s) { return {{}, {s}}; }

  /// Coordinate n >= 1.
  Symbol at(long n) const {
    if (n < 1) throw DomainError("one-sided coordinates start at 1");
    const auto idx = static_cast<std::size_t>(n - 1);
    if (idx < preperiod_.size()) return preperiod_[idx];
    return period_[(idx - preperiod_.size()) % period_.size()];
  }

  const Word& preperiod() const { return preperiod_; }
  const Word& period() const { return period_; }

  Symbol max_symbol() const {
    Symbol m = *std::max_element(period_.begin(), period_.end());
    for (Symbol s : preperiod_) m = std::max(m, s);
    return m;
  }

  std::string str() const {
    return detail::word_to_string(preperiod_) + "(" + detail::word_to_string(period_) + ")";
  }

  auto operator<=>(const OneSidedPoint&) const = default;
  bool operator==(const OneSidedPoint&) const = default;

 private:
  void canonicalize() {
    period_ = detail::primitive_root(period_);
    while (!preperiod_.empty() && preperiod_.back() == period_.back()) {
      preperiod_.pop_back();
      std::rotate(period_.rbegin(), period_.rbegin() + 1, period_.rend());
    }
  }

  Word preperiod_;
  Word period_;
};

class TwoSidedPoint {
 public:
  TwoSidedPoint() : left_{0}, right_{0} {}
  TwoSidedPoint(Word left, Word center, Word right, long offset)
      : left_(std::move(left)), center_(std::move(center)), right_(std::move(right)), offset_(offset) {
    if (left_.empty() || right_.empty()) throw DomainError("two-sided period words must be non-empty");
    canonicalize();
  }

  static TwoSidedPoint parse(const std::string& left, const std::string& center, const std::string& right,
                             long offset) {
    return {detail::word_from_string(left), detail::word_from_string(center), detail::word_from_string(right),
            offset};
  }

  static TwoSidedPoint constant(Symbol s) { return {{s}, {}, {s}, 0}; }

  /// Left-periodic below `left_end`, right-periodic from `right_start` on.
  template <class Fn>
  static TwoSidedPoint tabulate(long left_end, std::size_t left_period, long right_start, std::size_t right_period,
                                Fn&& fn) {
    if (right_start < left_end) throw DomainError("right_start precedes left_end");
    Word l(left_period), c(static_cast<std::size_t>(right_start - left_end)), r(right_period);
    for (std::size_t i = 0; i < left_period; ++i) l[i] = fn(left_end - static_cast<long>(left_period) + static_cast<long>(i));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = fn(left_end + static_cast<long>(i));
    for (std::size_t i = 0; i < right_period; ++i) r[i] = fn(right_start + static_cast<long>(i));
    return {std::move(l), std::move(c), std::move(r), left_end};
  }

  Symbol at(long n) const {
    if (n < offset_) return left_[static_cast<std::size_t>(detail::floor_mod(n - offset_, static_cast<long>(left_.size())))];
    const long s = right_start();
    if (n < s) return center_[static_cast<std::size_t>(n - offset_)];
    return right_[static_cast<std::size_t>((n - s) % static_cast<long>(right_.size()))];
  }

  const Word& left() const { return left_; }
  const Word& center() const { return center_; }
  const Word& right() const { return right_; }
  long offset() const { return offset_; }
  /// Coordinates below this index follow the left period.
  long left_end() const { return offset_; }
  /// Coordinates from this index on follow the right period.
  long right_start() const { return offset_ + static_cast<long>(center_.size()); }

  Symbol max_symbol() const {
    Symbol m = 0;
    for (const Word* w : {&left_, &center_, &right_})
      for (Symbol s : *w) m = std::max(m, s);
    return m;
  }

  std::string str() const {
    return "(" + detail::word_to_string(left_) + ")" + detail::word_to_string(center_) + "(" +
           detail::word_to_string(right_) + ")@" + std::to_string(offset_);
  }

  auto operator<=>(const TwoSidedPoint&) const = default;
  bool operator==(const TwoSidedPoint&) const = default;

 private:
  void canonicalize() {
    left_ = detail::primitive_root(left_);
    right_ = detail::primitive_root(right_);
    const long nl = static_cast<long>(left_.size());
    const long nr = static_cast<long>(right_.size());
    const long s = right_start();
    auto left_ext = [&](long n) { return left_[static_cast<std::size_t>(detail::floor_mod(n - offset_, nl))]; };
    auto right_ext = [&](long n) { return right_[static_cast<std::size_t>(detail::floor_mod(n - s, nr))]; };

    // First index where the left periodic continuation breaks.
    long a = offset_;
    const long a_limit = s + nl + nr;
    while (a < a_limit && at(a) == left_ext(a)) ++a;
    if (a == a_limit) {
      // Agreement over nl + nr symbols past the center: globally periodic.
      Word p(static_cast<std::size_t>(nl));
      for (long i = 0; i < nl; ++i) p[static_cast<std::size_t>(i)] = left_ext(i);
      left_ = p;
      right_ = p;
      center_.clear();
      offset_ = 0;
      return;
    }
    // Last index where the right periodic continuation breaks.
    long b = s - 1;
    const long b_limit = offset_ - nl - nr;
    while (b >= b_limit && at(b) == right_ext(b)) --b;
    if (b < b_limit) throw std::logic_error("two-sided canonicalization: inconsistent periods");
    const long rs = std::max(a, b + 1);
    Word l(static_cast<std::size_t>(nl)), c(static_cast<std::size_t>(rs - a)), r(static_cast<std::size_t>(nr));
    for (long i = 0; i < nl; ++i) l[static_cast<std::size_t>(i)] = at(a - nl + i);
    for (long i = a; i < rs; ++i) c[static_cast<std::size_t>(i - a)] = at(i);
    for (long i = 0; i < nr; ++i) r[static_cast<std::size_t>(i)] = at(rs + i);
    left_ = std::move(l);
    center_ = std::move(c);
    right_ = std::move(r);
    offset_ = a;
  }

  Word left_;
  Word center_;
  Word right_;
  long offset_ = 0;
};

}  // namespace shadow

template <>
struct std::hash<shadow::OneSidedPoint> {
  std::size_t operator()(const shadow::OneSidedPoint& p) const noexcept {
    std::size_t h = shadow::detail::hash_word(p.preperiod());
    shadow::detail::hash_combine(h, shadow::detail::hash_word(p.period()));
    return h;
  }
};

template <>
struct std::hash<shadow::TwoSidedPoint> {
  std::size_t operator()(const shadow::TwoSidedPoint& p) const noexcept {
    std::size_t h = shadow::detail::hash_word(p.left());
    shadow::detail::hash_combine(h, shadow::detail::hash_word(p.center()));
    shadow::detail::hash_combine(h, shadow::detail::hash_word(p.right()));
    shadow::detail::hash_combine(h, static_cast<std::size_t>(p.offset()));
    return h;
  }
};
