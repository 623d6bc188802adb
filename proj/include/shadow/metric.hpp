#pragma once

// Metric descriptors and exact distance evaluation.

#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "shadow/circle.hpp"
#include "shadow/exact.hpp"
#include "shadow/symbolic.hpp"

namespace shadow {

/// A point of a finite system, identified by its index.
struct FinitePoint {
  std::size_t index = 0;
  std::string str() const { return std::to_string(index); }
  auto operator<=>(const FinitePoint&) const = default;
  bool operator==(const FinitePoint&) const = default;
};

using DistanceTable = std::vector<std::vector<Rational>>;

enum class MetricKind {
  weighted_sup_one_sided,
  weighted_sup_two_sided,
  finite_table,
  circle_arc,
  adapted_isometry,
};

inline std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::weighted_sup_one_sided: return "weighted-sup-one-sided";
    case MetricKind::weighted_sup_two_sided: return "weighted-sup-two-sided";
    case MetricKind::finite_table: return "finite-table";
    case MetricKind::circle_arc: return "circle-arc";
    case MetricKind::adapted_isometry: return "adapted-isometry";
  }
  return "?";
}

/// Rational exponent num/den in (0, 1].
struct Exponent {
  unsigned long num = 1;
  unsigned long den = 1;

  static Exponent make(unsigned long num, unsigned long den) {
    if (num == 0 || den == 0 || num > den) throw ExactError("snowflake exponent must lie in (0, 1]");
    const unsigned long g = std::gcd(num, den);
    return {num / g, den / g};
  }
  static Exponent parse(const std::string& s) {
    Rational q = detail::parse_rational(s);
    if (sgn(q) <= 0 || q > 1) throw ExactError("snowflake exponent must lie in (0, 1]");
    return make(q.get_num().get_ui(), q.get_den().get_ui());
  }
  bool is_one() const { return num == den; }
  ExactReal apply(const ExactReal& v) const { return is_one() ? v : pow(v, num, den); }
  Exponent operator*(const Exponent& o) const { return make(num * o.num, den * o.den); }
  bool operator==(const Exponent&) const = default;
};

class Metric {
 public:
  static Metric weighted_sup_one_sided(Rational alpha, std::optional<DistanceTable> alphabet = std::nullopt) {
    Metric m(MetricKind::weighted_sup_one_sided);
    m.alpha_ = std::move(alpha);
    m.alphabet_ = std::move(alphabet);
    m.validate();
    return m;
  }
  static Metric weighted_sup_two_sided(Rational alpha, std::optional<DistanceTable> alphabet = std::nullopt) {
    Metric m(MetricKind::weighted_sup_two_sided);
    m.alpha_ = std::move(alpha);
    m.alphabet_ = std::move(alphabet);
    m.validate();
    return m;
  }
  static Metric finite_table(DistanceTable table, bool claim_ultrametric = false) {
    Metric m(MetricKind::finite_table);
    m.table_ = std::move(table);
    m.ultrametric_ = claim_ultrametric;
    m.validate();
    return m;
  }
  static Metric adapted_isometry(DistanceTable table) {
    Metric m(MetricKind::adapted_isometry);
    m.table_ = std::move(table);
    m.ultrametric_ = true;
    m.validate();
    return m;
  }
  static Metric circle_arc() { return Metric(MetricKind::circle_arc); }

  MetricKind kind() const { return kind_; }
  bool is_weighted_sup() const {
    return kind_ == MetricKind::weighted_sup_one_sided || kind_ == MetricKind::weighted_sup_two_sided;
  }
  bool is_table() const { return kind_ == MetricKind::finite_table || kind_ == MetricKind::adapted_isometry; }
  const Rational& alpha() const { return alpha_; }
  const std::optional<DistanceTable>& alphabet() const { return alphabet_; }
  const DistanceTable& table() const { return table_; }
  const Exponent& exponent() const { return exponent_; }
  bool is_snowflake() const { return !exponent_.is_one(); }

  /// Whether the metric is an ultrametric. Weighted-sup metrics are ultrametric
  /// exactly when their alphabet metric is; tables are checked once on construction.
  bool ultrametric() const {
    switch (kind_) {
      case MetricKind::weighted_sup_one_sided:
      case MetricKind::weighted_sup_two_sided:
        return !alphabet_ || table_is_ultrametric(*alphabet_);
      case MetricKind::finite_table:
      case MetricKind::adapted_isometry:
        return ultrametric_;
      case MetricKind::circle_arc:
        return false;
    }
    return false;
  }

  std::size_t size() const { return table_.size(); }

  /// Coordinate distance on the alphabet; discrete 0/1 when no table is given.
  ExactReal symbol_distance(Symbol a, Symbol b) const {
    if (!alphabet_) return ExactReal(a == b ? 0 : 1);
    if (a >= alphabet_->size() || b >= alphabet_->size()) throw DomainError("symbol outside alphabet");
    return ExactReal((*alphabet_)[a][b]);
  }

  Rational max_symbol_distance() const {
    if (!alphabet_) return Rational(1);
    Rational m(0);
    for (const auto& row : *alphabet_)
      for (const auto& v : row)
        if (v > m) m = v;
    return m;
  }

  ExactReal distance(const OneSidedPoint& x, const OneSidedPoint& y) const {
    if (kind_ != MetricKind::weighted_sup_one_sided) throw DomainError("metric " + to_string(kind_) + " cannot measure one-sided points");
    check_alphabet(x.max_symbol());
    check_alphabet(y.max_symbol());
    const Rational dmax = max_symbol_distance();
    const long pre = static_cast<long>(std::max(x.preperiod().size(), y.preperiod().size()));
    const long per = static_cast<long>(std::lcm(x.period().size(), y.period().size()));
    const Rational inv_alpha = 1 / alpha_;
    Rational weight = inv_alpha;
    Rational best(0);
    for (long n = 1; n <= pre + per; ++n, weight *= inv_alpha) {
      if (weight * dmax <= best) break;
      if (x.at(n) == y.at(n)) continue;
      const Rational v = weight * symbol_distance(x.at(n), y.at(n)).rational();
      if (v > best) best = v;
    }
    return exponent_.apply(ExactReal(best));
  }

  ExactReal distance(const TwoSidedPoint& x, const TwoSidedPoint& y) const {
    if (kind_ != MetricKind::weighted_sup_two_sided) throw DomainError("metric " + to_string(kind_) + " cannot measure two-sided points");
    check_alphabet(x.max_symbol());
    check_alphabet(y.max_symbol());
    const Rational dmax = max_symbol_distance();
    const long hi = std::max({0L, x.right_start(), y.right_start()}) +
                    static_cast<long>(std::lcm(x.right().size(), y.right().size()));
    const long lo = std::min({-1L, x.left_end() - 1, y.left_end() - 1}) -
                    static_cast<long>(std::lcm(x.left().size(), y.left().size()));
    const long reach = std::max(hi, -lo);
    const Rational inv_alpha = 1 / alpha_;
    Rational weight(1);
    Rational best(0);
    for (long k = 0; k <= reach; ++k, weight *= inv_alpha) {
      if (weight * dmax <= best) break;
      for (long n : {k, -k}) {
        if (n > hi || n < lo) continue;
        if (x.at(n) == y.at(n)) continue;
        const Rational v = weight * symbol_distance(x.at(n), y.at(n)).rational();
        if (v > best) best = v;
        if (k == 0) break;
      }
    }
    return exponent_.apply(ExactReal(best));
  }

  ExactReal distance(const FinitePoint& x, const FinitePoint& y) const {
    if (!is_table()) throw DomainError("metric " + to_string(kind_) + " cannot measure finite points");
    if (x.index >= table_.size() || y.index >= table_.size()) throw DomainError("finite point outside the table");
    return exponent_.apply(ExactReal(table_[x.index][y.index]));
  }

  ExactReal distance(const CirclePoint& x, const CirclePoint& y) const {
    if (kind_ != MetricKind::circle_arc) throw DomainError("metric " + to_string(kind_) + " cannot measure circle points");
    return exponent_.apply(arc_distance(x, y));
  }

  /// Effective table entries (after any snowflake exponent).
  std::vector<std::vector<ExactReal>> table_values() const {
    std::vector<std::vector<ExactReal>> out(table_.size());
    for (std::size_t i = 0; i < table_.size(); ++i)
      for (const auto& v : table_[i]) out[i].push_back(exponent_.apply(ExactReal(v)));
    return out;
  }

  Metric with_exponent(Exponent e) const {
    Metric m = *this;
    m.exponent_ = e;
    return m;
  }

  static bool table_is_ultrametric(const DistanceTable& t) {
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          if (t[i][k] > t[i][j] && t[i][k] > t[j][k]) return false;
    return true;
  }

 private:
  explicit Metric(MetricKind k) : kind_(k) {}

  void check_alphabet(Symbol s) const {
    if (alphabet_ && s >= alphabet_->size()) throw DomainError("symbol outside alphabet");
    if (!alphabet_ && s > 1) throw DomainError("binary metric given a non-binary symbol");
  }

  static void validate_table(const DistanceTable& t, const char* what) {
    const std::size_t n = t.size();
    for (const auto& row : t)
      if (row.size() != n) throw DomainError(std::string(what) + " must be square");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (sgn(t[i][j]) < 0) throw DomainError(std::string(what) + " has a negative entry");
        if (t[i][j] != t[j][i]) throw DomainError(std::string(what) + " is not symmetric");
        if ((i == j) != (t[i][j] == 0)) throw DomainError(std::string(what) + " must vanish exactly on the diagonal");
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          if (t[i][k] > t[i][j] + t[j][k]) throw DomainError(std::string(what) + " violates the triangle inequality");
  }

  void validate() {
    if (is_weighted_sup()) {
      if (alpha_ <= 1) throw DomainError("weighted-sup metrics need alpha > 1");
      if (alphabet_) {
        if (alphabet_->empty()) throw DomainError("alphabet must be non-empty");
        validate_table(*alphabet_, "alphabet table");
      }
    }
    if (is_table()) {
      if (table_.empty()) throw DomainError("finite metric table must be non-empty");
      validate_table(table_, "metric table");
      const bool strong = table_is_ultrametric(table_);
      if (ultrametric_ && !strong) throw DomainError("ultrametric claim fails the strong triangle inequality");
      ultrametric_ = strong;
    }
  }

  MetricKind kind_;
  Rational alpha_{2};
  std::optional<DistanceTable> alphabet_;
  DistanceTable table_;
  Exponent exponent_;
  bool ultrametric_ = false;
};

/// d^a; exponents compose multiplicatively.
inline Metric snowflake(const Metric& m, Exponent a) { return m.with_exponent(m.exponent() * a); }

/// Strong triangle inequality over all triples of a finite metric.
inline bool is_ultrametric(const Metric& m) {
  if (!m.is_table()) throw DomainError("is_ultrametric needs a finite-table metric");
  const auto t = m.table_values();
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (t[i][k] > max(t[i][j], t[j][k])) return false;
  return true;
}

/// Metric axioms on a finite table, evaluated exactly (including snowflaked entries).
inline bool is_metric(const Metric& m) {
  if (!m.is_table()) throw DomainError("is_metric needs a finite-table metric");
  const auto t = m.table_values();
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if ((i == j) != t[i][j].is_zero()) return false;
      if (t[i][j] != t[j][i]) return false;
      for (std::size_t k = 0; k < n; ++k)
        if (!le_sum(t[i][k], t[i][j], t[j][k])) return false;
    }
  return true;
}

/// Closed ball membership: d(center, candidate) <= r.
template <class Point>
bool ball_membership(const Metric& m, const Point& center, const ExactReal& r, const Point& candidate) {
  return m.distance(center, candidate) <= r;
}

}  // namespace shadow

template <>
struct std::hash<shadow::FinitePoint> {
  std::size_t operator()(const shadow::FinitePoint& p) const noexcept { return std::hash<std::size_t>{}(p.index); }
};
