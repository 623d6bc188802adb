#pragma once

// Exactly representable compact systems.
//
// Every system type exposes the same surface, which the orbit, constructor
// and refinement templates rely on:
//
//   using point_type = ...;
//   point_type apply(const point_type&) const;
//   ExactReal distance(const point_type&, const point_type&) const;
//   const Metric& metric() const;
//   System with_metric(Metric) const;

#include <concepts>
#include <cstddef>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "shadow/circle.hpp"
#include "shadow/metric.hpp"
#include "shadow/symbolic.hpp"

namespace shadow {

template <class S>
concept System = requires(const S& s, const typename S::point_type& p) {
  { s.apply(p) } -> std::convertible_to<typename S::point_type>;
  { s.distance(p, p) } -> std::convertible_to<ExactReal>;
  { s.metric() } -> std::convertible_to<const Metric&>;
};

// ---------------------------------------------------------------------------
// Maps on points

inline OneSidedPoint shift_one_sided(const OneSidedPoint& x) {
  if (!x.preperiod().empty()) return {Word(x.preperiod().begin() + 1, x.preperiod().end()), x.period()};
  Word w = x.period();
  std::rotate(w.begin(), w.begin() + 1, w.end());
  return {{}, std::move(w)};
}

inline TwoSidedPoint shift_two_sided(const TwoSidedPoint& x) {
  return {x.left(), x.center(), x.right(), x.offset() - 1};
}

inline TwoSidedPoint shift_two_sided_inverse(const TwoSidedPoint& x) {
  return {x.left(), x.center(), x.right(), x.offset() + 1};
}

/// y_n = x_n + x_{n+1} (mod 2).
inline OneSidedPoint additive_cellular_map(const OneSidedPoint& x) {
  if (x.max_symbol() > 1) throw DomainError("additive cellular map needs a binary point");
  return OneSidedPoint::tabulate(x.preperiod().size(), x.period().size(),
                                 [&](long n) { return static_cast<Symbol>(x.at(n) ^ x.at(n + 1)); });
}

/// f_K(x)_n = x_{Kn}.
inline OneSidedPoint subsequence_map_fK(const OneSidedPoint& x, long k) {
  if (k < 2) throw DomainError("subsequence map needs K >= 2");
  const std::size_t pre = (x.preperiod().size() + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k);
  const std::size_t per = x.period().size() / std::gcd(x.period().size(), static_cast<std::size_t>(k));
  return OneSidedPoint::tabulate(pre, per, [&](long n) { return x.at(k * n); });
}

/// z -> z^n, i.e. angle -> n * angle mod 1.
inline CirclePoint circle_power_map(const CirclePoint& z, long n) {
  if (n < 2) throw DomainError("circle power map needs n >= 2");
  return CirclePoint(z.angle() * n);
}

// ---------------------------------------------------------------------------
// Systems

namespace detail {
template <class Self>
struct MetricHolder {
  Metric metric_;
  explicit MetricHolder(Metric m) : metric_(std::move(m)) {}
  const Metric& metric() const { return metric_; }
  Self with_metric(Metric m) const {
    Self s = static_cast<const Self&>(*this);
    s.metric_ = std::move(m);
    return s;
  }
};
}  // namespace detail

/// Shift on A^N with D(x,y) = sup alpha^-n d(x_n, y_n); binary discrete alphabet by default.
class OneSidedShift : public detail::MetricHolder<OneSidedShift> {
 public:
  using point_type = OneSidedPoint;
  explicit OneSidedShift(Rational alpha, std::optional<DistanceTable> alphabet = std::nullopt)
      : MetricHolder(Metric::weighted_sup_one_sided(std::move(alpha), std::move(alphabet))) {}
  point_type apply(const point_type& x) const { return shift_one_sided(x); }
  ExactReal distance(const point_type& x, const point_type& y) const { return metric_.distance(x, y); }
  std::size_t alphabet_size() const { return metric_.alphabet() ? metric_.alphabet()->size() : 2; }
  std::string name() const { return metric_.alphabet() ? "product-shift-one-sided" : "shift-one-sided"; }
};

class TwoSidedShift : public detail::MetricHolder<TwoSidedShift> {
 public:
  using point_type = TwoSidedPoint;
  explicit TwoSidedShift(Rational alpha, std::optional<DistanceTable> alphabet = std::nullopt)
      : MetricHolder(Metric::weighted_sup_two_sided(std::move(alpha), std::move(alphabet))) {}
  point_type apply(const point_type& x) const { return shift_two_sided(x); }
  point_type apply_inverse(const point_type& x) const { return shift_two_sided_inverse(x); }
  ExactReal distance(const point_type& x, const point_type& y) const { return metric_.distance(x, y); }
  std::size_t alphabet_size() const { return metric_.alphabet() ? metric_.alphabet()->size() : 2; }
  std::string name() const { return metric_.alphabet() ? "product-shift-two-sided" : "shift-two-sided"; }
};

class AdditiveCellular : public detail::MetricHolder<AdditiveCellular> {
 public:
  using point_type = OneSidedPoint;
  explicit AdditiveCellular(Rational alpha) : MetricHolder(Metric::weighted_sup_one_sided(std::move(alpha))) {}
  point_type apply(const point_type& x) const { return additive_cellular_map(x); }
  ExactReal distance(const point_type& x, const point_type& y) const { return metric_.distance(x, y); }
  std::string name() const { return "additive-cellular"; }
};

class SubsequenceMap : public detail::MetricHolder<SubsequenceMap> {
 public:
  using point_type = OneSidedPoint;
  explicit SubsequenceMap(long k, Rational alpha = Rational(2))
      : MetricHolder(Metric::weighted_sup_one_sided(std::move(alpha))), k_(k) {
    if (k < 2) throw DomainError("subsequence map needs K >= 2");
  }
  long k() const { return k_; }
  point_type apply(const point_type& x) const { return subsequence_map_fK(x, k_); }
  ExactReal distance(const point_type& x, const point_type& y) const { return metric_.distance(x, y); }
  std::string name() const { return "subsequence"; }

 private:
  long k_;
};

class CirclePowerMap : public detail::MetricHolder<CirclePowerMap> {
 public:
  using point_type = CirclePoint;
  explicit CirclePowerMap(long n) : MetricHolder(Metric::circle_arc()), n_(n) {
    if (n < 2) throw DomainError("circle power map needs n >= 2");
  }
  long n() const { return n_; }
  point_type apply(const point_type& z) const { return circle_power_map(z, n_); }
  ExactReal distance(const point_type& x, const point_type& y) const { return metric_.distance(x, y); }
  std::string name() const { return "circle-power"; }

 private:
  long n_;
};

/// A self-map of a finite metric space given by a transition table.
class FiniteSystem : public detail::MetricHolder<FiniteSystem> {
 public:
  using point_type = FinitePoint;
  FiniteSystem(std::vector<std::size_t> map, Metric metric, std::vector<std::string> labels = {})
      : MetricHolder(std::move(metric)), map_(std::move(map)), labels_(std::move(labels)) {
    if (!metric_.is_table()) throw DomainError("finite systems need a finite-table metric");
    if (map_.size() != metric_.size()) throw DomainError("map and metric table sizes differ");
    for (std::size_t v : map_)
      if (v >= map_.size()) throw DomainError("map sends a point outside the domain");
    if (!labels_.empty() && labels_.size() != map_.size()) throw DomainError("label count differs from point count");
  }
  FiniteSystem(std::vector<std::size_t> map, DistanceTable table, bool claim_ultrametric = false)
      : FiniteSystem(std::move(map), Metric::finite_table(std::move(table), claim_ultrametric)) {}

  std::size_t size() const { return map_.size(); }
  const std::vector<std::size_t>& map() const { return map_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::string label(std::size_t i) const { return labels_.empty() ? std::to_string(i) : labels_[i]; }

  point_type apply(const point_type& x) const {
    if (x.index >= map_.size()) throw DomainError("point " + std::to_string(x.index) + " is outside the finite domain");
    return {map_[x.index]};
  }
  ExactReal distance(const point_type& x, const point_type& y) const { return metric_.distance(x, y); }
  std::string name() const { return "finite"; }

  bool is_bijection() const {
    std::vector<bool> hit(map_.size(), false);
    for (std::size_t v : map_) {
      if (hit[v]) return false;
      hit[v] = true;
    }
    return true;
  }

  /// Subsystem on an f-invariant vertex subset, reindexed in ascending order.
  FiniteSystem restrict_to(const std::vector<std::size_t>& vertices) const {
    std::vector<long> index(map_.size(), -1);
    for (std::size_t i = 0; i < vertices.size(); ++i) index[vertices[i]] = static_cast<long>(i);
    std::vector<std::size_t> m;
    DistanceTable t(vertices.size(), std::vector<Rational>(vertices.size()));
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      const long img = index[map_[vertices[i]]];
      if (img < 0) throw DomainError("restriction set is not invariant");
      m.push_back(static_cast<std::size_t>(img));
      for (std::size_t j = 0; j < vertices.size(); ++j) t[i][j] = metric_.table()[vertices[i]][vertices[j]];
      labels.push_back(label(vertices[i]));
    }
    Metric base = metric_.kind() == MetricKind::adapted_isometry ? Metric::adapted_isometry(std::move(t))
                                                                 : Metric::finite_table(std::move(t), metric_.ultrametric());
    return FiniteSystem(std::move(m), base.with_exponent(metric_.exponent()), std::move(labels));
  }

 private:
  std::vector<std::size_t> map_;
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Generic helpers

template <System S>
typename S::point_type evaluate(const S& system, const typename S::point_type& x) {
  return system.apply(x);
}

template <System S>
typename S::point_type iterate(const S& system, typename S::point_type x, std::size_t times) {
  for (std::size_t i = 0; i < times; ++i) x = system.apply(x);
  return x;
}

/// Eventual periodicity of an orbit: f^(pre + period)(x) = f^pre(x).
struct OrbitShape {
  std::size_t preperiod = 0;
  std::size_t period = 1;
};

/// Detects the eventual cycle of x; every map here has finite invariant
/// representation classes, so orbits of representable points are eventually periodic.
template <System S>
OrbitShape orbit_shape(const S& system, const typename S::point_type& x, std::size_t cap = 1u << 20) {
  std::unordered_map<typename S::point_type, std::size_t> seen;
  auto p = x;
  for (std::size_t i = 0; i < cap; ++i) {
    auto [it, fresh] = seen.emplace(p, i);
    if (!fresh) return {it->second, i - it->second};
    p = system.apply(p);
  }
  throw DomainError("orbit did not close within the iteration cap");
}

}  // namespace shadow
