#pragma once

// Pseudo-orbits, chains and shadowing certificates, with exact verification.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "shadow/random.hpp"
#include "shadow/systems.hpp"

namespace shadow {

class OrbitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite sequence (x_0, ..., x_T), optionally continued by repeating
/// points[block_start..T] forever.
template <class P>
struct PseudoOrbit {
  std::vector<P> points;
  std::optional<std::size_t> block_start;

  PseudoOrbit() = default;
  explicit PseudoOrbit(std::vector<P> pts, std::optional<std::size_t> block = std::nullopt)
      : points(std::move(pts)), block_start(block) {
    if (block_start && *block_start >= points.size()) throw OrbitError("block start outside the orbit");
  }

  bool periodic_tail() const { return block_start.has_value(); }
  std::size_t size() const { return points.size(); }
  std::size_t block_length() const { return points.size() - *block_start; }

  /// x_i for any i >= 0 when the tail is periodic, i < size() otherwise.
  const P& at(std::size_t i) const {
    if (i < points.size()) return points[i];
    if (!block_start) throw OrbitError("index past the end of a finite pseudo-orbit");
    return points[*block_start + (i - *block_start) % block_length()];
  }
};

/// (x_0, ..., x_k) with k >= 1.
template <class P>
struct Chain {
  std::vector<P> points;

  Chain() = default;
  explicit Chain(std::vector<P> pts) : points(std::move(pts)) {
    if (points.size() < 2) throw OrbitError("a chain needs at least two points");
  }
  std::size_t k() const { return points.size() - 1; }
  bool is_cycle() const { return points.front() == points.back(); }
  const P& front() const { return points.front(); }
  const P& back() const { return points.back(); }
};

/// (x_0..x_k) followed by (x_k..x_m), sharing x_k.
template <class P>
Chain<P> concatenate(const Chain<P>& a, const Chain<P>& b) {
  if (!(a.back() == b.front())) throw OrbitError("chains do not meet");
  std::vector<P> pts = a.points;
  pts.insert(pts.end(), b.points.begin() + 1, b.points.end());
  return Chain<P>(std::move(pts));
}

enum class Guarantee {
  per_index,       // d(f^i x, x_i) <= bound for the checked indices
  exact_endpoint,  // h-shadowing: per-index for i < k and f^k(x) = x_k
  periodic,        // f^k(x) = x
};

inline std::string to_string(Guarantee g) {
  switch (g) {
    case Guarantee::per_index: return "per-index";
    case Guarantee::exact_endpoint: return "exact-endpoint";
    case Guarantee::periodic: return "periodic";
  }
  return "?";
}

template <class P>
struct ShadowCertificate {
  ShadowCertificate(P p, ExactReal b) : point(std::move(p)), bound(std::move(b)) {}

  P point;
  ExactReal bound;
  Guarantee guarantee = Guarantee::per_index;
  /// Last verified index; meaningless when all_indices is set.
  std::size_t horizon = 0;
  /// Verified for every i >= 0 through tail stabilization.
  bool all_indices = false;
  /// Shadowing constant L the bound was derived from (bound = L * delta).
  std::optional<ExactReal> constant;
  bool contractive = false;
  /// For periodic certificates: f^period(point) = point.
  std::size_t period = 0;
};

// ---------------------------------------------------------------------------
// Verification

template <System S>
ExactReal pseudo_orbit_defect(const S& system, const PseudoOrbit<typename S::point_type>& xi) {
  if (xi.size() < 2 && !xi.periodic_tail()) throw OrbitError("pseudo-orbit needs at least two points");
  ExactReal worst(0);
  for (std::size_t i = 0; i + 1 < xi.size(); ++i) {
    worst = max(worst, system.distance(system.apply(xi.points[i]), xi.points[i + 1]));
  }
  if (xi.periodic_tail()) {
    worst = max(worst, system.distance(system.apply(xi.points.back()), xi.points[*xi.block_start]));
  }
  return worst;
}

template <System S>
ExactReal chain_defect(const S& system, const Chain<typename S::point_type>& chain) {
  ExactReal worst(0);
  for (std::size_t i = 0; i + 1 < chain.points.size(); ++i) {
    worst = max(worst, system.distance(system.apply(chain.points[i]), chain.points[i + 1]));
  }
  return worst;
}

template <class P>
struct ShadowCheck {
  bool ok = true;
  ExactReal max_deviation;              // over the checked indices
  std::size_t checked_through = 0;      // last index checked
  bool all_indices = false;
  std::optional<std::size_t> violation;  // first index exceeding epsilon
};

/// Number of indices after which (f^i x, x_i) repeats: both components are
/// eventually periodic, so checking i < preperiod + lcm(periods) covers every i.
template <System S>
std::size_t stabilization_horizon(const S& system, const PseudoOrbit<typename S::point_type>& xi,
                                  const typename S::point_type& x) {
  const OrbitShape shape = orbit_shape(system, x);
  const std::size_t pre = std::max(shape.preperiod, *xi.block_start);
  return pre + std::lcm(shape.period, xi.block_length());
}

namespace detail {

/// Two-sided orbits are not eventually periodic, but f^i(x) agrees with the
/// orbit of the periodic point built from x's right tail on every coordinate
/// n >= R - i, and the remaining coordinates carry weight at most
/// alpha^-(i - R + 1). Past the index I where that weight drops below epsilon
/// the comparison is periodic in i, so checking i < I + lcm covers every i.
template <System S>
std::optional<ShadowCheck<TwoSidedPoint>> two_sided_tail_check(const S& system, const PseudoOrbit<TwoSidedPoint>& xi,
                                                               const TwoSidedPoint& x, const ExactReal& epsilon,
                                                               std::optional<std::size_t> horizon) {
  const Metric& m = system.metric();
  if (!m.is_weighted_sup()) return std::nullopt;
  if (x.center().empty() && x.left() == x.right()) return std::nullopt;  // periodic: the generic path closes
  const long R = x.right_start();
  const std::size_t q = x.right().size();
  const TwoSidedPoint periodic = TwoSidedPoint::tabulate(R, q, R, q, [&](long n) {
    return x.at(R + floor_mod(n - R, static_cast<long>(q)));
  });
  const Rational dmax = m.max_symbol_distance();
  auto tail_bound = [&](long i) {
    Rational w(dmax);
    for (long k = 0; k < i - R + 1; ++k) w /= m.alpha();
    return m.exponent().apply(ExactReal(w));
  };
  if (epsilon.is_zero()) {
    // x is not periodic, so f^i(x) = x_i fails for some i <= block_start + block length
    const std::size_t count = std::max(*xi.block_start + xi.block_length() + 1, horizon ? *horizon + 1 : 0);
    ShadowCheck<TwoSidedPoint> out;
    out.all_indices = true;
    auto p = x;
    for (std::size_t i = 0; i < count; ++i) {
      const ExactReal d = system.distance(p, xi.at(i));
      if (d > epsilon && !out.violation) {
        out.violation = i;
        out.ok = false;
      }
      out.max_deviation = max(out.max_deviation, d);
      p = system.apply(p);
    }
    out.checked_through = count - 1;
    return out;
  }
  long start = std::max<long>({static_cast<long>(*xi.block_start), R, 0});
  long I = start;
  while (tail_bound(I) > epsilon) {
    if (++I > start + 4000) return std::nullopt;
  }
  const std::size_t P = std::lcm(q, xi.block_length());
  std::size_t count = static_cast<std::size_t>(I) + P;
  if (horizon && *horizon + 1 > count) count = *horizon + 1;

  ShadowCheck<TwoSidedPoint> out;
  out.all_indices = true;
  auto p = x;
  for (std::size_t i = 0; i < count; ++i) {
    const ExactReal d = system.distance(p, xi.at(i));
    if (d > epsilon && !out.violation) {
      out.violation = i;
      out.ok = false;
    }
    out.max_deviation = max(out.max_deviation, d);
    p = system.apply(p);
  }
  auto pp = iterate(system, periodic, static_cast<std::size_t>(I));
  out.max_deviation = max(out.max_deviation, tail_bound(I));
  for (std::size_t i = static_cast<std::size_t>(I); i < static_cast<std::size_t>(I) + P; ++i) {
    const ExactReal d = system.distance(pp, xi.at(i));
    if (d > epsilon && out.ok) {
      // only an upper bound failed; the explicit range above is exact
      out.ok = false;
      out.all_indices = false;
    }
    out.max_deviation = max(out.max_deviation, d);
    pp = system.apply(pp);
  }
  out.checked_through = count - 1;
  return out;
}

}  // namespace detail

/// Deviation profile of the orbit of x against xi. With a periodic tail every
/// index is covered (horizon argument ignored unless larger); otherwise the
/// explicit indices up to min(horizon, size - 1).
template <System S>
ShadowCheck<typename S::point_type> check_shadowing(const S& system, const PseudoOrbit<typename S::point_type>& xi,
                                                    const typename S::point_type& x, const ExactReal& epsilon,
                                                    std::optional<std::size_t> horizon = std::nullopt) {
  ShadowCheck<typename S::point_type> out;
  if constexpr (std::is_same_v<typename S::point_type, TwoSidedPoint>) {
    if (xi.periodic_tail()) {
      if (auto r = detail::two_sided_tail_check(system, xi, x, epsilon, horizon)) return *r;
    }
  }
  std::size_t count;
  if (xi.periodic_tail()) {
    count = stabilization_horizon(system, xi, x);
    if (horizon && *horizon + 1 > count) count = *horizon + 1;
    out.all_indices = true;
  } else {
    count = xi.size();
    if (horizon && *horizon + 1 < count) count = *horizon + 1;
  }
  auto p = x;
  for (std::size_t i = 0; i < count; ++i) {
    const ExactReal d = system.distance(p, xi.at(i));
    if (d > epsilon && !out.violation) {
      out.violation = i;
      out.ok = false;
    }
    out.max_deviation = max(out.max_deviation, d);
    if (i + 1 < count) p = system.apply(p);
  }
  out.checked_through = count - 1;
  return out;
}

template <System S>
bool verify_shadowing(const S& system, const PseudoOrbit<typename S::point_type>& xi, const typename S::point_type& x,
                      const ExactReal& epsilon, std::optional<std::size_t> horizon = std::nullopt) {
  return check_shadowing(system, xi, x, epsilon, horizon).ok;
}

/// sup_i d(f^i x, x_i) over every index covered by check_shadowing.
template <System S>
ExactReal realized_deviation(const S& system, const PseudoOrbit<typename S::point_type>& xi,
                             const typename S::point_type& x) {
  return check_shadowing(system, xi, x, ExactReal(0)).max_deviation;
}

/// d(f^i x, x_i) <= epsilon for i <= k - 1 and f^k(x) = x_k exactly.
template <System S>
bool verify_h_shadow(const S& system, const Chain<typename S::point_type>& chain, const typename S::point_type& x,
                     const ExactReal& epsilon) {
  auto p = x;
  for (std::size_t i = 0; i < chain.k(); ++i) {
    if (system.distance(p, chain.points[i]) > epsilon) return false;
    p = system.apply(p);
  }
  return p == chain.back();
}

template <System S>
bool verify_certificate(const S& system, const PseudoOrbit<typename S::point_type>& xi,
                        const ShadowCertificate<typename S::point_type>& cert) {
  if (cert.guarantee == Guarantee::periodic && iterate(system, cert.point, cert.period) != cert.point) return false;
  const auto check = check_shadowing(system, xi, cert.point, cert.bound,
                                     cert.all_indices ? std::nullopt : std::optional<std::size_t>(cert.horizon));
  return check.ok;
}

// ---------------------------------------------------------------------------
// Random generation

namespace detail {

/// Smallest n >= 1 whose coordinate weight (exponent applied) times the
/// largest symbol distance is at most budget.
inline std::optional<long> first_free_coordinate(const Metric& m, const ExactReal& budget) {
  if (budget.is_zero()) return std::nullopt;
  const Rational dmax = m.max_symbol_distance();
  if (dmax == 0) return 1;
  Rational w(1);
  for (long n = 1; n < 4000; ++n) {
    w /= m.alpha();
    if (m.exponent().apply(ExactReal(Rational(w * dmax))) <= budget) return n;
  }
  return std::nullopt;
}

inline std::size_t alphabet_size(const Metric& m) { return m.alphabet() ? m.alphabet()->size() : 2; }

}  // namespace detail

inline OneSidedPoint perturb(const Metric& m, const OneSidedPoint& x, const ExactReal& budget, Rng& rng) {
  const auto n0 = detail::first_free_coordinate(m, budget);
  if (!n0) return x;
  const long last = *n0 + 2;
  Word changed(static_cast<std::size_t>(last));
  for (long n = 1; n <= last; ++n) changed[static_cast<std::size_t>(n - 1)] = x.at(n);
  const std::size_t a = detail::alphabet_size(m);
  for (long n = *n0; n <= last; ++n) {
    if (n == *n0 || std::bernoulli_distribution(0.5)(rng)) {
      changed[static_cast<std::size_t>(n - 1)] = static_cast<Symbol>(uniform_index(rng, a));
    }
  }
  const std::size_t pre = std::max(x.preperiod().size(), static_cast<std::size_t>(last));
  return OneSidedPoint::tabulate(pre, x.period().size(), [&](long n) {
    return n <= last ? changed[static_cast<std::size_t>(n - 1)] : x.at(n);
  });
}

inline TwoSidedPoint perturb(const Metric& m, const TwoSidedPoint& x, const ExactReal& budget, Rng& rng) {
  const auto n0 = detail::first_free_coordinate(m, budget);
  if (!n0) return x;
  // first_free_coordinate measures weight alpha^-n from n = 1; two-sided weights are alpha^-|n|.
  const long depth = *n0;
  const long reach = depth + 2;
  const std::size_t a = detail::alphabet_size(m);
  std::vector<std::pair<long, Symbol>> edits;
  for (long k = depth; k <= reach; ++k) {
    for (long n : {k, -k}) {
      if ((k == depth && n > 0) || std::bernoulli_distribution(0.4)(rng)) {
        edits.emplace_back(n, static_cast<Symbol>(uniform_index(rng, a)));
      }
    }
  }
  const long lo = std::min(x.left_end(), -reach);
  const long hi = std::max(x.right_start(), reach + 1);
  return TwoSidedPoint::tabulate(lo, x.left().size(), hi, x.right().size(), [&](long n) {
    for (const auto& [idx, s] : edits)
      if (idx == n) return s;
    return x.at(n);
  });
}

inline CirclePoint perturb(const Metric&, const CirclePoint& z, const ExactReal& budget, Rng& rng) {
  if (budget.is_zero()) return z;
  const long steps = 8;
  const long j = std::uniform_int_distribution<long>(-steps, steps)(rng);
  return CirclePoint(z.angle() + budget.rational() * Rational(j, steps));
}

inline FinitePoint perturb(const Metric& m, const FinitePoint& x, const ExactReal& budget, Rng& rng) {
  std::vector<std::size_t> ball;
  for (std::size_t y = 0; y < m.size(); ++y)
    if (m.distance(x, FinitePoint{y}) <= budget) ball.push_back(y);
  return FinitePoint{ball[uniform_index(rng, ball.size())]};
}

inline OneSidedPoint random_point(const OneSidedShift& s, Rng& rng) { return random_one_sided(rng, s.alphabet_size(), 3, 3); }
inline TwoSidedPoint random_point(const TwoSidedShift& s, Rng& rng) { return random_two_sided(rng, s.alphabet_size(), 4, 3, 2); }
inline OneSidedPoint random_point(const AdditiveCellular&, Rng& rng) { return random_one_sided(rng, 2, 3, 3); }
inline OneSidedPoint random_point(const SubsequenceMap&, Rng& rng) { return random_one_sided(rng, 2, 4, 3); }
inline CirclePoint random_point(const CirclePowerMap& s, Rng& rng) { return random_circle(rng, 4 * s.n() * (s.n() + 1)); }
inline FinitePoint random_point(const FiniteSystem& s, Rng& rng) { return FinitePoint{uniform_index(rng, s.size())}; }

/// Start for tailed pseudo-orbits: its genuine orbit must be eventually periodic.
template <System S>
typename S::point_type random_tail_point(const S& system, Rng& rng) {
  return random_point(system, rng);
}
inline TwoSidedPoint random_tail_point(const TwoSidedShift& s, Rng& rng) {
  const Word w = random_word(rng, s.alphabet_size(), 1 + uniform_index(rng, 3));
  return TwoSidedPoint(w, {}, w, 0);
}

struct RandomOrbitOptions {
  std::size_t length = 8;
  bool periodic_tail = false;
};

/// Seeded delta-pseudo-orbit. Each point is a perturbation of the genuine orbit
/// of a random start, accepted only if it keeps every gap within delta; the
/// budget halves on rejection, so the genuine point is the fallback.
template <System S>
PseudoOrbit<typename S::point_type> random_pseudo_orbit(const S& system, const ExactReal& delta,
                                                        RandomOrbitOptions opts, std::uint64_t seed,
                                                        std::optional<typename S::point_type> start = std::nullopt) {
  using P = typename S::point_type;
  Rng rng(seed);
  const P y = start ? *start : opts.periodic_tail ? random_tail_point(system, rng) : random_point(system, rng);

  std::size_t block = 0, total = std::max<std::size_t>(opts.length, 2);
  if (opts.periodic_tail) {
    const OrbitShape shape = orbit_shape(system, y);
    block = shape.preperiod + uniform_index(rng, 3);
    std::size_t reps = 1;
    while (block + reps * shape.period < opts.length) ++reps;
    total = block + reps * shape.period;
  }

  std::vector<P> genuine{y};
  for (std::size_t i = 1; i <= total; ++i) genuine.push_back(system.apply(genuine.back()));

  std::vector<P> pts;
  pts.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    ExactReal budget = (i == 0 && start) ? ExactReal(0) : delta;
    while (true) {
      P cand = perturb(system.metric(), genuine[i], budget, rng);
      bool ok = system.distance(cand, genuine[i]) <= budget;
      if (ok && i > 0) ok = system.distance(system.apply(pts.back()), cand) <= delta;
      if (ok) ok = system.distance(system.apply(cand), genuine[i + 1]) <= delta;
      if (ok && opts.periodic_tail && i + 1 == total && i != block) ok = system.distance(system.apply(cand), pts[block]) <= delta;
      if (ok && opts.periodic_tail && i == block && block + 1 == total) {
        ok = system.distance(system.apply(cand), cand) <= delta;
      }
      if (ok || budget.is_zero()) {
        pts.push_back(ok ? cand : genuine[i]);
        break;
      }
      budget = budget / ExactReal(2);
      if (budget < delta / ExactReal(1 << 20)) budget = ExactReal(0);
    }
  }
  return opts.periodic_tail ? PseudoOrbit<P>(std::move(pts), block) : PseudoOrbit<P>(std::move(pts));
}

template <System S>
Chain<typename S::point_type> random_chain(const S& system, const ExactReal& delta, std::size_t k, std::uint64_t seed) {
  auto xi = random_pseudo_orbit(system, delta, {k + 1, false}, seed);
  return Chain<typename S::point_type>(std::move(xi.points));
}

/// Seeded delta-cycle: the periodic block of a tailed pseudo-orbit, closed up.
template <System S>
Chain<typename S::point_type> random_cycle(const S& system, const ExactReal& delta, std::size_t min_length,
                                           std::uint64_t seed) {
  auto xi = random_pseudo_orbit(system, delta, {min_length, true}, seed);
  std::vector<typename S::point_type> pts(xi.points.begin() + static_cast<long>(*xi.block_start), xi.points.end());
  pts.push_back(pts.front());
  return Chain<typename S::point_type>(std::move(pts));
}

}  // namespace shadow
