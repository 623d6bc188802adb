#pragma once

// Explicit shadowing points for the shift-type systems, with their constants
// checked exactly on every index.

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "shadow/orbits.hpp"

namespace shadow {

class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <System S>
void require_tail_and_defect(const S& system, const PseudoOrbit<typename S::point_type>& xi, const ExactReal& delta) {
  if (!xi.periodic_tail()) throw ConstructionError("constructor needs a pseudo-orbit with a periodic tail");
  if (pseudo_orbit_defect(system, xi) > delta) throw ConstructionError("defect exceeds delta");
}

template <System S>
ShadowCertificate<typename S::point_type> certify(const S& system, const PseudoOrbit<typename S::point_type>& xi,
                                                  typename S::point_type x, const ExactReal& bound,
                                                  const ExactReal& constant) {
  const auto check = check_shadowing(system, xi, x, bound);
  if (!check.ok) throw std::logic_error("constructed point fails its bound at index " + std::to_string(*check.violation));
  ShadowCertificate<typename S::point_type> cert{std::move(x), bound};
  cert.horizon = check.checked_through;
  cert.all_indices = check.all_indices;
  cert.constant = constant;
  cert.contractive = constant < ExactReal(1);
  return cert;
}

/// Tail point of the first-coordinate sequence i -> x^(i)_1.
inline OneSidedPoint first_coordinates(const PseudoOrbit<OneSidedPoint>& xi) {
  return OneSidedPoint::tabulate(*xi.block_start, xi.block_length(),
                                 [&](long n) { return xi.at(static_cast<std::size_t>(n - 1)).at(1); });
}

/// x_n = x^(n)_0 for n >= 0, extended backwards by the orbit of x^(0).
inline TwoSidedPoint zeroth_coordinates(const PseudoOrbit<TwoSidedPoint>& xi) {
  const TwoSidedPoint& x0 = xi.points.front();
  const long left_end = std::min(0L, x0.left_end());
  return TwoSidedPoint::tabulate(left_end, x0.left().size(), static_cast<long>(*xi.block_start), xi.block_length(),
                                 [&](long n) { return n < 0 ? x0.at(n) : xi.at(static_cast<std::size_t>(n)).at(0); });
}

inline ExactReal alpha_of(const Metric& m) { return ExactReal(m.alpha()); }

}  // namespace detail

/// Structural bound in the one-sided case split: alpha^-2 when delta >= 1/alpha,
/// otherwise alpha^(-N-2) with alpha^(-N-1) <= delta < alpha^-N.
inline ExactReal one_sided_case_bound(const ExactReal& alpha, const ExactReal& delta) {
  if (delta >= ExactReal(1) / alpha) return ExactReal(1) / (alpha * alpha);
  return ipow(ExactReal(1) / alpha, scale_index(alpha, delta) + 2);
}

/// Two-sided analogue: alpha^-1, or alpha^(-N-1).
inline ExactReal two_sided_case_bound(const ExactReal& alpha, const ExactReal& delta) {
  if (delta >= ExactReal(1) / alpha) return ExactReal(1) / alpha;
  return ipow(ExactReal(1) / alpha, scale_index(alpha, delta) + 1);
}

inline ShadowCertificate<OneSidedPoint> shadow_one_sided_shift(const OneSidedShift& system,
                                                               const PseudoOrbit<OneSidedPoint>& xi,
                                                               const ExactReal& delta) {
  if (system.metric().alphabet()) throw ConstructionError("binary shift expected; use shadow_product_one_sided");
  detail::require_tail_and_defect(system, xi, delta);
  const ExactReal alpha = detail::alpha_of(system.metric());
  OneSidedPoint x = detail::first_coordinates(xi);
  if (delta.is_zero()) return detail::certify(system, xi, std::move(x), delta, ExactReal(1) / alpha);
  const ExactReal sharp = one_sided_case_bound(alpha, delta);
  if (!check_shadowing(system, xi, x, sharp).ok) throw std::logic_error("case bound violated");
  return detail::certify(system, xi, std::move(x), delta / alpha, ExactReal(1) / alpha);
}

inline ShadowCertificate<TwoSidedPoint> shadow_two_sided_shift(const TwoSidedShift& system,
                                                               const PseudoOrbit<TwoSidedPoint>& xi,
                                                               const ExactReal& delta) {
  if (system.metric().alphabet()) throw ConstructionError("binary shift expected; use shadow_product_two_sided");
  detail::require_tail_and_defect(system, xi, delta);
  const ExactReal alpha = detail::alpha_of(system.metric());
  TwoSidedPoint x = detail::zeroth_coordinates(xi);
  if (delta.is_zero()) return detail::certify(system, xi, std::move(x), delta, ExactReal(1));
  if (!check_shadowing(system, xi, x, two_sided_case_bound(alpha, delta)).ok) throw std::logic_error("case bound violated");
  return detail::certify(system, xi, std::move(x), delta, ExactReal(1));
}

/// The point x^(0) itself, which the construction above improves on.
inline TwoSidedPoint naive_two_sided_shadow(const PseudoOrbit<TwoSidedPoint>& xi) { return xi.points.front(); }

inline ShadowCertificate<OneSidedPoint> shadow_product_one_sided(const OneSidedShift& system,
                                                                 const PseudoOrbit<OneSidedPoint>& xi,
                                                                 const ExactReal& delta) {
  detail::require_tail_and_defect(system, xi, delta);
  const ExactReal constant = ExactReal(1) / ExactReal(Rational(system.metric().alpha() - 1));
  return detail::certify(system, xi, detail::first_coordinates(xi), constant * delta, constant);
}

inline ShadowCertificate<TwoSidedPoint> shadow_product_two_sided(const TwoSidedShift& system,
                                                                 const PseudoOrbit<TwoSidedPoint>& xi,
                                                                 const ExactReal& delta) {
  detail::require_tail_and_defect(system, xi, delta);
  const Rational a = system.metric().alpha();
  const ExactReal constant(Rational(a / (a - 1)));
  TwoSidedPoint x = detail::zeroth_coordinates(xi);
  auto p = x;
  for (std::size_t i = 0; i < *xi.block_start + xi.block_length(); ++i) {
    if (p.at(0) != xi.at(i).at(0)) throw std::logic_error("coordinate 0 disagrees at index " + std::to_string(i));
    p = system.apply(p);
  }
  return detail::certify(system, xi, std::move(x), constant * delta, constant);
}

/// Coordinate 0 of f^i(x) equals coordinate 0 of x_i for every i (periodic in
/// i past the block start, so one sweep covers all i).
inline bool zeroth_coordinates_agree(const TwoSidedShift& system, const PseudoOrbit<TwoSidedPoint>& xi,
                                     const TwoSidedPoint& x) {
  auto p = x;
  const std::size_t count = *xi.block_start + std::lcm(xi.block_length(), x.right().size()) +
                            static_cast<std::size_t>(std::max(0L, x.right_start()));
  for (std::size_t i = 0; i < count; ++i) {
    if (p.at(0) != xi.at(i).at(0)) return false;
    p = system.apply(p);
  }
  return true;
}

// ---------------------------------------------------------------------------
// Subsequence map

/// n = a * K^b with K not dividing a.
struct Factorization {
  long a;
  long b;
};

inline Factorization factorize(long n, long k) {
  Factorization f{n, 0};
  while (f.a % k == 0) {
    f.a /= k;
    ++f.b;
  }
  return f;
}

/// The shadow x_n = x^(b)_a. It is generally not eventually periodic, so it is
/// kept as the rule over the pseudo-orbit rather than as a point.
struct FactorizedShadow {
  long k = 2;
  PseudoOrbit<OneSidedPoint> xi;

  Symbol at(long n) const {
    const Factorization f = factorize(n, k);
    return xi.at(static_cast<std::size_t>(f.b)).at(f.a);
  }

  /// Coordinate n of f_K^i(x), i.e. x_{K^i n}, without forming K^i n.
  Symbol image_at(std::size_t i, long n) const {
    const Factorization f = factorize(n, k);
    return xi.at(i + static_cast<std::size_t>(f.b)).at(f.a);
  }

  /// First `length` coordinates as an eventually periodic point (x_1..x_length, then 0s).
  Word prefix(long length) const {
    Word w;
    for (long n = 1; n <= length; ++n) w.push_back(at(n));
    return w;
  }
};

/// Coordinates compared when epsilon is too small to cut the scan off.
inline constexpr long kFactorizedWindow = 256;

/// Exact check of d(f_K^i(x), x_i) <= epsilon for every i >= 0: only
/// coordinates with 2^-n > epsilon matter, and past the block start the
/// comparison depends on i modulo the block length.
inline ShadowCheck<OneSidedPoint> check_factorized(const SubsequenceMap& system, const FactorizedShadow& shadow,
                                                   const ExactReal& epsilon) {
  const Metric& m = system.metric();
  ShadowCheck<OneSidedPoint> out;
  out.all_indices = true;
  const std::size_t count = *shadow.xi.block_start + shadow.xi.block_length();
  out.checked_through = count - 1;
  for (std::size_t i = 0; i < count; ++i) {
    Rational w(1);
    for (long n = 1;; ++n) {
      w /= m.alpha();
      const ExactReal weight = m.exponent().apply(ExactReal(w));
      if (weight <= epsilon) break;
      if (n > kFactorizedWindow) {
        out.all_indices = false;
        break;
      }
      if (shadow.image_at(i, n) != shadow.xi.at(i).at(n)) {
        out.max_deviation = max(out.max_deviation, weight);
        if (!out.violation) out.violation = i;
        out.ok = false;
        break;
      }
    }
  }
  return out;
}

/// 2^-K when delta >= 1/2, otherwise 2^(-KN-K) with 2^(-N-1) <= delta < 2^-N.
inline ExactReal subsequence_case_bound(long k, const ExactReal& delta) {
  if (delta >= ExactReal(1, 2)) return ipow(ExactReal(1, 2), k);
  const long n = scale_index(ExactReal(2), delta);
  return ipow(ExactReal(1, 2), k * n + k);
}

inline ShadowCertificate<FactorizedShadow> shadow_subsequence_fK(const SubsequenceMap& system,
                                                                 const PseudoOrbit<OneSidedPoint>& xi,
                                                                 const ExactReal& delta) {
  if (system.k() < 2) throw ConstructionError("K must be at least 2");
  if (system.metric().alpha() != 2 || !system.metric().exponent().is_one()) {
    throw ConstructionError("the factorization shadow is stated for the weight 2^-n");
  }
  detail::require_tail_and_defect(system, xi, delta);
  FactorizedShadow shadow{system.k(), xi};
  const ExactReal bound = ipow(delta, system.k());
  if (!delta.is_zero()) {
    const ExactReal sharp = subsequence_case_bound(system.k(), delta);
    if (sharp > bound) throw std::logic_error("case bound exceeds delta^K");
    if (!check_factorized(system, shadow, sharp).ok) throw std::logic_error("case bound violated");
  }
  const auto check = check_factorized(system, shadow, bound);
  if (!check.ok) throw std::logic_error("factorized shadow fails delta^K");
  ShadowCertificate<FactorizedShadow> cert{std::move(shadow), bound};
  cert.horizon = check.checked_through;
  cert.all_indices = true;
  cert.contractive = true;
  return cert;
}

/// delta^K <= L delta exactly when delta <= L^(1/(K-1)).
inline ExactReal subsequence_delta0(long k, const ExactReal& L) { return pow(L, 1, k - 1); }

// ---------------------------------------------------------------------------
// Preimage selectors

/// The preimage of y under the additive cellular map that starts with x_1.
inline OneSidedPoint preimage_selector_cellular(const AdditiveCellular& system, const OneSidedPoint& y,
                                                const OneSidedPoint& x, const ExactReal& delta) {
  if (system.distance(system.apply(x), y) > delta) throw ConstructionError("target outside the delta-ball of f(x)");
  const std::size_t pre = y.preperiod().size() + 1;
  const std::size_t per = 2 * y.period().size();
  Word z{x.at(1)};
  for (long n = 1; n < static_cast<long>(pre + per); ++n) z.push_back(static_cast<Symbol>(y.at(n) ^ z.back()));
  OneSidedPoint out = OneSidedPoint::tabulate(pre, per, [&](long n) { return z[static_cast<std::size_t>(n - 1)]; });
  if (system.apply(out) != y) throw std::logic_error("forced recursion missed the target");
  if (system.distance(out, x) > delta / ExactReal(system.metric().alpha())) {
    throw std::logic_error("selected preimage outside the contracted ball");
  }
  return out;
}

/// Largest delta = j/grid for which every closed delta-ball holds at most one
/// n-th root of any point in the n*delta-ball of its image, checked
/// exhaustively on the grid {k / (n * grid)}.
inline ExactReal circle_injectivity_threshold(long n, long grid = 0) {
  static std::mutex mu;
  static std::map<std::pair<long, long>, ExactReal> cache;
  if (grid == 0) grid = 12 * n;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find({n, grid}); it != cache.end()) return it->second;
  const long fine = n * grid;
  auto unique_roots = [&](const Rational& delta) {
    for (long xs = 0; xs < fine; ++xs) {
      const CirclePoint x(xs, fine);
      const CirclePoint fx = circle_power_map(x, n);
      for (long ys = 0; ys < grid; ++ys) {
        const CirclePoint y(ys, grid);
        if (arc_distance(fx, y) > ExactReal(Rational(delta * n))) continue;
        int hits = 0;
        for (long j = 0; j < n; ++j) {
          if (arc_distance(CirclePoint((y.angle() + j) / n), x) <= delta) ++hits;
        }
        if (hits != 1) return false;
      }
    }
    return true;
  };
  ExactReal best(0);
  for (long j = grid; j >= 1; --j) {
    if (unique_roots(Rational(j, grid))) {
      best = ExactReal(j, grid);
      break;
    }
  }
  cache.emplace(std::pair{n, grid}, best);
  return best;
}

/// The unique n-th root of y within delta of x.
inline CirclePoint preimage_selector_circle(const CirclePowerMap& system, const CirclePoint& y, const CirclePoint& x,
                                            const ExactReal& delta) {
  const long n = system.n();
  if (delta > circle_injectivity_threshold(n)) throw ConstructionError("delta above the injectivity threshold");
  if (system.distance(system.apply(x), y) > ExactReal(n) * delta) {
    throw ConstructionError("target outside the n*delta-ball of f(x)");
  }
  std::optional<CirclePoint> found;
  for (long j = 0; j < n; ++j) {
    const CirclePoint z((y.angle() + j) / n);
    if (system.distance(z, x) <= delta) {
      if (found) throw std::logic_error("two roots in the ball");
      found = z;
    }
  }
  if (!found) throw std::logic_error("no root in the ball");
  return *found;
}

// ---------------------------------------------------------------------------
// Witnesses and transport

/// Pseudo-orbit on which the one-sided construction attains the case bound:
/// start at 0^inf and flip coordinate N+1 after every shift.
inline PseudoOrbit<OneSidedPoint> one_sided_tightness_witness(const ExactReal& alpha, const ExactReal& delta) {
  const long flip = delta >= ExactReal(1) / alpha ? 1 : scale_index(alpha, delta) + 1;
  std::vector<OneSidedPoint> pts{OneSidedPoint::constant(0)};
  for (long i = 0; i < flip; ++i) {
    OneSidedPoint s = shift_one_sided(pts.back());
    pts.push_back(OneSidedPoint::tabulate(static_cast<std::size_t>(flip), 1, [&](long n) {
      return n == flip ? static_cast<Symbol>(1 - s.at(n)) : s.at(n);
    }));
  }
  return PseudoOrbit<OneSidedPoint>(std::move(pts), static_cast<std::size_t>(flip));
}

struct TransportCheck {
  bool base_ok = false;        // x shadows xi within L * delta in d
  bool snowflake_ok = false;   // x shadows xi within L^a * delta^a in d^a
  bool defect_ok = false;      // d^a-defect <= delta^a
  ExactReal snowflake_bound;
};

/// Shadowing constants transform as L -> L^a under d -> d^a: the point built
/// for d is checked against the pseudo-orbit in the snowflaked metric.
inline TransportCheck snowflake_transport_check(const OneSidedShift& system, const PseudoOrbit<OneSidedPoint>& xi,
                                                const ExactReal& delta, const Exponent& a) {
  TransportCheck out;
  const auto cert = shadow_one_sided_shift(system, xi, delta);
  out.base_ok = verify_certificate(system, xi, cert);
  const OneSidedShift flaked = system.with_metric(snowflake(system.metric(), a));
  const ExactReal L = ExactReal(1) / detail::alpha_of(system.metric());
  out.snowflake_bound = a.apply(L) * a.apply(delta);
  out.defect_ok = pseudo_orbit_defect(flaked, xi) <= a.apply(delta);
  out.snowflake_ok = verify_shadowing(flaked, xi, cert.point, out.snowflake_bound);
  return out;
}

}  // namespace shadow
