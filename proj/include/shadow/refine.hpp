#pragma once

// Iterative refinement of approximate shadows into exact-endpoint shadows,
// periodic points and preimages, plus backward-induction shadowing from a
// ball-inclusion selector.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "shadow/constructors.hpp"

namespace shadow {

/// The hypothesis behind a refinement was violated; `witness` describes the input.
class OracleFault : public std::runtime_error {
 public:
  OracleFault(const std::string& what, std::string witness)
      : std::runtime_error(what + ": " + witness), witness_(std::move(witness)) {}
  const std::string& witness() const { return witness_; }

 private:
  std::string witness_;
};

/// The selector found no preimage inside the required ball.
class InclusionViolation : public OracleFault {
 public:
  using OracleFault::OracleFault;
};

class RefineRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class P>
std::string describe(const std::vector<P>& pts) {
  std::string out = "[";
  for (std::size_t i = 0; i < pts.size(); ++i) out += (i ? ", " : "") + pts[i].str();
  return out + "]";
}

/// Returns a point that L*delta-shadows the given delta-pseudo-orbit.
template <class P>
struct ShadowOracle {
  ExactReal L;
  std::optional<ExactReal> delta0;  // unlimited when empty
  std::function<P(const PseudoOrbit<P>&, const ExactReal&)> shadow;
};

/// Given x and y with d(f(x), y) within the selector's radius, returns z with
/// f(z) = y close to x, or nothing when no such z exists.
template <class P>
struct BallSelector {
  std::function<std::optional<P>(const P& x, const P& y)> select;
};

template <class P>
struct RefineStep {
  P y;
  ExactReal budget;       // defect bound of the chain fed to the oracle
  ExactReal endpoint_gap;  // d(f^k(y), target)
};

template <class P>
struct RefineResult {
  ShadowCertificate<P> certificate;
  std::vector<RefineStep<P>> trace;
  std::size_t iterations = 0;
  std::optional<std::size_t> iteration_bound;
  ExactReal endpoint_gap;
  bool exact = true;

  RefineResult(ShadowCertificate<P> c, std::vector<RefineStep<P>> t)
      : certificate(std::move(c)), trace(std::move(t)), endpoint_gap(0) {}
};

struct StopRule {
  std::optional<ExactReal> tolerance;  // exact endpoint when empty
  std::size_t max_iterations = 4096;

  static StopRule exactness() { return {}; }
  static StopRule within(ExactReal tau) { return {std::move(tau)}; }
};

/// Least m with L^m * delta <= tau, i.e. ceil(log(delta/tau) / log(1/L)).
inline std::size_t log_iteration_bound(const ExactReal& L, const ExactReal& delta, const ExactReal& tau) {
  std::size_t m = 0;
  ExactReal v = delta;
  while (v > tau) {
    v = v * L;
    ++m;
  }
  return m + 1;
}

namespace detail {

/// The chain followed by the genuine orbit of its endpoint, closed at the
/// first repetition so that it becomes a periodic-tail pseudo-orbit.
template <System S>
PseudoOrbit<typename S::point_type> extend_by_orbit(const S& system, std::vector<typename S::point_type> pts) {
  using P = typename S::point_type;
  std::unordered_map<P, std::size_t> seen;
  const std::size_t k = pts.size() - 1;
  P p = pts.back();
  std::vector<P> tail{p};
  seen.emplace(p, 0);
  for (std::size_t j = 1;; ++j) {
    p = system.apply(p);
    if (auto it = seen.find(p); it != seen.end()) {
      pts.pop_back();
      pts.insert(pts.end(), tail.begin(), tail.end());
      return PseudoOrbit<P>(std::move(pts), k + it->second);
    }
    if (j > (1u << 20)) throw OrbitError("endpoint orbit did not close");
    seen.emplace(p, j);
    tail.push_back(p);
  }
}

template <System S>
typename S::point_type consult(const S& system, const ShadowOracle<typename S::point_type>& oracle,
                               const PseudoOrbit<typename S::point_type>& xi, const ExactReal& delta) {
  if (oracle.delta0 && delta > *oracle.delta0) throw RefineRefused("delta exceeds the oracle threshold");
  auto y = oracle.shadow(xi, delta);
  if (!verify_shadowing(system, xi, y, oracle.L * delta)) {
    throw OracleFault("oracle output fails its L*delta bound", describe(xi.points) + " -> " + y.str());
  }
  return y;
}

template <System S>
std::vector<typename S::point_type> orbit_chain(const S& system, const typename S::point_type& y, std::size_t k,
                                                const typename S::point_type& end) {
  std::vector<typename S::point_type> pts{y};
  for (std::size_t i = 1; i < k; ++i) pts.push_back(system.apply(pts.back()));
  pts.push_back(end);
  return pts;
}

}  // namespace detail

/// Repeatedly re-shadows (y, f(y), ..., f^(k-1)(y), x_k) with budgets
/// L^(n+1) delta until f^k(y) hits x_k (or the budget drops below tau).
template <System S>
RefineResult<typename S::point_type> h_shadow_refine(const S& system, const ShadowOracle<typename S::point_type>& oracle,
                                                     const Chain<typename S::point_type>& chain, const ExactReal& delta,
                                                     StopRule stop = StopRule::exactness()) {
  using P = typename S::point_type;
  if (!(oracle.L < ExactReal(1))) throw RefineRefused("refinement needs L < 1");
  if (oracle.delta0 && delta > *oracle.delta0) throw RefineRefused("delta exceeds the oracle threshold");
  if (chain_defect(system, chain) > delta) throw OracleFault("chain defect exceeds delta", describe(chain.points));
  const std::size_t k = chain.k();
  const P& target = chain.back();

  std::vector<RefineStep<P>> trace;
  ExactReal budget = delta;
  P y = detail::consult(system, oracle, detail::extend_by_orbit(system, chain.points), delta);
  std::optional<std::size_t> bound;
  if (stop.tolerance) bound = log_iteration_bound(oracle.L, delta, *stop.tolerance);

  std::size_t n = 0;
  for (;; ++n) {
    const P end = iterate(system, y, k);
    const ExactReal gap = system.distance(end, target);
    trace.push_back({y, budget, gap});
    if (gap > budget * oracle.L) throw OracleFault("endpoint gap exceeds L^(n+1) delta", describe(chain.points));
    budget = budget * oracle.L;  // (y, ..., f^(k-1) y, x_k) is a budget-chain
    if (end == target) break;
    if (stop.tolerance && budget < *stop.tolerance) break;
    if (n + 1 >= stop.max_iterations) throw OracleFault("refinement did not reach the endpoint", describe(chain.points));
    auto next = detail::orbit_chain(system, y, k, target);
    P z = detail::consult(system, oracle, detail::extend_by_orbit(system, next), budget);
    y = std::move(z);
  }
  if (bound && n + 1 > *bound) throw std::logic_error("iteration count above the logarithmic bound");

  const ExactReal L = oracle.L;
  ShadowCertificate<P> cert(y, L * delta / (ExactReal(1) - L));
  cert.guarantee = Guarantee::exact_endpoint;
  cert.horizon = k - 1;
  cert.constant = L / (ExactReal(1) - L);
  cert.contractive = *cert.constant < ExactReal(1);
  const ExactReal gap = trace.back().endpoint_gap;
  const bool exact = gap.is_zero();
  if (exact ? !verify_h_shadow(system, chain, y, cert.bound)
            : !verify_shadowing(system, PseudoOrbit<P>(chain.points), y, cert.bound, k - 1)) {
    throw OracleFault("refined point violates L delta / (1 - L)", describe(chain.points));
  }
  if (!exact) cert.guarantee = Guarantee::per_index;
  RefineResult<P> out{std::move(cert), std::move(trace)};
  out.iterations = n + 1;
  out.iteration_bound = bound;
  out.endpoint_gap = gap;
  out.exact = exact;
  return out;
}

/// z with f(z) = y near x: within L delta / (1 - L) in general, within L delta
/// for ultrametrics.
template <System S>
typename S::point_type preimage_from_oracle(const S& system, const ShadowOracle<typename S::point_type>& oracle,
                                            const typename S::point_type& x, const typename S::point_type& y,
                                            const ExactReal& delta, std::optional<bool> ultrametric = std::nullopt) {
  using P = typename S::point_type;
  const bool ultra = ultrametric ? *ultrametric : system.metric().ultrametric();
  if (system.distance(system.apply(x), y) > delta) throw OracleFault("y is outside the delta-ball of f(x)", y.str());
  if (y == system.apply(x)) return x;
  const auto res = h_shadow_refine(system, oracle, Chain<P>({x, y}), delta);
  const P& z = res.certificate.point;
  const ExactReal bound = ultra ? oracle.L * delta : oracle.L * delta / (ExactReal(1) - oracle.L);
  if (!(system.apply(z) == y) || system.distance(z, x) > bound) {
    throw OracleFault("preimage misses its bound", x.str() + " -> " + y.str());
  }
  return z;
}

namespace detail {

template <System S>
RefineResult<typename S::point_type> cascade(const S& system, const ShadowOracle<typename S::point_type>& oracle,
                                             const Chain<typename S::point_type>& cycle, const ExactReal& delta,
                                             bool ultrametric, std::size_t max_iterations) {
  using P = typename S::point_type;
  if (!cycle.is_cycle()) throw OracleFault("input is not a cycle", describe(cycle.points));
  if (chain_defect(system, cycle) > delta) throw OracleFault("cycle defect exceeds delta", describe(cycle.points));
  if (oracle.delta0 && delta > *oracle.delta0) throw RefineRefused("delta exceeds the oracle threshold");
  const std::size_t k = cycle.k();
  const ExactReal L = oracle.L;
  // per-step contraction of the cycle defect: 2L (sum) or L (max)
  const ExactReal rate = ultrametric ? L : ExactReal(2) * L;

  auto as_orbit = [&](const std::vector<P>& pts) {
    return PseudoOrbit<P>(std::vector<P>(pts.begin(), pts.end() - 1), 0);
  };
  std::vector<RefineStep<P>> trace;
  P y = consult(system, oracle, as_orbit(cycle.points), delta);
  ExactReal budget = rate * delta;  // d(f^k(y_n), y_n) <= rate^(n+1) delta
  std::size_t n = 0;
  for (;; ++n) {
    const ExactReal gap = system.distance(iterate(system, y, k), y);
    trace.push_back({y, budget, gap});
    if (gap > budget) throw OracleFault("cycle defect above the cascade bound", describe(cycle.points));
    if (gap.is_zero()) break;
    if (n + 1 >= max_iterations) throw OracleFault("cascade did not close", describe(cycle.points));
    auto pts = orbit_chain(system, y, k, y);
    P z = consult(system, oracle, as_orbit(pts), budget);
    const ExactReal step = L * budget;
    if (system.distance(z, y) > step || system.distance(iterate(system, z, k), y) > step) {
      throw OracleFault("cascade step exceeds L times the defect", describe(pts));
    }
    y = std::move(z);
    budget = budget * rate;
  }
  const ExactReal bound = ultrametric ? L * delta : L * delta / (ExactReal(1) - ExactReal(2) * L);
  if (system.distance(y, cycle.front()) > bound) throw OracleFault("periodic point too far from x_0", describe(cycle.points));
  ShadowCertificate<P> cert(y, bound);
  cert.guarantee = Guarantee::periodic;
  cert.period = k;
  cert.horizon = 0;
  cert.constant = L;
  cert.contractive = L < ExactReal(1);
  RefineResult<P> out{std::move(cert), std::move(trace)};
  out.iterations = n + 1;
  return out;
}

}  // namespace detail

/// Periodic point near a delta-cycle via the (2L)^n cascade; needs L < 1/2.
template <System S>
RefineResult<typename S::point_type> periodic_refine(const S& system, const ShadowOracle<typename S::point_type>& oracle,
                                                     const Chain<typename S::point_type>& cycle, const ExactReal& delta,
                                                     std::size_t max_iterations = 4096) {
  if (!(oracle.L < ExactReal(1, 2))) throw RefineRefused("the additive cascade needs L < 1/2");
  return detail::cascade(system, oracle, cycle, delta, false, max_iterations);
}

/// Ultrametric variant: the defect contracts by L per step and the bound is L delta.
template <System S>
RefineResult<typename S::point_type> periodic_refine_ultrametric(const S& system,
                                                                 const ShadowOracle<typename S::point_type>& oracle,
                                                                 const Chain<typename S::point_type>& cycle,
                                                                 const ExactReal& delta,
                                                                 std::size_t max_iterations = 4096) {
  if (!system.metric().ultrametric()) throw RefineRefused("metric is not an ultrametric");
  if (!(oracle.L < ExactReal(1))) throw RefineRefused("refinement needs L < 1");
  return detail::cascade(system, oracle, cycle, delta, true, max_iterations);
}

// ---------------------------------------------------------------------------
// Backward induction

template <class P>
struct Lemma11Result {
  P point;
  std::vector<P> preimages;  // p_0, ..., p_k (chains) or the constructed prefix and block (tails)
  bool all_indices = false;
};

namespace detail {

template <class P>
P select_or_fail(const BallSelector<P>& selector, const P& x, const P& y) {
  auto z = selector.select(x, y);
  if (!z) throw InclusionViolation("no preimage inside the epsilon-ball", x.str() + " <- " + y.str());
  return *z;
}

/// p_i from p_{i+1} back through x_i for i = hi-1, ..., lo.
template <System S>
std::vector<typename S::point_type> backward(const S& system, const BallSelector<typename S::point_type>& selector,
                                             const PseudoOrbit<typename S::point_type>& xi, std::size_t lo,
                                             std::size_t hi, typename S::point_type end) {
  std::vector<typename S::point_type> ps(hi - lo + 1, end);
  for (std::size_t i = hi; i-- > lo;) {
    ps[i - lo] = select_or_fail(selector, xi.at(i), ps[i - lo + 1]);
    if (!(system.apply(ps[i - lo]) == ps[i - lo + 1])) throw InclusionViolation("selector returned a non-preimage", xi.at(i).str());
  }
  return ps;
}

/// Fixed point (or cycle) of one backward lap around the block, by repetition
/// detection; returns the lap values at the block start, in forward order.
template <System S>
std::optional<std::vector<typename S::point_type>> block_cycle(const S& system,
                                                               const BallSelector<typename S::point_type>& selector,
                                                               const PseudoOrbit<typename S::point_type>& xi,
                                                               std::size_t max_laps) {
  using P = typename S::point_type;
  const std::size_t b = *xi.block_start, e = b + xi.block_length();
  std::unordered_map<P, std::size_t> seen;
  std::vector<P> laps{xi.at(b)};
  seen.emplace(laps[0], 0);
  for (std::size_t j = 1; j <= max_laps; ++j) {
    P p = backward(system, selector, xi, b, e, laps.back()).front();
    if (auto it = seen.find(p); it != seen.end()) {
      // laps[it..] repeat; forward order runs against the backward laps
      std::vector<P> cyc(laps.begin() + static_cast<long>(it->second), laps.end());
      std::reverse(cyc.begin(), cyc.end());
      std::rotate(cyc.begin(), cyc.end() - 1, cyc.end());
      return cyc;
    }
    seen.emplace(p, j);
    laps.push_back(std::move(p));
  }
  return std::nullopt;
}

/// On the circle each backward lap is p -> (p + J) / n^m with an integer J,
/// so the limit of the laps is the exact fixed point J / (n^m - 1).
inline std::optional<std::vector<CirclePoint>> block_cycle(const CirclePowerMap& system,
                                                           const BallSelector<CirclePoint>& selector,
                                                           const PseudoOrbit<CirclePoint>& xi, std::size_t max_laps) {
  const std::size_t b = *xi.block_start, e = b + xi.block_length();
  Integer scale(1);
  for (std::size_t i = 0; i < xi.block_length(); ++i) scale *= system.n();
  CirclePoint p = xi.at(b);
  for (std::size_t j = 0; j < max_laps; ++j) {
    CirclePoint q = backward(system, selector, xi, b, e, p).front();
    Rational jump = q.angle() * scale - p.angle();
    jump.canonicalize();
    const CirclePoint fixed(Rational(jump / (scale - 1)));
    try {
      if (backward(system, selector, xi, b, e, fixed).front() == fixed) return std::vector<CirclePoint>{fixed};
    } catch (const InclusionViolation&) {
    }
    p = q;
  }
  return std::nullopt;
}

}  // namespace detail

/// Backward induction through B_eps balls: for a delta-chain p_k = x_k and
/// p_i is the selected preimage of p_{i+1} near x_i. For a periodic-tail
/// pseudo-orbit the block is closed up first, giving an exactly periodic tail.
template <System S>
Lemma11Result<typename S::point_type> lemma11_shadow(const S& system,
                                                     const BallSelector<typename S::point_type>& selector,
                                                     const PseudoOrbit<typename S::point_type>& xi,
                                                     const ExactReal& delta, const ExactReal& epsilon,
                                                     std::size_t max_laps = 256) {
  using P = typename S::point_type;
  if (pseudo_orbit_defect(system, xi) > delta) throw OracleFault("defect exceeds delta", describe(xi.points));
  Lemma11Result<P> out{xi.points.front(), {}};
  if (!xi.periodic_tail()) {
    out.preimages = detail::backward(system, selector, xi, 0, xi.size() - 1, xi.points.back());
    out.point = out.preimages.front();
    if (!verify_h_shadow(system, Chain<P>(xi.points), out.point, epsilon)) {
      throw InclusionViolation("backward induction left the epsilon-balls", describe(xi.points));
    }
    return out;
  }
  auto cyc = detail::block_cycle(system, selector, xi, max_laps);
  if (!cyc) throw InclusionViolation("block laps did not close", describe(xi.points));
  out.preimages = detail::backward(system, selector, xi, 0, *xi.block_start, cyc->front());
  out.point = out.preimages.front();
  const auto check = check_shadowing(system, xi, out.point, epsilon);
  if (!check.ok) throw InclusionViolation("closed-up shadow leaves the epsilon-balls", describe(xi.points));
  out.all_indices = check.all_indices;
  return out;
}

// ---------------------------------------------------------------------------
// Ready-made oracles and selectors

inline ShadowOracle<OneSidedPoint> one_sided_shift_oracle(const OneSidedShift& system) {
  return {ExactReal(1) / ExactReal(system.metric().alpha()), std::nullopt,
          [system](const PseudoOrbit<OneSidedPoint>& xi, const ExactReal& delta) {
            return shadow_one_sided_shift(system, xi, delta).point;
          }};
}

inline BallSelector<OneSidedPoint> cellular_selector(const AdditiveCellular& system, const ExactReal& radius) {
  return {[system, radius](const OneSidedPoint& x, const OneSidedPoint& y) -> std::optional<OneSidedPoint> {
    if (system.distance(system.apply(x), y) > radius) return std::nullopt;
    return preimage_selector_cellular(system, y, x, radius);
  }};
}

/// Selector for B_{n eps}(f(z)) within f(B_eps(z)).
inline BallSelector<CirclePoint> circle_selector(const CirclePowerMap& system, const ExactReal& epsilon) {
  return {[system, epsilon](const CirclePoint& x, const CirclePoint& y) -> std::optional<CirclePoint> {
    if (system.distance(system.apply(x), y) > ExactReal(system.n()) * epsilon) return std::nullopt;
    return preimage_selector_circle(system, y, x, epsilon);
  }};
}

/// Least-index preimage of y inside B_eps(x).
inline BallSelector<FinitePoint> finite_selector(const FiniteSystem& system, const ExactReal& epsilon) {
  return {[system, epsilon](const FinitePoint& x, const FinitePoint& y) -> std::optional<FinitePoint> {
    for (std::size_t z = 0; z < system.size(); ++z) {
      if (system.map()[z] == y.index && system.distance(FinitePoint{z}, x) <= epsilon) return FinitePoint{z};
    }
    return std::nullopt;
  }};
}

/// Exhaustive search: the least-index point whose orbit L*delta-shadows xi.
inline ShadowOracle<FinitePoint> finite_search_oracle(const FiniteSystem& system, const ExactReal& L,
                                                      std::optional<ExactReal> delta0 = std::nullopt) {
  return {L, std::move(delta0), [system, L](const PseudoOrbit<FinitePoint>& xi, const ExactReal& delta) {
            for (std::size_t z = 0; z < system.size(); ++z) {
              if (verify_shadowing(system, xi, FinitePoint{z}, L * delta)) return FinitePoint{z};
            }
            throw OracleFault("no point shadows the pseudo-orbit", describe(xi.points));
          }};
}

/// B_{delta+eps}(f(x)) within f(B_eps(x)) for every x, checked exhaustively.
inline bool inclusion_holds(const FiniteSystem& system, const ExactReal& delta, const ExactReal& epsilon) {
  const ExactReal r = delta + epsilon;
  for (std::size_t x = 0; x < system.size(); ++x) {
    const FinitePoint fx = system.apply(FinitePoint{x});
    for (std::size_t y = 0; y < system.size(); ++y) {
      if (system.distance(fx, FinitePoint{y}) > r) continue;
      bool covered = false;
      for (std::size_t z = 0; z < system.size() && !covered; ++z) {
        covered = system.map()[z] == y && system.distance(FinitePoint{z}, FinitePoint{x}) <= epsilon;
      }
      if (!covered) return false;
    }
  }
  return true;
}

}  // namespace shadow
