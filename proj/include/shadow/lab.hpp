#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadow/decompose.hpp"
#include "shadow/random.hpp"

namespace shadow {

class LabError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExceeded : public LabError {
 public:
  using LabError::LabError;
};

struct TowerLevel {
  std::size_t size = 0;
  std::vector<std::uint16_t> dist;  // indices into IndexedTower::values()
  std::vector<std::size_t> next;    // into the following level; empty on the last one

  std::uint16_t d(std::size_t a, std::size_t b) const { return dist[a * size + b]; }
};

/// Time-indexed finite spaces X_0 -> X_1 -> ... -> X_{H-1}. A pseudo-orbit
/// picks one point per level; shadows start in X_0.
class IndexedTower {
 public:
  static IndexedTower stationary(const FiniteSystem& system, std::size_t horizon) {
    if (horizon == 0) throw LabError("horizon must be positive");
    const auto table = system.metric().table_values();
    IndexedTower t;
    std::set<ExactReal> seen;
    for (const auto& row : table) seen.insert(row.begin(), row.end());
    t.values_.assign(seen.begin(), seen.end());
    TowerLevel level;
    level.size = system.size();
    for (const auto& row : table)
      for (const auto& v : row) level.dist.push_back(t.index_of(v));
    level.next = system.map();
    t.levels_.assign(horizon, level);
    t.levels_.back().next.clear();
    return t;
  }

  /// Levels built from explicit data; values must be sorted and distinct.
  static IndexedTower from_levels(std::vector<ExactReal> values, std::vector<TowerLevel> levels) {
    IndexedTower t;
    t.values_ = std::move(values);
    t.levels_ = std::move(levels);
    if (t.levels_.empty()) throw LabError("tower needs at least one level");
    for (std::size_t m = 0; m < t.levels_.size(); ++m) {
      const auto& l = t.levels_[m];
      if (l.dist.size() != l.size * l.size) throw LabError("tower level distance matrix has the wrong size");
      const bool last = m + 1 == t.levels_.size();
      if (last != l.next.empty()) throw LabError("tower maps must link consecutive levels");
      for (auto v : l.next)
        if (v >= t.levels_[m + 1].size) throw LabError("tower map leaves the next level");
    }
    return t;
  }

  std::size_t horizon() const { return levels_.size(); }
  const TowerLevel& level(std::size_t m) const { return levels_.at(m); }
  const std::vector<ExactReal>& values() const { return values_; }
  const ExactReal& value(std::size_t i) const { return values_.at(i); }

  /// Largest value index with value <= r, or -1.
  long at_most(const ExactReal& r) const {
    return static_cast<long>(std::upper_bound(values_.begin(), values_.end(), r) - values_.begin()) - 1;
  }

  /// Distinct d_{m+1}(f(x), y) over all level pairs, ascending.
  std::vector<ExactReal> spectrum() const {
    std::set<std::uint16_t> idx;
    for (std::size_t m = 0; m + 1 < levels_.size(); ++m) {
      const auto& a = levels_[m];
      const auto& b = levels_[m + 1];
      for (std::size_t x = 0; x < a.size; ++x)
        for (std::size_t y = 0; y < b.size; ++y) idx.insert(b.d(a.next[x], y));
    }
    std::vector<ExactReal> out;
    for (auto i : idx) out.push_back(values_[i]);
    return out;
  }

 private:
  std::uint16_t index_of(const ExactReal& v) const {
    return static_cast<std::uint16_t>(std::lower_bound(values_.begin(), values_.end(), v) - values_.begin());
  }

  std::vector<ExactReal> values_;
  std::vector<TowerLevel> levels_;
};

enum class CylinderMap { shift, additive };

inline std::string to_string(CylinderMap m) { return m == CylinderMap::shift ? "shift" : "additive"; }

/// Depth-k cylinder quotient of the one-sided shift or the additive cellular
/// map: level m holds the words of length depth + (H-1-m) with the weighted
/// first-disagreement distance, and the map drops (or sums) one symbol.
struct CylinderTower {
  CylinderMap map = CylinderMap::shift;
  Rational alpha{2};
  std::size_t depth = 3;
  std::size_t alphabet = 2;

  std::string name() const { return to_string(map) + "-cylinders-depth" + std::to_string(depth); }

  IndexedTower build(std::size_t horizon) const {
    if (horizon == 0) throw LabError("horizon must be positive");
    if (depth == 0) throw LabError("cylinder depth must be positive");
    if (map == CylinderMap::additive && alphabet != 2) throw LabError("the additive cellular map is binary");
    if (alpha <= 1) throw LabError("alpha must exceed 1");
    const std::size_t top = depth + horizon - 1;
    // values: 0, alpha^{-top}, ..., alpha^{-1}
    std::vector<ExactReal> values{ExactReal(0)};
    for (std::size_t n = top; n >= 1; --n) values.emplace_back(detail::ipow(Rational(1) / alpha, n));
    std::vector<TowerLevel> levels;
    for (std::size_t m = 0; m < horizon; ++m) {
      const std::size_t len = top - m;
      TowerLevel l;
      l.size = 1;
      for (std::size_t i = 0; i < len; ++i) l.size *= alphabet;
      if (l.size > (std::size_t{1} << 16)) throw BudgetExceeded("cylinder tower level too large; lower the depth or horizon");
      std::vector<Word> words(l.size);
      for (std::size_t w = 0; w < l.size; ++w) words[w] = decode(w, len);
      l.dist.assign(l.size * l.size, 0);
      for (std::size_t a = 0; a < l.size; ++a)
        for (std::size_t b = 0; b < l.size; ++b) {
          std::size_t n = 0;
          while (n < len && words[a][n] == words[b][n]) ++n;
          // first disagreement at position n+1 has weight alpha^{-(n+1)}
          l.dist[a * l.size + b] = n == len ? 0 : static_cast<std::uint16_t>(top - n);
        }
      if (m + 1 < horizon) {
        l.next.resize(l.size);
        for (std::size_t w = 0; w < l.size; ++w) l.next[w] = encode(image(words[w]));
      }
      levels.push_back(std::move(l));
    }
    return IndexedTower::from_levels(std::move(values), std::move(levels));
  }

  Word decode(std::size_t w, std::size_t len) const {
    Word out(len);
    for (std::size_t i = len; i-- > 0;) {
      out[i] = static_cast<Symbol>(w % alphabet);
      w /= alphabet;
    }
    return out;
  }
  std::size_t encode(const Word& word) const {
    std::size_t w = 0;
    for (auto s : word) w = w * alphabet + s;
    return w;
  }
  Word image(const Word& u) const {
    Word v(u.size() - 1);
    for (std::size_t i = 0; i + 1 < u.size(); ++i)
      v[i] = map == CylinderMap::shift ? u[i + 1] : static_cast<Symbol>((u[i] + u[i + 1]) % 2);
    return v;
  }
};

struct RadiusBudget {
  std::size_t max_points = 8;
  std::size_t max_horizon = 8;
  std::size_t max_tower_points = 4096;
};

struct RadiusOptions {
  std::optional<std::size_t> horizon = 6;  // empty: all lengths (stationary systems only)
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::size_t samples = 2000;
  RadiusBudget budget{};
};

struct MinimalRadius {
  ExactReal radius;
  std::vector<std::size_t> witness;  // a delta-pseudo orbit whose best shadow is exactly `radius`
  bool exact = true;                 // false for sampled lower bounds
};

namespace detail {

using Bits = std::vector<std::uint64_t>;

inline Bits make_bits(std::size_t n) { return Bits((n + 63) / 64, 0); }
inline void set_bit(Bits& b, std::size_t i) { b[i / 64] |= std::uint64_t{1} << (i % 64); }
inline bool none(const Bits& b) {
  return std::all_of(b.begin(), b.end(), [](std::uint64_t w) { return w == 0; });
}
template <class F>
void for_each_bit(const Bits& b, F&& f) {
  for (std::size_t w = 0; w < b.size(); ++w) {
    std::uint64_t v = b[w];
    while (v) {
      const int t = __builtin_ctzll(v);
      f(w * 64 + static_cast<std::size_t>(t));
      v &= v - 1;
    }
  }
}

struct SearchNode {
  std::size_t point;
  Bits alive;  // current positions f^i(x) of candidate shadows x
  long parent;
};

// A pseudo-orbit (one point per level, steps within delta_idx) that no level-0
// point follows within eps_idx. Stationary mode keeps one global visited set
// and runs until no new state appears, covering every length.
inline std::optional<std::vector<std::size_t>> unshadowed(const IndexedTower& t, long delta_idx, long eps_idx,
                                                          bool every_length) {
  const auto& l0 = t.level(0);
  std::vector<SearchNode> nodes;
  std::set<std::pair<std::size_t, Bits>> seen;
  std::vector<std::size_t> frontier;
  for (std::size_t xi = 0; xi < l0.size; ++xi) {
    Bits alive = make_bits(l0.size);
    for (std::size_t x = 0; x < l0.size; ++x)
      if (l0.d(x, xi) <= eps_idx) set_bit(alive, x);
    if (seen.emplace(xi, alive).second) {
      nodes.push_back({xi, std::move(alive), -1});
      frontier.push_back(nodes.size() - 1);
    }
  }
  auto path = [&](long node, std::size_t last) {
    std::vector<std::size_t> out{last};
    for (; node >= 0; node = nodes[static_cast<std::size_t>(node)].parent) out.push_back(nodes[static_cast<std::size_t>(node)].point);
    std::reverse(out.begin(), out.end());
    return out;
  };
  const std::size_t steps = every_length ? static_cast<std::size_t>(-1) : t.horizon() - 1;
  for (std::size_t i = 0; i < steps && !frontier.empty(); ++i) {
    const auto& from = t.level(every_length ? 0 : i);
    const auto& to = t.level(every_length ? 0 : i + 1);
    if (!every_length) seen.clear();
    std::vector<std::size_t> next_frontier;
    for (auto id : frontier) {
      const std::size_t xi = nodes[id].point;
      const std::size_t fxi = from.next[xi];
      for (std::size_t y = 0; y < to.size; ++y) {
        if (to.d(fxi, y) > delta_idx) continue;
        Bits alive = make_bits(to.size);
        for_each_bit(nodes[id].alive, [&](std::size_t a) {
          const std::size_t fa = from.next[a];
          if (to.d(fa, y) <= eps_idx) set_bit(alive, fa);
        });
        if (none(alive)) return path(static_cast<long>(id), y);
        if (seen.emplace(y, alive).second) {
          nodes.push_back({y, std::move(alive), static_cast<long>(id)});
          next_frontier.push_back(nodes.size() - 1);
        }
      }
    }
    frontier = std::move(next_frontier);
  }
  return std::nullopt;
}

// Best shadow of one pseudo-orbit: min over x of max_i d_i(f^i(x), xi_i), as a value index.
inline std::uint16_t best_shadow_index(const IndexedTower& t, const std::vector<std::size_t>& xi) {
  std::uint16_t best = static_cast<std::uint16_t>(t.values().size() - 1);
  const auto& l0 = t.level(0);
  for (std::size_t x = 0; x < l0.size; ++x) {
    std::uint16_t worst = 0;
    std::size_t p = x;
    for (std::size_t i = 0; i < xi.size(); ++i) {
      const auto& l = t.level(i);
      worst = std::max(worst, l.d(p, xi[i]));
      if (i + 1 < xi.size()) p = l.next[p];
    }
    best = std::min(best, worst);
  }
  return best;
}

inline MinimalRadius minimal_radius(const IndexedTower& t, const ExactReal& delta, bool every_length) {
  const long d = t.at_most(delta);
  // least eps index with no unshadowed pseudo-orbit; the largest value always passes
  long lo = 0, hi = static_cast<long>(t.values().size()) - 1;
  while (lo < hi) {
    const long mid = (lo + hi) / 2;
    if (unshadowed(t, d, mid, every_length)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  MinimalRadius out{t.value(static_cast<std::size_t>(lo)), {}, true};
  if (lo > 0) {
    // the search stops where the candidate set empties; continue along the map
    out.witness = *unshadowed(t, d, lo - 1, every_length);
    while (!every_length && out.witness.size() < t.horizon())
      out.witness.push_back(t.level(out.witness.size() - 1).next[out.witness.back()]);
  } else {
    out.witness = {0};
    for (std::size_t i = 1; i < (every_length ? 1 : t.horizon()); ++i)
      out.witness.push_back(t.level(i - 1).next[out.witness.back()]);
  }
  return out;
}

inline MinimalRadius sampled_radius(const IndexedTower& t, const ExactReal& delta, std::uint64_t seed,
                                    std::size_t samples) {
  Rng rng(seed);
  const long d = t.at_most(delta);
  MinimalRadius out{ExactReal(0), {}, false};
  std::uint16_t best = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<std::size_t> xi{uniform_index(rng, t.level(0).size)};
    for (std::size_t i = 0; i + 1 < t.horizon(); ++i) {
      const auto& from = t.level(i);
      const auto& to = t.level(i + 1);
      std::vector<std::size_t> options;
      for (std::size_t y = 0; y < to.size; ++y)
        if (to.d(from.next[xi.back()], y) <= d) options.push_back(y);
      xi.push_back(options[uniform_index(rng, options.size())]);
    }
    const auto r = best_shadow_index(t, xi);
    if (out.witness.empty() || r > best) {
      best = r;
      out.witness = xi;
    }
  }
  out.radius = t.value(best);
  return out;
}

}  // namespace detail

/// Worst-case minimal shadowing radius over pseudo-orbits spanning the tower.
inline MinimalRadius minimal_shadowing_radius(const IndexedTower& tower, const ExactReal& delta, bool exhaustive = true,
                                              std::uint64_t seed = 0, std::size_t samples = 2000,
                                              const RadiusBudget& budget = {}) {
  if (!exhaustive) return detail::sampled_radius(tower, delta, seed, samples);
  if (tower.level(0).size > budget.max_tower_points)
    throw BudgetExceeded("tower too large for exhaustive enumeration; use sampled mode");
  return detail::minimal_radius(tower, delta, false);
}

/// eps*(delta) for a finite system: over pseudo-orbits of `horizon` points, or of
/// every length when the horizon is empty.
inline MinimalRadius minimal_shadowing_radius(const FiniteSystem& system, const ExactReal& delta,
                                              const RadiusOptions& opts = {}) {
  if (!opts.horizon) {
    if (!opts.exhaustive) throw LabError("unbounded horizons need exhaustive mode");
    if (system.size() > opts.budget.max_points)
      throw BudgetExceeded("system too large for exhaustive enumeration; use sampled mode");
    return detail::minimal_radius(IndexedTower::stationary(system, 2), delta, true);
  }
  if (*opts.horizon == 0) throw LabError("horizon must be positive");
  const auto tower = IndexedTower::stationary(system, *opts.horizon);
  if (!opts.exhaustive) return detail::sampled_radius(tower, delta, opts.seed, opts.samples);
  if (system.size() > opts.budget.max_points || *opts.horizon > opts.budget.max_horizon)
    throw BudgetExceeded("exhaustive budget is |X| <= " + std::to_string(opts.budget.max_points) +
                         ", T <= " + std::to_string(opts.budget.max_horizon) + "; use sampled mode");
  return detail::minimal_radius(tower, delta, false);
}

struct EstimatePoint {
  ExactReal delta;
  ExactReal radius;
  ExactReal ratio;
  std::vector<std::size_t> witness;
};

struct EstimateReport {
  std::string system;
  std::optional<std::size_t> horizon;
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::vector<EstimatePoint> points;
  ExactReal L;
  bool contractive = true;

  std::optional<EstimatePoint> at(const ExactReal& delta) const {
    for (const auto& p : points)
      if (p.delta == delta) return p;
    return std::nullopt;
  }
};

namespace detail {

// positive spectrum values and midpoints between neighbours
inline std::vector<ExactReal> delta_grid(const std::vector<ExactReal>& spectrum) {
  std::vector<ExactReal> pos;
  for (const auto& s : spectrum)
    if (!s.is_zero()) pos.push_back(s);
  std::vector<ExactReal> out;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    out.push_back(pos[i]);
    if (i + 1 < pos.size()) out.push_back((pos[i] + pos[i + 1]) / ExactReal(2));
  }
  return out;
}

template <class Radius>
EstimateReport sweep(std::string name, const std::vector<ExactReal>& grid, Radius&& radius) {
  EstimateReport rep;
  rep.system = std::move(name);
  rep.L = ExactReal(0);
  std::vector<std::future<MinimalRadius>> jobs;
  for (const auto& d : grid) jobs.push_back(std::async(std::launch::async, [&radius, d] { return radius(d); }));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto r = jobs[i].get();
    EstimatePoint p{grid[i], r.radius, r.radius / grid[i], std::move(r.witness)};
    rep.L = max(rep.L, p.ratio);
    rep.points.push_back(std::move(p));
  }
  rep.contractive = rep.L < ExactReal(1);
  return rep;
}

}  // namespace detail

inline EstimateReport estimate_L(const FiniteSystem& system, const RadiusOptions& opts = {},
                                 std::string name = "finite") {
  const auto grid = detail::delta_grid(ChainGraph(system).spectrum());
  auto rep = detail::sweep(std::move(name), grid, [&](const ExactReal& d) { return minimal_shadowing_radius(system, d, opts); });
  rep.horizon = opts.horizon;
  rep.exhaustive = opts.exhaustive;
  rep.seed = opts.seed;
  return rep;
}

inline EstimateReport estimate_L(const IndexedTower& tower, std::string name = "tower", bool exhaustive = true,
                                 std::uint64_t seed = 0) {
  const auto grid = detail::delta_grid(tower.spectrum());
  auto rep = detail::sweep(std::move(name), grid,
                           [&](const ExactReal& d) { return minimal_shadowing_radius(tower, d, exhaustive, seed); });
  rep.horizon = tower.horizon();
  rep.exhaustive = exhaustive;
  rep.seed = seed;
  return rep;
}

struct BallWitness {
  std::size_t level = 0;  // source level for towers, 0 otherwise
  std::size_t x = 0;
  ExactReal delta;
  std::size_t y = 0;  // in B_delta(f(x)) but not in f(B_{L delta}(x))
};

struct BallCheck {
  bool ok = true;
  std::size_t checked = 0;  // (x, delta) pairs
  std::optional<BallWitness> witness;
};

namespace detail {

// B_delta(f(x)) versus f(B_{L delta}(x)) across one level pair.
inline BallCheck ball_pair(const IndexedTower& t, std::size_t m, const ExactReal& L,
                           const std::optional<ExactReal>& delta0, bool equality) {
  const auto& a = t.level(m);
  const auto& b = t.level(m + 1);
  std::set<std::uint16_t> reached;
  for (std::size_t x = 0; x < a.size; ++x)
    for (std::size_t y = 0; y < b.size; ++y) reached.insert(b.d(a.next[x], y));
  BallCheck out;
  for (auto di : reached) {
    const ExactReal& delta = t.value(di);
    if (delta.is_zero() || (delta0 && delta > *delta0)) continue;
    const long inner = t.at_most(L * delta);
    for (std::size_t x = 0; x < a.size; ++x) {
      ++out.checked;
      std::vector<bool> image(b.size, false);
      for (std::size_t z = 0; z < a.size; ++z)
        if (a.d(z, x) <= inner) image[a.next[z]] = true;
      for (std::size_t y = 0; y < b.size; ++y) {
        const bool in_ball = b.d(a.next[x], y) <= di;
        if ((in_ball && !image[y]) || (equality && image[y] && !in_ball)) {
          if (out.ok) out.witness = BallWitness{m, x, delta, y};
          out.ok = false;
        }
      }
    }
  }
  return out;
}

inline BallCheck merge(BallCheck a, const BallCheck& b) {
  a.checked += b.checked;
  if (a.ok && !b.ok) a.witness = b.witness;
  a.ok = a.ok && b.ok;
  return a;
}

}  // namespace detail

/// B_delta(f(x)) inside f(B_{L delta}(x)) for every x and spectrum delta in (0, delta0].
inline BallCheck ball_expanding_check(const FiniteSystem& system, const ExactReal& L,
                                      const std::optional<ExactReal>& delta0 = std::nullopt) {
  return detail::ball_pair(IndexedTower::stationary(system, 2), 0, L, delta0, false);
}

inline BallCheck ball_expanding_check(const IndexedTower& tower, const ExactReal& L,
                                      const std::optional<ExactReal>& delta0 = std::nullopt) {
  BallCheck out;
  for (std::size_t m = 0; m + 1 < tower.horizon(); ++m) out = detail::merge(out, detail::ball_pair(tower, m, L, delta0, false));
  return out;
}

/// Exact set equality B_delta(f(x)) = f(B_{L delta}(x)) on every level pair.
inline BallCheck ball_equality_check(const IndexedTower& tower, const ExactReal& L) {
  BallCheck out;
  for (std::size_t m = 0; m + 1 < tower.horizon(); ++m) out = detail::merge(out, detail::ball_pair(tower, m, L, std::nullopt, true));
  return out;
}

/// Least M with d(f(x), f(y)) <= M d(x, y) for all pairs.
inline ExactReal lipschitz_constant(const FiniteSystem& system) {
  const auto d = system.metric().table_values();
  const auto& f = system.map();
  ExactReal M(0);
  for (std::size_t x = 0; x < system.size(); ++x)
    for (std::size_t y = 0; y < system.size(); ++y)
      if (x != y) M = max(M, d[f[x]][f[y]] / d[x][y]);
  return M;
}

/// Lipschitz constant of the level-m map of a tower.
inline ExactReal lipschitz_constant(const IndexedTower& t, std::size_t m = 0) {
  const auto& a = t.level(m);
  const auto& b = t.level(m + 1);
  ExactReal M(0);
  for (std::size_t x = 0; x < a.size; ++x)
    for (std::size_t y = 0; y < a.size; ++y)
      if (a.d(x, y) != 0) M = max(M, t.value(b.d(a.next[x], a.next[y])) / t.value(a.d(x, y)));
  return M;
}

enum class Diagnosis { agree, horizon_too_short, outside_hypotheses, delta0_mismatch, artifact_bug };

inline std::string to_string(Diagnosis d) {
  switch (d) {
    case Diagnosis::agree: return "agree";
    case Diagnosis::horizon_too_short: return "horizon_too_short";
    case Diagnosis::outside_hypotheses: return "outside_hypotheses";
    case Diagnosis::delta0_mismatch: return "delta0_mismatch";
    case Diagnosis::artifact_bug: return "artifact_bug";
  }
  return "?";
}

struct ShadowingFailure {
  ExactReal delta;
  ExactReal radius;
  std::vector<std::size_t> pseudo_orbit;
};

/// Radii keyed by (horizon, delta), shared across harness calls on one system.
using RadiusCache = std::map<std::pair<std::size_t, ExactReal>, MinimalRadius>;

struct Thm16Verdict {
  ExactReal L;
  ExactReal delta0;
  std::size_t horizon = 0;
  bool shadowing = false;          // condition (1) at the horizon
  bool shadowing_recheck = false;  // condition (1) at horizon + 2
  bool ball_expanding = false;     // condition (2)
  bool agree = false;
  Diagnosis diagnosis = Diagnosis::agree;
  std::optional<ShadowingFailure> shadowing_witness;
  std::optional<BallWitness> ball_witness;
};

namespace detail {

template <class Radius, class Balls>
Thm16Verdict thm16(const std::vector<ExactReal>& spectrum, const ExactReal& L, const ExactReal& delta0,
                   std::size_t horizon, Radius&& radius, Balls&& balls) {
  if (!(ExactReal(0) < L)) throw LabError("L must be positive");
  Thm16Verdict v;
  v.L = L;
  v.delta0 = delta0;
  v.horizon = horizon;
  auto condition1 = [&](std::size_t T, const ExactReal& cap, std::optional<ShadowingFailure>* witness) {
    for (const auto& d : spectrum) {
      if (d.is_zero() || d > cap) continue;
      auto r = radius(T, d);
      if (r.radius > L * d) {
        if (witness) *witness = ShadowingFailure{d, r.radius, r.witness};
        return false;
      }
    }
    return true;
  };
  v.shadowing = condition1(horizon, delta0, &v.shadowing_witness);
  v.shadowing_recheck = condition1(horizon + 2, delta0, nullptr);
  const auto b = balls(delta0);
  v.ball_expanding = b.ok;
  v.ball_witness = b.witness;
  v.agree = v.shadowing == v.ball_expanding;
  if (v.agree) return v;
  if (v.shadowing != v.shadowing_recheck) {
    v.diagnosis = Diagnosis::horizon_too_short;
  } else if (!(L < ExactReal(1))) {
    v.diagnosis = Diagnosis::outside_hypotheses;
  } else {
    // agreement at the next smaller threshold points at the delta0 boundary
    std::optional<ExactReal> lower;
    for (const auto& d : spectrum)
      if (!d.is_zero() && d < delta0) lower = d;
    v.diagnosis = Diagnosis::artifact_bug;
    if (lower && condition1(horizon, *lower, nullptr) == balls(*lower).ok) v.diagnosis = Diagnosis::delta0_mismatch;
  }
  return v;
}

}  // namespace detail

/// Both sides of the ultrametric equivalence on a finite system. delta0
/// defaults to the largest spectrum value.
inline Thm16Verdict theorem16_harness(const FiniteSystem& system, const ExactReal& L,
                                      std::optional<ExactReal> delta0 = std::nullopt, std::size_t horizon = 6,
                                      RadiusCache* cache = nullptr, const RadiusBudget& budget = {}) {
  if (!system.metric().ultrametric()) throw LabError("the ball-expanding equivalence needs an ultrametric; refusing");
  const auto spectrum = ChainGraph(system).spectrum();
  const ExactReal cap = delta0 ? *delta0 : spectrum.back();
  RadiusBudget relaxed = budget;
  relaxed.max_horizon = std::max(budget.max_horizon, horizon + 2);
  return detail::thm16(
      spectrum, L, cap, horizon,
      [&](std::size_t T, const ExactReal& d) {
        if (cache) {
          if (auto it = cache->find({T, d}); it != cache->end()) return it->second;
        }
        RadiusOptions o;
        o.horizon = T;
        o.budget = relaxed;
        auto r = minimal_shadowing_radius(system, d, o);
        if (cache) cache->emplace(std::make_pair(T, d), r);
        return r;
      },
      [&](const ExactReal& d0) { return ball_expanding_check(system, L, d0); });
}

inline Thm16Verdict theorem16_harness(const CylinderTower& family, const ExactReal& L,
                                      std::optional<ExactReal> delta0 = std::nullopt, std::size_t horizon = 4) {
  const auto tower = family.build(horizon);
  const auto spectrum = tower.spectrum();
  const ExactReal cap = delta0 ? *delta0 : spectrum.back();
  return detail::thm16(
      spectrum, L, cap, horizon,
      [&](std::size_t T, const ExactReal& d) {
        const auto t = T == horizon ? tower : family.build(T);
        RadiusBudget b;
        b.max_tower_points = std::size_t{1} << 16;
        return minimal_shadowing_radius(t, d, true, 0, 0, b);
      },
      [&](const ExactReal& d0) { return ball_expanding_check(tower, L, d0); });
}

struct RestrictionRow {
  ExactReal delta;
  ExactReal full;
  ExactReal restricted;
};

struct RestrictionVerdict {
  bool ok = true;
  VertexSet chain_recurrent;
  std::vector<RestrictionRow> rows;
  std::optional<RestrictionRow> violation;
};

/// Compares eps* of f on X and of f restricted to CR(f) at the restricted
/// system's thresholds (each also a threshold of the full system).
inline RestrictionVerdict restriction_preserves_L(const FiniteSystem& system, const RadiusOptions& opts = {}) {
  RestrictionVerdict v;
  v.chain_recurrent = chain_recurrent_exact(ChainGraph(system));
  const auto sub = system.restrict_to(v.chain_recurrent);
  for (const auto& d : detail::delta_grid(ChainGraph(sub).spectrum())) {
    RestrictionRow row{d, minimal_shadowing_radius(system, d, opts).radius, minimal_shadowing_radius(sub, d, opts).radius};
    if (row.restricted > row.full && v.ok) {
      v.ok = false;
      v.violation = row;
    }
    v.rows.push_back(std::move(row));
  }
  return v;
}

struct FinitenessRow {
  ExactReal delta;
  std::size_t components = 0;
  std::vector<std::size_t> periods;
  std::optional<ExactReal> gap;           // least distance between distinct components
  std::optional<ExactReal> ratio_at_gap;  // eps*(gap) / gap
  std::optional<ExactReal> crossing_radius;
  std::optional<std::size_t> crossing_point;  // x near r with f(x) near q
  bool crosses = false;                       // x and f(x) in different components
  bool consistent = true;
};

/// Per-threshold component counts, periods and the gap argument: a ratio
/// below one at the gap forces a shadow of the chain (r, q) closer than the
/// gap, which in turn forces a map step between distinct components.
inline std::vector<FinitenessRow> finiteness_reports(const FiniteSystem& system, const RadiusOptions& opts = {}) {
  const ChainGraph g(system);
  const auto d = system.metric().table_values();
  const auto& f = system.map();
  std::vector<FinitenessRow> rows;
  for (const auto& delta : g.spectrum()) {
    if (delta.is_zero()) continue;
    FinitenessRow row;
    row.delta = delta;
    const auto dec = chain_components(g, delta);
    row.components = dec.components.size();
    for (const auto& c : dec.components) row.periods.push_back(c.cyclic.period);
    if (row.components >= 2) {
      std::size_t p = 0, q = 0;
      for (std::size_t i = 0; i < dec.components.size(); ++i)
        for (std::size_t j = 0; j < dec.components.size(); ++j) {
          if (i == j) continue;
          for (auto a : dec.components[i].vertices)
            for (auto b : dec.components[j].vertices)
              if (!row.gap || d[a][b] < *row.gap) {
                row.gap = d[a][b];
                p = a;
                q = b;
              }
        }
      const ExactReal gap = *row.gap;
      row.ratio_at_gap = minimal_shadowing_radius(system, gap, opts).radius / gap;
      const auto cp = dec.component_of(p);
      for (auto r : dec.components[*cp].vertices) {
        if (f[r] != p) continue;
        for (std::size_t x = 0; x < system.size(); ++x) {
          const ExactReal dev = max(d[x][r], d[f[x]][q]);
          if (!row.crossing_radius || dev < *row.crossing_radius) {
            row.crossing_radius = dev;
            row.crossing_point = x;
          }
        }
      }
      if (row.crossing_point) {
        const auto cx = dec.component_of(*row.crossing_point);
        row.crosses = !cx || cx != dec.component_of(f[*row.crossing_point]);
      }
      const bool small_ratio = *row.ratio_at_gap < ExactReal(1);
      const bool close_shadow = row.crossing_radius && *row.crossing_radius < gap;
      row.consistent = (!small_ratio || !row.crossing_radius || close_shadow) && (!close_shadow || row.crosses);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

struct SnowflakeRow {
  ExactReal delta;
  ExactReal radius;            // under d at delta
  ExactReal snowflake_radius;  // under d^a at delta^a
  bool holds = true;           // snowflake_radius <= radius^a
};

/// eps* under d^a at delta^a against (eps* under d at delta)^a, per threshold.
inline std::vector<SnowflakeRow> snowflake_estimator_law(const FiniteSystem& system, const Exponent& a,
                                                         const RadiusOptions& opts = {}) {
  const auto flake = system.with_metric(snowflake(system.metric(), a));
  std::vector<SnowflakeRow> rows;
  for (const auto& delta : ChainGraph(system).spectrum()) {
    if (delta.is_zero()) continue;
    SnowflakeRow row{delta, minimal_shadowing_radius(system, delta, opts).radius,
                     minimal_shadowing_radius(flake, a.apply(delta), opts).radius, true};
    row.holds = row.snowflake_radius <= a.apply(row.radius);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace shadow
