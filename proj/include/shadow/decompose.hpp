#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadow/systems.hpp"

namespace shadow {

class DecomposeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using VertexSet = std::vector<std::size_t>;

/// Complete weighted digraph of a finite system: w(x -> y) = d(f(x), y).
class ChainGraph {
 public:
  explicit ChainGraph(const FiniteSystem& system) : map_(system.map()) {
    const auto d = system.metric().table_values();
    const std::size_t n = map_.size();
    weight_.assign(n, std::vector<ExactReal>(n, ExactReal(0)));
    std::set<ExactReal> seen;
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y) {
        weight_[x][y] = d[map_[x]][y];
        seen.insert(weight_[x][y]);
      }
    spectrum_.assign(seen.begin(), seen.end());
  }

  std::size_t size() const { return map_.size(); }
  const std::vector<std::size_t>& map() const { return map_; }
  const ExactReal& weight(std::size_t x, std::size_t y) const { return weight_[x][y]; }
  bool edge(std::size_t x, std::size_t y, const ExactReal& delta) const { return weight_[x][y] <= delta; }

  /// Distinct edge weights in increasing order; every delta-view equals the
  /// view at the largest spectrum value not exceeding delta.
  std::vector<ExactReal> spectrum() const { return spectrum_; }

  /// Spectrum values, midpoints between neighbours and one value past the top.
  std::vector<ExactReal> representatives() const {
    std::vector<ExactReal> out;
    for (std::size_t i = 0; i < spectrum_.size(); ++i) {
      out.push_back(spectrum_[i]);
      if (i + 1 < spectrum_.size()) out.push_back((spectrum_[i] + spectrum_[i + 1]) / ExactReal(2));
    }
    out.push_back(spectrum_.back() + ExactReal(1));
    return out;
  }

  std::vector<std::vector<bool>> adjacency(const ExactReal& delta) const {
    std::vector<std::vector<bool>> a(size(), std::vector<bool>(size()));
    for (std::size_t x = 0; x < size(); ++x)
      for (std::size_t y = 0; y < size(); ++y) a[x][y] = edge(x, y, delta);
    return a;
  }

  std::vector<VertexSet> successors(const ExactReal& delta) const {
    std::vector<VertexSet> out(size());
    for (std::size_t x = 0; x < size(); ++x)
      for (std::size_t y = 0; y < size(); ++y)
        if (edge(x, y, delta)) out[x].push_back(y);
    return out;
  }

  /// DOT rendering of the delta-view.
  std::string dot(const ExactReal& delta) const {
    std::string s = "digraph chain {\n";
    for (std::size_t x = 0; x < size(); ++x)
      for (std::size_t y = 0; y < size(); ++y)
        if (edge(x, y, delta)) {
          s += "  " + std::to_string(x) + " -> " + std::to_string(y) + " [label=\"" + weight_[x][y].str() + "\"";
          if (map_[x] == y) s += ", style=bold";
          s += "];\n";
        }
    return s + "}\n";
  }

 private:
  std::vector<std::size_t> map_;
  std::vector<std::vector<ExactReal>> weight_;
  std::vector<ExactReal> spectrum_;
};

inline ChainGraph build_chain_graph(const FiniteSystem& system) { return ChainGraph(system); }

namespace detail {

inline std::vector<bool> reachable_from(const std::vector<VertexSet>& succ, std::size_t s) {
  std::vector<bool> seen(succ.size(), false);
  std::vector<std::size_t> stack{s};
  seen[s] = true;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto w : succ[v])
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  return seen;
}

// Tarjan, iterative. Component ids in reverse topological order.
inline std::vector<std::size_t> strong_components(const std::vector<VertexSet>& succ) {
  const std::size_t n = succ.size();
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, none), low(n, 0), comp(n, none), stack;
  std::vector<bool> on(n, false);
  std::size_t counter = 0, ncomp = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != none) continue;
    std::vector<std::pair<std::size_t, std::size_t>> work{{root, 0}};
    while (!work.empty()) {
      auto& [v, next] = work.back();
      if (next == 0) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on[v] = true;
      }
      if (next < succ[v].size()) {
        const auto w = succ[v][next++];
        if (index[w] == none) {
          work.emplace_back(w, 0);
        } else if (on[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      const auto done = v;
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }
  return comp;
}

}  // namespace detail

/// Vertices on some delta-cycle of positive length.
inline VertexSet chain_recurrent_delta(const ChainGraph& g, const ExactReal& delta) {
  const auto succ = g.successors(delta);
  const auto comp = detail::strong_components(succ);
  std::vector<std::size_t> count(g.size(), 0);
  for (auto c : comp) ++count[c];
  VertexSet out;
  for (std::size_t x = 0; x < g.size(); ++x) {
    const bool loop = std::find(succ[x].begin(), succ[x].end(), x) != succ[x].end();
    if (count[comp[x]] > 1 || loop) out.push_back(x);
  }
  return out;
}

/// CR(f) of a finite system: the zero-weight view, i.e. the periodic points.
inline VertexSet chain_recurrent_exact(const ChainGraph& g) { return chain_recurrent_delta(g, ExactReal(0)); }

/// Mutual delta-reachability classes inside CR_delta, sorted by least vertex.
inline std::vector<VertexSet> chain_component_sets(const ChainGraph& g, const ExactReal& delta) {
  const auto succ = g.successors(delta);
  const auto comp = detail::strong_components(succ);
  const auto cr = chain_recurrent_delta(g, delta);
  std::vector<VertexSet> by_id(g.size());
  for (auto x : cr) by_id[comp[x]].push_back(x);
  std::vector<VertexSet> out;
  for (auto& c : by_id)
    if (!c.empty()) out.push_back(std::move(c));
  std::sort(out.begin(), out.end());
  return out;
}

struct CyclicData {
  std::size_t period = 1;
  std::vector<VertexSet> classes;  // D_0 holds the least vertex; edges run D_i -> D_{i+1 mod m}
};

/// Period and ~_delta classes of a strongly connected vertex set in the delta-view.
inline CyclicData cyclic_decomposition(const ChainGraph& g, const VertexSet& component, const ExactReal& delta) {
  if (component.empty()) throw DecomposeError("empty component");
  VertexSet vs = component;
  std::sort(vs.begin(), vs.end());
  std::vector<long> pos(g.size(), -1);
  for (std::size_t i = 0; i < vs.size(); ++i) pos[vs[i]] = static_cast<long>(i);
  std::vector<long> level(vs.size(), -1);
  std::queue<std::size_t> q;
  level[0] = 0;
  q.push(vs[0]);
  std::size_t period = 0;
  bool cyclic = false;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (std::size_t w = 0; w < g.size(); ++w) {
      if (pos[w] < 0 || !g.edge(v, w, delta)) continue;
      auto& lw = level[static_cast<std::size_t>(pos[w])];
      const long lv = level[static_cast<std::size_t>(pos[v])];
      if (lw < 0) {
        lw = lv + 1;
        q.push(w);
      } else {
        cyclic = true;
        period = std::gcd(period, static_cast<std::size_t>(std::labs(lv + 1 - lw)));
      }
    }
  }
  if (std::find(level.begin(), level.end(), -1) != level.end() || !cyclic)
    throw DecomposeError("component is not strongly connected in the delta-view");
  // every vertex must also reach the root
  std::vector<VertexSet> succ(g.size());
  for (auto v : vs)
    for (auto w : vs)
      if (g.edge(v, w, delta)) succ[v].push_back(w);
  for (auto v : vs)
    if (!detail::reachable_from(succ, v)[vs[0]]) throw DecomposeError("component is not strongly connected in the delta-view");
  CyclicData out;
  out.period = period;
  out.classes.assign(period, {});
  for (std::size_t i = 0; i < vs.size(); ++i) out.classes[static_cast<std::size_t>(level[i]) % period].push_back(vs[i]);
  return out;
}

struct ChainComponent {
  VertexSet vertices;
  CyclicData cyclic;
};

struct Decomposition {
  ExactReal delta;
  VertexSet chain_recurrent;
  std::vector<ChainComponent> components;

  /// Index of the component containing v, if any.
  std::optional<std::size_t> component_of(std::size_t v) const {
    for (std::size_t i = 0; i < components.size(); ++i)
      if (std::binary_search(components[i].vertices.begin(), components[i].vertices.end(), v)) return i;
    return std::nullopt;
  }
  /// ~_delta within a component: same component and same cyclic class.
  bool related(std::size_t x, std::size_t y) const {
    const auto c = component_of(x);
    if (!c || c != component_of(y)) return false;
    for (const auto& cls : components[*c].cyclic.classes) {
      const bool hx = std::binary_search(cls.begin(), cls.end(), x);
      const bool hy = std::binary_search(cls.begin(), cls.end(), y);
      if (hx || hy) return hx && hy;
    }
    return false;
  }
};

inline Decomposition chain_components(const ChainGraph& g, const ExactReal& delta) {
  Decomposition d{delta, chain_recurrent_delta(g, delta), {}};
  for (auto& c : chain_component_sets(g, delta)) {
    auto cyc = cyclic_decomposition(g, c, delta);
    d.components.push_back({std::move(c), std::move(cyc)});
  }
  return d;
}

inline bool is_chain_transitive(const ChainGraph& g, const ExactReal& delta) {
  const auto comps = chain_component_sets(g, delta);
  return comps.size() == 1 && comps[0].size() == g.size();
}

inline bool is_chain_mixing(const ChainGraph& g, const ExactReal& delta) {
  if (!is_chain_transitive(g, delta)) return false;
  VertexSet all(g.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return cyclic_decomposition(g, all, delta).period == 1;
}

/// Pairs joined by synchronized delta-chains that meet: reachability of the
/// diagonal in the product delta-view.
inline std::vector<std::vector<bool>> chain_proximal(const ChainGraph& g, const ExactReal& delta) {
  const std::size_t n = g.size();
  const auto succ = g.successors(delta);
  std::vector<VertexSet> pred(n);
  for (std::size_t x = 0; x < n; ++x)
    for (auto y : succ[x]) pred[y].push_back(x);
  // backward search from the diagonal
  std::vector<std::vector<bool>> hit(n, std::vector<bool>(n, false));
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t x = 0; x < n; ++x) {
    hit[x][x] = true;
    stack.emplace_back(x, x);
  }
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    for (auto pa : pred[a])
      for (auto pb : pred[b])
        if (!hit[pa][pb]) {
          hit[pa][pb] = true;
          stack.emplace_back(pa, pb);
        }
  }
  return hit;
}

/// Least N with a delta-chain of length exactly m*n between every ~_delta pair
/// for all n >= N; empty if the view is not chain transitive.
inline std::optional<std::size_t> uniform_length_threshold(const ChainGraph& g, const ExactReal& delta,
                                                           std::size_t cap = 4096) {
  if (!is_chain_transitive(g, delta)) return std::nullopt;
  const std::size_t n = g.size();
  VertexSet all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto cyc = cyclic_decomposition(g, all, delta);
  std::vector<std::size_t> cls(n);
  for (std::size_t i = 0; i < cyc.classes.size(); ++i)
    for (auto v : cyc.classes[i]) cls[v] = i;
  using Matrix = std::vector<std::vector<bool>>;
  auto mul = [n](const Matrix& a, const Matrix& b) {
    Matrix c(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (a[i][k])
          for (std::size_t j = 0; j < n; ++j)
            if (b[k][j]) c[i][j] = true;
    return c;
  };
  const Matrix a = g.adjacency(delta);
  Matrix step = a;
  for (std::size_t i = 1; i < cyc.period; ++i) step = mul(step, a);
  Matrix pw = step;
  for (std::size_t k = 1; k <= cap; ++k) {
    bool all_related = true;
    for (std::size_t x = 0; x < n && all_related; ++x)
      for (std::size_t y = 0; y < n; ++y)
        if (cls[x] == cls[y] && !pw[x][y]) {
          all_related = false;
          break;
        }
    if (all_related) return k;
    pw = mul(pw, step);
  }
  return std::nullopt;
}

/// d(x, y) = max over the orbit of (x, y) under f x f of D; f must be a bijection.
inline Metric adapted_isometry_metric(const FiniteSystem& system) {
  if (!system.is_bijection()) throw DomainError("adapted isometry metric needs a bijection");
  const auto base = system.metric().table_values();
  const auto& f = system.map();
  const std::size_t n = system.size();
  DistanceTable t(n, std::vector<Rational>(n));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      ExactReal best(0);
      std::size_t a = x, b = y;
      do {
        best = max(best, base[a][b]);
        a = f[a];
        b = f[b];
      } while (a != x || b != y);
      if (!best.is_rational()) throw DomainError("adapted isometry metric needs rational base distances");
      t[x][y] = best.rational();
    }
  return Metric::adapted_isometry(std::move(t));
}

}  // namespace shadow
