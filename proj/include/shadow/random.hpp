#pragma once

// Seeded generators for representable points and small finite systems.

#include <cstdint>
#include <random>
#include <vector>

#include "shadow/circle.hpp"
#include "shadow/metric.hpp"
#include "shadow/symbolic.hpp"

namespace shadow {

using Rng = std::mt19937_64;

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline Word random_word(Rng& rng, std::size_t alphabet, std::size_t length) {
  Word w(length);
  for (auto& s : w) s = static_cast<Symbol>(uniform_index(rng, alphabet));
  return w;
}

inline OneSidedPoint random_one_sided(Rng& rng, std::size_t alphabet = 2, std::size_t max_pre = 4,
                                      std::size_t max_per = 3) {
  const std::size_t pre = uniform_index(rng, max_pre + 1);
  const std::size_t per = 1 + uniform_index(rng, max_per);
  return {random_word(rng, alphabet, pre), random_word(rng, alphabet, per)};
}

inline TwoSidedPoint random_two_sided(Rng& rng, std::size_t alphabet = 2, std::size_t max_center = 5,
                                      std::size_t max_per = 3, long max_offset = 3) {
  const std::size_t c = uniform_index(rng, max_center + 1);
  const long offset = std::uniform_int_distribution<long>(-max_offset - static_cast<long>(c), max_offset)(rng);
  return {random_word(rng, alphabet, 1 + uniform_index(rng, max_per)), random_word(rng, alphabet, c),
          random_word(rng, alphabet, 1 + uniform_index(rng, max_per)), offset};
}

inline CirclePoint random_circle(Rng& rng, long denominator) {
  return CirclePoint(static_cast<long>(uniform_index(rng, static_cast<std::size_t>(denominator))), denominator);
}

/// Random ultrametric on n points: a random hierarchical clustering with
/// merge heights drawn from `levels` (sorted ascending, positive).
inline DistanceTable random_ultrametric(Rng& rng, std::size_t n, const std::vector<Rational>& levels) {
  DistanceTable t(n, std::vector<Rational>(n, Rational(0)));
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
  std::size_t level = 0;
  while (clusters.size() > 1) {
    const std::size_t a = uniform_index(rng, clusters.size());
    std::size_t b = uniform_index(rng, clusters.size() - 1);
    if (b >= a) ++b;
    if (level + 1 < levels.size() && std::bernoulli_distribution(0.5)(rng)) ++level;
    for (std::size_t i : clusters[a])
      for (std::size_t j : clusters[b]) t[i][j] = t[j][i] = levels[level];
    clusters[a].insert(clusters[a].end(), clusters[b].begin(), clusters[b].end());
    clusters.erase(clusters.begin() + static_cast<long>(b));
  }
  return t;
}

/// Random metric: shortest-path closure of random positive rational weights.
inline DistanceTable random_metric(Rng& rng, std::size_t n, long max_num = 6, long den = 4) {
  DistanceTable t(n, std::vector<Rational>(n, Rational(0)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      t[i][j] = t[j][i] = Rational(std::uniform_int_distribution<long>(1, max_num)(rng), den);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (t[i][k] + t[k][j] < t[i][j]) t[i][j] = t[i][k] + t[k][j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) t[i][j].canonicalize();
  return t;
}

inline std::vector<std::size_t> random_map(Rng& rng, std::size_t n) {
  std::vector<std::size_t> m(n);
  for (auto& v : m) v = uniform_index(rng, n);
  return m;
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = i;
  std::shuffle(m.begin(), m.end(), rng);
  return m;
}

}  // namespace shadow
