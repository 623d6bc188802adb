#include <gtest/gtest.h>

#include "shadow/constructors.hpp"
#include "shadow/lab.hpp"

using namespace shadow;

namespace {

// Brute force: every delta-pseudo orbit of T points, every candidate shadow.
ExactReal brute_radius(const FiniteSystem& s, const ExactReal& delta, std::size_t T) {
  const auto d = s.metric().table_values();
  const auto& f = s.map();
  const std::size_t n = s.size();
  ExactReal worst(0);
  std::vector<std::size_t> xi(T, 0);
  std::size_t total = 1;
  for (std::size_t i = 0; i < T; ++i) total *= n;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < T; ++i, c /= n) xi[i] = c % n;
    bool pseudo = true;
    for (std::size_t i = 0; i + 1 < T && pseudo; ++i) pseudo = d[f[xi[i]]][xi[i + 1]] <= delta;
    if (!pseudo) continue;
    std::optional<ExactReal> best;
    for (std::size_t x = 0; x < n; ++x) {
      ExactReal dev(0);
      std::size_t p = x;
      for (std::size_t i = 0; i < T; ++i, p = f[p]) dev = max(dev, d[p][xi[i]]);
      if (!best || dev < *best) best = dev;
    }
    worst = max(worst, *best);
  }
  return worst;
}

RadiusOptions horizon(std::size_t T) {
  RadiusOptions o;
  o.horizon = T;
  return o;
}

FiniteSystem swap2() { return FiniteSystem({1, 0}, DistanceTable{{0, 1}, {1, 0}}); }

}  // namespace

TEST(MinimalRadius, Examples) {
  EXPECT_EQ(minimal_shadowing_radius(swap2(), ExactReal(1, 2), horizon(3)).radius, ExactReal(0));
  const auto r = minimal_shadowing_radius(swap2(), ExactReal(1), horizon(3));
  EXPECT_EQ(r.radius, ExactReal(1));
  EXPECT_EQ(r.witness.size(), 3u);
  EXPECT_EQ(brute_radius(swap2(), ExactReal(1), 3), ExactReal(1));
  RadiusOptions big = horizon(9);
  EXPECT_THROW(minimal_shadowing_radius(swap2(), ExactReal(1), big), BudgetExceeded);
  big.exhaustive = false;
  EXPECT_FALSE(minimal_shadowing_radius(swap2(), ExactReal(1), big).exact);
}

TEST(MinimalRadius, MatchesBruteForce) {
  Rng rng(1);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 4);
    const FiniteSystem s(random_map(rng, n), random_metric(rng, n));
    const std::size_t T = 1 + uniform_index(rng, 4);
    for (const auto& d : ChainGraph(s).spectrum()) {
      const auto r = minimal_shadowing_radius(s, d, horizon(T));
      ASSERT_EQ(r.radius, brute_radius(s, d, T)) << "T=" << T << " delta=" << d.str();
      // the witness is a delta-pseudo orbit whose best shadow is the radius
      ASSERT_EQ(r.witness.size(), T);
      const auto tower = IndexedTower::stationary(s, T);
      EXPECT_EQ(tower.value(detail::best_shadow_index(tower, r.witness)), r.radius);
    }
  }
}

TEST(MinimalRadius, MonotoneInDeltaAndHorizonAndSampledIsLowerBound) {
  Rng rng(2);
  for (int t = 0; t < 40; ++t) {
    const FiniteSystem s(random_map(rng, 6), random_metric(rng, 6));
    const auto spectrum = ChainGraph(s).spectrum();
    RadiusOptions every;
    every.horizon = std::nullopt;
    for (std::size_t i = 0; i + 1 < spectrum.size(); ++i)
      EXPECT_LE(minimal_shadowing_radius(s, spectrum[i], horizon(5)).radius,
                minimal_shadowing_radius(s, spectrum[i + 1], horizon(5)).radius);
    for (const auto& d : spectrum) {
      const auto r4 = minimal_shadowing_radius(s, d, horizon(4)).radius;
      const auto r6 = minimal_shadowing_radius(s, d, horizon(6)).radius;
      const auto rinf = minimal_shadowing_radius(s, d, every).radius;
      EXPECT_LE(r4, r6);
      EXPECT_LE(r6, rinf);
      RadiusOptions sampled = horizon(6);
      sampled.exhaustive = false;
      sampled.seed = static_cast<std::uint64_t>(t);
      sampled.samples = 200;
      EXPECT_LE(minimal_shadowing_radius(s, d, sampled).radius, r6);
    }
  }
}

TEST(EstimateL, SwapAndAdaptedIsometry) {
  const auto swap = estimate_L(swap2(), horizon(3));
  EXPECT_GE(swap.L, ExactReal(1));
  EXPECT_FALSE(swap.contractive);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 5);
    const auto f = random_permutation(rng, n);
    const auto D = random_ultrametric(rng, n, {Rational(1, 4), Rational(1, 2), Rational(1)});
    const FiniteSystem iso(f, adapted_isometry_metric(FiniteSystem(f, D, true)));
    EXPECT_LE(estimate_L(iso, horizon(5)).L, ExactReal(1));
  }
}

TEST(EstimateL, CylinderTowersGiveInverseAlpha) {
  for (auto kind : {CylinderMap::shift, CylinderMap::additive})
    for (long a : {2L, 3L}) {
      const CylinderTower c{kind, Rational(a), 3};
      const auto rep = estimate_L(c.build(4), c.name());
      EXPECT_EQ(rep.L, ExactReal(1, a));
      for (const auto& p : rep.points) {
        // spectrum values reach the bound, midpoints stay below it
        const auto spectrum = c.build(4).spectrum();
        if (std::find(spectrum.begin(), spectrum.end(), p.delta) != spectrum.end()) {
          EXPECT_EQ(p.ratio, ExactReal(1, a));
        }
        EXPECT_LE(p.radius, p.delta / ExactReal(a));
      }
    }
}

TEST(EstimateL, ConstructorBoundsDominateBruteForceOnTowers) {
  // the one-sided constructor's shadow stays within alpha^{-1} delta; the
  // brute-force optimum on the quotient can only be smaller
  const OneSidedShift shift(Rational(2));
  const auto tower = CylinderTower{CylinderMap::shift, Rational(2), 3}.build(5);
  for (const auto& d : tower.spectrum()) {
    if (d.is_zero()) continue;
    EXPECT_LE(minimal_shadowing_radius(tower, d).radius, one_sided_case_bound(Rational(2), d));
  }
}

TEST(BallCheck, Examples) {
  const FiniteSystem point({0}, DistanceTable{{0}});
  EXPECT_TRUE(ball_expanding_check(point, ExactReal(1, 2)).ok);
  const auto tower = CylinderTower{CylinderMap::additive, Rational(2), 3}.build(2);
  EXPECT_EQ(tower.level(1).size, 8u);
  EXPECT_TRUE(ball_expanding_check(tower, ExactReal(1, 2)).ok);
  EXPECT_TRUE(ball_equality_check(tower, ExactReal(1, 2)).ok);
  const auto b = ball_expanding_check(swap2(), ExactReal(1, 2));
  ASSERT_FALSE(b.ok);
  EXPECT_EQ(b.witness->delta, ExactReal(1));
  EXPECT_FALSE(ball_expanding_check(tower, ExactReal(1, 4)).ok);
}

TEST(BallCheck, EqualityOnCylinderQuotientsUpToDepthSix) {
  for (auto kind : {CylinderMap::shift, CylinderMap::additive})
    for (std::size_t k = 1; k <= 6; ++k) {
      const CylinderTower c{kind, Rational(3), k};
      const auto r = ball_equality_check(c.build(2), ExactReal(1, 3));
      EXPECT_TRUE(r.ok) << c.name();
      EXPECT_GT(r.checked, 0u);
    }
}

TEST(Theorem16, Examples) {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 5);
    const auto f = random_permutation(rng, n);
    const FiniteSystem iso(f, adapted_isometry_metric(FiniteSystem(f, random_ultrametric(rng, n, {Rational(1, 2), Rational(1)}), true)));
    const auto v = theorem16_harness(iso, ExactReal(1));
    EXPECT_TRUE(v.shadowing);
    EXPECT_TRUE(v.ball_expanding);
  }
  const CylinderTower cell{CylinderMap::additive, Rational(2), 3};
  const auto good = theorem16_harness(cell, ExactReal(1, 2));
  EXPECT_TRUE(good.shadowing && good.ball_expanding && good.agree);
  const auto bad = theorem16_harness(cell, ExactReal(1, 4));
  EXPECT_FALSE(bad.shadowing);
  EXPECT_FALSE(bad.ball_expanding);
  ASSERT_TRUE(bad.shadowing_witness && bad.ball_witness);
  EXPECT_EQ(bad.shadowing_witness->delta, bad.ball_witness->delta);
  EXPECT_THROW(theorem16_harness(FiniteSystem({1, 2, 0}, DistanceTable{{0, 1, 2}, {1, 0, 1}, {2, 1, 0}}), ExactReal(1, 2)),
               LabError);
}

TEST(Theorem16, ContractiveConstantsAgreeOnRandomUltrametrics) {
  Rng rng(5);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 6);
    const FiniteSystem s(random_map(rng, n), random_ultrametric(rng, n, {Rational(1, 8), Rational(1, 4), Rational(1, 2), Rational(1)}), true);
    RadiusCache cache;
    for (const auto& d0 : ChainGraph(s).spectrum()) {
      if (d0.is_zero()) continue;
      for (auto L : {ExactReal(1, 2), ExactReal(1, 3)}) {
        const auto v = theorem16_harness(s, L, d0, 6, &cache);
        EXPECT_TRUE(v.agree) << to_string(v.diagnosis);
      }
      // at L = 1 the ball side still implies the shadowing side
      const auto one = theorem16_harness(s, ExactReal(1), d0, 6, &cache);
      if (one.ball_expanding) {
        EXPECT_TRUE(one.shadowing);
      }
    }
  }
}

TEST(Theorem16, ConstantMapSeparatesTheConditionsAtLEqualsOne) {
  const FiniteSystem collapse({0, 0}, DistanceTable{{0, 1}, {1, 0}}, true);
  const auto v = theorem16_harness(collapse, ExactReal(1), ExactReal(1));
  EXPECT_TRUE(v.shadowing);
  EXPECT_FALSE(v.ball_expanding);
  EXPECT_EQ(v.diagnosis, Diagnosis::outside_hypotheses);
}

TEST(Lipschitz, Examples) {
  EXPECT_EQ(lipschitz_constant(swap2()), ExactReal(1));
  EXPECT_EQ(lipschitz_constant(FiniteSystem({0, 0}, DistanceTable{{0, 1}, {1, 0}})), ExactReal(0));
  EXPECT_EQ(lipschitz_constant(CylinderTower{CylinderMap::shift, Rational(2), 3}.build(2)), ExactReal(2));
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    const FiniteSystem s(random_map(rng, 5), random_metric(rng, 5));
    const auto M = lipschitz_constant(s);
    const auto d = s.metric().table_values();
    bool attained = false;
    for (std::size_t x = 0; x < 5; ++x)
      for (std::size_t y = 0; y < 5; ++y) {
        EXPECT_LE(d[s.map()[x]][s.map()[y]], M * d[x][y]);
        if (x != y && d[s.map()[x]][s.map()[y]] == M * d[x][y]) attained = true;
      }
    EXPECT_TRUE(attained);
  }
}

TEST(Restriction, Examples) {
  Rng rng(7);
  const FiniteSystem perm(random_permutation(rng, 4), random_metric(rng, 4));
  const auto p = restriction_preserves_L(perm, horizon(5));
  EXPECT_TRUE(p.ok);
  for (const auto& r : p.rows) EXPECT_EQ(r.full, r.restricted);
  const FiniteSystem ab({1, 1}, DistanceTable{{0, 1}, {1, 0}});
  const auto v = restriction_preserves_L(ab, horizon(4));
  EXPECT_EQ(v.chain_recurrent, VertexSet{1});
  EXPECT_TRUE(v.ok);
}

TEST(Restriction, RandomMaps) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + uniform_index(rng, 7);
    const FiniteSystem s(random_map(rng, n), random_metric(rng, n));
    EXPECT_TRUE(restriction_preserves_L(s, horizon(6)).ok);
    RadiusOptions every;
    every.horizon = std::nullopt;
    EXPECT_TRUE(restriction_preserves_L(s, every).ok);
  }
}

TEST(Finiteness, Reports) {
  const FiniteSystem one({0}, DistanceTable{{0}});
  EXPECT_TRUE(finiteness_reports(one).empty());
  const FiniteSystem fixed2({0, 1}, DistanceTable{{0, 1}, {1, 0}});
  const auto rows = finiteness_reports(fixed2, horizon(4));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].components, 1u);  // at delta = 1 the two fixed points chain together
  EXPECT_FALSE(rows[0].gap.has_value());
  // three points: 0 and 1 fixed, 2 maps onto 1 but sits next to 0
  const FiniteSystem adversarial({0, 1, 1}, DistanceTable{{0, 4, 1}, {4, 0, 4}, {1, 4, 0}});
  const auto adv = finiteness_reports(adversarial, horizon(4));
  bool saw_gap = false;
  for (const auto& r : adv) {
    EXPECT_TRUE(r.consistent);
    if (r.gap) {
      saw_gap = true;
      EXPECT_GE(*r.ratio_at_gap, ExactReal(1));
    }
  }
  EXPECT_TRUE(saw_gap);
  Rng rng(9);
  for (int t = 0; t < 60; ++t) {
    const FiniteSystem s(random_map(rng, 6), random_metric(rng, 6));
    for (const auto& r : finiteness_reports(s, horizon(4))) EXPECT_TRUE(r.consistent);
  }
}

TEST(Snowflake, EstimatorLaw) {
  Rng rng(10);
  for (int t = 0; t < 30; ++t) {
    const FiniteSystem s(random_map(rng, 5), random_metric(rng, 5));
    for (auto a : {Exponent::make(1, 2), Exponent::make(1, 3), Exponent::make(2, 3)})
      for (const auto& row : snowflake_estimator_law(s, a, horizon(4))) {
        EXPECT_TRUE(row.holds);
        EXPECT_EQ(row.snowflake_radius, a.apply(row.radius));
      }
  }
}
