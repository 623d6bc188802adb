#include <gtest/gtest.h>

#include <set>

#include "shadow/constructors.hpp"

using namespace shadow;

namespace {

// Oracle: shadow coordinates and deviations by direct indexing over a finite
// window, without the library's canonical forms or stabilization argument.
Rational brute_deviation_one_sided(const PseudoOrbit<OneSidedPoint>& xi, const Rational& alpha, long first, long steps,
                                   long window = 40) {
  Rational worst(0);
  for (long i = 0; i < steps; ++i) {
    Rational w(1);
    for (long n = 1; n <= window; ++n) {
      w /= alpha;
      const Symbol shadow_coord = xi.at(static_cast<std::size_t>(i + n - 1)).at(first);
      if (shadow_coord != xi.at(static_cast<std::size_t>(i)).at(n)) {
        if (w > worst) worst = w;
        break;
      }
    }
  }
  return worst;
}

OneSidedPoint word_point(unsigned bits, int length) {
  Word w(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) w[static_cast<std::size_t>(i)] = static_cast<Symbol>(bits >> i & 1);
  return OneSidedPoint(w, {0});
}

}  // namespace

TEST(OneSidedShadow, GenuineOrbitIsReproduced) {
  const OneSidedShift s(Rational(2));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto xi = random_pseudo_orbit(s, ExactReal(0), {6, true}, seed);
    const auto cert = shadow_one_sided_shift(s, xi, ExactReal(1, 8));
    EXPECT_EQ(cert.point, xi.points[0]);
    EXPECT_EQ(realized_deviation(s, xi, cert.point), ExactReal(0));
  }
}

TEST(OneSidedShadow, BoundHoldsAndMatchesOracle) {
  for (long a : {2L, 3L}) {
    const OneSidedShift s{Rational(a)};
    const ExactReal delta = ExactReal(1, a * a * a);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto xi = random_pseudo_orbit(s, delta, {8, true}, seed);
      const auto cert = shadow_one_sided_shift(s, xi, delta);
      EXPECT_EQ(cert.bound, delta / ExactReal(a));
      EXPECT_TRUE(cert.all_indices);
      EXPECT_TRUE(verify_certificate(s, xi, cert));
      for (long n = 1; n <= 30; ++n) ASSERT_EQ(cert.point.at(n), xi.at(static_cast<std::size_t>(n - 1)).at(1));
      EXPECT_LE(ExactReal(brute_deviation_one_sided(xi, Rational(a), 1, 30)), cert.bound);
    }
  }
  EXPECT_EQ(one_sided_case_bound(ExactReal(2), ExactReal(1, 2)), ExactReal(1, 4));
  EXPECT_EQ(one_sided_case_bound(ExactReal(2), ExactReal(1, 8)), ExactReal(1, 16));
  EXPECT_EQ(one_sided_case_bound(ExactReal(3), ExactReal(1, 5)), ExactReal(1, 27));
}

TEST(OneSidedShadow, WitnessAttainsTheBound) {
  const OneSidedShift s(Rational(2));
  const auto xi = one_sided_tightness_witness(ExactReal(2), ExactReal(1, 8));
  EXPECT_EQ(pseudo_orbit_defect(s, xi), ExactReal(1, 8));
  const auto cert = shadow_one_sided_shift(s, xi, ExactReal(1, 8));
  EXPECT_EQ(cert.point, OneSidedPoint::parse("000", "1"));
  EXPECT_EQ(realized_deviation(s, xi, cert.point), ExactReal(1, 16));
  EXPECT_EQ(ExactReal(brute_deviation_one_sided(xi, Rational(2), 1, 20)), ExactReal(1, 16));

  const OneSidedShift s3(Rational(3));
  const auto big = one_sided_tightness_witness(ExactReal(3), ExactReal(1, 2));
  EXPECT_EQ(realized_deviation(s3, big, shadow_one_sided_shift(s3, big, ExactReal(1, 2)).point), ExactReal(1, 9));
}

TEST(OneSidedShadow, RejectsBadInput) {
  const OneSidedShift s(Rational(2));
  auto xi = random_pseudo_orbit(s, ExactReal(1, 4), {6, true}, 3);
  EXPECT_THROW(shadow_one_sided_shift(s, xi, ExactReal(0)), ConstructionError);
  auto finite = random_pseudo_orbit(s, ExactReal(1, 4), {6, false}, 3);
  EXPECT_THROW(shadow_one_sided_shift(s, finite, ExactReal(1, 4)), ConstructionError);
}

TEST(TwoSidedShadow, BoundAndBaseline) {
  const TwoSidedShift s(Rational(2));
  bool baseline_fails = false;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const ExactReal delta(1, 8);
    auto xi = random_pseudo_orbit(s, delta, {7, true}, seed);
    const auto cert = shadow_two_sided_shift(s, xi, delta);
    EXPECT_TRUE(cert.all_indices);
    EXPECT_TRUE(verify_certificate(s, xi, cert));
    for (long n = 0; n <= 20; ++n) ASSERT_EQ(cert.point.at(n), xi.at(static_cast<std::size_t>(n)).at(0));
    for (long n = -20; n < 0; ++n) ASSERT_EQ(cert.point.at(n), xi.points[0].at(n));
    if (!verify_shadowing(s, xi, naive_two_sided_shadow(xi), delta)) baseline_fails = true;
  }
  EXPECT_TRUE(baseline_fails);
  auto genuine = random_pseudo_orbit(s, ExactReal(0), {5, true}, 9);
  EXPECT_EQ(shadow_two_sided_shift(s, genuine, ExactReal(1, 4)).point, genuine.points[0]);
}

TEST(ProductShadow, OneSided) {
  const DistanceTable single{{0}};
  const OneSidedShift trivial(Rational(3), single);
  auto xi = random_pseudo_orbit(trivial, ExactReal(1, 9), {5, true}, 1);
  EXPECT_EQ(realized_deviation(trivial, xi, shadow_product_one_sided(trivial, xi, ExactReal(1, 9)).point), ExactReal(0));

  const OneSidedShift binary(Rational(3), DistanceTable{{0, 1}, {1, 0}});
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto p = random_pseudo_orbit(binary, ExactReal(1, 9), {7, true}, seed);
    const auto cert = shadow_product_one_sided(binary, p, ExactReal(1, 9));
    EXPECT_EQ(cert.bound, ExactReal(1, 18));
    EXPECT_EQ(*cert.constant, ExactReal(1, 2));
    EXPECT_TRUE(cert.contractive);
    EXPECT_TRUE(verify_certificate(binary, p, cert));
  }
  const OneSidedShift tri(Rational(4), DistanceTable{{0, 1, Rational(1, 3)}, {1, 0, 1}, {Rational(1, 3), 1, 0}});
  auto q = random_pseudo_orbit(tri, ExactReal(1, 16), {6, true}, 5);
  const auto cert = shadow_product_one_sided(tri, q, ExactReal(1, 16));
  EXPECT_EQ(*cert.constant, ExactReal(1, 3));
  EXPECT_TRUE(cert.contractive);
  const OneSidedShift two(Rational(2), DistanceTable{{0, 1}, {1, 0}});
  auto r = random_pseudo_orbit(two, ExactReal(1, 4), {6, true}, 5);
  EXPECT_FALSE(shadow_product_one_sided(two, r, ExactReal(1, 4)).contractive);
}

TEST(ProductShadow, TwoSidedWithExactZerothCoordinate) {
  const TwoSidedShift s(Rational(3), DistanceTable{{0, 1, Rational(1, 2)}, {1, 0, Rational(1, 2)}, {Rational(1, 2), Rational(1, 2), 0}});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto xi = random_pseudo_orbit(s, ExactReal(1, 9), {6, true}, seed);
    const auto cert = shadow_product_two_sided(s, xi, ExactReal(1, 9));
    EXPECT_EQ(cert.bound, ExactReal(1, 6));
    EXPECT_TRUE(verify_certificate(s, xi, cert));
    EXPECT_TRUE(zeroth_coordinates_agree(s, xi, cert.point));
  }
}

TEST(SubsequenceShadow, BoundAndMaterializedCrossCheck) {
  for (long k : {2L, 3L}) {
    const SubsequenceMap s(k);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const ExactReal delta(1, 8);
      auto xi = random_pseudo_orbit(s, delta, {6, true}, seed);
      const auto cert = shadow_subsequence_fK(s, xi, delta);
      EXPECT_EQ(cert.bound, ipow(delta, k));
      // materialize x up to K^3 * 12 and apply f_K directly
      const long depth = 12;
      long span = depth;
      for (int i = 0; i < 3; ++i) span *= k;
      const Word x = cert.point.prefix(span);
      long stride = 1;
      for (std::size_t i = 0; i <= 3; ++i, stride *= k) {
        for (long n = 1; n <= depth; ++n) {
          if (x[static_cast<std::size_t>(stride * n - 1)] != xi.at(i).at(n)) {
            EXPECT_LE(ipow(ExactReal(1, 2), n), cert.bound);
            break;
          }
        }
      }
    }
  }
  EXPECT_EQ(subsequence_case_bound(2, ExactReal(1, 8)), ExactReal(1, 64));
  EXPECT_EQ(subsequence_case_bound(3, ExactReal(3, 4)), ExactReal(1, 8));
}

TEST(SubsequenceShadow, GenuineOrbitAndFactorization) {
  const SubsequenceMap s(2);
  auto xi = random_pseudo_orbit(s, ExactReal(0), {5, true}, 2);
  const auto cert = shadow_subsequence_fK(s, xi, ExactReal(1, 16));
  for (long n = 1; n <= 40; ++n) EXPECT_EQ(cert.point.at(n), xi.points[0].at(n));
  EXPECT_EQ(factorize(24, 2).a, 3);
  EXPECT_EQ(factorize(24, 2).b, 3);
  EXPECT_EQ(factorize(7, 3).b, 0);
}

TEST(SubsequenceShadow, EveryLipschitzConstant) {
  EXPECT_EQ(subsequence_delta0(2, ExactReal(1, 100)), ExactReal(1, 100));
  EXPECT_EQ(subsequence_delta0(3, ExactReal(1, 4)), ExactReal(1, 2));
  for (long k : {2L, 3L}) {
    const SubsequenceMap s(k);
    for (auto L : {ExactReal(1, 2), ExactReal(1, 4), ExactReal(1, 100)}) {
      const ExactReal d0 = subsequence_delta0(k, L);
      EXPECT_LE(ipow(d0, k), L * d0);
      for (long m = 1; m <= 12; ++m) {
        const ExactReal delta = ipow(ExactReal(1, 2), m);
        if (delta > d0) continue;
        auto xi = random_pseudo_orbit(s, delta, {5, true}, static_cast<std::uint64_t>(m));
        EXPECT_TRUE(check_factorized(s, shadow_subsequence_fK(s, xi, delta).point, L * delta).ok);
      }
    }
  }
}

TEST(CellularSelector, Examples) {
  const AdditiveCellular s(Rational(2));
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto x = random_one_sided(rng);
    EXPECT_EQ(preimage_selector_cellular(s, s.apply(x), x, ExactReal(1, 4)), x);
  }
  const auto z = preimage_selector_cellular(s, OneSidedPoint::parse("001", "0"), OneSidedPoint::constant(0), ExactReal(1, 4));
  EXPECT_EQ(z, OneSidedPoint::parse("000", "1"));
  EXPECT_EQ(s.distance(z, OneSidedPoint::constant(0)), ExactReal(1, 16));
  EXPECT_THROW(preimage_selector_cellular(s, OneSidedPoint::parse("01", "0"), OneSidedPoint::constant(0), ExactReal(1, 8)),
               ConstructionError);
}

TEST(CellularSelector, BallEqualityOnDepthFourCylinders) {
  const AdditiveCellular s(Rational(2));
  const int depth = 4;
  for (unsigned xb = 0; xb < (1u << (depth + 1)); ++xb) {
    const auto x = word_point(xb, depth + 1);
    for (int m = 0; m <= depth + 1; ++m) {
      const ExactReal delta = ipow(ExactReal(1, 2), m);
      std::set<unsigned> image, ball;
      for (unsigned wb = 0; wb < (1u << (depth + 1)); ++wb) {
        const auto w = word_point(wb, depth + 1);
        if (s.distance(w, x) > delta / ExactReal(2)) continue;
        const auto fw = s.apply(w);
        unsigned v = 0;
        for (int n = 1; n <= depth; ++n) v |= static_cast<unsigned>(fw.at(n)) << (n - 1);
        image.insert(v);
      }
      const auto fx = s.apply(x);
      for (unsigned vb = 0; vb < (1u << depth); ++vb) {
        const auto v = word_point(vb, depth);
        // compare on the first depth coordinates only
        const auto fxd = OneSidedPoint::tabulate(depth, 1, [&](long n) { return n <= depth ? fx.at(n) : Symbol{0}; });
        if (s.distance(v, fxd) <= delta) ball.insert(vb);
      }
      EXPECT_EQ(image, ball) << "x=" << xb << " delta=2^-" << m;
    }
  }
}

TEST(CircleSelector, ThresholdAndRoots) {
  for (long n : {2L, 3L, 5L}) {
    const long grid = 12 * n;
    // largest grid value strictly below 1/(2n)
    EXPECT_EQ(circle_injectivity_threshold(n), ExactReal((grid + 2 * n - 1) / (2 * n) - 1, grid));
  }
  const CirclePowerMap s(3);
  const auto z = preimage_selector_circle(s, CirclePoint(1, 12), CirclePoint(0, 1), ExactReal(1, 12));
  EXPECT_EQ(z, CirclePoint(1, 36));
  EXPECT_EQ(s.distance(z, CirclePoint(0, 1)), ExactReal(1, 36));
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const auto x = random_circle(rng, 90);
    EXPECT_EQ(preimage_selector_circle(s, s.apply(x), x, ExactReal(1, 10)), x);
  }
  EXPECT_THROW(preimage_selector_circle(s, CirclePoint(1, 2), CirclePoint(0, 1), ExactReal(1, 10)), ConstructionError);
  EXPECT_THROW(preimage_selector_circle(s, CirclePoint(0, 1), CirclePoint(0, 1), ExactReal(1, 6)), ConstructionError);
}

TEST(Snowflake, TransportOfTheShiftConstant) {
  for (long a : {2L, 4L}) {
    const OneSidedShift s{Rational(a)};
    for (auto e : {Exponent::make(1, 2), Exponent::make(1, 3), Exponent::make(2, 3)}) {
      for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const ExactReal delta(1, a * a);
        auto xi = random_pseudo_orbit(s, delta, {6, true}, seed);
        const auto t = snowflake_transport_check(s, xi, delta, e);
        EXPECT_TRUE(t.base_ok);
        EXPECT_TRUE(t.defect_ok);
        EXPECT_TRUE(t.snowflake_ok);
      }
    }
  }
}
