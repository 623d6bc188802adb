#include <gtest/gtest.h>

#include "shadow/constructors.hpp"
#include "shadow/io.hpp"
#include "shadow/random.hpp"

using namespace shadow;
using io::json;

namespace {

FiniteSystem labelled_system(Rng& rng, std::size_t n, bool ultra) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
  DistanceTable t = ultra ? random_ultrametric(rng, n, {Rational(1, 4), Rational(1, 2), Rational(1)}) : random_metric(rng, n);
  return FiniteSystem(random_map(rng, n), Metric::finite_table(std::move(t), ultra), labels);
}

bool same_system(const FiniteSystem& a, const FiniteSystem& b) {
  if (a.size() != b.size() || a.map() != b.map() || a.labels() != b.labels()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if (a.distance({i}, {j}) != b.distance({i}, {j})) return false;
  return a.metric().ultrametric() == b.metric().ultrametric();
}

}  // namespace

TEST(IoScalars, ExactValuesAsStrings) {
  EXPECT_EQ(io::encode(ExactReal(3, 8)), json("3/8"));
  EXPECT_EQ(io::encode(ExactReal(4)), json("4/1"));
  EXPECT_EQ(io::decode_real(json("5/10")), ExactReal(1, 2));
  EXPECT_THROW(io::decode_real(json("-1/2")), io::FormatError);
  EXPECT_EQ(io::decode_real(json(7)), ExactReal(7));
  const ExactReal r = pow(ExactReal(1, 2), 1, 3);
  EXPECT_EQ(io::decode_real(io::encode(r)), r);
  EXPECT_THROW(io::decode_real(json("1/0")), io::FormatError);
  EXPECT_THROW(io::decode_real(json("x")), io::FormatError);
  EXPECT_THROW(io::decode_real(json(0.5)), io::FormatError);
  EXPECT_THROW(io::decode_rational(io::encode(r)), io::FormatError);
}

TEST(IoPoints, RoundTripRandom) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto x = random_one_sided(rng, 2 + uniform_index(rng, 12));
    EXPECT_EQ(io::decode_one_sided(io::encode(x)), x);
    const auto y = random_two_sided(rng, 2 + uniform_index(rng, 3));
    EXPECT_EQ(io::decode_two_sided(io::encode(y)), y);
    const auto z = random_circle(rng, 1 + static_cast<long>(uniform_index(rng, 60)));
    EXPECT_EQ(io::decode_circle(io::encode(z)), z);
  }
}

TEST(IoPoints, DocumentedShape) {
  const auto x = OneSidedPoint::parse("10", "1");
  EXPECT_EQ(io::encode(x), json::parse(R"({"side":"one","preperiod":"10","period":"1"})"));
  EXPECT_EQ(io::decode_one_sided(json::parse(R"({"preperiod":[0,11],"period":[3]})")),
            OneSidedPoint({0, 11}, {3}));
  EXPECT_EQ(io::encode(OneSidedPoint({12}, {0}))["preperiod"], json::array({12}));
  EXPECT_THROW(io::decode_one_sided(json::parse(R"({"side":"two","preperiod":"0","period":"1"})")), io::FormatError);
}

TEST(IoMetrics, RoundTripEveryKind) {
  const std::vector<Metric> ms{
      Metric::weighted_sup_one_sided(Rational(3)),
      Metric::weighted_sup_two_sided(Rational(5, 2), DistanceTable{{0, 1}, {1, 0}}),
      Metric::finite_table({{0, Rational(1, 2)}, {Rational(1, 2), 0}}),
      Metric::adapted_isometry({{0, 1}, {1, 0}}),
      Metric::circle_arc(),
      Metric::weighted_sup_one_sided(Rational(2)).with_exponent(Exponent::make(1, 2)),
  };
  for (const auto& m : ms) {
    const json j = io::encode(m);
    const Metric back = io::decode_metric(j);
    EXPECT_EQ(back.kind(), m.kind());
    EXPECT_EQ(io::encode(back), j) << j.dump();
  }
  EXPECT_EQ(io::encode(ms[0]), json::parse(R"({"kind":"weighted-sup-one-sided","alpha":"3/1"})"));
  EXPECT_EQ(io::encode(ms[5])["exponent"], json("1/2"));
  EXPECT_THROW(io::decode_metric(json::parse(R"({"kind":"hausdorff"})")), io::FormatError);
}

TEST(IoSystems, FiniteRoundTrip) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = labelled_system(rng, 1 + uniform_index(rng, 8), trial % 2 == 0);
    const json j = io::encode(s);
    ASSERT_TRUE(j.contains("points") && j.contains("metric_table") && j.contains("map"));
    const auto back = io::decode_finite_only(j);
    EXPECT_TRUE(same_system(s, back)) << j.dump();
    EXPECT_EQ(io::encode(back), j);
  }
}

TEST(IoSystems, FiniteFromHandWrittenFile) {
  const auto j = json::parse(R"({
    "points": ["a", "b", "c"],
    "metric_table": [["0", "1", "1"], ["1", "0", "1/2"], ["1", "1/2", "0"]],
    "map": {"a": "b", "b": "c", "c": "b"}
  })");
  const auto s = io::decode_finite_only(j);
  EXPECT_EQ(s.map(), (std::vector<std::size_t>{1, 2, 1}));
  EXPECT_TRUE(s.metric().ultrametric());
  EXPECT_EQ(io::decode_point(s, json("c")), FinitePoint{2});
  EXPECT_EQ(io::decode_point(s, json(0)), FinitePoint{0});
  EXPECT_THROW(io::decode_point(s, json("d")), io::FormatError);
  EXPECT_THROW(io::decode_point(s, json(3)), io::FormatError);

  auto bad = j;
  bad["map"].erase("c");
  EXPECT_THROW(io::decode_system(bad), io::FormatError);
  bad = j;
  bad["map"]["c"] = "z";
  EXPECT_THROW(io::decode_system(bad), io::FormatError);
  bad = j;
  bad["metric_table"][0].push_back("1");
  EXPECT_THROW(io::decode_system(bad), io::FormatError);
  bad = j;
  bad["metric_table"][0][1] = "2";
  EXPECT_THROW(io::decode_system(bad), io::FormatError);
  bad = j;
  bad["points"][1] = "a";
  EXPECT_THROW(io::decode_system(bad), io::FormatError);
}

TEST(IoSystems, InfiniteKinds) {
  const std::vector<io::AnySystem> systems{OneSidedShift(Rational(3)), TwoSidedShift(Rational(4), DistanceTable{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}),
                                           AdditiveCellular(Rational(2)), SubsequenceMap(3), CirclePowerMap(5)};
  for (const auto& s : systems) {
    const json j = io::encode(s);
    const auto back = io::decode_system(j);
    EXPECT_EQ(back.index(), s.index());
    EXPECT_EQ(io::encode(back), j);
  }
  const auto shorthand = io::decode_system(json::parse(R"({"kind":"one-sided-shift","alpha":"5"})"));
  EXPECT_EQ(std::get<OneSidedShift>(shorthand).metric().alpha(), Rational(5));
  EXPECT_THROW(io::decode_system(json::parse(R"({"kind":"subsequence","K":1})")), io::FormatError);
  EXPECT_THROW(io::decode_system(json::parse(R"({"kind":"odometer"})")), io::FormatError);
}

TEST(IoOrbits, PseudoOrbitWithTail) {
  const OneSidedShift s(Rational(2));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto xi = random_pseudo_orbit(s, ExactReal(1, 8), {6, seed % 2 == 0}, seed);
    const json j = io::encode(xi);
    EXPECT_EQ(j.contains("tail"), xi.periodic_tail());
    const auto back = io::decode_pseudo_orbit(s, j);
    EXPECT_EQ(back.points, xi.points);
    EXPECT_EQ(back.block_start, xi.block_start);
  }
  const json bare = json::array({io::encode(OneSidedPoint::constant(0)), io::encode(OneSidedPoint::constant(1))});
  EXPECT_EQ(io::decode_chain(s, bare).k(), 1u);
  EXPECT_THROW(io::decode_chain(s, json::array({bare[0]})), io::FormatError);
  EXPECT_THROW(io::decode_pseudo_orbit(s, json{{"points", bare}, {"tail", {{"block_start", 2}}}}), io::FormatError);
}

TEST(IoCertificates, RoundTripFromConstructor) {
  const OneSidedShift s(Rational(3));
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto xi = random_pseudo_orbit(s, ExactReal(1, 9), {6, true}, seed);
    const auto cert = shadow_one_sided_shift(s, xi, ExactReal(1, 9));
    const json j = io::encode(cert);
    EXPECT_EQ(j["bound"], json("1/27"));
    EXPECT_EQ(j["class"], json("per-index"));
    EXPECT_EQ(j["horizon"], json("all"));
    const auto back = io::decode_certificate(s, j);
    EXPECT_EQ(back.point, cert.point);
    EXPECT_EQ(back.bound, cert.bound);
    EXPECT_EQ(back.all_indices, cert.all_indices);
    EXPECT_TRUE(verify_certificate(s, xi, back));
  }
}

TEST(IoRefine, TraceExport) {
  const OneSidedShift s(Rational(2));
  const auto chain = random_chain(s, ExactReal(1, 8), 5, 3);
  const auto res = h_shadow_refine(s, one_sided_shift_oracle(s), chain, ExactReal(1, 8));
  const json j = io::encode(res);
  ASSERT_EQ(j["trace"].size(), res.trace.size());
  EXPECT_EQ(j["certificate"]["class"], json("exact-endpoint"));
  EXPECT_EQ(j["trace"].back()["endpoint_gap"], json("0/1"));
  for (std::size_t n = 0; n < res.trace.size(); ++n) {
    EXPECT_EQ(io::decode_one_sided(j["trace"][n]["y"]), res.trace[n].y);
    EXPECT_EQ(io::decode_real(j["trace"][n]["budget"]), res.trace[n].budget);
  }
}

TEST(IoDecompose, RoundTripAndShape) {
  Rng rng(9);
  for (int trial = 0; trial < 60; ++trial) {
    const auto s = labelled_system(rng, 2 + uniform_index(rng, 7), false);
    const ChainGraph g(s);
    for (const auto& delta : g.representatives()) {
      const auto d = chain_components(g, delta);
      const json j = io::encode(d);
      const auto back = io::decode_decomposition(j);
      EXPECT_EQ(back.delta, d.delta);
      EXPECT_EQ(back.chain_recurrent, d.chain_recurrent);
      ASSERT_EQ(back.components.size(), d.components.size());
      for (std::size_t c = 0; c < d.components.size(); ++c) {
        EXPECT_EQ(back.components[c].vertices, d.components[c].vertices);
        EXPECT_EQ(back.components[c].cyclic.period, d.components[c].cyclic.period);
        EXPECT_EQ(back.components[c].cyclic.classes, d.components[c].cyclic.classes);
      }
      EXPECT_EQ(io::encode(d, s)["labels"].size(), s.size());
    }
  }
}

TEST(IoLab, EstimateRoundTripAndCsv) {
  const FiniteSystem swap({1, 0}, DistanceTable{{0, 1}, {1, 0}});
  const auto rep = estimate_L(swap, RadiusOptions{}, "swap");
  const json j = io::encode(rep);
  const auto back = io::decode_estimate(j);
  EXPECT_EQ(back.L, rep.L);
  ASSERT_EQ(back.points.size(), rep.points.size());
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    EXPECT_EQ(back.points[i].delta, rep.points[i].delta);
    EXPECT_EQ(back.points[i].radius, rep.points[i].radius);
    EXPECT_EQ(back.points[i].witness, rep.points[i].witness);
  }
  const std::string csv = io::to_csv(j["points"]);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "delta,radius,ratio,witness");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), rep.points.size() + 1);
}

TEST(IoLab, VerdictShapes) {
  const FiniteSystem constant({0, 0}, DistanceTable{{0, 1}, {1, 0}}, true);
  const auto v = theorem16_harness(constant, ExactReal(1), ExactReal(1));
  const json j = io::encode(v);
  EXPECT_EQ(j["agree"], json(v.agree));
  EXPECT_EQ(j["diagnosis"], json(to_string(v.diagnosis)));
  EXPECT_EQ(j.contains("ball_witness"), v.ball_witness.has_value());
  const auto b = ball_expanding_check(constant, ExactReal(1, 2));
  const json bj = io::encode(b);
  EXPECT_FALSE(bj["ok"].get<bool>());
  EXPECT_TRUE(bj.contains("witness"));
}

TEST(IoCsv, Quoting) {
  const json rows = json::parse(R"([{"a":"x,y","b":[1,2],"c":{"n":1}},{"a":"q\"t","d":null}])");
  EXPECT_EQ(io::to_csv(rows), "a,b,d\n\"x,y\",1;2,\n\"q\"\"t\",,\n");
  EXPECT_THROW(io::to_csv(json::object()), io::FormatError);
}
