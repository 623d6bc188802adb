#pragma once

// JSON and CSV encodings for systems, points, orbits, certificates and reports.
// Exact values travel as strings ("p/q", or "p/q^(1/k)" for radicals).

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "shadow/decompose.hpp"
#include "shadow/lab.hpp"
#include "shadow/refine.hpp"

namespace shadow::io {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scalars

inline json encode(const ExactReal& v) { return v.str(); }

inline ExactReal decode_real(const json& j) {
  if (j.is_number_integer()) return ExactReal(Rational(j.get<long>()));
  if (!j.is_string()) throw FormatError("expected an exact value as a \"p/q\" string, got " + j.dump());
  try {
    return ExactReal::parse(j.get<std::string>());
  } catch (const std::exception& e) {
    throw FormatError("bad exact value " + j.dump() + ": " + e.what());
  }
}

inline Rational decode_rational(const json& j) {
  const ExactReal v = decode_real(j);
  if (!v.is_rational()) throw FormatError("expected a rational, got " + j.dump());
  return v.rational();
}

inline json encode(const Rational& q) { return detail::rational_string(q); }

inline json encode(const Exponent& e) {
  return e.den == 1 ? std::to_string(e.num) : std::to_string(e.num) + "/" + std::to_string(e.den);
}

inline json encode_table(const DistanceTable& t) {
  json out = json::array();
  for (const auto& row : t) {
    json r = json::array();
    for (const auto& v : row) r.push_back(encode(v));
    out.push_back(std::move(r));
  }
  return out;
}

inline DistanceTable decode_table(const json& j) {
  if (!j.is_array()) throw FormatError("distance table must be an array of rows");
  DistanceTable t;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != j.size()) throw FormatError("distance table must be square");
    std::vector<Rational> r;
    for (const auto& v : row) r.push_back(decode_rational(v));
    t.push_back(std::move(r));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Metrics

inline json encode(const Metric& m) {
  json j{{"kind", to_string(m.kind())}};
  if (m.is_weighted_sup()) {
    j["alpha"] = encode(m.alpha());
    if (m.alphabet()) j["alphabet"] = encode_table(*m.alphabet());
  }
  if (m.is_table()) {
    j["table"] = encode_table(m.table());
    j["ultrametric"] = m.ultrametric();
  }
  if (m.is_snowflake()) j["exponent"] = encode(m.exponent());
  return j;
}

inline Metric decode_metric(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  std::optional<DistanceTable> alphabet;
  if (j.contains("alphabet")) alphabet = decode_table(j["alphabet"]);
  Metric m = [&] {
    if (kind == "weighted-sup-one-sided") return Metric::weighted_sup_one_sided(decode_rational(j.at("alpha")), alphabet);
    if (kind == "weighted-sup-two-sided") return Metric::weighted_sup_two_sided(decode_rational(j.at("alpha")), alphabet);
    if (kind == "finite-table") return Metric::finite_table(decode_table(j.at("table")), j.value("ultrametric", false));
    if (kind == "adapted-isometry") return Metric::adapted_isometry(decode_table(j.at("table")));
    if (kind == "circle-arc") return Metric::circle_arc();
    throw FormatError("unknown metric kind '" + kind + "'");
  }();
  if (j.contains("exponent")) m = m.with_exponent(Exponent::parse(j["exponent"].get<std::string>()));
  return m;
}

// ---------------------------------------------------------------------------
// Points

inline json encode_word(const Word& w) {
  for (Symbol s : w)
    if (s > 9) return json(w);
  return detail::word_to_string(w);
}

inline Word decode_word(const json& j) {
  if (j.is_string()) return detail::word_from_string(j.get<std::string>());
  if (j.is_array()) return j.get<Word>();
  throw FormatError("word must be a digit string or an array of symbols");
}

inline json encode(const OneSidedPoint& x) {
  return {{"side", "one"}, {"preperiod", encode_word(x.preperiod())}, {"period", encode_word(x.period())}};
}

inline json encode(const TwoSidedPoint& x) {
  return {{"side", "two"},
          {"left", encode_word(x.left())},
          {"center", encode_word(x.center())},
          {"right", encode_word(x.right())},
          {"offset", x.offset()}};
}

inline json encode(const CirclePoint& z) { return {{"angle", z.str()}}; }

inline json encode(const FinitePoint& p) { return p.index; }

inline json encode(const FactorizedShadow& s);

inline OneSidedPoint decode_one_sided(const json& j) {
  if (j.value("side", "one") != "one") throw FormatError("expected a one-sided point");
  return {decode_word(j.at("preperiod")), decode_word(j.at("period"))};
}

inline TwoSidedPoint decode_two_sided(const json& j) {
  if (j.value("side", "two") != "two") throw FormatError("expected a two-sided point");
  return {decode_word(j.at("left")), decode_word(j.at("center")), decode_word(j.at("right")),
          j.value("offset", 0L)};
}

inline CirclePoint decode_circle(const json& j) {
  return CirclePoint(decode_rational(j.is_object() ? j.at("angle") : j));
}

/// A finite point is its index or its label.
inline FinitePoint decode_finite(const json& j, const FiniteSystem& s) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto i = j.get<long>();
    if (i < 0 || static_cast<std::size_t>(i) >= s.size()) throw FormatError("point index " + j.dump() + " out of range");
    return {static_cast<std::size_t>(i)};
  }
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.label(i) == name) return {i};
    throw FormatError("unknown point label '" + name + "'");
  }
  throw FormatError("finite point must be an index or a label");
}

inline OneSidedPoint decode_point(const OneSidedShift&, const json& j) { return decode_one_sided(j); }
inline OneSidedPoint decode_point(const AdditiveCellular&, const json& j) { return decode_one_sided(j); }
inline OneSidedPoint decode_point(const SubsequenceMap&, const json& j) { return decode_one_sided(j); }
inline TwoSidedPoint decode_point(const TwoSidedShift&, const json& j) { return decode_two_sided(j); }
inline CirclePoint decode_point(const CirclePowerMap&, const json& j) { return decode_circle(j); }
inline FinitePoint decode_point(const FiniteSystem& s, const json& j) { return decode_finite(j, s); }

// ---------------------------------------------------------------------------
// Systems

using AnySystem = std::variant<OneSidedShift, TwoSidedShift, AdditiveCellular, SubsequenceMap, CirclePowerMap, FiniteSystem>;

inline json encode(const FiniteSystem& s) {
  json j;
  j["kind"] = "finite";
  json labels = json::array();
  for (std::size_t i = 0; i < s.size(); ++i) labels.push_back(s.label(i));
  j["points"] = labels;
  j["metric_table"] = encode_table(s.metric().table());
  json map = json::object();
  for (std::size_t i = 0; i < s.size(); ++i) map[s.label(i)] = s.label(s.map()[i]);
  j["map"] = map;
  if (s.metric().kind() == MetricKind::adapted_isometry) j["metric"] = "adapted-isometry";
  if (s.metric().ultrametric()) j["ultrametric"] = true;
  if (s.metric().is_snowflake()) j["exponent"] = encode(s.metric().exponent());
  return j;
}

inline FiniteSystem decode_finite_system(const json& j) {
  const auto& pts = j.at("points");
  if (!pts.is_array() || pts.empty()) throw FormatError("finite system needs a non-empty point list");
  std::vector<std::string> labels;
  for (const auto& p : pts) labels.push_back(p.is_string() ? p.get<std::string>() : p.dump());
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (labels[i] == labels[k]) throw FormatError("duplicate point label '" + labels[i] + "'");
  auto index_of = [&](const json& v) -> std::size_t {
    const std::string name = v.is_string() ? v.get<std::string>() : v.dump();
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == name) return i;
    throw FormatError("map refers to unknown point '" + name + "'");
  };
  std::vector<std::size_t> map(labels.size());
  const auto& m = j.at("map");
  if (m.is_object()) {
    if (m.size() != labels.size()) throw FormatError("map must assign an image to every point");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!m.contains(labels[i])) throw FormatError("map has no image for '" + labels[i] + "'");
      map[i] = index_of(m[labels[i]]);
    }
  } else if (m.is_array() && m.size() == labels.size()) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      map[i] = m[i].is_number_integer() ? m[i].get<std::size_t>() : index_of(m[i]);
  } else {
    throw FormatError("map must be an object label -> label or an array of images");
  }
  DistanceTable table = decode_table(j.at("metric_table"));
  Metric metric = j.value("metric", "finite-table") == "adapted-isometry"
                      ? Metric::adapted_isometry(std::move(table))
                      : Metric::finite_table(std::move(table), j.value("ultrametric", false));
  if (j.contains("exponent")) metric = metric.with_exponent(Exponent::parse(j["exponent"].get<std::string>()));
  return FiniteSystem(std::move(map), std::move(metric), std::move(labels));
}

inline json encode(const OneSidedShift& s) { return {{"kind", "one-sided-shift"}, {"metric", encode(s.metric())}}; }
inline json encode(const TwoSidedShift& s) { return {{"kind", "two-sided-shift"}, {"metric", encode(s.metric())}}; }
inline json encode(const AdditiveCellular& s) { return {{"kind", "additive-cellular"}, {"metric", encode(s.metric())}}; }
inline json encode(const SubsequenceMap& s) {
  return {{"kind", "subsequence"}, {"K", s.k()}, {"metric", encode(s.metric())}};
}
inline json encode(const CirclePowerMap& s) { return {{"kind", "circle-power"}, {"n", s.n()}, {"metric", encode(s.metric())}}; }

inline json encode(const AnySystem& s) {
  return std::visit([](const auto& sys) { return encode(sys); }, s);
}

namespace detail {

// Shorthand {"alpha": ...} is accepted in place of a full metric object.
inline Metric shift_metric(const json& j, MetricKind kind) {
  if (j.contains("metric")) {
    Metric m = decode_metric(j["metric"]);
    if (m.kind() != kind) throw FormatError("metric kind does not match the system");
    return m;
  }
  std::optional<DistanceTable> alphabet;
  if (j.contains("alphabet")) alphabet = decode_table(j["alphabet"]);
  const Rational alpha = decode_rational(j.value("alpha", json("2")));
  Metric m = kind == MetricKind::weighted_sup_one_sided ? Metric::weighted_sup_one_sided(alpha, alphabet)
                                                        : Metric::weighted_sup_two_sided(alpha, alphabet);
  if (j.contains("exponent")) m = m.with_exponent(Exponent::parse(j["exponent"].get<std::string>()));
  return m;
}

}  // namespace detail

inline AnySystem decode_system(const json& j) {
  if (!j.is_object()) throw FormatError("system must be a JSON object");
  const std::string kind = j.value("kind", j.contains("metric_table") ? "finite" : "");
  try {
    if (kind == "finite") return decode_finite_system(j);
    if (kind == "one-sided-shift") {
      const Metric m = detail::shift_metric(j, MetricKind::weighted_sup_one_sided);
      return OneSidedShift(m.alpha(), m.alphabet()).with_metric(m);
    }
    if (kind == "two-sided-shift") {
      const Metric m = detail::shift_metric(j, MetricKind::weighted_sup_two_sided);
      return TwoSidedShift(m.alpha(), m.alphabet()).with_metric(m);
    }
    if (kind == "additive-cellular") {
      const Metric m = detail::shift_metric(j, MetricKind::weighted_sup_one_sided);
      return AdditiveCellular(m.alpha()).with_metric(m);
    }
    if (kind == "subsequence") {
      const Metric m = detail::shift_metric(j, MetricKind::weighted_sup_one_sided);
      return SubsequenceMap(j.at("K").get<long>(), m.alpha()).with_metric(m);
    }
    if (kind == "circle-power") {
      CirclePowerMap s(j.at("n").get<long>());
      if (j.contains("metric")) s = s.with_metric(decode_metric(j["metric"]));
      return s;
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed system: ") + e.what());
  } catch (const DomainError& e) {
    throw FormatError(std::string("invalid system: ") + e.what());
  } catch (const ExactError& e) {
    throw FormatError(std::string("invalid system: ") + e.what());
  }
  throw FormatError("unknown system kind '" + kind + "'");
}

inline FiniteSystem decode_finite_only(const json& j) {
  auto s = decode_system(j);
  if (auto* f = std::get_if<FiniteSystem>(&s)) return *f;
  throw FormatError("this operation needs a finite system");
}

// ---------------------------------------------------------------------------
// Orbits

template <class P>
json encode(const PseudoOrbit<P>& xi) {
  json pts = json::array();
  for (const auto& p : xi.points) pts.push_back(encode(p));
  json j{{"points", pts}};
  if (xi.block_start) j["tail"] = {{"block_start", *xi.block_start}};
  return j;
}

template <class P>
json encode(const Chain<P>& c) {
  json pts = json::array();
  for (const auto& p : c.points) pts.push_back(encode(p));
  return pts;
}

/// Accepts a bare array or {"points": [...], "tail": {"block_start": i}}.
template <System S>
PseudoOrbit<typename S::point_type> decode_pseudo_orbit(const S& system, const json& j) {
  const json& pts = j.is_array() ? j : j.at("points");
  std::vector<typename S::point_type> out;
  for (const auto& p : pts) out.push_back(decode_point(system, p));
  std::optional<std::size_t> block;
  if (j.is_object() && j.contains("tail")) block = j["tail"].at("block_start").get<std::size_t>();
  try {
    return PseudoOrbit<typename S::point_type>(std::move(out), block);
  } catch (const OrbitError& e) {
    throw FormatError(e.what());
  }
}

template <System S>
Chain<typename S::point_type> decode_chain(const S& system, const json& j) {
  auto xi = decode_pseudo_orbit(system, j);
  try {
    return Chain<typename S::point_type>(std::move(xi.points));
  } catch (const OrbitError& e) {
    throw FormatError(e.what());
  }
}

inline json encode(const FactorizedShadow& s) {
  return {{"rule", "factorized"}, {"K", s.k}, {"xi", encode(s.xi)}, {"prefix", encode_word(s.prefix(16))}};
}

// ---------------------------------------------------------------------------
// Certificates and refinement

inline Guarantee decode_guarantee(const std::string& s) {
  for (Guarantee g : {Guarantee::per_index, Guarantee::exact_endpoint, Guarantee::periodic})
    if (to_string(g) == s) return g;
  throw FormatError("unknown certificate class '" + s + "'");
}

template <class P>
json encode(const ShadowCertificate<P>& c) {
  json j{{"shadow_point", encode(c.point)},
         {"bound", encode(c.bound)},
         {"class", to_string(c.guarantee)},
         {"horizon", c.all_indices ? json("all") : json(c.horizon)},
         {"contractive", c.contractive}};
  if (c.constant) j["constant"] = encode(*c.constant);
  if (c.guarantee == Guarantee::periodic) j["period"] = c.period;
  return j;
}

template <System S>
ShadowCertificate<typename S::point_type> decode_certificate(const S& system, const json& j) {
  ShadowCertificate<typename S::point_type> c(decode_point(system, j.at("shadow_point")), decode_real(j.at("bound")));
  c.guarantee = decode_guarantee(j.at("class").get<std::string>());
  const auto& h = j.at("horizon");
  if (h.is_string()) {
    if (h.get<std::string>() != "all") throw FormatError("horizon must be an index or \"all\"");
    c.all_indices = true;
  } else {
    c.horizon = h.get<std::size_t>();
  }
  c.contractive = j.value("contractive", false);
  if (j.contains("constant")) c.constant = decode_real(j["constant"]);
  c.period = j.value("period", std::size_t{0});
  return c;
}

template <class P>
json encode(const RefineResult<P>& r) {
  json trace = json::array();
  for (std::size_t n = 0; n < r.trace.size(); ++n) {
    const auto& s = r.trace[n];
    trace.push_back({{"step", n}, {"y", encode(s.y)}, {"budget", encode(s.budget)}, {"endpoint_gap", encode(s.endpoint_gap)}});
  }
  json j{{"certificate", encode(r.certificate)},
         {"trace", trace},
         {"iterations", r.iterations},
         {"endpoint_gap", encode(r.endpoint_gap)},
         {"exact", r.exact}};
  if (r.iteration_bound) j["iteration_bound"] = *r.iteration_bound;
  return j;
}

template <class P>
json encode(const Lemma11Result<P>& r) {
  json pre = json::array();
  for (const auto& p : r.preimages) pre.push_back(encode(p));
  return {{"shadow_point", encode(r.point)}, {"preimages", pre}, {"all_indices", r.all_indices}};
}

// ---------------------------------------------------------------------------
// Decompositions

inline json encode(const Decomposition& d) {
  json comps = json::array();
  for (const auto& c : d.components) {
    comps.push_back({{"vertices", c.vertices}, {"period", c.cyclic.period}, {"classes", c.cyclic.classes}});
  }
  return {{"delta", encode(d.delta)}, {"CR", d.chain_recurrent}, {"components", comps}};
}

/// Same report with vertex labels added for readability.
inline json encode(const Decomposition& d, const FiniteSystem& s) {
  json j = encode(d);
  json labels = json::array();
  for (std::size_t i = 0; i < s.size(); ++i) labels.push_back(s.label(i));
  j["labels"] = labels;
  return j;
}

inline Decomposition decode_decomposition(const json& j) {
  Decomposition d;
  d.delta = decode_real(j.at("delta"));
  d.chain_recurrent = j.at("CR").get<VertexSet>();
  for (const auto& c : j.at("components")) {
    ChainComponent comp;
    comp.vertices = c.at("vertices").get<VertexSet>();
    comp.cyclic.period = c.at("period").get<std::size_t>();
    comp.cyclic.classes = c.at("classes").get<std::vector<VertexSet>>();
    d.components.push_back(std::move(comp));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Lab reports

inline json encode(const EstimatePoint& p) {
  return {{"delta", encode(p.delta)}, {"radius", encode(p.radius)}, {"ratio", encode(p.ratio)}, {"witness", p.witness}};
}

inline json encode(const EstimateReport& r) {
  json pts = json::array();
  for (const auto& p : r.points) pts.push_back(encode(p));
  return {{"system", r.system},
          {"horizon", r.horizon ? json(*r.horizon) : json("all")},
          {"exhaustive", r.exhaustive},
          {"seed", r.seed},
          {"L", encode(r.L)},
          {"contractive", r.contractive},
          {"label", r.horizon ? "lower bound at the horizon" : "exact over all lengths"},
          {"points", pts}};
}

inline EstimateReport decode_estimate(const json& j) {
  EstimateReport r;
  r.system = j.at("system").get<std::string>();
  if (!j.at("horizon").is_string()) r.horizon = j["horizon"].get<std::size_t>();
  r.exhaustive = j.at("exhaustive").get<bool>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.L = decode_real(j.at("L"));
  r.contractive = j.at("contractive").get<bool>();
  for (const auto& p : j.at("points")) {
    r.points.push_back({decode_real(p.at("delta")), decode_real(p.at("radius")), decode_real(p.at("ratio")),
                        p.at("witness").get<std::vector<std::size_t>>()});
  }
  return r;
}

inline json encode(const BallWitness& w) {
  return {{"level", w.level}, {"x", w.x}, {"delta", encode(w.delta)}, {"y", w.y}};
}

inline json encode(const BallCheck& b) {
  json j{{"ok", b.ok}, {"checked", b.checked}};
  if (b.witness) j["witness"] = encode(*b.witness);
  return j;
}

inline json encode(const Thm16Verdict& v) {
  json j{{"L", encode(v.L)},
         {"delta0", encode(v.delta0)},
         {"horizon", v.horizon},
         {"shadowing", v.shadowing},
         {"shadowing_recheck", v.shadowing_recheck},
         {"ball_expanding", v.ball_expanding},
         {"agree", v.agree},
         {"diagnosis", to_string(v.diagnosis)}};
  if (v.shadowing_witness) {
    j["shadowing_witness"] = {{"delta", encode(v.shadowing_witness->delta)},
                              {"radius", encode(v.shadowing_witness->radius)},
                              {"pseudo_orbit", v.shadowing_witness->pseudo_orbit}};
  }
  if (v.ball_witness) j["ball_witness"] = encode(*v.ball_witness);
  return j;
}

inline json encode(const RestrictionVerdict& v) {
  json rows = json::array();
  for (const auto& r : v.rows)
    rows.push_back({{"delta", encode(r.delta)}, {"full", encode(r.full)}, {"restricted", encode(r.restricted)}});
  json j{{"ok", v.ok}, {"CR", v.chain_recurrent}, {"rows", rows}};
  if (v.violation) j["violation"] = {{"delta", encode(v.violation->delta)}};
  return j;
}

inline json encode(const FinitenessRow& r) {
  json j{{"delta", encode(r.delta)}, {"components", r.components}, {"periods", r.periods},
         {"crosses", r.crosses}, {"consistent", r.consistent}};
  j["gap"] = r.gap ? encode(*r.gap) : json(nullptr);
  j["ratio_at_gap"] = r.ratio_at_gap ? encode(*r.ratio_at_gap) : json(nullptr);
  j["crossing_radius"] = r.crossing_radius ? encode(*r.crossing_radius) : json(nullptr);
  j["crossing_point"] = r.crossing_point ? json(*r.crossing_point) : json(nullptr);
  return j;
}

inline json encode(const SnowflakeRow& r) {
  return {{"delta", encode(r.delta)}, {"radius", encode(r.radius)}, {"snowflake_radius", encode(r.snowflake_radius)},
          {"holds", r.holds}};
}

template <class T>
json encode_all(const std::vector<T>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back(encode(r));
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string csv_cell(const json& v) {
  std::string s;
  if (v.is_string()) {
    s = v.get<std::string>();
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + csv_cell(v[i]);
  } else if (v.is_null()) {
    s = "";
  } else {
    s = v.dump();
  }
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace detail

/// Flat table from an array of objects; columns in first-seen order, nested
/// objects dropped, arrays joined with ';'.
inline std::string to_csv(const json& rows) {
  if (!rows.is_array()) throw FormatError("CSV export needs an array of rows");
  std::vector<std::string> cols;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.items())
      if (!v.is_object() && std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  std::ostringstream out;
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << "\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << (r.contains(cols[c]) ? detail::csv_cell(r[cols[c]]) : "");
    out << "\n";
  }
  return out.str();
}

}  // namespace shadow::io
