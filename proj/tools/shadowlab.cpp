// shadowlab: exact shadowing experiments from the command line.
//
// Exit status: 0 when every assertion holds, 2 when a refutation witness was
// produced, 1 on usage or system errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "shadow/constructors.hpp"
#include "shadow/io.hpp"

using namespace shadow;
using io::json;

namespace {

struct Output {
  json report;
  json rows = json::array();
  bool refuted = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

ExactReal parse_real(const std::string& flag, const std::string& text) {
  try {
    return ExactReal::parse(text);
  } catch (const std::exception&) {
    throw UsageError(flag + " expects p/q, got '" + text + "'");
  }
}

std::optional<ExactReal> parse_opt(const std::string& flag, const std::string& text) {
  if (text.empty()) return std::nullopt;
  return parse_real(flag, text);
}

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceArgs {
  std::string example;
  std::string alpha;
  std::string delta;
  std::uint64_t seed = 1;
  std::size_t trials = 1000;
  long k = 2;
  long n = 3;
  std::size_t depth = 6;
};

struct TrialOutcome {
  json certificate;
  bool ok = false;
  ExactReal deviation;
};

// Seeded periodic-tail delta-pseudo-orbits through a constructor.
template <System S, class Run>
Output run_trials(const S& system, const ReproduceArgs& a, const ExactReal& delta, const ExactReal& bound, Run&& run) {
  Output out;
  std::size_t failures = 0;
  json sample, first_failure;
  for (std::size_t t = 0; t < a.trials; ++t) {
    const std::uint64_t seed = a.seed + t;
    const auto xi = random_pseudo_orbit(system, delta, {8, true}, seed);
    TrialOutcome r;
    try {
      r = run(xi);
    } catch (const std::exception& e) {
      r.certificate = {{"error", e.what()}};
    }
    if (!r.ok) {
      ++failures;
      if (first_failure.is_null()) first_failure = {{"seed", seed}, {"pseudo_orbit", io::encode(xi)}, {"result", r.certificate}};
    }
    if (t == 0) sample = {{"pseudo_orbit", io::encode(xi)}, {"certificate", r.certificate}};
    out.rows.push_back({{"trial", t}, {"seed", seed}, {"deviation", io::encode(r.deviation)}, {"bound", io::encode(bound)}, {"ok", r.ok}});
  }
  out.report = {{"example", a.example}, {"system", io::encode(system)}, {"delta", io::encode(delta)},
                {"bound", io::encode(bound)}, {"trials", a.trials}, {"seed", a.seed},
                {"failures", failures}, {"sample", sample}};
  if (!first_failure.is_null()) out.report["witness"] = first_failure;
  out.refuted = failures > 0;
  return out;
}

template <System S, class Build>
TrialOutcome certified(const S& system, const PseudoOrbit<typename S::point_type>& xi, const ExactReal& bound, Build&& build) {
  const auto cert = build(xi);
  TrialOutcome r;
  r.certificate = io::encode(cert);
  const auto check = check_shadowing(system, xi, cert.point, bound);
  r.ok = cert.bound == bound && cert.all_indices && check.ok && check.all_indices;
  r.deviation = check.max_deviation;
  return r;
}

Output reproduce(const ReproduceArgs& a) {
  const auto alpha_or = [&](long dflt) { return a.alpha.empty() ? Rational(dflt) : parse_real("--alpha", a.alpha).rational(); };
  if (a.example == "5.1" || a.example == "5.2") {
    const Rational alpha = alpha_or(2);
    const ExactReal al(alpha);
    const ExactReal delta = a.delta.empty() ? ExactReal(1) / (al * al) : parse_real("--delta", a.delta);
    if (a.example == "5.1") {
      const OneSidedShift s(alpha);
      const ExactReal bound = delta / al;
      return run_trials(s, a, delta, bound, [&](const auto& xi) {
        return certified(s, xi, bound, [&](const auto& x) { return shadow_one_sided_shift(s, x, delta); });
      });
    }
    const TwoSidedShift s(alpha);
    return run_trials(s, a, delta, delta, [&](const auto& xi) {
      return certified(s, xi, delta, [&](const auto& x) { return shadow_two_sided_shift(s, x, delta); });
    });
  }
  if (a.example == "5.3" || a.example == "5.4") {
    const Rational alpha = alpha_or(3);
    const ExactReal al(alpha);
    const ExactReal delta = a.delta.empty() ? ExactReal(1) / (al * al) : parse_real("--delta", a.delta);
    const DistanceTable letters{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    if (a.example == "5.3") {
      const OneSidedShift s(alpha, letters);
      const ExactReal bound = delta / (al - ExactReal(1));
      return run_trials(s, a, delta, bound, [&](const auto& xi) {
        return certified(s, xi, bound, [&](const auto& x) { return shadow_product_one_sided(s, x, delta); });
      });
    }
    const TwoSidedShift s(alpha, letters);
    const ExactReal bound = al * delta / (al - ExactReal(1));
    return run_trials(s, a, delta, bound, [&](const auto& xi) {
      return certified(s, xi, bound, [&](const auto& x) { return shadow_product_two_sided(s, x, delta); });
    });
  }
  if (a.example == "5.8") {
    const SubsequenceMap s(a.k);
    const ExactReal delta = a.delta.empty() ? ExactReal(1, 8) : parse_real("--delta", a.delta);
    const ExactReal bound = ipow(delta, a.k);
    return run_trials(s, a, delta, bound, [&](const auto& xi) {
      const auto cert = shadow_subsequence_fK(s, xi, delta);
      const auto check = check_factorized(s, cert.point, bound);
      return TrialOutcome{io::encode(cert), cert.bound == bound && check.ok && check.all_indices, check.max_deviation};
    });
  }
  if (a.example == "5.7") {
    const CirclePowerMap s(a.n);
    const ExactReal Delta = a.delta.empty()
                                ? ExactReal(a.n - 1) * circle_injectivity_threshold(a.n) / ExactReal(2)
                                : parse_real("--delta", a.delta);
    const ExactReal eps = Delta / ExactReal(a.n - 1);
    const auto sel = circle_selector(s, eps);
    return run_trials(s, a, Delta, eps, [&](const auto& xi) {
      const auto res = lemma11_shadow(s, sel, xi, Delta, eps);
      const auto check = check_shadowing(s, xi, res.point, eps);
      return TrialOutcome{io::encode(res), check.ok && check.all_indices, check.max_deviation};
    });
  }
  if (a.example == "5.5") {
    const Rational alpha = alpha_or(2);
    const ExactReal L = ExactReal(1) / ExactReal(alpha);
    Output out;
    std::size_t exceptions = 0;
    json witness;
    for (std::size_t k = 1; k <= a.depth; ++k) {
      const CylinderTower c{CylinderMap::additive, alpha, k};
      const auto r = ball_equality_check(c.build(2), L);
      out.rows.push_back({{"depth", k}, {"checked", r.checked}, {"ok", r.ok}});
      if (!r.ok) {
        ++exceptions;
        if (witness.is_null()) witness = {{"depth", k}, {"witness", io::encode(*r.witness)}};
      }
    }
    out.report = {{"example", a.example}, {"alpha", io::encode(alpha)}, {"L", io::encode(L)},
                  {"max_depth", a.depth}, {"exceptions", exceptions}, {"depths", out.rows}};
    if (!witness.is_null()) out.report["witness"] = witness;
    out.refuted = exceptions > 0;
    return out;
  }
  throw UsageError("unknown example " + a.example);
}

// ---------------------------------------------------------------------------
// refine

template <System S>
Output refine_with(const S& system, const ShadowOracle<typename S::point_type>& oracle, const std::string& mode,
                   const json& input, const ExactReal& delta) {
  const auto chain = io::decode_chain(system, input.at("chain"));
  Output out;
  try {
    const auto res = mode == "h-shadow"   ? h_shadow_refine(system, oracle, chain, delta)
                     : mode == "periodic" ? periodic_refine(system, oracle, chain, delta)
                                          : periodic_refine_ultrametric(system, oracle, chain, delta);
    out.report = io::encode(res);
    out.report["mode"] = mode;
    out.report["L"] = io::encode(oracle.L);
    out.report["delta"] = io::encode(delta);
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
      out.rows.push_back({{"step", i}, {"y", res.trace[i].y.str()}, {"budget", io::encode(res.trace[i].budget)},
                          {"endpoint_gap", io::encode(res.trace[i].endpoint_gap)}});
    }
  } catch (const RefineRefused& e) {
    throw UsageError(std::string("refused: ") + e.what());
  } catch (const OracleFault& e) {
    out.report = {{"mode", mode}, {"refuted", e.what()}, {"witness", e.witness()}};
    out.refuted = true;
  }
  return out;
}

Output refine(const std::string& mode, const std::string& path, const std::string& L_text) {
  const json input = read_json(path);
  const auto system = io::decode_system(input.at("system"));
  const ExactReal delta = io::decode_real(input.at("delta"));
  if (auto* s = std::get_if<OneSidedShift>(&system)) {
    if (s->metric().alphabet()) throw UsageError("the shift oracle needs the binary one-sided shift");
    return refine_with(*s, one_sided_shift_oracle(*s), mode, input, delta);
  }
  if (auto* f = std::get_if<FiniteSystem>(&system)) {
    std::string text = L_text;
    if (text.empty() && input.contains("L")) text = input["L"].get<std::string>();
    if (text.empty()) throw UsageError("finite systems need --L (or \"L\" in the chain file)");
    std::optional<ExactReal> delta0;
    if (input.contains("delta0")) delta0 = io::decode_real(input["delta0"]);
    return refine_with(*f, finite_search_oracle(*f, parse_real("--L", text), delta0), mode, input, delta);
  }
  throw UsageError("refine supports the one-sided shift and finite systems");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact shadowing lab"};
  app.require_subcommand(1);
  bool csv = false;
  app.add_flag("--csv", csv, "emit a flat CSV table instead of JSON");

  ReproduceArgs rep;
  auto* reproduce_cmd = app.add_subcommand("reproduce", "re-run a named construction on seeded inputs");
  reproduce_cmd->add_option("--example", rep.example)->required()->check(CLI::IsMember({"5.1", "5.2", "5.3", "5.4", "5.5", "5.7", "5.8"}));
  reproduce_cmd->add_option("--alpha", rep.alpha, "weight base p/q");
  reproduce_cmd->add_option("--delta", rep.delta, "pseudo-orbit defect p/q");
  reproduce_cmd->add_option("--seed", rep.seed);
  reproduce_cmd->add_option("--trials", rep.trials);
  reproduce_cmd->add_option("--K", rep.k, "subsequence step")->check(CLI::Range(2L, 8L));
  reproduce_cmd->add_option("--n", rep.n, "circle power")->check(CLI::Range(2L, 64L));
  reproduce_cmd->add_option("--depth", rep.depth, "largest cylinder depth")->check(CLI::Range(1, 8));

  std::string system_path, delta_text, L_text, delta0_text, chain_path, mode;
  std::size_t horizon = 6, samples = 2000;
  std::uint64_t seed = 1;
  bool exhaustive = false, dot = false;

  auto* estimate_cmd = app.add_subcommand("estimate", "horizon-T shadowing constant of a finite system");
  estimate_cmd->add_option("--system", system_path)->required();
  estimate_cmd->add_option("--horizon", horizon, "pseudo-orbit length; 0 means every length")->required();
  estimate_cmd->add_flag("--exhaustive", exhaustive);
  estimate_cmd->add_option("--seed", seed);
  estimate_cmd->add_option("--samples", samples);

  auto* decompose_cmd = app.add_subcommand("decompose", "chain components and cyclic classes at delta");
  decompose_cmd->add_option("--system", system_path)->required();
  decompose_cmd->add_option("--delta", delta_text)->required();
  decompose_cmd->add_flag("--dot", dot, "print the delta-view as Graphviz DOT");

  auto* ball_cmd = app.add_subcommand("ball-check", "B_delta(f(x)) inside f(B_{L delta}(x)) up to delta0");
  ball_cmd->add_option("--system", system_path)->required();
  ball_cmd->add_option("--L", L_text)->required();
  ball_cmd->add_option("--delta0", delta0_text);

  auto* thm_cmd = app.add_subcommand("thm16", "shadowing versus ball expansion on an ultrametric system");
  thm_cmd->add_option("--system", system_path)->required();
  thm_cmd->add_option("--L", L_text)->required();
  thm_cmd->add_option("--delta0", delta0_text);
  thm_cmd->add_option("--horizon", horizon);

  auto* refine_cmd = app.add_subcommand("refine", "refine a chain or cycle to an exact orbit");
  refine_cmd->add_option("mode", mode)->required()->check(CLI::IsMember({"h-shadow", "periodic", "periodic-ultra"}));
  refine_cmd->add_option("--chain", chain_path, "JSON {system, chain, delta[, L, delta0]}")->required();
  refine_cmd->add_option("--L", L_text, "oracle constant for finite systems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    Output out;
    if (*reproduce_cmd) {
      out = reproduce(rep);
    } else if (*estimate_cmd) {
      const auto s = io::decode_finite_only(read_json(system_path));
      RadiusOptions opts;
      opts.horizon = horizon == 0 ? std::nullopt : std::optional<std::size_t>(horizon);
      opts.exhaustive = exhaustive || s.size() <= opts.budget.max_points;
      opts.seed = seed;
      opts.samples = samples;
      const auto r = estimate_L(s, opts, system_path);
      out.report = io::encode(r);
      out.rows = out.report["points"];
    } else if (*decompose_cmd) {
      const auto s = io::decode_finite_only(read_json(system_path));
      const ExactReal delta = parse_real("--delta", delta_text);
      const ChainGraph g(s);
      if (dot) {
        std::cout << g.dot(delta);
        return 0;
      }
      const auto d = chain_components(g, delta);
      out.report = io::encode(d, s);
      for (std::size_t c = 0; c < d.components.size(); ++c)
        for (std::size_t i = 0; i < d.components[c].cyclic.classes.size(); ++i)
          for (auto v : d.components[c].cyclic.classes[i])
            out.rows.push_back({{"vertex", s.label(v)}, {"component", c}, {"period", d.components[c].cyclic.period}, {"class", i}});
    } else if (*ball_cmd) {
      const auto s = io::decode_finite_only(read_json(system_path));
      const auto b = ball_expanding_check(s, parse_real("--L", L_text), parse_opt("--delta0", delta0_text));
      out.report = io::encode(b);
      out.rows.push_back(out.report);
      out.refuted = !b.ok;
    } else if (*thm_cmd) {
      const auto s = io::decode_finite_only(read_json(system_path));
      const auto v = theorem16_harness(s, parse_real("--L", L_text), parse_opt("--delta0", delta0_text), horizon);
      out.report = io::encode(v);
      out.rows.push_back(out.report);
      out.refuted = !v.agree;
    } else if (*refine_cmd) {
      out = refine(mode, chain_path, L_text);
    }
    if (csv) {
      std::cout << io::to_csv(out.rows);
    } else {
      std::cout << out.report.dump(2) << "\n";
    }
    return out.refuted ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "shadowlab: " << e.what() << "\n";
    return 1;
  }
}
