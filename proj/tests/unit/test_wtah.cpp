#include <doctest.h>

#include <algorithm>
#include <map>

#include "fixtures.hpp"
#include "treehom/errors.hpp"
#include "treehom/io.hpp"
#include "treehom/wtah.hpp"

using namespace treehom;
using fx::P;
using fx::T;

namespace {

Tree dup_tree() { return T("f(a,g(a,a),g(a,a))"); }

Rational wtah_run_sum(const Wtah& m, const Tree& t) {
  Rational total = 0;
  for (const std::string& q : m.finals())
    for (const WtahRunNode& run : wtah_enumerate_runs(m, t, q))
      total += wtah_run_weight(m, run);
  return total;
}

int find_rule(const Wtah& m, const std::string& lhs,
              const std::string& constraints, const std::string& target) {
  ConstraintPartition cp = ConstraintPartition::parse(constraints);
  for (std::size_t i = 0; i < m.rules().size(); ++i) {
    const ConstrainedRule& r = m.rules()[i];
    if (r.lhs == T(lhs) && r.target == target && r.constraints == cp)
      return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

TEST_CASE("constraint partitions are canonical") {
  ConstraintPartition cp = ConstraintPartition::parse("[3=2, 1=2.1]");
  CHECK(cp.str() == "[1=2.1, 2=3]");
  CHECK(cp.class_of(P("3")) != nullptr);
  CHECK(cp.class_of(P("4")) == nullptr);
  CHECK(ConstraintPartition::parse("[]").trivial());
  CHECK(ConstraintPartition::parse("[2=2]").trivial());

  ConstraintPartition joined = ConstraintPartition::from_pairs(
      {{P("1"), P("2")}, {P("2"), P("3")}});
  CHECK(joined.str() == "[1=2=3]");
  CHECK_THROWS_AS(
      ConstraintPartition({{P("1"), P("2")}, {P("2"), P("3")}}),
      ValidationError);
}

TEST_CASE("eq-restriction validation") {
  Wtah aprime = fx::load_wtah("aprime.wtah");
  CHECK(validate_eq_restricted(aprime).ok);

  // replace the constrained rule by one whose class carries two real states
  std::vector<ConstrainedRule> rules;
  for (const ConstrainedRule& r : aprime.rules())
    if (r.constraints.trivial()) rules.push_back(r);
  rules.push_back({T("f(q,q,q)"), "qf", ConstraintPartition::parse("[2=3]"),
                   Rational(1)});
  Wtah not_restricted(aprime.alphabet(), aprime.states(), aprime.finals(),
                      rules);
  EqRestrictionReport bad = validate_eq_restricted(not_restricted);
  CHECK_FALSE(bad.ok);
  bool clause2 = false;
  for (const std::string& d : bad.diagnostics)
    if (d.find("clause (ii).2") != std::string::npos) clause2 = true;
  CHECK(clause2);

  // drop a sink rule
  std::vector<ConstrainedRule> missing;
  for (const ConstrainedRule& r : aprime.rules())
    if (!(r.target == aprime.sink() && r.lhs.label() == "g"))
      missing.push_back(r);
  EqRestrictionReport no_sink = validate_eq_restricted(
      Wtah(aprime.alphabet(), aprime.states(), aprime.finals(), missing));
  CHECK_FALSE(no_sink.ok);
  bool clause1 = false;
  for (const std::string& d : no_sink.diagnostics)
    if (d.find("clause (i)") != std::string::npos &&
        d.find("'g'") != std::string::npos)
      clause1 = true;
  CHECK(clause1);
}

TEST_CASE("constrained evaluation") {
  Wtah aprime = fx::load_wtah("aprime.wtah");
  CHECK(wtah_state_weight(aprime, dup_tree(), "qf") == 2);
  CHECK(wtah_state_weight(aprime, T("f(a,g(a,a),a)"), "qf") == 0);
  CHECK(wtah_evaluate(aprime, dup_tree()) == 2);
  CHECK(wtah_evaluate(aprime, T("a")) == 0);

  Wtah bprime = fx::load_wtah("bprime.wtah");
  CHECK(wtah_state_weight(bprime, dup_tree(), "qf") == 0);
  CHECK(wtah_evaluate(bprime, dup_tree()) == 0);

  Wtah afinal = fx::load_wtah("afinal.wtah");
  CHECK(wtah_evaluate(afinal, T("f(g(a),g(a))")) == 3);
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; j <= 3; ++j) {
      Tree left = T("a"), right = T("a");
      for (int k = 0; k < i; ++k) left = Tree("g", {left});
      for (int k = 0; k < j; ++k) right = Tree("g", {right});
      CHECK(wtah_evaluate(afinal, Tree("f", {left, right})) == 3);
    }
}

TEST_CASE("the sink processes every tree with weight 1") {
  Wtah aprime = fx::load_wtah("aprime.wtah");
  for (const Tree& t : enumerate_trees(aprime.alphabet(), 2))
    CHECK(wtah_state_weight(aprime, t, aprime.sink()) == 1);
  // and a couple of taller probes
  CHECK(wtah_state_weight(aprime, T("f(g(a,g(a,a)),a,g(g(a,a),a))"),
                          aprime.sink()) == 1);
}

TEST_CASE("evaluation agrees with explicit constrained runs") {
  Wtah aprime = fx::load_wtah("aprime.wtah");
  Wtah afinal = fx::load_wtah("afinal.wtah");
  for (const Tree& t : enumerate_trees(aprime.alphabet(), 2))
    CHECK(wtah_evaluate(aprime, t) == wtah_run_sum(aprime, t));
  for (const Tree& t : enumerate_trees(afinal.alphabet(), 3))
    CHECK(wtah_evaluate(afinal, t) == wtah_run_sum(afinal, t));
  auto runs = wtah_enumerate_runs(aprime, dup_tree(), "qf");
  REQUIRE(runs.size() == 1);
  CHECK(wtah_run_weight(aprime, runs.front()) == 2);
  CHECK(wtah_is_run(aprime, runs.front(), dup_tree(), "qf"));
}

TEST_CASE("image rules") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = fx::load_hom("hom_h.hom");
  std::map<std::string, GrammarRule> by_symbol;
  for (const GrammarRule& r : a.rules()) by_symbol[r.lhs.label()] = r;

  ConstrainedRule psi_rule = image_rule(by_symbol.at("psi"), h);
  CHECK(psi_rule.lhs == T("f(q,q,BOT)"));
  CHECK(psi_rule.target == "qf");
  CHECK(psi_rule.constraints.str() == "[2=3]");
  CHECK(psi_rule.weight == 1);

  ConstrainedRule gamma_rule = image_rule(by_symbol.at("gamma"), h);
  CHECK(gamma_rule.lhs == T("g(a,q)"));
  CHECK(gamma_rule.constraints.trivial());
  CHECK(gamma_rule.weight == 2);

  ConstrainedRule alpha_rule = image_rule(by_symbol.at("alpha"), h);
  CHECK(alpha_rule.lhs == T("a"));
  CHECK(alpha_rule.target == "q");
}

TEST_CASE("image automaton construction") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = fx::load_hom("hom_h.hom");
  Wtah image = hom_image(a, h);
  CHECK(validate_eq_restricted(image).ok);
  CHECK(io::print_wtah(image) == io::print_wtah(fx::load_wtah("aprime.wtah")));

  // the two non-tetris-free extensions reproduce their image automata too
  Wtah bimage = hom_image(fx::load_wtg("b.wtg"), fx::load_hom("hom_phi.hom"));
  CHECK(io::print_wtah(bimage) == io::print_wtah(fx::load_wtah("bprime.wtah")));
  Wtah cimage =
      hom_image(fx::load_wtg("c.wtg"), fx::load_hom("hom_kappa.hom"));
  CHECK(io::print_wtah(cimage) == io::print_wtah(fx::load_wtah("cprime.wtah")));

  // no variables, no constraints
  RankedAlphabet sigma{{"alpha", 0}};
  RankedAlphabet delta{{"a", 0}};
  Wtg tiny(sigma, {"qf"}, {{T("alpha"), "qf", 1}}, {{"qf", 1}});
  Homomorphism tiny_h(sigma, delta, {{"alpha", T("a")}});
  Wtah tiny_image = hom_image(tiny, tiny_h);
  CHECK(tiny_image.rules().size() == 2);  // a -> qf and the sink rule
  CHECK(wtah_evaluate(tiny_image, T("a")) == 1);
}

TEST_CASE("image automaton matches the preimage sums") {
  struct Pair {
    const char* wtg;
    const char* hom;
  };
  for (Pair pair : {Pair{"a.wtg", "hom_h.hom"}, Pair{"a.wtg", "hom_relabel.hom"},
                    Pair{"b.wtg", "hom_phi.hom"},
                    Pair{"c.wtg", "hom_kappa.hom"}}) {
    Wtg a = fx::load_wtg(pair.wtg);
    Homomorphism h =
        io::rebind_source(fx::load_hom(pair.hom), a.alphabet());
    Wtah image = hom_image(a, h);
    ImageOracleResult result = check_image_oracle(image, a, h, 3);
    std::string context = std::string(pair.wtg) + " " + pair.hom +
                          " mismatch at " +
                          (result.mismatch ? result.mismatch->str() : "-");
    INFO(context);
    CHECK(result.ok);
    CHECK(result.trees_checked > 100);
  }
}

TEST_CASE("the corrupted image automaton fails the oracle") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = fx::load_hom("hom_h.hom");
  ImageOracleResult result =
      check_image_oracle(fx::load_wtah("aprime_badweight.wtah"), a, h, 3);
  REQUIRE_FALSE(result.ok);
  CHECK(result.claimed_value != result.oracle_value);
  // the smallest offender exercises the corrupted unary rule
  CHECK(result.mismatch->str() == "f(a,g(a,a),g(a,a))");
}

TEST_CASE("traced runs") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = fx::load_hom("hom_h.hom");
  Wtah image = hom_image(a, h);

  Tree s = T("psi(gamma(alpha),alpha)");
  auto source_runs = enumerate_runs(a, s, "qf");
  REQUIRE(source_runs.size() == 1);
  WtahRunNode traced = trace_run(a, h, image, s, source_runs.front());

  // expected: the constrained rule at the root, the alpha image first, the
  // gamma image second, and the duplicated copy processed by sink rules
  int f_rule = find_rule(image, "f(q,q,BOT)", "[2=3]", "qf");
  int a_rule = find_rule(image, "a", "[]", "q");
  int g_rule = find_rule(image, "g(a,q)", "[]", "q");
  REQUIRE(f_rule >= 0);
  REQUIRE(a_rule >= 0);
  REQUIRE(g_rule >= 0);
  CHECK(traced.rule_index == f_rule);
  REQUIRE(traced.children.size() == 3);
  CHECK(traced.children[0].rule_index == a_rule);
  CHECK(traced.children[1].rule_index == g_rule);
  CHECK(image.rules()[traced.children[2].rule_index].target == image.sink());

  CHECK(wtah_is_run(image, traced, apply(h, s), "qf"));
  CHECK(run_weight(a, source_runs.front()) == 2);
  CHECK(wtah_run_weight(image, traced) == 2);
}

TEST_CASE("every traced source run is a run of the image automaton") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = fx::load_hom("hom_h.hom");
  Wtah image = hom_image(a, h);
  for (const Tree& s : enumerate_trees(a.alphabet(), 2))
    for (const std::string& q : {std::string("q"), std::string("qf")})
      for (const RunNode& run : enumerate_runs(a, s, q))
        CHECK(wtah_is_run(image, trace_run(a, h, image, s, run), apply(h, s),
                          q));
}

TEST_CASE("traced rules cover exactly the non-sink rules") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = fx::load_hom("hom_h.hom");
  Wtah image = hom_image(a, h);
  // merge the per-rule images by (lhs, constraints, target)
  std::map<std::string, Rational> merged;
  for (const GrammarRule& r : a.rules()) {
    ConstrainedRule cr = image_rule(r, h);
    merged[cr.lhs.str() + cr.constraints.str() + cr.target] += cr.weight;
  }
  std::map<std::string, Rational> from_image;
  for (const ConstrainedRule& r : image.rules())
    if (r.target != image.sink())
      from_image[r.lhs.str() + r.constraints.str() + r.target] = r.weight;
  CHECK(merged == from_image);
}

TEST_CASE("support enumeration of constrained automata") {
  Wtah aprime = fx::load_wtah("aprime.wtah");
  auto support = wtah_enumerate_support(aprime, 2);
  std::map<Tree, Rational> values(support.begin(), support.end());
  CHECK(values.size() == 4);
  CHECK(values.at(T("f(a,a,a)")) == 1);
  CHECK(values.at(T("f(g(a,a),a,a)")) == 2);
  CHECK(values.at(dup_tree()) == 2);
  CHECK(values.at(T("f(g(a,a),g(a,a),g(a,a))")) == 4);
  // every support member satisfies the duplication constraint
  for (const auto& [t, v] : wtah_enumerate_support(aprime, 3))
    CHECK(t.subtree(P("2")) == t.subtree(P("3")));
}

TEST_CASE("relabeling a constrained automaton merges cancelling rules") {
  Wtah aprime = fx::load_wtah("aprime.wtah");
  Wtah same = relabel_and_merge(aprime, {});
  CHECK(io::print_wtah(same) == io::print_wtah(aprime));
}
