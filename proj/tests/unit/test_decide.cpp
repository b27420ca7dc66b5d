#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "treehom/decide.hpp"
#include "treehom/errors.hpp"
#include "treehom/io.hpp"

using namespace treehom;
using fx::T;

namespace {

Rational preimage_sum(const Wtg& a, const Homomorphism& h, const Tree& t,
                      PreimageFinder& finder, WtgEvaluator& eval) {
  Rational total = 0;
  for (const Tree& s : finder.preimages(t)) total += eval.evaluate(s);
  return total;
}

// Renames states through a fixed scheme and shuffles the rule order.
Wtg scrambled(const Wtg& g, unsigned seed) {
  std::map<std::string, std::string> renamed;
  int i = 0;
  for (const std::string& q : g.states())
    renamed[q] = "s" + std::to_string(seed) + "_" + std::to_string(i++);
  std::function<Tree(const Tree&)> rename = [&](const Tree& t) -> Tree {
    if (t.is_leaf() && renamed.count(t.label()))
      return Tree(renamed.at(t.label()));
    std::vector<Tree> children;
    for (const Tree& c : t.children()) children.push_back(rename(c));
    return Tree(t.label(), std::move(children));
  };
  std::vector<GrammarRule> rules;
  for (const GrammarRule& r : g.rules())
    rules.push_back({rename(r.lhs), renamed.at(r.target), r.weight});
  std::mt19937 rng(seed);
  std::shuffle(rules.begin(), rules.end(), rng);
  std::set<std::string> states;
  for (const auto& [from, to] : renamed) states.insert(to);
  std::map<std::string, Rational> finals;
  for (const auto& [q, w] : g.final_weights()) finals[renamed.at(q)] = w;
  return Wtg(g.alphabet(), std::move(states), std::move(rules),
             std::move(finals));
}

}  // namespace

TEST_CASE("linearization of the bounded-duplication automaton") {
  Wtah afin = fx::load_wtah("afin.wtah");
  Wtg lin = linearize(afin, 2);
  REQUIRE(lin.rules().size() == 2);
  std::set<std::string> rules;
  for (const GrammarRule& r : lin.rules())
    rules.insert(r.lhs.str() + " -> " + r.target + " @ " +
                 rational_str(r.weight));
  CHECK(rules.count("a -> q @ 1"));
  CHECK(rules.count("f(a,a) -> qf @ 1"));
  for (const Tree& t : enumerate_trees(afin.alphabet(), 3))
    CHECK(evaluate(lin, t) == wtah_evaluate(afin, t));
}

TEST_CASE("rules without constraints are copied unchanged") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism rel =
      io::rebind_source(fx::load_hom("hom_relabel.hom"), a.alphabet());
  Wtah image = hom_image(a, rel);
  Wtg lin = linearize(image, 2);
  CHECK(lin.rules().size() == 3);
  for (const GrammarRule& r : lin.rules()) {
    bool matched = false;
    for (const ConstrainedRule& cr : image.rules())
      if (cr.lhs == r.lhs && cr.target == r.target && cr.weight == r.weight)
        matched = true;
    CHECK(matched);
  }
}

TEST_CASE("collapsing instantiations sum their weights") {
  RankedAlphabet delta{{"a", 0}, {"f", 2}};
  Wtah m(delta, {"q", "qf"}, {"qf"},
         {{T("a"), "q", ConstraintPartition{}, 1},
          {T("f(q,BOT)"), "qf", ConstraintPartition::parse("[1=2]"), 2},
          {T("f(BOT,q)"), "qf", ConstraintPartition::parse("[1=2]"), 1},
          {T("a"), kSink, ConstraintPartition{}, 1},
          {T("f(BOT,BOT)"), kSink, ConstraintPartition{}, 1}});
  REQUIRE(validate_eq_restricted(m).ok);
  Wtg lin = linearize(m, 2);
  bool found = false;
  for (const GrammarRule& r : lin.rules())
    if (r.lhs == T("f(a,a)") && r.target == "qf" && r.weight == 3)
      found = true;
  CHECK(found);
  for (const Tree& t : enumerate_trees(delta, 3))
    CHECK(evaluate(lin, t) == wtah_evaluate(m, t));
}

TEST_CASE("linearization honours its rule cap") {
  Wtah afin = fx::load_wtah("afin.wtah");
  CHECK_THROWS_AS(linearize(afin, 2, 1), EnumerationLimitError);
}

TEST_CASE("the duplicating image is not regular") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = io::rebind_source(fx::load_hom("hom_h.hom"), a.alphabet());
  Decision decision = decide_hom(a, h);
  CHECK_FALSE(decision.regular);
  REQUIRE(decision.ldp.has_value());
  CHECK(decision.ldp->has_ldp);
  REQUIRE(decision.ldp->witness.has_value());
  CHECK(decision.ldp->witness->subtree_height >= decision.ldp->N);
  CHECK_FALSE(decision.certificate.has_value());
  CHECK(decision.trace.size() == 3);
}

TEST_CASE("the relabeled image is regular with a sound certificate") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism rel =
      io::rebind_source(fx::load_hom("hom_relabel.hom"), a.alphabet());
  Decision decision = decide_hom(a, rel);
  CHECK(decision.regular);
  REQUIRE(decision.certificate.has_value());

  Wtah image = hom_image(a, rel);
  PreimageFinder finder(rel);
  WtgEvaluator source_eval(a);
  WtgEvaluator cert_eval(*decision.certificate);
  WtahEvaluator image_eval(image);
  for (const Tree& t : enumerate_trees(rel.target(), 3)) {
    Rational expected = preimage_sum(a, rel, t, finder, source_eval);
    CHECK(cert_eval.evaluate(t) == expected);
    CHECK(image_eval.evaluate(t) == expected);
  }
}

TEST_CASE("non-tetris-free inputs are rejected with a witness") {
  Wtg b = fx::load_wtg("b.wtg");
  Homomorphism hphi =
      io::rebind_source(fx::load_hom("hom_phi.hom"), b.alphabet());
  CHECK_THROWS_AS(decide_hom(b, hphi), RejectedInputError);
  try {
    decide_hom(b, hphi);
  } catch (const RejectedInputError& e) {
    CHECK(e.reason == "not-tetris-free");
    REQUIRE(e.witness.has_value());
    CHECK(apply(hphi, e.witness->first) == apply(hphi, e.witness->second));
  }

  RankedAlphabet sigma{{"alpha", 0}, {"sigma", 2}};
  RankedAlphabet delta{{"a", 0}, {"f", 3}};
  Wtg tiny(sigma, {"q"}, {{T("alpha"), "q", 1}}, {{"q", 1}});
  Homomorphism deleting(sigma, delta,
                        {{"alpha", T("a")}, {"sigma", T("f(x1,x1,a)")}});
  CHECK_THROWS_AS(decide_hom(tiny, deleting), RejectedInputError);
}

TEST_CASE("decisions are stable under renaming and rule order") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = io::rebind_source(fx::load_hom("hom_h.hom"), a.alphabet());
  Decision reference = decide_hom(a, h);
  Homomorphism rel =
      io::rebind_source(fx::load_hom("hom_relabel.hom"), a.alphabet());
  Decision reference_reg = decide_hom(a, rel);
  for (unsigned seed : {1u, 2u, 3u}) {
    Wtg variant = scrambled(a, seed);
    Decision d = decide_hom(variant, h);
    CHECK(d.regular == reference.regular);
    CHECK(d.ldp->witness->tree == reference.ldp->witness->tree);
    CHECK(d.ldp->witness->rule_position ==
          reference.ldp->witness->rule_position);
    CHECK(d.ldp->witness->constrained_position ==
          reference.ldp->witness->constrained_position);

    Decision dr = decide_hom(variant, rel);
    CHECK(dr.regular == reference_reg.regular);
    REQUIRE(dr.certificate.has_value());
    WtgEvaluator lhs(*dr.certificate);
    WtgEvaluator rhs(*reference_reg.certificate);
    for (const Tree& t : enumerate_trees(rel.target(), 3))
      CHECK(lhs.evaluate(t) == rhs.evaluate(t));
  }
}
