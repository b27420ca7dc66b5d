#include <doctest.h>

#include <algorithm>
#include <map>

#include "fixtures.hpp"
#include "treehom/errors.hpp"
#include "treehom/wtg.hpp"

using namespace treehom;
using fx::T;

namespace {

// Independent evaluation: sum of run weights over all explicit runs.
Rational run_sum(const Wtg& g, const Tree& t) {
  Rational total = 0;
  for (const auto& [q, w] : g.final_weights())
    for (const RunNode& run : enumerate_runs(g, t, q))
      total += w * run_weight(g, run);
  return total;
}

Tree gamma_chain(int n) {
  Tree t = T("alpha");
  for (int i = 0; i < n; ++i) t = Tree("gamma", {t});
  return t;
}

Tree psi(int n, int m) {
  return Tree("psi", {gamma_chain(n), gamma_chain(m)});
}

}  // namespace

TEST_CASE("state weights of the duplicating acceptor") {
  Wtg a = fx::load_wtg("a.wtg");
  CHECK(a.is_wta());
  CHECK(state_weight(a, psi(1, 0), "qf") == 2);
  CHECK(state_weight(a, T("alpha"), "qf") == 0);
  CHECK(state_weight(a, T("gamma(gamma(alpha))"), "q") == 4);
  // cross-check against explicit runs
  auto runs = enumerate_runs(a, T("gamma(gamma(alpha))"), "q");
  CHECK(runs.size() == 1);
  CHECK(run_weight(a, runs.front()) == 4);
}

TEST_CASE("evaluation of the duplicating acceptor") {
  Wtg a = fx::load_wtg("a.wtg");
  CHECK(evaluate(a, psi(1, 1)) == 4);
  CHECK(evaluate(a, Tree("psi", {T("alpha"), psi(0, 0)})) == 0);
  for (int n = 0; n <= 3; ++n)
    for (int m = 0; m + n <= 4; ++m)
      CHECK(evaluate(a, psi(n, m)) == Rational(1 << (n + m)));

  Wtg no_finals(a.alphabet(), a.states(), a.rules(), {});
  CHECK(evaluate(no_finals, psi(1, 1)) == 0);
}

TEST_CASE("evaluation agrees with explicit run enumeration") {
  Wtg a = fx::load_wtg("a.wtg");
  Wtg g = fx::load_wtg("g.wtg");
  for (const Tree& t : enumerate_trees(a.alphabet(), 3))
    CHECK(evaluate(a, t) == run_sum(a, t));
  for (const Tree& t : enumerate_trees(g.alphabet(), 3))
    CHECK(evaluate(g, t) == run_sum(g, t));
}

TEST_CASE("run listings put every position before its prefixes") {
  Wtg a = fx::load_wtg("a.wtg");
  auto runs = enumerate_runs(a, psi(1, 1), "qf");
  REQUIRE(runs.size() == 1);
  auto listing = run_listing(a, runs.front());
  REQUIRE(listing.size() == 5);
  CHECK(listing.back().at.is_root());
  for (std::size_t i = 0; i < listing.size(); ++i)
    for (std::size_t j = i + 1; j < listing.size(); ++j)
      CHECK_FALSE(listing[i].at.is_prefix_of(listing[j].at));
}

TEST_CASE("support enumeration") {
  Wtg a = fx::load_wtg("a.wtg");
  auto h1 = enumerate_support(a, 1);
  REQUIRE(h1.size() == 1);
  CHECK(h1.front().first == psi(0, 0));
  CHECK(h1.front().second == 1);

  auto h2 = enumerate_support(a, 2);
  std::map<Tree, Rational> values(h2.begin(), h2.end());
  CHECK(values.at(psi(1, 0)) == 2);
  CHECK(values.at(psi(0, 1)) == 2);
  CHECK(values.at(psi(1, 1)) == 4);
  CHECK(values.size() == 4);

  Wtg zero = linear_combination({{Rational(1), a}, {Rational(-1), a}});
  CHECK(enumerate_support(zero, 3).empty());
}

TEST_CASE("grammar flattening") {
  Wtg g = fx::load_wtg("g.wtg");
  CHECK_FALSE(g.is_wta());
  Wtg flat = to_wta(g);
  CHECK(flat.is_wta());
  // the multi-node rule g(a,q) ->2 q splits into a ->1 p and g(p,q) ->2 q
  CHECK(flat.states().size() == g.states().size() + 1);
  bool found_leaf_rule = false;
  for (const GrammarRule& r : flat.rules())
    if (r.lhs == T("a") && r.target != "q" && r.weight == 1)
      found_leaf_rule = true;
  CHECK(found_leaf_rule);
  for (const Tree& t : enumerate_trees(g.alphabet(), 4))
    CHECK(evaluate(g, t) == evaluate(flat, t));

  Wtg a = fx::load_wtg("a.wtg");
  CHECK(to_wta(a).str() == a.str());
}

TEST_CASE("linear combinations scale and sum series") {
  Wtg a = fx::load_wtg("a.wtg");
  Wtg doubled = linear_combination({{Rational(3), a}, {Rational(-1), a}});
  Wtg single = linear_combination({{Rational(1), a}});
  for (const Tree& t : enumerate_trees(a.alphabet(), 3)) {
    CHECK(evaluate(doubled, t) == 2 * evaluate(a, t));
    CHECK(evaluate(single, t) == evaluate(a, t));
  }
  Wtg g = fx::load_wtg("g.wtg");
  CHECK_THROWS_AS(linear_combination({{Rational(1), a}, {Rational(1), g}}),
                  ValidationError);
}

TEST_CASE("relabeling merges rules and sums weights") {
  RankedAlphabet sigma{{"a", 0}, {"c1", 1}, {"c2", 1}};
  Wtg g(sigma, {"q"},
        {{T("a"), "q", 1}, {T("c1(q)"), "q", 2}, {T("c2(q)"), "q", -2}},
        {{"q", 1}});
  Wtg merged = relabel_and_merge(g, {{"c1", "c"}, {"c2", "c"}});
  // the two unary rules collapse and cancel
  CHECK(merged.rules().size() == 1);
  CHECK(merged.rules().front().lhs == T("a"));
  // the relabeled series is the push-forward: sum over relabeling preimages
  std::function<Tree(const Tree&)> squash = [&](const Tree& t) -> Tree {
    std::vector<Tree> children;
    for (const Tree& c : t.children()) children.push_back(squash(c));
    std::string label = t.label() == "c1" || t.label() == "c2" ? "c"
                                                               : t.label();
    return Tree(label, std::move(children));
  };
  RankedAlphabet relabeled_sigma{{"a", 0}, {"c", 1}};
  for (const Tree& t : enumerate_trees(relabeled_sigma, 3)) {
    Rational pushed = 0;
    for (const Tree& s : enumerate_trees(sigma, 3))
      if (squash(s) == t) pushed += evaluate(g, s);
    CHECK(evaluate(merged, t) == pushed);
  }

  Wtg a = fx::load_wtg("a.wtg");
  Wtg same = relabel_and_merge(a, {});
  for (const Tree& t : enumerate_trees(a.alphabet(), 3))
    CHECK(evaluate(same, t) == evaluate(a, t));
}

TEST_CASE("zeroness with witnesses") {
  Wtg a = fx::load_wtg("a.wtg");
  ZeronessResult nz = is_zero(a);
  CHECK_FALSE(nz.zero);
  CHECK(*nz.witness == psi(0, 0));

  ZeronessResult self_diff =
      is_zero(linear_combination({{Rational(1), a}, {Rational(-1), a}}));
  CHECK(self_diff.zero);

  Wtg g = fx::load_wtg("g.wtg");
  Wtg flat = to_wta(g);
  // the flattening preserves the series; compare both as one-symbol automata
  ZeronessResult norm_diff = is_zero(
      linear_combination({{Rational(1), flat}, {Rational(-1), flat}}));
  CHECK(norm_diff.zero);

  CHECK_THROWS_AS(is_zero(g), ValidationError);
}

TEST_CASE("zeroness detects a single mutated weight") {
  Wtg a = fx::load_wtg("a.wtg");
  std::vector<GrammarRule> rules = a.rules();
  for (GrammarRule& r : rules)
    if (r.lhs == T("gamma(q)")) r.weight = 3;
  Wtg mutated(a.alphabet(), a.states(), rules, a.final_weights());
  ZeronessResult z = is_zero(
      linear_combination({{Rational(1), a}, {Rational(-1), mutated}}));
  CHECK_FALSE(z.zero);
  CHECK(z.witness->height() <= z.basis_dim + 1);
  CHECK(evaluate(a, *z.witness) != evaluate(mutated, *z.witness));
}

TEST_CASE("zeroness matches bounded support enumeration") {
  Wtg a = fx::load_wtg("a.wtg");
  Wtg self_diff = linear_combination({{Rational(1), a}, {Rational(-1), a}});
  for (const Wtg* g : {&a, &self_diff}) {
    int d = static_cast<int>(to_wta(*g).states().size());
    CHECK(is_zero(*g).zero == enumerate_support(*g, d + 1).empty());
  }
}

TEST_CASE("grammar construction validates its parts") {
  RankedAlphabet sigma{{"a", 0}, {"g", 1}};
  CHECK_THROWS_AS(Wtg(sigma, {"q"}, {{T("a"), "q", 0}}, {}),
                  ValidationError);
  CHECK_THROWS_AS(Wtg(sigma, {"q"}, {{T("a"), "p", 1}}, {}),
                  ValidationError);
  CHECK_THROWS_AS(Wtg(sigma, {"q"}, {{T("q"), "q", 1}}, {}),
                  ValidationError);
  CHECK_THROWS_AS(Wtg(sigma, {"q"}, {}, {{"p", 1}}), ValidationError);
  CHECK_THROWS_AS(Wtg(sigma, {"a"}, {}, {}), ValidationError);
  // identical rules merge; zero-sum rules disappear
  Wtg merged(sigma, {"q"},
             {{T("a"), "q", 2}, {T("a"), "q", 3}, {T("g(q)"), "q", 1},
              {T("g(q)"), "q", -1}},
             {{"q", 1}});
  CHECK(merged.rules().size() == 1);
  CHECK(merged.rules().front().weight == 5);
}
