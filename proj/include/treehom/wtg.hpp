#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "treehom/rational.hpp"
#include "treehom/terms.hpp"

namespace treehom {

// lhs is a tree over the alphabet and the states (states occur as leaves and
// the root is a symbol); weight is nonzero.
struct GrammarRule {
  Tree lhs;
  std::string target;
  Rational weight;
};

// Weighted tree grammar over the rational field. Final states are encoded as
// final weights; a classical acceptor has weight 1 on its final states.
// Identical (lhs, target) rules are merged at construction by summing their
// weights; zero sums are dropped. Rules are kept in a canonical order, so two
// grammars with the same content compare equal regardless of input order.
class Wtg {
 public:
  Wtg(RankedAlphabet alphabet, std::set<std::string> states,
      std::vector<GrammarRule> rules,
      std::map<std::string, Rational> final_weights);

  const RankedAlphabet& alphabet() const { return alphabet_; }
  const std::set<std::string>& states() const { return states_; }
  const std::vector<GrammarRule>& rules() const { return rules_; }
  const std::map<std::string, Rational>& final_weights() const {
    return final_weights_;
  }

  bool is_state(const std::string& name) const { return states_.count(name); }
  // True when every rule reads exactly one symbol (lhs root only).
  bool is_wta() const;

  std::string str() const;

 private:
  RankedAlphabet alphabet_;
  std::set<std::string> states_;
  std::vector<GrammarRule> rules_;
  std::map<std::string, Rational> final_weights_;
};

// Bottom-up evaluation, memoized per evaluator instance. Reuse one instance
// when sweeping many trees over the same grammar.
class WtgEvaluator {
 public:
  explicit WtgEvaluator(const Wtg& g) : g_(g) {}
  Rational state_weight(const Tree& t, const std::string& q);
  Rational evaluate(const Tree& t);

 private:
  const std::map<std::string, Rational>& weights(const Tree& t);
  const Wtg& g_;
  std::map<Tree, std::map<std::string, Rational>> memo_;
};

Rational state_weight(const Wtg& g, const Tree& t, const std::string& q);
Rational evaluate(const Wtg& g, const Tree& t);

// All trees t with height <= max_height and nonzero value, with their values,
// in canonical (height, size, lex) order.
std::vector<std::pair<Tree, Rational>> enumerate_support(
    const Wtg& g, int max_height, std::size_t cap = 2'000'000);

// Trees of height <= max_height that admit at least one run to q.
std::vector<Tree> trees_with_run(const Wtg& g, const std::string& q,
                                 int max_height, std::size_t cap = 2'000'000);

// Flattens every multi-node left-hand side with fresh intermediate states;
// the result reads one symbol per rule and recognizes the same series.
Wtg to_wta(const Wtg& g);

// Disjoint union; final weights of the i-th summand are scaled by its
// coefficient. All summands must share one alphabet.
Wtg linear_combination(const std::vector<std::pair<Rational, Wtg>>& parts);

// Renames symbols through the rank-preserving map pi (symbols not in the map
// stay), merges now-identical rules by summing weights, drops zero sums.
Wtg relabel_and_merge(const Wtg& g, const std::map<std::string, std::string>& pi);

struct ZeronessResult {
  bool zero;
  std::optional<Tree> witness;  // minimal-height support member when nonzero
  int basis_dim;
};

// Decides whether the recognized series is identically zero by closing the
// space spanned by the state-weight vectors of trees under all rules; the
// dimension is bounded by the number of states. Requires is_wta().
ZeronessResult is_zero(const Wtg& g);

// Explicit runs, used as the independent evaluation oracle. A run node holds
// the applied rule; children correspond to the state positions of its lhs in
// lexicographic order.
struct RunNode {
  int rule_index;
  std::vector<RunNode> children;
};

std::vector<RunNode> enumerate_runs(const Wtg& g, const Tree& t,
                                    const std::string& q);
Rational run_weight(const Wtg& g, const RunNode& run);

// The positions (within the evaluated tree) where a run applies its rules,
// listed so that every position precedes its prefixes (root comes last).
struct RuleApplication {
  int rule_index;
  Position at;
};
std::vector<RuleApplication> run_listing(const Wtg& g, const RunNode& run);

// State positions of a lhs in lexicographic order, with their state labels.
std::vector<std::pair<Position, std::string>> lhs_state_positions(
    const Wtg& g, const Tree& lhs);

}  // namespace treehom
