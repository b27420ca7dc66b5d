#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "treehom/hom.hpp"
#include "treehom/rational.hpp"
#include "treehom/terms.hpp"
#include "treehom/wtg.hpp"

namespace treehom {

// Equivalence relation on the state positions of a left-hand side, stored as
// a canonical partition: only classes with two or more members, each class
// sorted, classes ordered by their least member. Rule equality after
// relabeling is therefore syntactic.
class ConstraintPartition {
 public:
  ConstraintPartition() = default;
  explicit ConstraintPartition(std::vector<std::vector<Position>> classes);

  static ConstraintPartition from_pairs(
      const std::vector<std::pair<Position, Position>>& pairs);

  const std::vector<std::vector<Position>>& classes() const {
    return classes_;
  }
  bool trivial() const { return classes_.empty(); }
  // The class containing p, or nullptr when p's class is a singleton.
  const std::vector<Position>* class_of(const Position& p) const;

  std::string str() const;  // "[2=3, 1=2.1]"; "[]" when trivial
  static ConstraintPartition parse(const std::string& text);

  bool operator==(const ConstraintPartition& o) const {
    return classes_ == o.classes_;
  }

 private:
  std::vector<std::vector<Position>> classes_;
};

struct ConstrainedRule {
  Tree lhs;  // over the alphabet, the states and BOT
  std::string target;
  ConstraintPartition constraints;
  Rational weight;
};

// Constrained automaton with a designated sink state. Identical
// (lhs, target, constraints) rules are merged at construction; rules are
// kept canonically ordered.
class Wtah {
 public:
  Wtah(RankedAlphabet alphabet, std::set<std::string> states,
       std::set<std::string> finals, std::vector<ConstrainedRule> rules,
       std::string sink = kSink);

  const RankedAlphabet& alphabet() const { return alphabet_; }
  const std::set<std::string>& states() const { return states_; }  // sans sink
  const std::set<std::string>& finals() const { return finals_; }
  const std::vector<ConstrainedRule>& rules() const { return rules_; }
  const std::string& sink() const { return sink_; }

  bool is_state_or_sink(const std::string& name) const {
    return name == sink_ || states_.count(name) > 0;
  }
  bool is_sink_rule(const ConstrainedRule& r) const {
    return r.target == sink_;
  }

  // State positions of a lhs (including sink positions), lex order.
  std::vector<std::pair<Position, std::string>> lhs_state_positions(
      const Tree& lhs) const;

  std::string str() const;

 private:
  RankedAlphabet alphabet_;
  std::set<std::string> states_;
  std::set<std::string> finals_;
  std::string sink_;
  std::vector<ConstrainedRule> rules_;
};

struct EqRestrictionReport {
  bool ok;
  std::vector<std::string> diagnostics;  // violated clause + rule
};

// Checks the sink discipline: every symbol has the weight-1 sink rule and
// nothing else targets the sink; in every other rule each constraint class
// carries exactly one non-sink state.
EqRestrictionReport validate_eq_restricted(const Wtah& m);

// Bottom-up evaluation with constraints enforced by structural equality of
// the processed subtrees. The sink processes every tree with weight 1.
class WtahEvaluator {
 public:
  explicit WtahEvaluator(const Wtah& m) : m_(m) {}
  Rational state_weight(const Tree& t, const std::string& q);
  Rational evaluate(const Tree& t);

 private:
  const std::map<std::string, Rational>& weights(const Tree& t);
  const Wtah& m_;
  std::map<Tree, std::map<std::string, Rational>> memo_;
};

Rational wtah_state_weight(const Wtah& m, const Tree& t, const std::string& q);
Rational wtah_evaluate(const Wtah& m, const Tree& t);

// Nonzero-valued trees of height <= max_height, canonically ordered.
// Candidates are generated from runs (sink copies are forced to equal their
// class leader), then filtered by value.
std::vector<std::pair<Tree, Rational>> wtah_enumerate_support(
    const Wtah& m, int max_height, std::size_t cap = 2'000'000);

// Trees of height <= max_height admitting at least one run to q (q != sink).
std::vector<Tree> wtah_trees_with_run(const Wtah& m, const std::string& q,
                                      int max_height,
                                      std::size_t cap = 2'000'000);

// Renames symbols through the rank-preserving map pi, merges identical
// rules, drops zero sums.
Wtah relabel_and_merge(const Wtah& m,
                       const std::map<std::string, std::string>& pi);

// The constrained image of one one-symbol rule: the image of its symbol with
// the least occurrence of each variable replaced by the respective child
// state, every other occurrence by the sink, and all occurrences of one
// variable constrained equal.
ConstrainedRule image_rule(const GrammarRule& r, const Homomorphism& h);

// Constrained automaton recognizing the image series of A under h: rules are
// built per source rule over an annotated alphabet, the annotation is then
// erased by relabel_and_merge (summing weights of collapsing rules). Requires
// a one-symbol-per-rule A with 0/1 final weights and nondeleting, nonerasing
// h. The result is eq-restricted.
Wtah hom_image(const Wtg& a, const Homomorphism& h);

// Runs. A node applies a rule; children follow the state positions of its
// lhs in lexicographic order (sink positions carry their unique sink runs).
struct WtahRunNode {
  int rule_index;
  std::vector<WtahRunNode> children;
};

std::vector<WtahRunNode> wtah_enumerate_runs(const Wtah& m, const Tree& t,
                                             const std::string& q);
Rational wtah_run_weight(const Wtah& m, const WtahRunNode& run);
// The tree a run processes; throws when the run is structurally invalid.
Tree wtah_run_tree(const Wtah& m, const WtahRunNode& run);
// Full run check: shape, labels, constraint satisfaction, target.
bool wtah_is_run(const Wtah& m, const WtahRunNode& run, const Tree& t,
                 const std::string& q);
// The unique run processing t entirely in the sink.
WtahRunNode wtah_sink_run(const Wtah& m, const Tree& t);

// Rule applications of a run listed with every position before its prefixes.
std::vector<RuleApplication> wtah_run_listing(const Wtah& m,
                                              const WtahRunNode& run);

// Binds the state positions of lhs (lex order) to subtrees of t; nothing
// when the symbol skeleton does not match.
std::optional<std::vector<const Tree*>> match_lhs_states(const Wtah& m,
                                                         const Tree& lhs,
                                                         const Tree& t);
// Whether the bound subtrees satisfy the rule's constraint classes.
bool lhs_constraints_hold(const Wtah& m, const ConstrainedRule& r,
                          const std::vector<const Tree*>& bound);

// Maps a run of A for s to a run of hom_image(A, h) for apply(h, s).
WtahRunNode trace_run(const Wtg& a, const Homomorphism& h, const Wtah& image,
                      const Tree& s, const RunNode& run);

struct ImageOracleResult {
  bool ok;
  std::optional<Tree> mismatch;  // first offending tree, canonical order
  Rational claimed_value;
  Rational oracle_value;
  std::size_t trees_checked;
};

// Checks `claimed` against the defining preimage sum: for t in the probe
// set, the claimed value must equal the sum of a's values over all sources
// mapping to t. The probe set holds every tree of height <= max_height that
// can carry weight on either side (all images of sources up to max_height
// and all support candidates of `claimed`), every tree of height <= 2, and
// single-subtree mutations of small image trees as zero probes.
ImageOracleResult check_image_oracle(const Wtah& claimed, const Wtg& a,
                                     const Homomorphism& h, int max_height);

}  // namespace treehom
