#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treehom/wtah.hpp"
#include "treehom/wtg.hpp"

namespace treehom {

// A rule's left-hand side with every state position overwritten by the sink;
// arity counts the non-sink state positions.
struct DeltaPart {
  Tree shape;
  int arity;
};

// Throws on sink rules (their fragment carries no states to blank).
DeltaPart delta_part(const Wtah& m, const ConstrainedRule& r);

// Everything the translated automaton remembers about one fragment symbol.
struct HatSymbol {
  std::string name;  // "[f(BOT,BOT,BOT)]"; bare name for one-node shapes
  Tree shape;
  std::vector<Position> leaders;       // non-sink state positions, lex
  std::vector<int> leader_depths;      // |p| within the original lhs
  std::vector<bool> leader_constrained;  // class of the leader is nontrivial
  std::vector<std::pair<Position, std::size_t>> copies;  // sink pos -> leader
  ConstraintPartition constraints;     // as in the source rules
};

struct HatContext {
  Wtah source;
  Wtg hat;  // one-symbol-per-rule automaton over the fragment alphabet
  std::map<std::string, HatSymbol> symbols;
  int max_lhs_height;  // over non-sink rules of the source
};

struct PreconditionReport {
  bool ok;
  std::vector<std::string> diagnostics;
};

// The translation is well-defined iff rules with equal fragments agree on
// their constraint sets and on the placement of their non-sink positions.
PreconditionReport validate_hat_preconditions(const Wtah& m);

// Builds the fragment automaton; throws PreconditionError (with the report's
// diagnostics) when the translation is not well-defined.
HatContext build_hat_wta(const Wtah& m);

// Rewrites t over the fragment alphabet: root fragment applied, recurse at
// the non-sink state positions, sink copies dropped. Throws when t admits no
// run to a non-sink state or when two runs decompose it differently.
Tree hat_tree(const HatContext& ctx, const Tree& t);
// Inverse: re-expands fragments and duplicates each leader's subtree into
// its constrained sink copies.
Tree unhat_tree(const HatContext& ctx, const Tree& t_hat);

// N = (number of states of the fragment automaton) x (max height of a
// non-sink left-hand side), at least 1.
int pumping_constant(const HatContext& ctx);
int pumping_constant(const Wtah& m);

// Counter-annotated copy of the fragment automaton: states carry a value in
// [1..N] growing by the depth of the child position, capped at N; children
// at constrained positions must carry a value below N. Removing its series
// from the fragment automaton's leaves exactly the trees with a large
// constrained subtree.
Wtg build_counter_wta(const HatContext& ctx, int N);

// Counter value the annotated automaton assigns to a fragment tree.
// Independent oracle for tests.
int counter_measure(const HatContext& ctx, const Tree& t_hat, int N);

struct LdpWitness {
  Tree tree;
  Position rule_position;         // where the constraining rule applies
  Position constrained_position;  // within that rule's left-hand side
  int subtree_height;
};

struct LdpReport {
  bool has_ldp;
  std::optional<LdpWitness> witness;
  int N = 0;
  int N_hat = 0;
  int basis_dim = 0;
};

// Decides the large duplication property: the difference of the fragment
// automaton and its counter-annotated copy is zero iff every constrained
// subtree of every accepted tree stays below the pumping threshold. On a
// positive answer the witness is the canonically least accepted tree with a
// constrained subtree of height >= N.
LdpReport decide_ldp(const Wtah& m);

// The decomposition skeleton of t: one entry per fragment application, with
// its absolute position. Positions ordered root-first.
struct DecompositionNode {
  Position at;
  const HatSymbol* symbol;
};
std::vector<DecompositionNode> decomposition(const HatContext& ctx,
                                             const Tree& t);

}  // namespace treehom
