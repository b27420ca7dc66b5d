#include "treehom/wtg.hpp"

#include <algorithm>
#include <sstream>

#include "treehom/errors.hpp"

namespace treehom {

namespace {

std::string rule_str(const GrammarRule& r) {
  return r.lhs.str() + " -> " + r.target + " @ " + rational_str(r.weight);
}

void validate_lhs(const RankedAlphabet& alphabet,
                  const std::set<std::string>& states, const Tree& lhs) {
  if (lhs.is_leaf() && states.count(lhs.label()))
    throw ValidationError("left-hand side must not be a bare state: " +
                          lhs.str());
  validate_tree(alphabet, lhs, states);
  // States may only occur as leaves; validate_tree already enforces that any
  // non-leaf node is an alphabet symbol, and symbols/states are disjoint.
}

}  // namespace

Wtg::Wtg(RankedAlphabet alphabet, std::set<std::string> states,
         std::vector<GrammarRule> rules,
         std::map<std::string, Rational> final_weights)
    : alphabet_(std::move(alphabet)), states_(std::move(states)) {
  for (const std::string& q : states_) {
    if (q.empty()) throw ValidationError("empty state name");
    if (q == kHole || is_variable(q))
      throw ValidationError("'" + q + "' is reserved and cannot be a state");
    if (alphabet_.contains(q))
      throw ValidationError("name '" + q + "' is both a state and a symbol");
  }
  for (const auto& [q, w] : final_weights) {
    if (!states_.count(q))
      throw ValidationError("final weight on unknown state '" + q + "'");
    if (w != 0) final_weights_[q] = w;
  }
  // Merge identical (lhs, target) rules; a zero-weight rule is meaningless.
  std::map<std::pair<std::string, std::string>, GrammarRule> merged;
  for (GrammarRule& r : rules) {
    if (r.weight == 0)
      throw ValidationError("rule with weight 0: " + rule_str(r));
    if (!states_.count(r.target))
      throw ValidationError("rule targets unknown state: " + rule_str(r));
    validate_lhs(alphabet_, states_, r.lhs);
    auto key = std::make_pair(r.lhs.str(), r.target);
    auto it = merged.find(key);
    if (it == merged.end())
      merged.emplace(key, std::move(r));
    else
      it->second.weight += r.weight;
  }
  for (auto& [key, r] : merged)
    if (r.weight != 0) rules_.push_back(std::move(r));
  // merged is key-ordered, so rules_ is canonical already.
}

bool Wtg::is_wta() const {
  for (const GrammarRule& r : rules_) {
    for (const Tree& c : r.lhs.children())
      if (!(c.is_leaf() && states_.count(c.label()))) return false;
  }
  return true;
}

std::string Wtg::str() const {
  std::ostringstream out;
  out << "wtg G over Q {\n  states ";
  bool first = true;
  for (const std::string& q : states_) {
    if (!first) out << ", ";
    out << q;
    first = false;
  }
  out << ";\n";
  for (const auto& [q, w] : final_weights_)
    out << "  final " << q << ": " << rational_str(w) << ";\n";
  for (const GrammarRule& r : rules_)
    out << "  rule " << r.lhs.str() << " -> " << r.target << " @ "
        << rational_str(r.weight) << ";\n";
  out << "}\n";
  return out.str();
}

std::vector<std::pair<Position, std::string>> lhs_state_positions(
    const Wtg& g, const Tree& lhs) {
  std::vector<std::pair<Position, std::string>> out;
  for (const Position& p : lhs.positions()) {
    const std::string& label = lhs.label_at(p);
    if (g.is_state(label)) out.emplace_back(p, label);
  }
  return out;
}

namespace {

// Binds each state position of lhs to the corresponding subtree of t, or
// returns nothing when the symbol skeleton does not match.
std::optional<std::vector<std::pair<std::string, const Tree*>>> match_lhs(
    const Wtg& g, const Tree& lhs, const Tree& t) {
  std::vector<std::pair<std::string, const Tree*>> bindings;
  struct Frame {
    const Tree* pattern;
    const Tree* subject;
  };
  std::vector<Frame> stack{{&lhs, &t}};
  while (!stack.empty()) {
    auto [pattern, subject] = stack.back();
    stack.pop_back();
    if (pattern->is_leaf() && g.is_state(pattern->label())) {
      bindings.emplace_back(pattern->label(), subject);
      continue;
    }
    if (pattern->label() != subject->label() ||
        pattern->children().size() != subject->children().size())
      return std::nullopt;
    for (std::size_t i = pattern->children().size(); i-- > 0;)
      stack.push_back({&pattern->children()[i], &subject->children()[i]});
  }
  // Stack discipline above visits positions in lexicographic order.
  return bindings;
}

}  // namespace

const std::map<std::string, Rational>& WtgEvaluator::weights(const Tree& t) {
  auto it = memo_.find(t);
  if (it != memo_.end()) return it->second;
  std::map<std::string, Rational> row;
  for (const GrammarRule& r : g_.rules()) {
    auto bindings = match_lhs(g_, r.lhs, t);
    if (!bindings) continue;
    Rational w = r.weight;
    for (const auto& [q, sub] : *bindings) {
      const auto& sub_row = weights(*sub);
      auto sit = sub_row.find(q);
      if (sit == sub_row.end()) {
        w = 0;
        break;
      }
      w *= sit->second;
    }
    if (w != 0) {
      row[r.target] += w;
      if (row[r.target] == 0) row.erase(r.target);
    }
  }
  return memo_.emplace(t, std::move(row)).first->second;
}

Rational WtgEvaluator::state_weight(const Tree& t, const std::string& q) {
  const auto& row = weights(t);
  auto it = row.find(q);
  return it == row.end() ? Rational(0) : it->second;
}

Rational WtgEvaluator::evaluate(const Tree& t) {
  Rational total = 0;
  const auto& row = weights(t);
  for (const auto& [q, w] : g_.final_weights()) {
    auto it = row.find(q);
    if (it != row.end()) total += w * it->second;
  }
  return total;
}

Rational state_weight(const Wtg& g, const Tree& t, const std::string& q) {
  return WtgEvaluator(g).state_weight(t, q);
}

Rational evaluate(const Wtg& g, const Tree& t) {
  return WtgEvaluator(g).evaluate(t);
}

namespace {

// Trees of height <= max_height with at least one run to each state.
std::map<std::string, std::set<Tree>> reach_sets(const Wtg& g, int max_height,
                                                 std::size_t cap) {
  std::map<std::string, std::set<Tree>> reach;
  for (const std::string& q : g.states()) reach[q];
  std::size_t total = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const GrammarRule& r : g.rules()) {
      auto state_pos = lhs_state_positions(g, r.lhs);
      std::size_t k = state_pos.size();
      std::vector<const std::set<Tree>*> pools;
      pools.reserve(k);
      bool empty_pool = false;
      for (const auto& [p, q] : state_pos) {
        pools.push_back(&reach[q]);
        if (pools.back()->empty()) empty_pool = true;
      }
      if (empty_pool) continue;
      std::vector<std::set<Tree>::const_iterator> its(k);
      for (std::size_t i = 0; i < k; ++i) its[i] = pools[i]->begin();
      while (true) {
        Tree t = r.lhs;
        for (std::size_t i = 0; i < k; ++i)
          t = t.substituted(state_pos[i].first, *its[i]);
        if (t.height() <= max_height && reach[r.target].insert(t).second) {
          changed = true;
          if (++total > cap)
            throw EnumerationLimitError(
                "support enumeration exceeded cap of " + std::to_string(cap));
        }
        bool done = k == 0;
        std::size_t i = k;
        while (i-- > 0) {
          if (++its[i] != pools[i]->end()) break;
          its[i] = pools[i]->begin();
          if (i == 0) done = true;  // wrapped around every pool
        }
        if (done) break;
      }
    }
  }
  return reach;
}

}  // namespace

std::vector<Tree> trees_with_run(const Wtg& g, const std::string& q,
                                 int max_height, std::size_t cap) {
  auto reach = reach_sets(g, max_height, cap);
  std::vector<Tree> out(reach[q].begin(), reach[q].end());
  std::sort(out.begin(), out.end(), [](const Tree& a, const Tree& b) {
    return compare_height_size_lex(a, b) < 0;
  });
  return out;
}

std::vector<std::pair<Tree, Rational>> enumerate_support(const Wtg& g,
                                                         int max_height,
                                                         std::size_t cap) {
  auto reach = reach_sets(g, max_height, cap);
  std::set<Tree> candidates;
  for (const auto& [q, w] : g.final_weights())
    candidates.insert(reach[q].begin(), reach[q].end());
  WtgEvaluator eval(g);
  std::vector<std::pair<Tree, Rational>> out;
  for (const Tree& t : candidates) {
    Rational v = eval.evaluate(t);
    if (v != 0) out.emplace_back(t, v);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return compare_height_size_lex(a.first, b.first) < 0;
  });
  return out;
}

namespace {

std::string fresh_name(const std::string& base,
                       const std::set<std::string>& taken,
                       const RankedAlphabet& alphabet) {
  std::string name = base;
  while (taken.count(name) || alphabet.contains(name) || is_reserved(name))
    name += "_";
  return name;
}

}  // namespace

Wtg to_wta(const Wtg& g) {
  if (g.is_wta()) return g;
  std::set<std::string> states = g.states();
  std::vector<GrammarRule> rules;
  std::map<Tree, std::string> subtree_state;
  int counter = 0;

  // Returns a state deriving exactly the given lhs fragment with weight 1.
  std::function<std::string(const Tree&)> state_for = [&](const Tree& u)
      -> std::string {
    if (u.is_leaf() && g.is_state(u.label())) return u.label();
    auto it = subtree_state.find(u);
    if (it != subtree_state.end()) return it->second;
    std::string name = fresh_name("p" + std::to_string(counter++), states,
                                  g.alphabet());
    states.insert(name);
    subtree_state.emplace(u, name);
    std::vector<Tree> children;
    children.reserve(u.children().size());
    for (const Tree& c : u.children())
      children.push_back(Tree(state_for(c)));
    rules.push_back({Tree(u.label(), std::move(children)), name, Rational(1)});
    return name;
  };

  for (const GrammarRule& r : g.rules()) {
    std::vector<Tree> children;
    children.reserve(r.lhs.children().size());
    for (const Tree& c : r.lhs.children())
      children.push_back(Tree(state_for(c)));
    rules.push_back({Tree(r.lhs.label(), std::move(children)), r.target,
                     r.weight});
  }
  return Wtg(g.alphabet(), std::move(states), std::move(rules),
             g.final_weights());
}

Wtg linear_combination(const std::vector<std::pair<Rational, Wtg>>& parts) {
  if (parts.empty()) throw ValidationError("empty linear combination");
  const RankedAlphabet& alphabet = parts.front().second.alphabet();
  std::set<std::string> states;
  std::vector<GrammarRule> rules;
  std::map<std::string, Rational> finals;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& [coeff, g] = parts[i];
    if (g.alphabet() != alphabet)
      throw ValidationError("linear combination over mismatched alphabets");
    std::string prefix = "u" + std::to_string(i + 1) + "_";
    auto renamed = [&](const std::string& q) { return prefix + q; };
    for (const std::string& q : g.states()) states.insert(renamed(q));
    std::function<Tree(const Tree&)> rename_lhs = [&](const Tree& t) -> Tree {
      if (t.is_leaf() && g.is_state(t.label())) return Tree(renamed(t.label()));
      std::vector<Tree> children;
      children.reserve(t.children().size());
      for (const Tree& c : t.children()) children.push_back(rename_lhs(c));
      return Tree(t.label(), std::move(children));
    };
    for (const GrammarRule& r : g.rules())
      rules.push_back({rename_lhs(r.lhs), renamed(r.target), r.weight});
    if (coeff != 0)
      for (const auto& [q, w] : g.final_weights())
        finals[renamed(q)] = coeff * w;
  }
  return Wtg(alphabet, std::move(states), std::move(rules), std::move(finals));
}

Wtg relabel_and_merge(const Wtg& g,
                      const std::map<std::string, std::string>& pi) {
  RankedAlphabet alphabet;
  for (const auto& [name, rank] : g.alphabet().ranks) {
    auto it = pi.find(name);
    alphabet.add(it == pi.end() ? name : it->second, rank);
  }
  std::function<Tree(const Tree&)> rename = [&](const Tree& t) -> Tree {
    if (t.is_leaf() && g.is_state(t.label())) return t;
    std::vector<Tree> children;
    children.reserve(t.children().size());
    for (const Tree& c : t.children()) children.push_back(rename(c));
    auto it = pi.find(t.label());
    return Tree(it == pi.end() ? t.label() : it->second, std::move(children));
  };
  std::vector<GrammarRule> rules;
  for (const GrammarRule& r : g.rules())
    rules.push_back({rename(r.lhs), r.target, r.weight});
  // The constructor merges identical rules and drops zero sums.
  return Wtg(std::move(alphabet), g.states(), std::move(rules),
             g.final_weights());
}

namespace {

using Vector = std::vector<Rational>;

struct BasisEntry {
  Vector vec;  // exact state-weight vector of the representative tree
  Tree rep;
};

// Echelon rows for the independence test; span equals span of the entries.
struct Echelon {
  std::vector<Vector> rows;
  std::vector<std::size_t> pivots;

  // Reduces v in place; returns true (and absorbs it) when independent.
  bool insert(Vector v) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (v[pivots[i]] != 0) {
        Rational f = v[pivots[i]];
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= f * rows[i][j];
      }
    }
    std::size_t pivot = v.size();
    for (std::size_t j = 0; j < v.size(); ++j)
      if (v[j] != 0) {
        pivot = j;
        break;
      }
    if (pivot == v.size()) return false;
    Rational lead = v[pivot];
    for (auto& x : v) x /= lead;
    rows.push_back(std::move(v));
    pivots.push_back(pivot);
    return true;
  }
};

}  // namespace

ZeronessResult is_zero(const Wtg& g) {
  if (!g.is_wta())
    throw ValidationError("zeroness requires a one-symbol-per-rule automaton; "
                          "normalize first");
  std::vector<std::string> state_list(g.states().begin(), g.states().end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < state_list.size(); ++i) index[state_list[i]] = i;

  // Rules grouped by root symbol, child states resolved to indices.
  struct FlatRule {
    std::vector<std::size_t> children;
    std::size_t target;
    Rational weight;
  };
  std::map<std::string, std::vector<FlatRule>> by_symbol;
  for (const GrammarRule& r : g.rules()) {
    FlatRule fr;
    fr.target = index[r.target];
    fr.weight = r.weight;
    for (const Tree& c : r.lhs.children()) fr.children.push_back(index[c.label()]);
    by_symbol[r.lhs.label()].push_back(std::move(fr));
  }

  auto apply_symbol = [&](const std::string& sym,
                          const std::vector<const Vector*>& args) {
    Vector out(state_list.size(), Rational(0));
    auto it = by_symbol.find(sym);
    if (it == by_symbol.end()) return out;
    for (const FlatRule& fr : it->second) {
      Rational w = fr.weight;
      for (std::size_t i = 0; i < fr.children.size() && w != 0; ++i)
        w *= (*args[i])[fr.children[i]];
      if (w != 0) out[fr.target] += w;
    }
    return out;
  };

  std::vector<BasisEntry> basis;
  Echelon echelon;

  auto try_insert = [&](Vector v, Tree rep) {
    Vector copy = v;
    if (echelon.insert(std::move(copy))) {
      basis.push_back({std::move(v), std::move(rep)});
      return true;
    }
    return false;
  };

  // Round 0: nullary symbols; later rounds close under every symbol applied
  // to tuples touching the newest entries. Representatives stay height-
  // minimal because each round only builds on earlier representatives.
  std::vector<std::pair<Vector, Tree>> candidates;
  for (const auto& [sym, rank] : g.alphabet().ranks)
    if (rank == 0) candidates.emplace_back(apply_symbol(sym, {}), Tree(sym));
  std::sort(candidates.begin(), candidates.end(), [](const auto& a,
                                                     const auto& b) {
    return compare_height_size_lex(a.second, b.second) < 0;
  });
  std::size_t round_begin = 0;
  for (auto& [v, rep] : candidates) try_insert(std::move(v), std::move(rep));

  while (round_begin < basis.size()) {
    std::size_t round_end = basis.size();
    candidates.clear();
    for (const auto& [sym, rank] : g.alphabet().ranks) {
      if (rank == 0) continue;
      std::vector<std::size_t> idx(rank, 0);
      if (basis.empty()) continue;
      while (true) {
        bool touches_new = false;
        for (int i = 0; i < rank; ++i)
          if (idx[i] >= round_begin) touches_new = true;
        if (touches_new) {
          std::vector<const Vector*> args;
          std::vector<Tree> reps;
          args.reserve(rank);
          reps.reserve(rank);
          for (int i = 0; i < rank; ++i) {
            args.push_back(&basis[idx[i]].vec);
            reps.push_back(basis[idx[i]].rep);
          }
          candidates.emplace_back(apply_symbol(sym, args),
                                  Tree(sym, std::move(reps)));
        }
        int i = rank - 1;
        while (i >= 0 && ++idx[i] == round_end) idx[i--] = 0;
        if (i < 0) break;
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a,
                                                       const auto& b) {
      return compare_height_size_lex(a.second, b.second) < 0;
    });
    round_begin = round_end;
    for (auto& [v, rep] : candidates) try_insert(std::move(v), std::move(rep));
  }

  Vector final_vec(state_list.size(), Rational(0));
  for (const auto& [q, w] : g.final_weights()) final_vec[index[q]] = w;
  auto pairing = [&](const Vector& v) {
    Rational s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += final_vec[i] * v[i];
    return s;
  };

  std::vector<const BasisEntry*> ordered;
  for (const BasisEntry& b : basis) ordered.push_back(&b);
  std::sort(ordered.begin(), ordered.end(), [](const BasisEntry* a,
                                               const BasisEntry* b) {
    return compare_height_size_lex(a->rep, b->rep) < 0;
  });
  for (const BasisEntry* b : ordered)
    if (pairing(b->vec) != 0)
      return {false, b->rep, static_cast<int>(basis.size())};
  return {true, std::nullopt, static_cast<int>(basis.size())};
}

namespace {

void enumerate_runs_impl(const Wtg& g, const Tree& t, const std::string& q,
                         std::vector<RunNode>& out) {
  for (std::size_t ri = 0; ri < g.rules().size(); ++ri) {
    const GrammarRule& r = g.rules()[ri];
    if (r.target != q) continue;
    auto bindings = match_lhs(g, r.lhs, t);
    if (!bindings) continue;
    bool ok = true;
    std::vector<std::vector<RunNode>> child_runs;
    for (std::size_t i = 0; i < bindings->size() && ok; ++i) {
      std::vector<RunNode> runs;
      enumerate_runs_impl(g, *(*bindings)[i].second, (*bindings)[i].first,
                          runs);
      if (runs.empty()) ok = false;
      child_runs.push_back(std::move(runs));
    }
    if (!ok) continue;
    std::vector<std::size_t> idx(bindings->size(), 0);
    while (true) {
      RunNode node;
      node.rule_index = static_cast<int>(ri);
      for (std::size_t i = 0; i < bindings->size(); ++i)
        node.children.push_back(child_runs[i][idx[i]]);
      out.push_back(std::move(node));
      std::size_t i = bindings->size();
      bool done = true;
      while (i-- > 0) {
        if (++idx[i] < child_runs[i].size()) {
          done = false;
          break;
        }
        idx[i] = 0;
      }
      if (done) break;
    }
  }
}

}  // namespace

std::vector<RunNode> enumerate_runs(const Wtg& g, const Tree& t,
                                    const std::string& q) {
  std::vector<RunNode> out;
  enumerate_runs_impl(g, t, q, out);
  return out;
}

Rational run_weight(const Wtg& g, const RunNode& run) {
  Rational w = g.rules()[run.rule_index].weight;
  for (const RunNode& c : run.children) w *= run_weight(g, c);
  return w;
}

namespace {

void collect_listing(const Wtg& g, const RunNode& run, const Position& at,
                     std::vector<RuleApplication>& out) {
  const GrammarRule& r = g.rules()[run.rule_index];
  auto state_pos = lhs_state_positions(g, r.lhs);
  for (std::size_t i = 0; i < run.children.size(); ++i)
    collect_listing(g, run.children[i], at.concat(state_pos[i].first), out);
  out.push_back({run.rule_index, at});
}

}  // namespace

std::vector<RuleApplication> run_listing(const Wtg& g, const RunNode& run) {
  std::vector<RuleApplication> out;
  collect_listing(g, run, Position::root(), out);
  // Lexicographic among incomparable positions, but prefixes after their
  // extensions (the root is listed last).
  std::sort(out.begin(), out.end(), [](const RuleApplication& a,
                                       const RuleApplication& b) {
    if (a.at == b.at) return false;
    if (a.at.is_prefix_of(b.at)) return false;
    if (b.at.is_prefix_of(a.at)) return true;
    return a.at < b.at;
  });
  return out;
}

}  // namespace treehom
