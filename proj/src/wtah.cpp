#include "treehom/wtah.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "treehom/errors.hpp"

namespace treehom {

ConstraintPartition::ConstraintPartition(
    std::vector<std::vector<Position>> classes) {
  for (auto& cls : classes) {
    std::sort(cls.begin(), cls.end());
    cls.erase(std::unique(cls.begin(), cls.end()), cls.end());
    if (cls.size() >= 2) classes_.push_back(std::move(cls));
  }
  std::sort(classes_.begin(), classes_.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (std::size_t i = 0; i + 1 < classes_.size(); ++i)
    for (const Position& p : classes_[i + 1])
      if (std::binary_search(classes_[i].begin(), classes_[i].end(), p))
        throw ValidationError("constraint classes overlap at " + p.str());
}

ConstraintPartition ConstraintPartition::from_pairs(
    const std::vector<std::pair<Position, Position>>& pairs) {
  std::vector<std::vector<Position>> classes;
  auto find_class = [&](const Position& p) -> int {
    for (std::size_t i = 0; i < classes.size(); ++i)
      for (const Position& q : classes[i])
        if (q == p) return static_cast<int>(i);
    return -1;
  };
  for (const auto& [a, b] : pairs) {
    if (a == b) continue;
    int ia = find_class(a), ib = find_class(b);
    if (ia < 0 && ib < 0) {
      classes.push_back({a, b});
    } else if (ia < 0) {
      classes[ib].push_back(a);
    } else if (ib < 0) {
      classes[ia].push_back(b);
    } else if (ia != ib) {
      classes[ia].insert(classes[ia].end(), classes[ib].begin(),
                         classes[ib].end());
      classes.erase(classes.begin() + ib);
    }
  }
  return ConstraintPartition(std::move(classes));
}

const std::vector<Position>* ConstraintPartition::class_of(
    const Position& p) const {
  for (const auto& cls : classes_)
    if (std::binary_search(cls.begin(), cls.end(), p)) return &cls;
  return nullptr;
}

std::string ConstraintPartition::str() const {
  std::string out = "[";
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (i) out += ", ";
    for (std::size_t j = 0; j < classes_[i].size(); ++j) {
      if (j) out += "=";
      out += classes_[i][j].str();
    }
  }
  out += "]";
  return out;
}

ConstraintPartition ConstraintPartition::parse(const std::string& text) {
  std::string s = text;
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw ParseError("bad constraint list: '" + text + "'");
  s = s.substr(1, s.size() - 2);
  std::vector<std::vector<Position>> classes;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  skip_ws();
  while (i < s.size()) {
    std::vector<Position> cls;
    while (true) {
      skip_ws();
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) ||
                              s[j] == '.' || s[j] == 'e'))
        ++j;
      if (j == i) throw ParseError("bad constraint list: '" + text + "'");
      cls.push_back(Position::parse(s.substr(i, j - i)));
      i = j;
      skip_ws();
      if (i < s.size() && s[i] == '=') {
        ++i;
        continue;
      }
      break;
    }
    classes.push_back(std::move(cls));
    if (i < s.size()) {
      if (s[i] != ',') throw ParseError("bad constraint list: '" + text + "'");
      ++i;
      skip_ws();
    }
  }
  return ConstraintPartition(std::move(classes));
}

namespace {

std::string crule_str(const ConstrainedRule& r) {
  std::string out = r.lhs.str();
  if (!r.constraints.trivial()) out += " " + r.constraints.str();
  out += " -> " + r.target + " @ " + rational_str(r.weight);
  return out;
}

}  // namespace

Wtah::Wtah(RankedAlphabet alphabet, std::set<std::string> states,
           std::set<std::string> finals, std::vector<ConstrainedRule> rules,
           std::string sink)
    : alphabet_(std::move(alphabet)),
      states_(std::move(states)),
      finals_(std::move(finals)),
      sink_(std::move(sink)) {
  if (sink_.empty()) throw ValidationError("empty sink name");
  if (states_.count(sink_))
    throw ValidationError("sink '" + sink_ + "' must not be listed as a state");
  if (alphabet_.contains(sink_))
    throw ValidationError("sink '" + sink_ + "' is also a symbol");
  for (const std::string& q : states_) {
    if (q.empty()) throw ValidationError("empty state name");
    if (q == kHole || is_variable(q))
      throw ValidationError("'" + q + "' is reserved and cannot be a state");
    if (alphabet_.contains(q))
      throw ValidationError("name '" + q + "' is both a state and a symbol");
  }
  for (const std::string& q : finals_) {
    if (q == sink_) throw ValidationError("sink cannot be final");
    if (!states_.count(q))
      throw ValidationError("unknown final state '" + q + "'");
  }
  std::set<std::string> leaves = states_;
  leaves.insert(sink_);
  std::map<std::string, ConstrainedRule> merged;
  for (ConstrainedRule& r : rules) {
    if (r.weight == 0)
      throw ValidationError("rule with weight 0: " + crule_str(r));
    if (!states_.count(r.target) && r.target != sink_)
      throw ValidationError("rule targets unknown state: " + crule_str(r));
    if (r.lhs.is_leaf() && leaves.count(r.lhs.label()))
      throw ValidationError("left-hand side must not be a bare state: " +
                            crule_str(r));
    validate_tree(alphabet_, r.lhs, leaves);
    auto state_pos = lhs_state_positions(r.lhs);
    auto is_state_pos = [&](const Position& p) {
      for (const auto& [sp, q] : state_pos)
        if (sp == p) return true;
      return false;
    };
    for (const auto& cls : r.constraints.classes())
      for (const Position& p : cls)
        if (!is_state_pos(p))
          throw ValidationError("constraint on non-state position " + p.str() +
                                " in rule " + crule_str(r));
    std::string key =
        r.lhs.str() + " " + r.constraints.str() + " -> " + r.target;
    auto it = merged.find(key);
    if (it == merged.end())
      merged.emplace(std::move(key), std::move(r));
    else
      it->second.weight += r.weight;
  }
  for (auto& [key, r] : merged)
    if (r.weight != 0) rules_.push_back(std::move(r));
}

std::vector<std::pair<Position, std::string>> Wtah::lhs_state_positions(
    const Tree& lhs) const {
  std::vector<std::pair<Position, std::string>> out;
  for (const Position& p : lhs.positions()) {
    const std::string& label = lhs.label_at(p);
    if (is_state_or_sink(label) && lhs.subtree(p).is_leaf())
      out.emplace_back(p, label);
  }
  return out;
}

std::string Wtah::str() const {
  std::ostringstream out;
  out << "wtah M over Q {\n  states ";
  bool first = true;
  for (const std::string& q : states_) {
    if (!first) out << ", ";
    out << q;
    first = false;
  }
  out << ";\n  sink " << sink_ << ";\n";
  if (!finals_.empty()) {
    out << "  final ";
    first = true;
    for (const std::string& q : finals_) {
      if (!first) out << ", ";
      out << q;
      first = false;
    }
    out << ";\n";
  }
  for (const ConstrainedRule& r : rules_) {
    out << "  rule " << r.lhs.str();
    if (!r.constraints.trivial()) out << " " << r.constraints.str();
    out << " -> " << r.target << " @ " << rational_str(r.weight) << ";\n";
  }
  out << "}\n";
  return out.str();
}

EqRestrictionReport validate_eq_restricted(const Wtah& m) {
  EqRestrictionReport report{true, {}};
  auto fail = [&](const std::string& msg) {
    report.ok = false;
    report.diagnostics.push_back(msg);
  };
  // Clause (i): one weight-1 all-sink rule per symbol, nothing else targets
  // the sink.
  std::set<std::string> sink_ruled;
  for (const ConstrainedRule& r : m.rules()) {
    if (r.target != m.sink()) continue;
    bool shape_ok = m.alphabet().contains(r.lhs.label());
    for (const Tree& c : r.lhs.children())
      if (!(c.is_leaf() && c.label() == m.sink())) shape_ok = false;
    if (!shape_ok || !r.constraints.trivial())
      fail("clause (i): rule targeting the sink is not of the required form: " +
           crule_str(r));
    else if (r.weight != 1)
      fail("clause (i): sink rule must have weight 1: " + crule_str(r));
    else
      sink_ruled.insert(r.lhs.label());
  }
  for (const auto& [symbol, rank] : m.alphabet().ranks)
    if (!sink_ruled.count(symbol))
      fail("clause (i): missing sink rule for symbol '" + symbol + "'");
  // Clause (ii): per class exactly one non-sink position, and the non-sink
  // states of a class form a singleton.
  for (const ConstrainedRule& r : m.rules()) {
    if (r.target == m.sink()) continue;
    auto state_pos = m.lhs_state_positions(r.lhs);
    auto label_of = [&](const Position& p) { return r.lhs.label_at(p); };
    std::set<std::string> seen_class;  // first member, to visit once
    for (const auto& [p, q] : state_pos) {
      const std::vector<Position>* cls = r.constraints.class_of(p);
      std::vector<Position> singleton{p};
      const std::vector<Position>& members = cls ? *cls : singleton;
      if (!seen_class.insert(members.front().str()).second) continue;
      std::set<std::string> non_sink_states;
      int non_sink_positions = 0;
      for (const Position& mp : members) {
        if (label_of(mp) != m.sink()) {
          non_sink_states.insert(label_of(mp));
          ++non_sink_positions;
        }
      }
      if (non_sink_states.size() != 1)
        fail("clause (ii).1: class of " + members.front().str() +
             " in rule " + crule_str(r) + " has non-sink state set of size " +
             std::to_string(non_sink_states.size()));
      if (non_sink_positions != 1)
        fail("clause (ii).2: class of " + members.front().str() +
             " in rule " + crule_str(r) + " has " +
             std::to_string(non_sink_positions) +
             " non-sink positions (want exactly 1)");
    }
  }
  return report;
}

// Binds the state positions (lex order) of lhs to subtrees of t, or nothing
// when the symbol skeleton does not match.
std::optional<std::vector<const Tree*>> match_lhs_states(const Wtah& m,
                                                         const Tree& lhs,
                                                         const Tree& t) {
  std::vector<const Tree*> bound;
  struct Frame {
    const Tree* pattern;
    const Tree* subject;
  };
  std::vector<Frame> stack{{&lhs, &t}};
  while (!stack.empty()) {
    auto [pattern, subject] = stack.back();
    stack.pop_back();
    if (pattern->is_leaf() && m.is_state_or_sink(pattern->label())) {
      bound.push_back(subject);
      continue;
    }
    if (pattern->label() != subject->label() ||
        pattern->children().size() != subject->children().size())
      return std::nullopt;
    for (std::size_t i = pattern->children().size(); i-- > 0;)
      stack.push_back({&pattern->children()[i], &subject->children()[i]});
  }
  return bound;
}

namespace {

bool constraints_satisfied(
    const ConstraintPartition& constraints,
    const std::vector<std::pair<Position, std::string>>& state_pos,
    const std::vector<const Tree*>& bound) {
  for (const auto& cls : constraints.classes()) {
    const Tree* first = nullptr;
    for (const Position& p : cls) {
      std::size_t idx = 0;
      while (idx < state_pos.size() && !(state_pos[idx].first == p)) ++idx;
      if (idx == state_pos.size()) return false;  // dangling constraint
      if (!first)
        first = bound[idx];
      else if (!(*first == *bound[idx]))
        return false;
    }
  }
  return true;
}

}  // namespace

bool lhs_constraints_hold(const Wtah& m, const ConstrainedRule& r,
                          const std::vector<const Tree*>& bound) {
  return constraints_satisfied(r.constraints, m.lhs_state_positions(r.lhs),
                               bound);
}

const std::map<std::string, Rational>& WtahEvaluator::weights(const Tree& t) {
  auto it = memo_.find(t);
  if (it != memo_.end()) return it->second;
  std::map<std::string, Rational> row;
  for (const ConstrainedRule& r : m_.rules()) {
    auto bound = match_lhs_states(m_, r.lhs, t);
    if (!bound) continue;
    auto state_pos = m_.lhs_state_positions(r.lhs);
    if (!constraints_satisfied(r.constraints, state_pos, *bound)) continue;
    Rational w = r.weight;
    for (std::size_t i = 0; i < bound->size() && w != 0; ++i) {
      const auto& sub_row = weights(*(*bound)[i]);
      auto sit = sub_row.find(state_pos[i].second);
      if (sit == sub_row.end())
        w = 0;
      else
        w *= sit->second;
    }
    if (w != 0) {
      row[r.target] += w;
      if (row[r.target] == 0) row.erase(r.target);
    }
  }
  return memo_.emplace(t, std::move(row)).first->second;
}

Rational WtahEvaluator::state_weight(const Tree& t, const std::string& q) {
  const auto& row = weights(t);
  auto it = row.find(q);
  return it == row.end() ? Rational(0) : it->second;
}

Rational WtahEvaluator::evaluate(const Tree& t) {
  Rational total = 0;
  const auto& row = weights(t);
  for (const std::string& q : m_.finals()) {
    auto it = row.find(q);
    if (it != row.end()) total += it->second;
  }
  return total;
}

Rational wtah_state_weight(const Wtah& m, const Tree& t,
                           const std::string& q) {
  return WtahEvaluator(m).state_weight(t, q);
}

Rational wtah_evaluate(const Wtah& m, const Tree& t) {
  return WtahEvaluator(m).evaluate(t);
}

namespace {

// Free choices of a non-sink rule: its non-sink state positions. Sink
// positions are forced to copy their class leader; eq-restriction guarantees
// every sink position has exactly one.
struct RuleShape {
  std::vector<std::pair<Position, std::string>> leaders;
  std::vector<std::pair<Position, std::size_t>> copies;  // pos -> leader idx
};

RuleShape rule_shape(const Wtah& m, const ConstrainedRule& r) {
  RuleShape shape;
  auto state_pos = m.lhs_state_positions(r.lhs);
  for (const auto& [p, q] : state_pos)
    if (q != m.sink()) shape.leaders.emplace_back(p, q);
  for (const auto& [p, q] : state_pos) {
    if (q != m.sink()) continue;
    const std::vector<Position>* cls = r.constraints.class_of(p);
    if (!cls)
      throw PreconditionError("support enumeration needs an eq-restricted "
                              "automaton",
                              {"unconstrained sink position " + p.str() +
                               " in rule " + crule_str(r)});
    std::size_t leader = shape.leaders.size();
    for (std::size_t i = 0; i < shape.leaders.size(); ++i)
      for (const Position& mp : *cls)
        if (shape.leaders[i].first == mp) leader = i;
    if (leader == shape.leaders.size())
      throw PreconditionError("support enumeration needs an eq-restricted "
                              "automaton",
                              {"sink position " + p.str() + " in rule " +
                               crule_str(r) + " has no leading copy"});
    shape.copies.emplace_back(p, leader);
  }
  return shape;
}

std::map<std::string, std::set<Tree>> wtah_reach_sets(const Wtah& m,
                                                      int max_height,
                                                      std::size_t cap) {
  std::map<std::string, std::set<Tree>> reach;
  for (const std::string& q : m.states()) reach[q];
  std::size_t total = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const ConstrainedRule& r : m.rules()) {
      if (r.target == m.sink()) continue;
      RuleShape shape = rule_shape(m, r);
      std::size_t k = shape.leaders.size();
      std::vector<const std::set<Tree>*> pools;
      bool empty_pool = false;
      for (const auto& [p, q] : shape.leaders) {
        pools.push_back(&reach[q]);
        if (pools.back()->empty()) empty_pool = true;
      }
      if (empty_pool) continue;
      std::vector<std::set<Tree>::const_iterator> its(k);
      for (std::size_t i = 0; i < k; ++i) its[i] = pools[i]->begin();
      while (true) {
        Tree t = r.lhs;
        for (std::size_t i = 0; i < k; ++i)
          t = t.substituted(shape.leaders[i].first, *its[i]);
        for (const auto& [p, leader] : shape.copies)
          t = t.substituted(p, *its[leader]);
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
          if (i == 0) done = true;
        }
        if (done) break;
      }
    }
  }
  return reach;
}

}  // namespace

std::vector<Tree> wtah_trees_with_run(const Wtah& m, const std::string& q,
                                      int max_height, std::size_t cap) {
  auto reach = wtah_reach_sets(m, max_height, cap);
  std::vector<Tree> out(reach[q].begin(), reach[q].end());
  std::sort(out.begin(), out.end(), [](const Tree& a, const Tree& b) {
    return compare_height_size_lex(a, b) < 0;
  });
  return out;
}

std::vector<std::pair<Tree, Rational>> wtah_enumerate_support(
    const Wtah& m, int max_height, std::size_t cap) {
  auto reach = wtah_reach_sets(m, max_height, cap);
  std::set<Tree> candidates;
  for (const std::string& q : m.finals())
    candidates.insert(reach[q].begin(), reach[q].end());
  WtahEvaluator eval(m);
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

Wtah relabel_and_merge(const Wtah& m,
                       const std::map<std::string, std::string>& pi) {
  RankedAlphabet alphabet;
  for (const auto& [name, rank] : m.alphabet().ranks) {
    auto it = pi.find(name);
    alphabet.add(it == pi.end() ? name : it->second, rank);
  }
  std::function<Tree(const Tree&)> rename = [&](const Tree& t) -> Tree {
    if (t.is_leaf() && m.is_state_or_sink(t.label())) return t;
    std::vector<Tree> children;
    children.reserve(t.children().size());
    for (const Tree& c : t.children()) children.push_back(rename(c));
    auto it = pi.find(t.label());
    return Tree(it == pi.end() ? t.label() : it->second, std::move(children));
  };
  std::vector<ConstrainedRule> rules;
  for (const ConstrainedRule& r : m.rules())
    rules.push_back({rename(r.lhs), r.target, r.constraints, r.weight});
  return Wtah(std::move(alphabet), m.states(), m.finals(), std::move(rules),
              m.sink());
}

ConstrainedRule image_rule(const GrammarRule& r, const Homomorphism& h) {
  const std::string& symbol = r.lhs.label();
  int rank = h.source().rank(symbol);
  if (static_cast<std::size_t>(rank) != r.lhs.children().size())
    throw ValidationError("rule lhs " + r.lhs.str() +
                          " does not match the declared rank of '" + symbol +
                          "'");
  const Tree& u = h.image_of(symbol);
  if (u.is_leaf() && is_variable(u.label()))
    throw PreconditionError("image rules need a nonerasing homomorphism",
                            {"image of '" + symbol + "' is a bare variable"});
  Tree lhs = u;
  std::vector<std::vector<Position>> classes;
  for (int i = 1; i <= rank; ++i) {
    std::vector<Position> occurrences =
        u.positions_of_label(variable_name(i));
    if (occurrences.empty())
      throw PreconditionError(
          "image rules need a nondeleting homomorphism",
          {"image of '" + symbol + "' drops " + variable_name(i)});
    const std::string& child_state = r.lhs.children()[i - 1].label();
    for (std::size_t j = 0; j < occurrences.size(); ++j)
      lhs = lhs.substituted(occurrences[j],
                            Tree(j == 0 ? child_state : kSink));
    classes.push_back(std::move(occurrences));
  }
  return {std::move(lhs), r.target, ConstraintPartition(std::move(classes)),
          r.weight};
}

Wtah hom_image(const Wtg& a, const Homomorphism& h) {
  if (!a.is_wta())
    throw ValidationError(
        "the image construction reads one symbol per rule; normalize first");
  for (const auto& [q, w] : a.final_weights())
    if (w != 1)
      throw ValidationError(
          "the image construction expects 0/1 final weights; state '" + q +
          "' has weight " + rational_str(w));
  {
    HomProperties props = check_properties(h);
    std::vector<std::string> diags;
    if (!props.nondeleting) diags.push_back("homomorphism is deleting");
    if (!props.nonerasing) diags.push_back("homomorphism is erasing");
    if (!diags.empty())
      throw PreconditionError(
          "the image construction requires a nondeleting, nonerasing "
          "homomorphism",
          diags);
  }
  const RankedAlphabet& delta = h.target();

  // Annotated stage: the root symbol of each rule image carries the rule
  // index, so distinct source rules stay distinct until the final merge.
  RankedAlphabet annotated = delta;
  std::map<std::string, std::string> erase_annotation;
  std::vector<ConstrainedRule> rules;
  for (std::size_t i = 0; i < a.rules().size(); ++i) {
    ConstrainedRule cr = image_rule(a.rules()[i], h);
    std::string tag = cr.lhs.label() + "@" + std::to_string(i);
    while (annotated.contains(tag)) tag += "@";
    annotated.add(tag, delta.rank(cr.lhs.label()));
    erase_annotation[tag] = cr.lhs.label();
    cr.lhs = Tree(tag, cr.lhs.children());
    rules.push_back(std::move(cr));
  }
  for (const auto& [symbol, rank] : delta.ranks)
    rules.push_back({Tree(symbol, std::vector<Tree>(rank, Tree(kSink))),
                     kSink, ConstraintPartition{}, Rational(1)});

  std::set<std::string> finals;
  for (const auto& [q, w] : a.final_weights()) finals.insert(q);
  Wtah annotated_automaton(std::move(annotated), a.states(), finals,
                           std::move(rules));
  Wtah image = relabel_and_merge(annotated_automaton, erase_annotation);
  EqRestrictionReport report = validate_eq_restricted(image);
  if (!report.ok)
    throw PreconditionError("image construction produced a non-eq-restricted "
                            "automaton",
                            report.diagnostics);
  return image;
}

std::vector<WtahRunNode> wtah_enumerate_runs(const Wtah& m, const Tree& t,
                                             const std::string& q) {
  std::vector<WtahRunNode> out;
  for (std::size_t ri = 0; ri < m.rules().size(); ++ri) {
    const ConstrainedRule& r = m.rules()[ri];
    if (r.target != q) continue;
    auto bound = match_lhs_states(m, r.lhs, t);
    if (!bound) continue;
    auto state_pos = m.lhs_state_positions(r.lhs);
    if (!constraints_satisfied(r.constraints, state_pos, *bound)) continue;
    bool ok = true;
    std::vector<std::vector<WtahRunNode>> child_runs;
    for (std::size_t i = 0; i < bound->size() && ok; ++i) {
      auto runs = wtah_enumerate_runs(m, *(*bound)[i], state_pos[i].second);
      if (runs.empty()) ok = false;
      child_runs.push_back(std::move(runs));
    }
    if (!ok) continue;
    std::vector<std::size_t> idx(bound->size(), 0);
    while (true) {
      WtahRunNode node;
      node.rule_index = static_cast<int>(ri);
      for (std::size_t i = 0; i < bound->size(); ++i)
        node.children.push_back(child_runs[i][idx[i]]);
      out.push_back(std::move(node));
      bool done = bound->empty();
      std::size_t i = bound->size();
      while (i-- > 0) {
        if (++idx[i] < child_runs[i].size()) break;
        idx[i] = 0;
        if (i == 0) done = true;
      }
      if (done) break;
    }
  }
  return out;
}

Rational wtah_run_weight(const Wtah& m, const WtahRunNode& run) {
  Rational w = m.rules()[run.rule_index].weight;
  for (const WtahRunNode& c : run.children) w *= wtah_run_weight(m, c);
  return w;
}

Tree wtah_run_tree(const Wtah& m, const WtahRunNode& run) {
  const ConstrainedRule& r = m.rules()[run.rule_index];
  auto state_pos = m.lhs_state_positions(r.lhs);
  if (state_pos.size() != run.children.size())
    throw ValidationError("run node has wrong arity for rule " +
                          crule_str(r));
  Tree t = r.lhs;
  for (std::size_t i = 0; i < state_pos.size(); ++i)
    t = t.substituted(state_pos[i].first,
                      wtah_run_tree(m, run.children[i]));
  return t;
}

namespace {

bool check_run(const Wtah& m, const WtahRunNode& run,
               const std::string& expected_target) {
  const ConstrainedRule& r = m.rules()[run.rule_index];
  if (r.target != expected_target) return false;
  auto state_pos = m.lhs_state_positions(r.lhs);
  if (state_pos.size() != run.children.size()) return false;
  std::vector<Tree> child_trees;
  for (std::size_t i = 0; i < state_pos.size(); ++i) {
    if (!check_run(m, run.children[i], state_pos[i].second)) return false;
    child_trees.push_back(wtah_run_tree(m, run.children[i]));
  }
  std::vector<const Tree*> bound;
  for (const Tree& ct : child_trees) bound.push_back(&ct);
  return constraints_satisfied(r.constraints, state_pos, bound);
}

}  // namespace

bool wtah_is_run(const Wtah& m, const WtahRunNode& run, const Tree& t,
                 const std::string& q) {
  if (!check_run(m, run, q)) return false;
  return wtah_run_tree(m, run) == t;
}

WtahRunNode wtah_sink_run(const Wtah& m, const Tree& t) {
  for (std::size_t ri = 0; ri < m.rules().size(); ++ri) {
    const ConstrainedRule& r = m.rules()[ri];
    if (r.target != m.sink() || r.lhs.label() != t.label()) continue;
    WtahRunNode node;
    node.rule_index = static_cast<int>(ri);
    for (const Tree& c : t.children())
      node.children.push_back(wtah_sink_run(m, c));
    return node;
  }
  throw ValidationError("no sink rule for symbol '" + t.label() + "'");
}

namespace {

void collect_wtah_listing(const Wtah& m, const WtahRunNode& run,
                          const Position& at,
                          std::vector<RuleApplication>& out) {
  const ConstrainedRule& r = m.rules()[run.rule_index];
  auto state_pos = m.lhs_state_positions(r.lhs);
  for (std::size_t i = 0; i < run.children.size(); ++i)
    collect_wtah_listing(m, run.children[i], at.concat(state_pos[i].first),
                         out);
  out.push_back({run.rule_index, at});
}

}  // namespace

std::vector<RuleApplication> wtah_run_listing(const Wtah& m,
                                              const WtahRunNode& run) {
  std::vector<RuleApplication> out;
  collect_wtah_listing(m, run, Position::root(), out);
  std::sort(out.begin(), out.end(), [](const RuleApplication& a,
                                       const RuleApplication& b) {
    if (a.at == b.at) return false;
    if (a.at.is_prefix_of(b.at)) return false;
    if (b.at.is_prefix_of(a.at)) return true;
    return a.at < b.at;
  });
  return out;
}

ImageOracleResult check_image_oracle(const Wtah& claimed, const Wtg& a,
                                     const Homomorphism& h, int max_height) {
  std::set<Tree> probes;
  std::vector<Tree> image_trees;
  for (const Tree& s : enumerate_trees(h.source(), max_height)) {
    Tree t = apply(h, s);
    if (t.height() <= max_height && probes.insert(t).second)
      image_trees.push_back(std::move(t));
  }
  for (const std::string& q : claimed.finals())
    for (const Tree& t : wtah_trees_with_run(claimed, q, max_height))
      probes.insert(t);
  for (const Tree& t : enumerate_trees(h.target(), std::min(max_height, 2)))
    probes.insert(t);
  // Zero probes: knock one subtree out of a small image tree; the result
  // usually violates a duplication constraint, so both sides must vanish.
  std::vector<Tree> small_replacements = enumerate_trees(h.target(), 1);
  for (const Tree& t : image_trees) {
    if (t.height() > 3) continue;
    for (const Position& p : t.positions()) {
      if (p.is_root()) continue;
      for (const Tree& r : small_replacements) {
        Tree mutated = t.substituted(p, r);
        if (mutated != t && mutated.height() <= max_height)
          probes.insert(std::move(mutated));
      }
    }
  }

  WtahEvaluator claimed_eval(claimed);
  WtgEvaluator source_eval(a);
  PreimageFinder finder(h);
  std::vector<Tree> ordered(probes.begin(), probes.end());
  std::sort(ordered.begin(), ordered.end(), [](const Tree& x, const Tree& y) {
    return compare_height_size_lex(x, y) < 0;
  });
  for (const Tree& t : ordered) {
    Rational lhs = claimed_eval.evaluate(t);
    Rational rhs = 0;
    for (const Tree& s : finder.preimages(t)) rhs += source_eval.evaluate(s);
    if (lhs != rhs) return {false, t, lhs, rhs, ordered.size()};
  }
  return {true, std::nullopt, 0, 0, ordered.size()};
}

WtahRunNode trace_run(const Wtg& a, const Homomorphism& h, const Wtah& image,
                      const Tree& s, const RunNode& run) {
  const GrammarRule& r = a.rules()[run.rule_index];
  ConstrainedRule target_rule = image_rule(r, h);
  int found = -1;
  for (std::size_t i = 0; i < image.rules().size(); ++i) {
    const ConstrainedRule& cr = image.rules()[i];
    if (cr.lhs == target_rule.lhs && cr.target == target_rule.target &&
        cr.constraints == target_rule.constraints) {
      found = static_cast<int>(i);
      break;
    }
  }
  if (found < 0)
    throw ValidationError("traced rule " + crule_str(target_rule) +
                          " is absent from the image automaton (cancelled "
                          "away during the merge)");
  const Tree& u = h.image_of(r.lhs.label());
  // Children follow the state positions of the image lhs in lex order; the
  // least occurrence of a variable carries the traced child run, every other
  // occurrence the sink run of the processed image.
  struct Slot {
    Position pos;
    int var;
    bool leader;
  };
  std::vector<Slot> slots;
  int rank = h.source().rank(r.lhs.label());
  for (int v = 1; v <= rank; ++v) {
    auto occurrences = u.positions_of_label(variable_name(v));
    for (std::size_t j = 0; j < occurrences.size(); ++j)
      slots.push_back({occurrences[j], v, j == 0});
  }
  std::sort(slots.begin(), slots.end(),
            [](const Slot& x, const Slot& y) { return x.pos < y.pos; });
  WtahRunNode node;
  node.rule_index = found;
  for (const Slot& slot : slots) {
    const Tree& child = s.children()[slot.var - 1];
    if (slot.leader)
      node.children.push_back(
          trace_run(a, h, image, child, run.children[slot.var - 1]));
    else
      node.children.push_back(wtah_sink_run(image, apply(h, child)));
  }
  return node;
}

}  // namespace treehom
