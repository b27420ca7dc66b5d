#include "treehom/hatldp.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "treehom/errors.hpp"

namespace treehom {

namespace {

std::string crule_str(const ConstrainedRule& r) {
  std::string out = r.lhs.str();
  if (!r.constraints.trivial()) out += " " + r.constraints.str();
  out += " -> " + r.target + " @ " + rational_str(r.weight);
  return out;
}

Tree blank_states(const Wtah& m, const Tree& lhs) {
  Tree shape = lhs;
  for (const auto& [p, q] : m.lhs_state_positions(lhs))
    shape = shape.substituted(p, Tree(kSink));
  return shape;
}

std::string hat_symbol_name(const Tree& shape) {
  if (shape.is_leaf()) return shape.label();
  return "[" + shape.str() + "]";
}

}  // namespace

DeltaPart delta_part(const Wtah& m, const ConstrainedRule& r) {
  if (r.target == m.sink())
    throw ValidationError("sink rules have no fragment: " + crule_str(r));
  int arity = 0;
  for (const auto& [p, q] : m.lhs_state_positions(r.lhs))
    if (q != m.sink()) ++arity;
  return {blank_states(m, r.lhs), arity};
}

PreconditionReport validate_hat_preconditions(const Wtah& m) {
  PreconditionReport report{true, {}};
  struct Info {
    const ConstrainedRule* rule;
    std::vector<Position> leaders;
  };
  std::map<std::string, Info> seen;
  for (const ConstrainedRule& r : m.rules()) {
    if (r.target == m.sink()) continue;
    std::vector<Position> leaders;
    for (const auto& [p, q] : m.lhs_state_positions(r.lhs))
      if (q != m.sink()) leaders.push_back(p);
    std::string key = blank_states(m, r.lhs).str();
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, Info{&r, std::move(leaders)});
      continue;
    }
    if (!(it->second.rule->constraints == r.constraints)) {
      report.ok = false;
      report.diagnostics.push_back(
          "rules with equal fragment " + key +
          " carry different constraint sets: " + crule_str(*it->second.rule) +
          " vs " + crule_str(r));
    }
    if (it->second.leaders != leaders) {
      report.ok = false;
      report.diagnostics.push_back(
          "rules with equal fragment " + key +
          " place their non-sink states differently: " +
          crule_str(*it->second.rule) + " vs " + crule_str(r));
    }
  }
  return report;
}

HatContext build_hat_wta(const Wtah& m) {
  EqRestrictionReport eqr = validate_eq_restricted(m);
  if (!eqr.ok)
    throw PreconditionError("the fragment translation needs an eq-restricted "
                            "automaton",
                            eqr.diagnostics);
  PreconditionReport pre = validate_hat_preconditions(m);
  if (!pre.ok)
    throw PreconditionError("the fragment translation is not well-defined",
                            pre.diagnostics);

  HatContext ctx{m,
                 Wtg(RankedAlphabet{}, {}, {}, {}),
                 {},
                 0};
  RankedAlphabet hat_alphabet;
  std::vector<GrammarRule> hat_rules;
  for (const ConstrainedRule& r : m.rules()) {
    if (r.target == m.sink()) continue;
    ctx.max_lhs_height = std::max(ctx.max_lhs_height, r.lhs.height());
    Tree shape = blank_states(m, r.lhs);
    std::string name = hat_symbol_name(shape);
    auto state_pos = m.lhs_state_positions(r.lhs);
    if (!ctx.symbols.count(name)) {
      HatSymbol sym;
      sym.name = name;
      sym.shape = shape;
      for (const auto& [p, q] : state_pos)
        if (q != m.sink()) {
          sym.leaders.push_back(p);
          sym.leader_depths.push_back(static_cast<int>(p.length()));
          sym.leader_constrained.push_back(r.constraints.class_of(p) !=
                                           nullptr);
        }
      for (const auto& [p, q] : state_pos) {
        if (q != m.sink()) continue;
        const std::vector<Position>* cls = r.constraints.class_of(p);
        std::size_t leader = sym.leaders.size();
        if (cls)
          for (std::size_t i = 0; i < sym.leaders.size(); ++i)
            for (const Position& mp : *cls)
              if (sym.leaders[i] == mp) leader = i;
        if (leader == sym.leaders.size())
          throw PreconditionError(
              "the fragment translation needs an eq-restricted automaton",
              {"sink position " + p.str() + " in rule " + crule_str(r) +
               " has no leading copy"});
        sym.copies.emplace_back(p, leader);
      }
      sym.constraints = r.constraints;
      hat_alphabet.add(name, static_cast<int>(sym.leaders.size()));
      ctx.symbols.emplace(name, std::move(sym));
    }
    const HatSymbol& sym = ctx.symbols.at(name);
    std::vector<Tree> children;
    for (const Position& p : sym.leaders)
      children.push_back(Tree(r.lhs.label_at(p)));
    hat_rules.push_back({Tree(name, std::move(children)), r.target, r.weight});
  }
  std::map<std::string, Rational> finals;
  for (const std::string& q : m.finals()) finals[q] = 1;
  ctx.hat =
      Wtg(std::move(hat_alphabet), m.states(), std::move(hat_rules), finals);
  return ctx;
}

namespace {

// Non-sink states reachable by some run, per subtree.
class RunStates {
 public:
  explicit RunStates(const Wtah& m) : m_(m) {}

  const std::set<std::string>& of(const Tree& t) {
    auto it = memo_.find(t);
    if (it != memo_.end()) return it->second;
    std::set<std::string> states;
    for (const ConstrainedRule& r : m_.rules()) {
      if (r.target == m_.sink() || states.count(r.target)) continue;
      if (rule_applies(r, t)) states.insert(r.target);
    }
    return memo_.emplace(t, std::move(states)).first->second;
  }

  bool rule_applies(const ConstrainedRule& r, const Tree& t) {
    auto bound = match_lhs_states(m_, r.lhs, t);
    if (!bound) return false;
    if (!lhs_constraints_hold(m_, r, *bound)) return false;
    auto state_pos = m_.lhs_state_positions(r.lhs);
    for (std::size_t i = 0; i < bound->size(); ++i) {
      const std::string& q = state_pos[i].second;
      if (q == m_.sink()) continue;  // the sink run always exists
      if (!of(*(*bound)[i]).count(q)) return false;
    }
    return true;
  }

 private:
  const Wtah& m_;
  std::map<Tree, std::set<std::string>> memo_;
};

// Fragments applicable at the root of t (by any run to a non-sink state).
std::vector<std::string> root_fragments(const HatContext& ctx, RunStates& rs,
                                        const Tree& t) {
  std::vector<std::string> names;
  for (const ConstrainedRule& r : ctx.source.rules()) {
    if (r.target == ctx.source.sink()) continue;
    if (!rs.rule_applies(r, t)) continue;
    std::string name = hat_symbol_name(blank_states(ctx.source, r.lhs));
    if (std::find(names.begin(), names.end(), name) == names.end())
      names.push_back(name);
  }
  return names;
}

Tree hat_tree_impl(const HatContext& ctx, RunStates& rs, const Tree& t) {
  std::vector<std::string> options = root_fragments(ctx, rs, t);
  if (options.empty())
    throw Error("tree " + t.str() +
                " admits no run to a non-sink state; its fragment form is "
                "undefined");
  if (options.size() > 1) {
    std::string msg = "tree " + t.str() + " decomposes ambiguously:";
    for (const std::string& name : options) msg += " " + name;
    throw Error(msg);
  }
  const HatSymbol& sym = ctx.symbols.at(options.front());
  std::vector<Tree> children;
  for (const Position& p : sym.leaders)
    children.push_back(hat_tree_impl(ctx, rs, t.subtree(p)));
  return Tree(sym.name, std::move(children));
}

}  // namespace

Tree hat_tree(const HatContext& ctx, const Tree& t) {
  RunStates rs(ctx.source);
  return hat_tree_impl(ctx, rs, t);
}

Tree unhat_tree(const HatContext& ctx, const Tree& t_hat) {
  auto it = ctx.symbols.find(t_hat.label());
  if (it == ctx.symbols.end())
    throw ValidationError("unknown fragment symbol '" + t_hat.label() + "'");
  const HatSymbol& sym = it->second;
  if (t_hat.children().size() != sym.leaders.size())
    throw ValidationError("fragment " + sym.name + " expects " +
                          std::to_string(sym.leaders.size()) + " children");
  std::vector<Tree> expanded;
  expanded.reserve(t_hat.children().size());
  for (const Tree& c : t_hat.children())
    expanded.push_back(unhat_tree(ctx, c));
  Tree t = sym.shape;
  for (std::size_t i = 0; i < sym.leaders.size(); ++i)
    t = t.substituted(sym.leaders[i], expanded[i]);
  for (const auto& [p, leader] : sym.copies)
    t = t.substituted(p, expanded[leader]);
  return t;
}

int pumping_constant(const HatContext& ctx) {
  int n = static_cast<int>(ctx.hat.states().size()) * ctx.max_lhs_height;
  return std::max(1, n);
}

int pumping_constant(const Wtah& m) {
  return pumping_constant(build_hat_wta(m));
}

Wtg build_counter_wta(const HatContext& ctx, int N) {
  if (N < 1) throw ValidationError("counter bound must be positive");
  auto counter_state = [&](const std::string& q, int n) {
    return q + "#" + std::to_string(n);
  };
  std::set<std::string> states;
  for (const std::string& q : ctx.hat.states())
    for (int n = 1; n <= N; ++n)
      if (!states.insert(counter_state(q, n)).second)
        throw ValidationError("counter state name collision for '" + q + "'");
  std::vector<GrammarRule> rules;
  for (const GrammarRule& r : ctx.hat.rules()) {
    const HatSymbol& sym = ctx.symbols.at(r.lhs.label());
    std::size_t k = sym.leaders.size();
    std::vector<int> counters(k, 1);
    while (true) {
      bool admissible = true;
      for (std::size_t i = 0; i < k; ++i)
        if (sym.leader_constrained[i] && counters[i] >= N) admissible = false;
      if (admissible) {
        int n = 1;
        for (std::size_t i = 0; i < k; ++i)
          n = std::max(n, counters[i] + sym.leader_depths[i]);
        n = std::min(n, N);
        std::vector<Tree> children;
        for (std::size_t i = 0; i < k; ++i)
          children.push_back(
              Tree(counter_state(r.lhs.children()[i].label(), counters[i])));
        rules.push_back({Tree(r.lhs.label(), std::move(children)),
                         counter_state(r.target, n), r.weight});
      }
      bool done = k == 0;
      std::size_t i = k;
      while (i-- > 0) {
        if (++counters[i] <= N) break;
        counters[i] = 1;
        if (i == 0) done = true;
      }
      if (done) break;
    }
  }
  std::map<std::string, Rational> finals;
  for (const auto& [q, w] : ctx.hat.final_weights())
    for (int n = 1; n <= N; ++n) finals[counter_state(q, n)] = w;
  return Wtg(ctx.hat.alphabet(), std::move(states), std::move(rules),
             std::move(finals));
}

int counter_measure(const HatContext& ctx, const Tree& t_hat, int N) {
  const HatSymbol& sym = ctx.symbols.at(t_hat.label());
  int n = 1;
  for (std::size_t i = 0; i < t_hat.children().size(); ++i)
    n = std::max(n, counter_measure(ctx, t_hat.children()[i], N) +
                        sym.leader_depths[i]);
  return std::min(n, N);
}

namespace {

void decomposition_impl(const HatContext& ctx, RunStates& rs, const Tree& t,
                        const Position& at,
                        std::vector<DecompositionNode>& out) {
  std::vector<std::string> options = root_fragments(ctx, rs, t);
  if (options.size() != 1)
    throw Error("tree " + t.str() + " has no unique decomposition");
  const HatSymbol& sym = ctx.symbols.at(options.front());
  out.push_back({at, &sym});
  for (const Position& p : sym.leaders)
    decomposition_impl(ctx, rs, t.subtree(p), at.concat(p), out);
}

}  // namespace

std::vector<DecompositionNode> decomposition(const HatContext& ctx,
                                             const Tree& t) {
  std::vector<DecompositionNode> out;
  RunStates rs(ctx.source);
  decomposition_impl(ctx, rs, t, Position::root(), out);
  return out;
}

namespace {

// Shortest rule position first, then lexicographic; within a rule the least
// constrained position whose subtree is tall enough.
std::optional<LdpWitness> extract_witness(const HatContext& ctx, const Tree& t,
                                          int N) {
  std::vector<DecompositionNode> nodes = decomposition(ctx, t);
  std::sort(nodes.begin(), nodes.end(),
            [](const DecompositionNode& a, const DecompositionNode& b) {
              if (a.at.length() != b.at.length())
                return a.at.length() < b.at.length();
              return a.at < b.at;
            });
  for (const DecompositionNode& node : nodes) {
    std::optional<Position> best;
    for (const auto& cls : node.symbol->constraints.classes()) {
      for (const Position& p : cls) {
        if (t.subtree(node.at.concat(p)).height() < N) continue;
        if (!best || p < *best) best = p;
      }
    }
    if (best)
      return LdpWitness{t, node.at, *best,
                        t.subtree(node.at.concat(*best)).height()};
  }
  return std::nullopt;
}

}  // namespace

LdpReport decide_ldp(const Wtah& m) {
  HatContext ctx = build_hat_wta(m);
  int N = pumping_constant(ctx);
  Wtg counter = build_counter_wta(ctx, N);
  Wtg difference = linear_combination({{Rational(1), ctx.hat},
                                       {Rational(-1), counter}});
  ZeronessResult z = is_zero(difference);
  LdpReport report;
  report.N = N;
  report.N_hat = static_cast<int>(ctx.hat.states().size());
  report.basis_dim = z.basis_dim;
  if (z.zero) {
    report.has_ldp = false;
    return report;
  }
  report.has_ldp = true;

  // The zeroness witness always exhibits a constrained subtree that the
  // counter rejects, but its height can sit just below N; scan the
  // difference support in canonical order until the height threshold is met.
  if (auto w = extract_witness(ctx, unhat_tree(ctx, *z.witness), N)) {
    report.witness = std::move(w);
    return report;
  }
  int start = z.witness->height();
  int limit = start + N * (ctx.max_lhs_height + 1) + 4;
  std::set<Tree> tried{*z.witness};
  for (int h = start; h <= limit; ++h) {
    for (const auto& [t_hat, value] : enumerate_support(difference, h)) {
      if (!tried.insert(t_hat).second) continue;
      if (auto w = extract_witness(ctx, unhat_tree(ctx, t_hat), N)) {
        report.witness = std::move(w);
        return report;
      }
    }
  }
  throw Error(
      "a nonzero difference series yielded no witness with a constrained "
      "subtree of height >= " +
      std::to_string(N) + " up to height " + std::to_string(limit));
}

}  // namespace treehom
