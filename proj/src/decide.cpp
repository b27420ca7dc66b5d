#include "treehom/decide.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <sstream>

#include "treehom/errors.hpp"

namespace treehom {

namespace {

struct ClassInstantiation {
  std::vector<Position> positions;  // all members of one constraint class
  std::string leader_state;         // its unique non-sink state
};

}  // namespace

Wtg linearize(const Wtah& m, int N, std::size_t max_rules) {
  EqRestrictionReport eqr = validate_eq_restricted(m);
  if (!eqr.ok)
    throw PreconditionError("linearization needs an eq-restricted automaton",
                            eqr.diagnostics);
  // Trees of height < N with a nonzero weight in a given state, memoized.
  WtahEvaluator eval(m);
  std::map<std::string, std::vector<std::pair<Tree, Rational>>> pool;
  auto pool_of = [&](const std::string& q)
      -> const std::vector<std::pair<Tree, Rational>>& {
    auto it = pool.find(q);
    if (it != pool.end()) return it->second;
    std::vector<std::pair<Tree, Rational>> entries;
    for (const Tree& t : wtah_trees_with_run(m, q, N - 1)) {
      Rational w = eval.state_weight(t, q);
      if (w != 0) entries.emplace_back(t, w);
    }
    return pool.emplace(q, std::move(entries)).first->second;
  };

  std::map<std::string, GrammarRule> merged;
  std::size_t produced = 0;
  for (const ConstrainedRule& r : m.rules()) {
    if (r.target == m.sink()) continue;
    std::vector<ClassInstantiation> classes;
    for (const auto& cls : r.constraints.classes()) {
      ClassInstantiation ci;
      ci.positions = cls;
      for (const Position& p : cls)
        if (r.lhs.label_at(p) != m.sink()) ci.leader_state = r.lhs.label_at(p);
      classes.push_back(std::move(ci));
    }
    std::vector<const std::vector<std::pair<Tree, Rational>>*> pools;
    bool dead = false;
    for (const ClassInstantiation& ci : classes) {
      pools.push_back(&pool_of(ci.leader_state));
      if (pools.back()->empty()) dead = true;
    }
    if (dead) continue;
    std::vector<std::size_t> idx(classes.size(), 0);
    while (true) {
      Tree lhs = r.lhs;
      Rational weight = r.weight;
      for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto& [tree, w] = (*pools[i])[idx[i]];
        for (const Position& p : classes[i].positions)
          lhs = lhs.substituted(p, tree);
        weight *= w;
      }
      std::string key = lhs.str() + " -> " + r.target;
      auto it = merged.find(key);
      if (it == merged.end()) {
        merged.emplace(std::move(key), GrammarRule{lhs, r.target, weight});
        if (++produced > max_rules)
          throw EnumerationLimitError(
              "linearization exceeded the rule cap of " +
              std::to_string(max_rules) + "; the instantiation is too large");
      } else {
        it->second.weight += weight;
      }
      bool done = classes.empty();
      std::size_t i = classes.size();
      while (i-- > 0) {
        if (++idx[i] < pools[i]->size()) break;
        idx[i] = 0;
        if (i == 0) done = true;
      }
      if (done) break;
    }
  }
  std::vector<GrammarRule> rules;
  for (auto& [key, r] : merged)
    if (r.weight != 0) rules.push_back(std::move(r));
  std::map<std::string, Rational> finals;
  for (const std::string& q : m.finals()) finals[q] = 1;
  return Wtg(m.alphabet(), m.states(), std::move(rules), std::move(finals));
}

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<StageSummary>& trace) : trace_(trace) {}

  void finish(const std::string& name, const std::string& details) {
    auto now = std::chrono::steady_clock::now();
    double ms =
        std::chrono::duration<double, std::milli>(now - start_).count();
    trace_.push_back({name, details, ms});
    start_ = now;
  }

 private:
  std::vector<StageSummary>& trace_;
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

}  // namespace

Decision decide_hom(const Wtg& a, const Homomorphism& h) {
  Decision decision;
  StageClock clock(decision.trace);

  HomProperties props = check_properties(h);
  if (!props.nondeleting)
    throw RejectedInputError("deleting",
                             "the homomorphism deletes subtrees; the image "
                             "series need not be well-defined");
  if (!props.nonerasing)
    throw RejectedInputError("erasing",
                             "the homomorphism erases symbols; the image "
                             "series need not be well-defined");
  TetrisResult tetris = is_tetris_free(h);
  if (!tetris.tetris_free) {
    const auto& [s, sp] = *tetris.witness;
    throw RejectedInputError(
        "not-tetris-free",
        "the homomorphism is not tetris-free: " + s.str() + " and " +
            sp.str() + " assemble the same tree " + apply(h, s).str(),
        tetris.witness);
  }
  clock.finish("input-checks", "tetris-free");

  Wtah image = hom_image(a, h);
  clock.finish("image-automaton",
               "rules=" + std::to_string(image.rules().size()));

  LdpReport ldp = decide_ldp(image);
  {
    std::ostringstream details;
    details << "ldp=" << (ldp.has_ldp ? "yes" : "no") << " N=" << ldp.N
            << " N_hat=" << ldp.N_hat << " basis_dim=" << ldp.basis_dim;
    clock.finish("duplication-check", details.str());
  }
  if (ldp.has_ldp) {
    decision.regular = false;
    decision.ldp = std::move(ldp);
    return decision;
  }

  Wtg certificate = linearize(image, ldp.N);
  clock.finish("linearization",
               "rules=" + std::to_string(certificate.rules().size()));
  decision.regular = true;
  decision.certificate = std::move(certificate);
  decision.ldp = std::move(ldp);
  return decision;
}

}  // namespace treehom
