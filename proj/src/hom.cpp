#include "treehom/hom.hpp"

#include <algorithm>
#include <deque>

#include "treehom/errors.hpp"

namespace treehom {

Homomorphism::Homomorphism(RankedAlphabet source, RankedAlphabet target,
                           std::map<std::string, Tree> images)
    : source_(std::move(source)),
      target_(std::move(target)),
      images_(std::move(images)) {
  for (const auto& [symbol, rank] : source_.ranks) {
    auto it = images_.find(symbol);
    if (it == images_.end())
      throw ValidationError("no image for source symbol '" + symbol + "'");
    std::set<std::string> allowed;
    for (int i = 1; i <= rank; ++i) allowed.insert(variable_name(i));
    try {
      validate_tree(target_, it->second, allowed);
    } catch (const ValidationError& e) {
      throw ValidationError("image of '" + symbol + "': " + e.what());
    }
  }
  for (const auto& [symbol, image] : images_)
    if (!source_.contains(symbol))
      throw ValidationError("image given for unknown symbol '" + symbol + "'");
}

const Tree& Homomorphism::image_of(const std::string& symbol) const {
  auto it = images_.find(symbol);
  if (it == images_.end())
    throw ValidationError("no image for symbol '" + symbol + "'");
  return it->second;
}

int Homomorphism::max_image_height() const {
  int h = 0;
  for (const auto& [symbol, image] : images_)
    h = std::max(h, image.height());
  return h;
}

Tree apply(const Homomorphism& h, const Tree& s) {
  int rank = h.source().rank(s.label());
  if (static_cast<std::size_t>(rank) != s.children().size())
    throw ValidationError("tree " + s.str() + " is not well-ranked");
  std::map<std::string, Tree> theta;
  for (int i = 1; i <= rank; ++i)
    theta.emplace(variable_name(i), apply(h, s.children()[i - 1]));
  return apply_var_substitution(h.image_of(s.label()), theta);
}

HomProperties check_properties(const Homomorphism& h) {
  HomProperties props{true, true};
  for (const auto& [symbol, rank] : h.source().ranks) {
    const Tree& u = h.image_of(symbol);
    if (u.is_leaf() && is_variable(u.label())) props.nonerasing = false;
    std::set<int> used;
    for (const Position& p : u.positions())
      if (int v = variable_index(u.label_at(p)); v > 0) used.insert(v);
    for (int i = 1; i <= rank; ++i)
      if (!used.count(i)) props.nondeleting = false;
  }
  return props;
}

namespace {

void require_nondeleting_nonerasing(const Homomorphism& h,
                                    const char* operation) {
  HomProperties props = check_properties(h);
  std::vector<std::string> diags;
  if (!props.nondeleting) diags.push_back("homomorphism is deleting");
  if (!props.nonerasing) diags.push_back("homomorphism is erasing");
  if (!diags.empty())
    throw PreconditionError(std::string(operation) +
                                " requires a nondeleting, nonerasing "
                                "homomorphism",
                            diags);
}

// Matches an image u (with variables) against t; repeated variables must
// bind equal subtrees.
std::optional<std::map<int, Tree>> match_image(const Tree& u, const Tree& t) {
  std::map<int, Tree> bindings;
  struct Frame {
    const Tree* pattern;
    const Tree* subject;
  };
  std::vector<Frame> stack{{&u, &t}};
  while (!stack.empty()) {
    auto [pattern, subject] = stack.back();
    stack.pop_back();
    if (int v = variable_index(pattern->label()); v > 0) {
      auto [it, inserted] = bindings.emplace(v, *subject);
      if (!inserted && it->second != *subject) return std::nullopt;
      continue;
    }
    if (pattern->label() != subject->label() ||
        pattern->children().size() != subject->children().size())
      return std::nullopt;
    for (std::size_t i = pattern->children().size(); i-- > 0;)
      stack.push_back({&pattern->children()[i], &subject->children()[i]});
  }
  return bindings;
}

}  // namespace

PreimageFinder::PreimageFinder(const Homomorphism& h) : h_(h) {
  require_nondeleting_nonerasing(h, "preimage enumeration");
}

const std::vector<Tree>& PreimageFinder::preimages(const Tree& t) {
  auto it = memo_.find(t);
  if (it != memo_.end()) return it->second;
  memo_.emplace(t, std::vector<Tree>{});  // cycle-safe placeholder; images
                                          // are nonerasing so recursion is on
                                          // strictly smaller trees anyway
  std::vector<Tree> out;
  for (const auto& [symbol, rank] : h_.source().ranks) {
    auto bindings = match_image(h_.image_of(symbol), t);
    if (!bindings) continue;
    std::vector<const std::vector<Tree>*> pools;
    bool dead = false;
    for (int i = 1; i <= rank && !dead; ++i) {
      const std::vector<Tree>& pre = preimages(bindings->at(i));
      if (pre.empty()) dead = true;
      pools.push_back(&pre);
    }
    if (dead) continue;
    std::vector<std::size_t> idx(rank, 0);
    while (true) {
      std::vector<Tree> children;
      children.reserve(rank);
      for (int i = 0; i < rank; ++i) children.push_back((*pools[i])[idx[i]]);
      out.push_back(Tree(symbol, std::move(children)));
      bool done = rank == 0;
      int i = rank;
      while (i-- > 0) {
        if (++idx[i] < pools[i]->size()) break;
        idx[i] = 0;
        if (i == 0) done = true;
      }
      if (done) break;
    }
  }
  std::sort(out.begin(), out.end(), [](const Tree& a, const Tree& b) {
    return compare_height_size_lex(a, b) < 0;
  });
  return memo_[t] = std::move(out);
}

std::vector<Tree> preimages(const Homomorphism& h, const Tree& t) {
  PreimageFinder finder(h);
  return finder.preimages(t);
}

namespace {

// ---- tiling-ambiguity machinery -------------------------------------------

struct Block {
  Tree image;                    // with variables
  std::vector<Position> slots;   // variable positions, lex
  std::vector<std::string> members;
  std::string rep;               // lex-least member
  int rank;                      // member rank (= number of distinct vars)
};

std::vector<Block> image_blocks(const Homomorphism& h) {
  std::map<Tree, std::vector<std::string>> classes;
  for (const auto& [symbol, rank] : h.source().ranks)
    classes[h.image_of(symbol)].push_back(symbol);
  std::vector<Block> blocks;
  for (auto& [image, members] : classes) {
    std::sort(members.begin(), members.end());
    Block b;
    b.image = image;
    for (const Position& p : image.positions())
      if (is_variable(image.label_at(p))) b.slots.push_back(p);
    b.rep = members.front();
    b.rank = h.source().rank(b.rep);
    b.members = std::move(members);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

// One way to assemble a tree from blocks: a block per node plus the
// assemblies hanging off its slots, in lexicographic slot order.
struct Deriv {
  int block;
  std::vector<Deriv> slots;
};

// Turns an assembly into a source tree; a repeated variable reads the
// assembly at its lexicographically least occurrence.
Tree decode_deriv(const std::vector<Block>& blocks, const Deriv& d) {
  const Block& b = blocks[d.block];
  std::vector<Tree> children;
  for (int v = 1; v <= b.rank; ++v) {
    Position least;
    bool found = false;
    for (const Position& p : b.slots) {
      if (variable_index(b.image.label_at(p)) == v) {
        least = p;
        found = true;
        break;  // slots are lex-sorted
      }
    }
    if (!found) throw Error("internal: deleted variable in block");
    std::size_t idx =
        std::find(b.slots.begin(), b.slots.end(), least) - b.slots.begin();
    children.push_back(decode_deriv(blocks, d.slots[idx]));
  }
  return Tree(b.rep, std::move(children));
}

struct Transition {
  int id;
  std::string symbol;
  std::vector<int> child_states;
  int result;
  int block;
  bool at_root;
};

// Bottom-up acceptor whose accepting runs are exactly the assemblies.
// State 0 means "a complete block ends here"; other states are progress
// points inside one block.
struct TilingNfa {
  std::vector<Transition> transitions;
  int state_count = 1;
  std::map<std::pair<int, std::string>, int> inner_state;  // (block, pos str)

  int state_of(int block, const Position& p) {
    auto key = std::make_pair(block, p.str());
    auto it = inner_state.find(key);
    if (it != inner_state.end()) return it->second;
    inner_state.emplace(key, state_count);
    return state_count++;
  }
};

TilingNfa build_tiling_nfa(const std::vector<Block>& blocks) {
  TilingNfa nfa;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const Block& b = blocks[bi];
    for (const Position& p : b.image.positions()) {
      const Tree& node = b.image.subtree(p);
      if (is_variable(node.label())) continue;
      Transition tr;
      tr.id = static_cast<int>(nfa.transitions.size());
      tr.symbol = node.label();
      tr.block = static_cast<int>(bi);
      tr.at_root = p.is_root();
      tr.result = tr.at_root ? 0 : nfa.state_of(static_cast<int>(bi), p);
      for (std::size_t i = 1; i <= node.children().size(); ++i) {
        Position cp = p.child(static_cast<int>(i));
        if (is_variable(b.image.label_at(cp)))
          tr.child_states.push_back(0);
        else
          tr.child_states.push_back(nfa.state_of(static_cast<int>(bi), cp));
      }
      nfa.transitions.push_back(std::move(tr));
    }
  }
  return nfa;
}

// Witness data for a reachable pair of run states: one tree with two runs on
// it, each run summarized by its pending assemblies.
struct PairKey {
  int a, b;
  bool diverged;
  bool operator<(const PairKey& o) const {
    if (a != o.a) return a < o.a;
    if (b != o.b) return b < o.b;
    return diverged < o.diverged;
  }
};

struct PairInfo {
  Tree tree;
  std::vector<Deriv> pending_a;
  std::vector<Deriv> pending_b;
};

struct AmbiguityResult {
  bool ambiguous = false;
  Tree tree;      // a doubly-assembled tree
  Deriv deriv_a;  // two distinct assemblies of it
  Deriv deriv_b;
};

AmbiguityResult find_ambiguity(const std::vector<Block>& blocks) {
  TilingNfa nfa = build_tiling_nfa(blocks);
  std::map<std::string, std::vector<const Transition*>> by_symbol;
  for (const Transition& tr : nfa.transitions)
    by_symbol[tr.symbol].push_back(&tr);

  std::map<PairKey, PairInfo> reached;
  std::vector<PairKey> order;  // insertion order, drives tuple enumeration
  std::deque<PairKey> worklist;

  auto note = [&](PairKey key, PairInfo info) -> const AmbiguityResult* {
    if (reached.count(key)) return nullptr;
    reached.emplace(key, std::move(info));
    order.push_back(key);
    worklist.push_back(key);
    return nullptr;
  };

  AmbiguityResult result;
  auto finish = [&](const PairKey& key) {
    const PairInfo& info = reached.at(key);
    result.ambiguous = true;
    result.tree = info.tree;
    result.deriv_a = info.pending_a.front();
    result.deriv_b = info.pending_b.front();
  };

  // Seed and close under all transitions; tuples draw from already-reached
  // pairs and must contain the freshly popped pair at least once.
  auto expand = [&](const std::vector<const Transition*>& trs,
                    const std::vector<PairKey>& tuple) {
    for (const Transition* ta : trs) {
      std::size_t k = ta->child_states.size();
      if (tuple.size() != k) continue;
      bool ok_a = true;
      for (std::size_t i = 0; i < k && ok_a; ++i)
        if (tuple[i].a != ta->child_states[i]) ok_a = false;
      if (!ok_a) continue;
      for (const Transition* tb : trs) {
        if (tb->child_states.size() != k) continue;
        bool ok_b = true;
        for (std::size_t i = 0; i < k && ok_b; ++i)
          if (tuple[i].b != tb->child_states[i]) ok_b = false;
        if (!ok_b) continue;
        bool diverged = ta->id != tb->id;
        for (const PairKey& c : tuple) diverged = diverged || c.diverged;
        PairKey key{ta->result, tb->result, diverged};
        if (reached.count(key)) continue;
        PairInfo info;
        std::vector<Tree> children;
        for (const PairKey& c : tuple) {
          const PairInfo& ci = reached.at(c);
          children.push_back(ci.tree);
        }
        info.tree = Tree(ta->symbol, std::move(children));
        auto combine = [&](bool side_a, const Transition* tr) {
          std::vector<Deriv> pending;
          for (std::size_t i = 0; i < k; ++i) {
            const PairInfo& ci = reached.at(tuple[i]);
            const auto& child_pending = side_a ? ci.pending_a : ci.pending_b;
            pending.insert(pending.end(), child_pending.begin(),
                           child_pending.end());
          }
          if (tr->at_root) {
            Deriv d{tr->block, std::move(pending)};
            pending = {std::move(d)};
          }
          return pending;
        };
        info.pending_a = combine(true, ta);
        info.pending_b = combine(false, tb);
        note(key, std::move(info));
        if (key.a == 0 && key.b == 0 && key.diverged) {
          finish(key);
          return true;
        }
      }
    }
    return false;
  };

  // Nullary seeds.
  for (const auto& [symbol, trs] : by_symbol)
    if (expand(trs, {})) return result;

  while (!worklist.empty()) {
    PairKey fresh = worklist.front();
    worklist.pop_front();
    for (const auto& [symbol, trs] : by_symbol) {
      std::size_t max_arity = 0;
      for (const Transition* tr : trs)
        max_arity = std::max(max_arity, tr->child_states.size());
      for (std::size_t k = 1; k <= max_arity; ++k) {
        // all tuples over `order` of length k containing `fresh`
        std::vector<std::size_t> idx(k, 0);
        while (true) {
          bool contains_fresh = false;
          std::vector<PairKey> tuple;
          tuple.reserve(k);
          for (std::size_t i = 0; i < k; ++i) {
            tuple.push_back(order[idx[i]]);
            if (!(order[idx[i]] < fresh) && !(fresh < order[idx[i]]))
              contains_fresh = true;
          }
          if (contains_fresh && expand(trs, tuple)) return result;
          std::size_t i = k;
          bool done = false;
          while (i-- > 0) {
            if (++idx[i] < order.size()) break;
            idx[i] = 0;
            if (i == 0) done = true;
          }
          if (done) break;
        }
      }
    }
  }
  return result;
}

bool is_violation(const Homomorphism& h, const Tree& s, const Tree& sp) {
  if (apply(h, s) != apply(h, sp)) return false;
  auto pos_s = s.positions();
  auto pos_sp = sp.positions();
  if (pos_s != pos_sp) return true;
  for (const Position& p : pos_s)
    if (h.image_of(s.label_at(p)) != h.image_of(sp.label_at(p))) return true;
  return false;
}

// Trees over the source alphabet with at most max_size nodes.
std::vector<Tree> trees_up_to_size(const RankedAlphabet& alphabet,
                                   std::size_t max_size, std::size_t cap) {
  std::vector<std::vector<Tree>> by_size(max_size + 1);
  std::size_t total = 0;
  for (std::size_t n = 1; n <= max_size; ++n) {
    for (const auto& [symbol, rank] : alphabet.ranks) {
      if (rank == 0) {
        if (n == 1) {
          by_size[1].push_back(Tree(symbol));
          ++total;
        }
        continue;
      }
      if (n < static_cast<std::size_t>(rank) + 1) continue;
      // distribute n-1 nodes over `rank` children, each at least 1
      std::vector<std::size_t> sizes(rank, 1);
      std::size_t rest = n - 1 - rank;
      std::function<void(int, std::size_t)> place = [&](int slot,
                                                        std::size_t left) {
        if (slot == rank - 1) {
          sizes[slot] = 1 + left;
          std::vector<std::size_t> idx(rank, 0);
          while (true) {
            bool viable = true;
            for (int i = 0; i < rank && viable; ++i)
              if (idx[i] >= by_size[sizes[i]].size()) viable = false;
            if (!viable) break;
            std::vector<Tree> children;
            for (int i = 0; i < rank; ++i)
              children.push_back(by_size[sizes[i]][idx[i]]);
            by_size[n].push_back(Tree(symbol, std::move(children)));
            if (++total > cap)
              throw EnumerationLimitError(
                  "source enumeration exceeded cap of " + std::to_string(cap));
            int i = rank;
            bool done = false;
            while (i-- > 0) {
              if (++idx[i] < by_size[sizes[i]].size()) break;
              idx[i] = 0;
              if (i == 0) done = true;
            }
            if (done) break;
          }
          return;
        }
        for (std::size_t take = 0; take <= left; ++take) {
          sizes[slot] = 1 + take;
          place(slot + 1, left - take);
        }
      };
      place(0, rest);
    }
  }
  std::vector<Tree> out;
  for (auto& level : by_size)
    out.insert(out.end(), level.begin(), level.end());
  return out;
}

// Canonical pair form: larger tree first, ties by term order.
std::pair<Tree, Tree> normalize_pair(Tree s, Tree sp) {
  bool swap = s.size() < sp.size() ||
              (s.size() == sp.size() && compare(s, sp) > 0);
  if (swap) std::swap(s, sp);
  return {std::move(s), std::move(sp)};
}

int compare_pairs(const std::pair<Tree, Tree>& x,
                  const std::pair<Tree, Tree>& y) {
  std::size_t sx = x.first.size() + x.second.size();
  std::size_t sy = y.first.size() + y.second.size();
  if (sx != sy) return sx < sy ? -1 : 1;
  if (int c = compare(x.first, y.first)) return c;
  return compare(x.second, y.second);
}

std::optional<std::pair<Tree, Tree>> minimal_violation(
    const Homomorphism& h, const std::vector<Tree>& candidates) {
  std::map<Tree, std::vector<const Tree*>> groups;
  for (const Tree& s : candidates) groups[apply(h, s)].push_back(&s);
  std::optional<std::pair<Tree, Tree>> best;
  for (const auto& [image, sources] : groups) {
    for (std::size_t i = 0; i < sources.size(); ++i)
      for (std::size_t j = i + 1; j < sources.size(); ++j) {
        if (!is_violation(h, *sources[i], *sources[j])) continue;
        auto pair = normalize_pair(*sources[i], *sources[j]);
        if (!best || compare_pairs(pair, *best) < 0) best = std::move(pair);
      }
  }
  return best;
}

}  // namespace

TetrisResult is_tetris_free(const Homomorphism& h) {
  require_nondeleting_nonerasing(h, "the tetris-freeness check");
  std::vector<Block> blocks = image_blocks(h);
  AmbiguityResult amb = find_ambiguity(blocks);
  if (!amb.ambiguous) return {true, std::nullopt};

  Tree s = decode_deriv(blocks, amb.deriv_a);
  Tree sp = decode_deriv(blocks, amb.deriv_b);
  std::size_t bound;
  if (is_violation(h, s, sp)) {
    bound = s.size() + sp.size();
  } else {
    // The assemblies were not variable-consistent; unique tiling may be
    // stricter than the defining condition here. Search for a genuine pair.
    bound = 12;
  }
  auto best = minimal_violation(
      h, trees_up_to_size(h.source(), bound > 1 ? bound - 1 : 1, 500'000));
  if (best) return {false, best};
  throw Error(
      "tiling of " + amb.tree.str() +
      " is ambiguous, but no violating source pair of total size <= " +
      std::to_string(bound) +
      " exists; the unique-tiling check is stricter than the defining "
      "condition for this input");
}

TetrisResult tetris_free_bounded_oracle(const Homomorphism& h,
                                        int max_height) {
  require_nondeleting_nonerasing(h, "the bounded tetris-freeness oracle");
  auto best = minimal_violation(h, enumerate_trees(h.source(), max_height));
  if (best) return {false, best};
  return {true, std::nullopt};
}

}  // namespace treehom
