#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace treehom {

// Reserved leaf tokens. They are never members of a ranked alphabet: BOT is
// the sink state of constrained automata, BOX the hole of contexts, and
// x1,x2,... the formal variables of homomorphism images.
inline constexpr const char* kSink = "BOT";
inline constexpr const char* kHole = "BOX";

bool is_variable(const std::string& name);
// 1-based index of a variable name, 0 otherwise.
int variable_index(const std::string& name);
std::string variable_name(int index);
bool is_reserved(const std::string& name);

// Tree address with 1-based child indexing; the empty path is the root.
struct Position {
  std::vector<int> path;

  Position() = default;
  explicit Position(std::vector<int> p) : path(std::move(p)) {}

  static Position root() { return Position{}; }
  bool is_root() const { return path.empty(); }
  std::size_t length() const { return path.size(); }
  Position child(int i) const;
  Position concat(const Position& suffix) const;
  bool is_prefix_of(const Position& other) const;

  std::string str() const;  // root prints as "e", otherwise "2.1" style
  static Position parse(const std::string& text);

  bool operator==(const Position& o) const { return path == o.path; }
  bool operator!=(const Position& o) const { return path != o.path; }
};

// Lexicographic order on paths (prefixes first). Total.
int compare(const Position& a, const Position& b);
inline bool operator<(const Position& a, const Position& b) {
  return compare(a, b) < 0;
}

// Finite ordered term. Immutable value; all operations are pure, so trees can
// be shared freely across threads.
class Tree {
 public:
  Tree() = default;
  explicit Tree(std::string label, std::vector<Tree> children = {})
      : label_(std::move(label)), children_(std::move(children)) {}

  const std::string& label() const { return label_; }
  const std::vector<Tree>& children() const { return children_; }
  bool is_leaf() const { return children_.empty(); }

  std::size_t size() const;  // number of positions
  int height() const;        // longest path length; 0 for a leaf

  const Tree& subtree(const Position& p) const;
  const std::string& label_at(const Position& p) const;
  Tree substituted(const Position& p, const Tree& replacement) const;

  // All positions in lexicographic order; prefix-closed by construction.
  std::vector<Position> positions() const;
  std::vector<Position> positions_of_label(const std::string& name) const;

  std::string str() const;  // nullary symbols print without parentheses

  bool operator==(const Tree& o) const;
  bool operator!=(const Tree& o) const { return !(*this == o); }

 private:
  std::string label_;
  std::vector<Tree> children_;
};

// Structural order: label, then arity, then children left to right.
int compare(const Tree& a, const Tree& b);
inline bool operator<(const Tree& a, const Tree& b) {
  return compare(a, b) < 0;
}
// (height, size, structural) order used wherever a canonical pick is needed.
int compare_height_size_lex(const Tree& a, const Tree& b);

Tree parse_term(const std::string& text);

// Simultaneous replacement of variable leaves; unmapped variables stay.
Tree apply_var_substitution(const Tree& t,
                            const std::map<std::string, Tree>& theta);

// Hole positions of a context, lexicographically sorted.
std::vector<Position> hole_positions(const Tree& context);
// Fills the holes in lexicographic order; arity must match.
Tree fill_multicontext(const Tree& context, const std::vector<Tree>& trees);
// Replicated fill: every hole receives the same tree.
Tree fill_context(const Tree& context, const Tree& tree);

struct RankedAlphabet {
  std::map<std::string, int> ranks;

  RankedAlphabet() = default;
  RankedAlphabet(std::initializer_list<std::pair<const std::string, int>> init);

  bool contains(const std::string& name) const {
    return ranks.count(name) > 0;
  }
  int rank(const std::string& name) const;  // throws if unknown
  void add(const std::string& name, int rank);  // validates name and rank

  bool operator==(const RankedAlphabet& o) const { return ranks == o.ranks; }
  bool operator!=(const RankedAlphabet& o) const { return !(*this == o); }
};

// Checks that every node is an alphabet symbol used with its declared rank,
// except leaves whose label is in extra_leaves (states, BOT, BOX, variables).
void validate_tree(const RankedAlphabet& alphabet, const Tree& t,
                   const std::set<std::string>& extra_leaves = {});

// All trees over the alphabet of height <= max_height, grouped by height.
// Throws EnumerationLimitError past the cap.
std::vector<Tree> enumerate_trees(const RankedAlphabet& alphabet,
                                  int max_height,
                                  std::size_t cap = 2'000'000);

}  // namespace treehom
