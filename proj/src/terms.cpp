#include "treehom/terms.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "treehom/errors.hpp"

namespace treehom {

bool is_variable(const std::string& name) { return variable_index(name) > 0; }

int variable_index(const std::string& name) {
  if (name.size() < 2 || name[0] != 'x') return 0;
  if (name[1] == '0') return 0;  // no leading zeros
  int value = 0;
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return 0;
    value = value * 10 + (name[i] - '0');
    if (value > 1'000'000) throw ValidationError("variable index too large");
  }
  return value;
}

std::string variable_name(int index) { return "x" + std::to_string(index); }

bool is_reserved(const std::string& name) {
  return name == kSink || name == kHole || is_variable(name);
}

Position Position::child(int i) const {
  Position p = *this;
  p.path.push_back(i);
  return p;
}

Position Position::concat(const Position& suffix) const {
  Position p = *this;
  p.path.insert(p.path.end(), suffix.path.begin(), suffix.path.end());
  return p;
}

bool Position::is_prefix_of(const Position& other) const {
  if (path.size() > other.path.size()) return false;
  return std::equal(path.begin(), path.end(), other.path.begin());
}

std::string Position::str() const {
  if (path.empty()) return "e";
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(path[i]);
  }
  return out;
}

Position Position::parse(const std::string& text) {
  if (text == "e") return Position{};
  Position p;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])))
      ++j;
    if (j == i) throw ParseError("bad position: '" + text + "'");
    int idx = std::stoi(text.substr(i, j - i));
    if (idx <= 0) throw ParseError("positions are 1-based: '" + text + "'");
    p.path.push_back(idx);
    if (j < text.size()) {
      if (text[j] != '.') throw ParseError("bad position: '" + text + "'");
      ++j;
      if (j == text.size()) throw ParseError("bad position: '" + text + "'");
    }
    i = j;
  }
  return p;
}

int compare(const Position& a, const Position& b) {
  std::size_t n = std::min(a.path.size(), b.path.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.path[i] != b.path[i]) return a.path[i] < b.path[i] ? -1 : 1;
  }
  if (a.path.size() == b.path.size()) return 0;
  return a.path.size() < b.path.size() ? -1 : 1;
}

std::size_t Tree::size() const {
  std::size_t n = 1;
  for (const Tree& c : children_) n += c.size();
  return n;
}

int Tree::height() const {
  int h = 0;
  for (const Tree& c : children_) h = std::max(h, 1 + c.height());
  return h;
}

const Tree& Tree::subtree(const Position& p) const {
  const Tree* node = this;
  for (int i : p.path) {
    if (i < 1 || static_cast<std::size_t>(i) > node->children_.size())
      throw InvalidPositionError("position " + p.str() + " not in tree " +
                                 str());
    node = &node->children_[i - 1];
  }
  return *node;
}

const std::string& Tree::label_at(const Position& p) const {
  return subtree(p).label();
}

Tree Tree::substituted(const Position& p, const Tree& replacement) const {
  if (p.is_root()) return replacement;
  int head = p.path.front();
  if (head < 1 || static_cast<std::size_t>(head) > children_.size())
    throw InvalidPositionError("position " + p.str() + " not in tree " + str());
  Tree out = *this;
  Position rest;
  rest.path.assign(p.path.begin() + 1, p.path.end());
  out.children_[head - 1] = children_[head - 1].substituted(rest, replacement);
  return out;
}

namespace {

void collect_positions(const Tree& t, Position& here,
                       std::vector<Position>& out) {
  out.push_back(here);
  for (std::size_t i = 0; i < t.children().size(); ++i) {
    here.path.push_back(static_cast<int>(i + 1));
    collect_positions(t.children()[i], here, out);
    here.path.pop_back();
  }
}

}  // namespace

std::vector<Position> Tree::positions() const {
  std::vector<Position> out;
  Position here;
  collect_positions(*this, here, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Position> Tree::positions_of_label(const std::string& name) const {
  std::vector<Position> out;
  for (const Position& p : positions())
    if (label_at(p) == name) out.push_back(p);
  return out;
}

std::string Tree::str() const {
  std::string out = label_;
  if (!children_.empty()) {
    out += '(';
    for (std::size_t i = 0; i < children_.size(); ++i) {
      if (i) out += ',';
      out += children_[i].str();
    }
    out += ')';
  }
  return out;
}

bool Tree::operator==(const Tree& o) const {
  if (label_ != o.label_ || children_.size() != o.children_.size())
    return false;
  for (std::size_t i = 0; i < children_.size(); ++i)
    if (!(children_[i] == o.children_[i])) return false;
  return true;
}

int compare(const Tree& a, const Tree& b) {
  if (a.label() != b.label()) return a.label() < b.label() ? -1 : 1;
  if (a.children().size() != b.children().size())
    return a.children().size() < b.children().size() ? -1 : 1;
  for (std::size_t i = 0; i < a.children().size(); ++i) {
    int c = compare(a.children()[i], b.children()[i]);
    if (c != 0) return c;
  }
  return 0;
}

int compare_height_size_lex(const Tree& a, const Tree& b) {
  if (a.height() != b.height()) return a.height() < b.height() ? -1 : 1;
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return compare(a, b);
}

namespace {

struct TermParser {
  const std::string& text;
  std::size_t pos = 0;

  explicit TermParser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }

  bool ident_char(char c) const {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '\'';
  }

  std::string identifier() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && ident_char(text[pos])) ++pos;
    if (pos == start)
      throw ParseError("expected identifier at offset " +
                       std::to_string(pos) + " in '" + text + "'");
    return text.substr(start, pos - start);
  }

  Tree term() {
    std::string label = identifier();
    skip_ws();
    std::vector<Tree> children;
    if (pos < text.size() && text[pos] == '(') {
      ++pos;
      skip_ws();
      if (pos < text.size() && text[pos] == ')')
        throw ParseError("empty argument list in '" + text + "'");
      children.push_back(term());
      skip_ws();
      while (pos < text.size() && text[pos] == ',') {
        ++pos;
        children.push_back(term());
        skip_ws();
      }
      if (pos >= text.size() || text[pos] != ')')
        throw ParseError("missing ')' in '" + text + "'");
      ++pos;
    }
    return Tree(label, std::move(children));
  }
};

}  // namespace

Tree parse_term(const std::string& text) {
  TermParser p(text);
  Tree t = p.term();
  p.skip_ws();
  if (p.pos != text.size())
    throw ParseError("trailing input after term in '" + text + "'");
  return t;
}

Tree apply_var_substitution(const Tree& t,
                            const std::map<std::string, Tree>& theta) {
  if (t.is_leaf()) {
    auto it = theta.find(t.label());
    if (it != theta.end()) return it->second;
    return t;
  }
  std::vector<Tree> children;
  children.reserve(t.children().size());
  for (const Tree& c : t.children())
    children.push_back(apply_var_substitution(c, theta));
  return Tree(t.label(), std::move(children));
}

std::vector<Position> hole_positions(const Tree& context) {
  return context.positions_of_label(kHole);
}

Tree fill_multicontext(const Tree& context, const std::vector<Tree>& trees) {
  std::vector<Position> holes = hole_positions(context);
  if (holes.size() != trees.size())
    throw ValidationError("context has " + std::to_string(holes.size()) +
                          " holes but " + std::to_string(trees.size()) +
                          " trees were given");
  Tree out = context;
  for (std::size_t i = 0; i < holes.size(); ++i)
    out = out.substituted(holes[i], trees[i]);
  return out;
}

Tree fill_context(const Tree& context, const Tree& tree) {
  std::vector<Position> holes = hole_positions(context);
  if (holes.empty()) throw ValidationError("context has no hole");
  Tree out = context;
  for (const Position& p : holes) out = out.substituted(p, tree);
  return out;
}

RankedAlphabet::RankedAlphabet(
    std::initializer_list<std::pair<const std::string, int>> init) {
  for (const auto& [name, rank] : init) add(name, rank);
}

int RankedAlphabet::rank(const std::string& name) const {
  auto it = ranks.find(name);
  if (it == ranks.end())
    throw ValidationError("unknown symbol '" + name + "'");
  return it->second;
}

void RankedAlphabet::add(const std::string& name, int rank) {
  if (name.empty()) throw ValidationError("empty symbol name");
  if (is_reserved(name))
    throw ValidationError("'" + name + "' is reserved and cannot be a symbol");
  if (rank < 0) throw ValidationError("negative rank for '" + name + "'");
  auto [it, inserted] = ranks.emplace(name, rank);
  if (!inserted && it->second != rank)
    throw ValidationError("symbol '" + name + "' declared with ranks " +
                          std::to_string(it->second) + " and " +
                          std::to_string(rank));
}

void validate_tree(const RankedAlphabet& alphabet, const Tree& t,
                   const std::set<std::string>& extra_leaves) {
  if (t.is_leaf() && extra_leaves.count(t.label())) return;
  if (!alphabet.contains(t.label()))
    throw ValidationError("symbol '" + t.label() + "' not in alphabet (tree " +
                          t.str() + ")");
  int rank = alphabet.rank(t.label());
  if (static_cast<std::size_t>(rank) != t.children().size())
    throw ValidationError("symbol '" + t.label() + "' has rank " +
                          std::to_string(rank) + " but " +
                          std::to_string(t.children().size()) +
                          " children in " + t.str());
  for (const Tree& c : t.children()) validate_tree(alphabet, c, extra_leaves);
}

std::vector<Tree> enumerate_trees(const RankedAlphabet& alphabet,
                                  int max_height, std::size_t cap) {
  // by_height[h] holds the trees of height exactly h.
  std::vector<std::vector<Tree>> by_height(max_height + 1);
  std::size_t total = 0;
  for (const auto& [name, rank] : alphabet.ranks)
    if (rank == 0) {
      by_height[0].push_back(Tree(name));
      ++total;
    }
  for (int h = 1; h <= max_height; ++h) {
    std::vector<Tree> lower;  // height <= h-1
    for (int g = 0; g < h; ++g)
      lower.insert(lower.end(), by_height[g].begin(), by_height[g].end());
    for (const auto& [name, rank] : alphabet.ranks) {
      if (rank == 0) continue;
      std::vector<std::size_t> idx(rank, 0);
      if (lower.empty()) continue;
      while (true) {
        std::vector<Tree> children;
        children.reserve(rank);
        int child_max = 0;
        for (int i = 0; i < rank; ++i) {
          children.push_back(lower[idx[i]]);
          child_max = std::max(child_max, children.back().height());
        }
        if (child_max == h - 1) {
          by_height[h].push_back(Tree(name, std::move(children)));
          if (++total > cap)
            throw EnumerationLimitError(
                "tree enumeration exceeded cap of " + std::to_string(cap) +
                " at height " + std::to_string(h));
        }
        int k = rank - 1;
        while (k >= 0 && ++idx[k] == lower.size()) idx[k--] = 0;
        if (k < 0) break;
      }
    }
  }
  std::vector<Tree> out;
  out.reserve(total);
  for (auto& level : by_height)
    out.insert(out.end(), level.begin(), level.end());
  return out;
}

}  // namespace treehom
