#include "treehom/io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "treehom/errors.hpp"

namespace treehom::io {

namespace {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;

  explicit Cursor(const std::string& t) : text(t) {}

  void skip() {
    while (pos < text.size()) {
      char c = text[pos];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else if (c == '#') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  bool done() {
    skip();
    return pos >= text.size();
  }

  [[noreturn]] void fail(const std::string& what) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError("line " + std::to_string(line) + ": " + what);
  }

  bool peek_char(char c) {
    skip();
    return pos < text.size() && text[pos] == c;
  }

  void expect_char(char c) {
    skip();
    if (pos >= text.size() || text[pos] != c)
      fail(std::string("expected '") + c + "'");
    ++pos;
  }

  bool ident_char(char c) const {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '\'';
  }

  std::string identifier() {
    skip();
    std::size_t start = pos;
    while (pos < text.size() && ident_char(text[pos])) ++pos;
    if (pos == start) fail("expected identifier");
    return text.substr(start, pos - start);
  }

  bool peek_word(const std::string& word) {
    skip();
    std::size_t end = pos + word.size();
    if (end > text.size() || text.compare(pos, word.size(), word) != 0)
      return false;
    return end == text.size() || !ident_char(text[end]);
  }

  void expect_word(const std::string& word) {
    if (!peek_word(word)) fail("expected '" + word + "'");
    pos += word.size();
  }

  void expect_arrow() {
    skip();
    if (pos + 1 >= text.size() || text[pos] != '-' || text[pos + 1] != '>')
      fail("expected '->'");
    pos += 2;
  }

  Rational rational() {
    skip();
    std::size_t start = pos;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '/'))
      ++pos;
    if (pos == start) fail("expected rational");
    return parse_rational(text.substr(start, pos - start));
  }

  // A term is an identifier optionally followed by a balanced argument list.
  Tree term() {
    skip();
    std::size_t start = pos;
    identifier();
    skip();
    if (pos < text.size() && text[pos] == '(') {
      int depth = 0;
      while (pos < text.size()) {
        if (text[pos] == '(') ++depth;
        if (text[pos] == ')') {
          --depth;
          ++pos;
          if (depth == 0) break;
          continue;
        }
        ++pos;
      }
      if (depth != 0) fail("unbalanced parentheses in term");
    }
    return parse_term(text.substr(start, pos - start));
  }

  ConstraintPartition constraints() {
    skip();
    if (pos >= text.size() || text[pos] != '[') return ConstraintPartition{};
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != ']') ++pos;
    if (pos >= text.size()) fail("unterminated constraint list");
    ++pos;
    return ConstraintPartition::parse(text.substr(start, pos - start));
  }
};

std::vector<std::string> state_list(Cursor& in) {
  std::vector<std::string> out{in.identifier()};
  while (in.peek_char(',')) {
    in.expect_char(',');
    out.push_back(in.identifier());
  }
  return out;
}

// Symbols are whatever non-state, non-sink names appear in rule left-hand
// sides; every use must agree on the rank.
RankedAlphabet infer_alphabet(const std::vector<Tree>& lhss,
                              const std::set<std::string>& leaves) {
  RankedAlphabet alphabet;
  for (const Tree& lhs : lhss)
    for (const Position& p : lhs.positions()) {
      const Tree& node = lhs.subtree(p);
      if (node.is_leaf() && leaves.count(node.label())) continue;
      alphabet.add(node.label(), static_cast<int>(node.children().size()));
    }
  return alphabet;
}

}  // namespace

ObjectKind sniff_kind(const std::string& text) {
  Cursor in(text);
  if (in.peek_word("wtg")) return ObjectKind::wtg;
  if (in.peek_word("wtah")) return ObjectKind::wtah;
  if (in.peek_word("hom")) return ObjectKind::hom;
  in.fail("expected one of 'wtg', 'wtah', 'hom'");
}

ParsedWtg parse_wtg(const std::string& text) {
  Cursor in(text);
  in.expect_word("wtg");
  std::string name = in.identifier();
  in.expect_word("over");
  std::string domain = in.identifier();
  if (domain != "Q")
    in.fail("unsupported weight domain '" + domain + "' (only Q)");
  in.expect_char('{');
  std::set<std::string> states;
  std::map<std::string, Rational> finals;
  struct RawRule {
    Tree lhs;
    std::string target;
    Rational weight;
  };
  std::vector<RawRule> raw;
  while (!in.peek_char('}')) {
    if (in.peek_word("states")) {
      in.expect_word("states");
      for (const std::string& q : state_list(in)) states.insert(q);
      in.expect_char(';');
    } else if (in.peek_word("final")) {
      in.expect_word("final");
      std::string q = in.identifier();
      Rational w(1);
      if (in.peek_char(':')) {
        in.expect_char(':');
        w = in.rational();
      }
      finals[q] += w;
      in.expect_char(';');
    } else if (in.peek_word("rule")) {
      in.expect_word("rule");
      Tree lhs = in.term();
      in.expect_arrow();
      std::string target = in.identifier();
      in.expect_char('@');
      Rational w = in.rational();
      in.expect_char(';');
      raw.push_back({std::move(lhs), std::move(target), std::move(w)});
    } else {
      in.fail("expected 'states', 'final', 'rule' or '}'");
    }
  }
  in.expect_char('}');
  if (!in.done()) in.fail("trailing input after '}'");
  std::vector<Tree> lhss;
  for (const RawRule& r : raw) lhss.push_back(r.lhs);
  RankedAlphabet alphabet = infer_alphabet(lhss, states);
  std::vector<GrammarRule> rules;
  for (RawRule& r : raw)
    rules.push_back({std::move(r.lhs), std::move(r.target),
                     std::move(r.weight)});
  return {std::move(name),
          Wtg(std::move(alphabet), std::move(states), std::move(rules),
              std::move(finals))};
}

ParsedWtah parse_wtah(const std::string& text) {
  Cursor in(text);
  in.expect_word("wtah");
  std::string name = in.identifier();
  in.expect_word("over");
  std::string domain = in.identifier();
  if (domain != "Q")
    in.fail("unsupported weight domain '" + domain + "' (only Q)");
  in.expect_char('{');
  std::set<std::string> states;
  std::set<std::string> finals;
  std::string sink = kSink;
  std::vector<ConstrainedRule> rules;
  while (!in.peek_char('}')) {
    if (in.peek_word("states")) {
      in.expect_word("states");
      for (const std::string& q : state_list(in)) states.insert(q);
      in.expect_char(';');
    } else if (in.peek_word("sink")) {
      in.expect_word("sink");
      sink = in.identifier();
      in.expect_char(';');
    } else if (in.peek_word("final")) {
      in.expect_word("final");
      for (const std::string& q : state_list(in)) finals.insert(q);
      in.expect_char(';');
    } else if (in.peek_word("rule")) {
      in.expect_word("rule");
      Tree lhs = in.term();
      ConstraintPartition constraints = in.constraints();
      in.expect_arrow();
      std::string target = in.identifier();
      in.expect_char('@');
      Rational w = in.rational();
      in.expect_char(';');
      rules.push_back({std::move(lhs), std::move(target),
                       std::move(constraints), std::move(w)});
    } else {
      in.fail("expected 'states', 'sink', 'final', 'rule' or '}'");
    }
  }
  in.expect_char('}');
  if (!in.done()) in.fail("trailing input after '}'");
  std::set<std::string> leaves = states;
  leaves.insert(sink);
  std::vector<Tree> lhss;
  for (const ConstrainedRule& r : rules) lhss.push_back(r.lhs);
  RankedAlphabet alphabet = infer_alphabet(lhss, leaves);
  return {std::move(name),
          Wtah(std::move(alphabet), std::move(states), std::move(finals),
               std::move(rules), std::move(sink))};
}

ParsedHom parse_hom(const std::string& text) {
  Cursor in(text);
  in.expect_word("hom");
  std::string name = in.identifier();
  in.expect_char(':');
  std::string source_label = in.identifier();
  in.expect_arrow();
  std::string target_label = in.identifier();
  in.expect_char('{');
  std::map<std::string, Tree> images;
  while (!in.peek_char('}')) {
    std::string symbol = in.identifier();
    in.expect_arrow();
    Tree image = in.term();
    in.expect_char(';');
    if (!images.emplace(symbol, std::move(image)).second)
      in.fail("duplicate image for '" + symbol + "'");
  }
  in.expect_char('}');
  if (!in.done()) in.fail("trailing input after '}'");

  // Source ranks default to the largest variable index used by each image;
  // pairing with an automaton rebinds them to the declared ranks.
  RankedAlphabet source;
  RankedAlphabet target;
  for (const auto& [symbol, image] : images) {
    int rank = 0;
    for (const Position& p : image.positions()) {
      const Tree& node = image.subtree(p);
      if (int v = variable_index(node.label()); v > 0)
        rank = std::max(rank, v);
      else
        target.add(node.label(), static_cast<int>(node.children().size()));
    }
    source.add(symbol, rank);
  }
  return {std::move(name), std::move(source_label), std::move(target_label),
          Homomorphism(std::move(source), std::move(target),
                       std::move(images))};
}

std::string print_wtg(const Wtg& g, const std::string& name) {
  std::ostringstream out;
  out << "wtg " << name << " over Q {\n  states ";
  bool first = true;
  for (const std::string& q : g.states()) {
    if (!first) out << ", ";
    out << q;
    first = false;
  }
  out << ";\n";
  for (const auto& [q, w] : g.final_weights())
    out << "  final " << q << ": " << rational_str(w) << ";\n";
  for (const GrammarRule& r : g.rules())
    out << "  rule " << r.lhs.str() << " -> " << r.target << " @ "
        << rational_str(r.weight) << ";\n";
  out << "}\n";
  return out.str();
}

std::string print_wtah(const Wtah& m, const std::string& name) {
  std::ostringstream out;
  out << "wtah " << name << " over Q {\n  states ";
  bool first = true;
  for (const std::string& q : m.states()) {
    if (!first) out << ", ";
    out << q;
    first = false;
  }
  out << ";\n  sink " << m.sink() << ";\n";
  if (!m.finals().empty()) {
    out << "  final ";
    first = true;
    for (const std::string& q : m.finals()) {
      if (!first) out << ", ";
      out << q;
      first = false;
    }
    out << ";\n";
  }
  for (const ConstrainedRule& r : m.rules()) {
    out << "  rule " << r.lhs.str();
    if (!r.constraints.trivial()) out << " " << r.constraints.str();
    out << " -> " << r.target << " @ " << rational_str(r.weight) << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string print_hom(const Homomorphism& h, const std::string& name,
                      const std::string& source_label,
                      const std::string& target_label) {
  std::ostringstream out;
  out << "hom " << name << " : " << source_label << " -> " << target_label
      << " {\n";
  for (const auto& [symbol, image] : h.images())
    out << "  " << symbol << " -> " << image.str() << ";\n";
  out << "}\n";
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

Homomorphism rebind_source(const Homomorphism& h,
                           const RankedAlphabet& source) {
  return Homomorphism(source, h.target(), h.images());
}

std::string Workspace::load(const std::string& path) {
  std::string text = read_file(path);
  switch (sniff_kind(text)) {
    case ObjectKind::wtg: {
      ParsedWtg parsed = parse_wtg(text);
      wtgs_.insert_or_assign(parsed.name, std::move(parsed.value));
      return parsed.name;
    }
    case ObjectKind::wtah: {
      ParsedWtah parsed = parse_wtah(text);
      wtahs_.insert_or_assign(parsed.name, std::move(parsed.value));
      return parsed.name;
    }
    case ObjectKind::hom: {
      ParsedHom parsed = parse_hom(text);
      homs_.insert_or_assign(parsed.name, std::move(parsed.value));
      return parsed.name;
    }
  }
  throw Error("unreachable");
}

const Wtg& Workspace::wtg(const std::string& name) const {
  auto it = wtgs_.find(name);
  if (it == wtgs_.end()) throw Error("no wtg named '" + name + "'");
  return it->second;
}

const Wtah& Workspace::wtah(const std::string& name) const {
  auto it = wtahs_.find(name);
  if (it == wtahs_.end()) throw Error("no wtah named '" + name + "'");
  return it->second;
}

const Homomorphism& Workspace::hom(const std::string& name) const {
  auto it = homs_.find(name);
  if (it == homs_.end()) throw Error("no hom named '" + name + "'");
  return it->second;
}

Homomorphism Workspace::paired(const std::string& wtg_name,
                               const std::string& hom_name) const {
  return rebind_source(hom(hom_name), wtg(wtg_name).alphabet());
}

namespace {

void append_trace(std::ostringstream& out, const Decision& decision) {
  for (const StageSummary& stage : decision.trace) {
    out << "stage." << stage.name << ".details=" << stage.details << "\n";
    out << "stage." << stage.name << ".ms=" << stage.milliseconds << "\n";
  }
}

}  // namespace

std::string format_decision_report(const Decision& decision) {
  std::ostringstream out;
  out << "RESULT: " << (decision.regular ? "REGULAR" : "NONREGULAR") << "\n";
  if (decision.regular) {
    out << "The image series is regular; a constraint-free grammar "
           "recognizing it is written alongside this report.\n";
  } else {
    const LdpWitness& w = *decision.ldp->witness;
    out << "The image series is not regular: the tree below is accepted and "
           "duplicates a subtree of height "
        << w.subtree_height << " (threshold " << decision.ldp->N << ").\n";
    out << "witness: " << w.tree.str() << "\n";
    out << "rule_position: " << w.rule_position.str() << "\n";
    out << "constrained_position: " << w.constrained_position.str() << "\n";
    out << "subtree_height: " << w.subtree_height << "\n";
  }
  out << "\n";
  out << "result=" << (decision.regular ? "regular" : "nonregular") << "\n";
  if (decision.ldp) {
    out << "ldp=" << (decision.ldp->has_ldp ? "yes" : "no") << "\n";
    out << "N=" << decision.ldp->N << "\n";
    out << "N_hat=" << decision.ldp->N_hat << "\n";
    out << "basis_dim=" << decision.ldp->basis_dim << "\n";
    if (decision.ldp->witness) {
      out << "witness=" << decision.ldp->witness->tree.str() << "\n";
      out << "rule_position=" << decision.ldp->witness->rule_position.str()
          << "\n";
      out << "constrained_position="
          << decision.ldp->witness->constrained_position.str() << "\n";
      out << "subtree_height=" << decision.ldp->witness->subtree_height
          << "\n";
    }
  }
  if (decision.certificate)
    out << "certificate_rules=" << decision.certificate->rules().size()
        << "\n";
  append_trace(out, decision);
  return out.str();
}

std::string format_rejection_report(const RejectedInputError& error) {
  std::ostringstream out;
  out << "RESULT: REJECTED\n";
  out << error.what() << "\n";
  if (error.witness)
    out << "witness_pair: " << error.witness->first.str() << " , "
        << error.witness->second.str() << "\n";
  out << "\n";
  out << "result=rejected\n";
  out << "reason=" << error.reason << "\n";
  if (error.witness) {
    out << "witness_s=" << error.witness->first.str() << "\n";
    out << "witness_s_prime=" << error.witness->second.str() << "\n";
  }
  return out.str();
}

}  // namespace treehom::io
