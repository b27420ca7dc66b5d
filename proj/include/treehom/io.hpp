#pragma once

#include <map>
#include <string>

#include "treehom/decide.hpp"
#include "treehom/hom.hpp"
#include "treehom/wtah.hpp"
#include "treehom/wtg.hpp"

namespace treehom::io {

// One object per file; '#' starts a line comment; whitespace free-form.
//
//   wtg A over Q { states q, qf; final qf: 1; rule psi(q,q) -> qf @ 1; ... }
//   wtah M over Q { states q, qf; sink BOT; final qf;
//                   rule f(q,q,BOT) [2=3] -> qf @ 1; ... }
//   hom h : Sigma -> Delta { alpha -> a; psi -> f(x2,x1,x1); ... }
//
// Alphabets are inferred from the rules (symbol ranks must be used
// consistently); a homomorphism's source ranks are inferred as the largest
// variable index of each image and can be rebound against an automaton's
// alphabet when the two are paired.

struct ParsedWtg {
  std::string name;
  Wtg value;
};
struct ParsedWtah {
  std::string name;
  Wtah value;
};
struct ParsedHom {
  std::string name;
  std::string source_label;
  std::string target_label;
  Homomorphism value;
};

enum class ObjectKind { wtg, wtah, hom };

ObjectKind sniff_kind(const std::string& text);

ParsedWtg parse_wtg(const std::string& text);
ParsedWtah parse_wtah(const std::string& text);
ParsedHom parse_hom(const std::string& text);

std::string print_wtg(const Wtg& g, const std::string& name = "G");
std::string print_wtah(const Wtah& m, const std::string& name = "M");
std::string print_hom(const Homomorphism& h, const std::string& name = "h",
                      const std::string& source_label = "Sigma",
                      const std::string& target_label = "Delta");

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Re-declares the homomorphism against the automaton's alphabet; throws when
// a symbol has no image or an image uses variables beyond the symbol's rank.
Homomorphism rebind_source(const Homomorphism& h, const RankedAlphabet& source);

// Named objects loaded from files; cross-references are resolved by name and
// paired objects are checked for matching alphabets.
class Workspace {
 public:
  // Returns the object's declared name.
  std::string load(const std::string& path);

  const Wtg& wtg(const std::string& name) const;
  const Wtah& wtah(const std::string& name) const;
  const Homomorphism& hom(const std::string& name) const;

  // The homomorphism rebound to the automaton's alphabet.
  Homomorphism paired(const std::string& wtg_name,
                      const std::string& hom_name) const;

 private:
  std::map<std::string, Wtg> wtgs_;
  std::map<std::string, Wtah> wtahs_;
  std::map<std::string, Homomorphism> homs_;
};

// Plain-text decision report with a trailing machine-readable key=value
// block. The certificate itself is written separately.
std::string format_decision_report(const Decision& decision);
std::string format_rejection_report(const RejectedInputError& error);

}  // namespace treehom::io
