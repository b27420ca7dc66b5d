#pragma once

#include <string>

#include "treehom/io.hpp"

namespace fx {

using namespace treehom;

inline std::string path(const std::string& name) {
  return std::string(TREEHOM_FIXTURE_DIR) + "/" + name;
}

inline Wtg load_wtg(const std::string& name) {
  return io::parse_wtg(io::read_file(path(name))).value;
}

inline Wtah load_wtah(const std::string& name) {
  return io::parse_wtah(io::read_file(path(name))).value;
}

inline Homomorphism load_hom(const std::string& name) {
  return io::parse_hom(io::read_file(path(name))).value;
}

inline Tree T(const std::string& term) { return parse_term(term); }
inline Position P(const std::string& text) { return Position::parse(text); }

}  // namespace fx
