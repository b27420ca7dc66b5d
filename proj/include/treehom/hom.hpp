#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "treehom/terms.hpp"

namespace treehom {

// Symbol-wise tree substitution map: each source symbol of rank k has an
// image over the target alphabet and the variables x1..xk.
class Homomorphism {
 public:
  Homomorphism(RankedAlphabet source, RankedAlphabet target,
               std::map<std::string, Tree> images);

  const RankedAlphabet& source() const { return source_; }
  const RankedAlphabet& target() const { return target_; }
  const std::map<std::string, Tree>& images() const { return images_; }
  const Tree& image_of(const std::string& symbol) const;

  // Largest image height; 0 only when every image is a single leaf.
  int max_image_height() const;

 private:
  RankedAlphabet source_;
  RankedAlphabet target_;
  std::map<std::string, Tree> images_;
};

Tree apply(const Homomorphism& h, const Tree& s);

struct HomProperties {
  bool nonerasing;   // no image is a bare variable
  bool nondeleting;  // every image of a rank-k symbol uses all of x1..xk
};
HomProperties check_properties(const Homomorphism& h);

// Exactly { s | h(s) = t }, by matching the images top-down and enforcing
// that repeated variables bind equal subtrees. Requires nondeleting and
// nonerasing (preimages are finite then).
std::vector<Tree> preimages(const Homomorphism& h, const Tree& t);

// Memoizing variant for sweeps over many trees.
class PreimageFinder {
 public:
  explicit PreimageFinder(const Homomorphism& h);
  const std::vector<Tree>& preimages(const Tree& t);

 private:
  const Homomorphism& h_;
  std::map<Tree, std::vector<Tree>> memo_;
};

struct TetrisResult {
  bool tetris_free;
  // A violating pair (h maps both to the same tree, yet they differ in shape
  // or in some symbol image); ordered by size descending, then term order.
  std::optional<std::pair<Tree, Tree>> witness;
};

// Exact decision: h is tetris-free iff every target tree admits at most one
// tiling by the distinct images. Ambiguity of the tiling grammar is decided
// by a product construction with a divergence flag; a found witness pair is
// verified against the definition and minimized by total size. Requires
// nondeleting and nonerasing.
TetrisResult is_tetris_free(const Homomorphism& h);

// Independent cross-check: exhaustively tests all source pairs up to the
// given height.
TetrisResult tetris_free_bounded_oracle(const Homomorphism& h, int max_height);

}  // namespace treehom
