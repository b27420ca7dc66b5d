#pragma once

#include <optional>
#include <string>
#include <vector>

#include "treehom/errors.hpp"
#include "treehom/hatldp.hpp"
#include "treehom/hom.hpp"
#include "treehom/wtah.hpp"
#include "treehom/wtg.hpp"

namespace treehom {

// Replaces every constrained position of every rule by the finitely many
// compatible trees of height < N (same tree across one constraint class,
// nonzero state weight), multiplying the weights in; instantiations that
// collapse to one left-hand side sum their weights. Unconstrained state
// positions are kept. The result is constraint-free and recognizes the same
// series when no constrained subtree of height >= N appears in the support.
// Aborts with EnumerationLimitError when more than max_rules rules would be
// produced.
Wtg linearize(const Wtah& m, int N, std::size_t max_rules = 1'000'000);

struct StageSummary {
  std::string name;
  std::string details;
  double milliseconds;
};

// Thrown when the input homomorphism falls outside the decidable class.
struct RejectedInputError : Error {
  RejectedInputError(std::string reason_, std::string message,
                     std::optional<std::pair<Tree, Tree>> witness_ = {})
      : Error(std::move(message)),
        reason(std::move(reason_)),
        witness(std::move(witness_)) {}
  std::string reason;  // "not-tetris-free" | "deleting" | "erasing"
  std::optional<std::pair<Tree, Tree>> witness;
};

struct Decision {
  bool regular;
  std::optional<Wtg> certificate;  // when regular
  std::optional<LdpReport> ldp;    // when not regular (and the stage report)
  std::vector<StageSummary> trace;
};

// Whether the image of a's series under h is regular: build the constrained
// image automaton, decide the large duplication property, and either report
// the duplication witness or certify regularity by linearization. Rejects
// deleting, erasing or non-tetris-free homomorphisms with RejectedInputError.
Decision decide_hom(const Wtg& a, const Homomorphism& h);

}  // namespace treehom
