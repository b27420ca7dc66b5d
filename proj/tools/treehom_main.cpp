// Command-line front end: decide regularity of homomorphic images, evaluate
// automata on trees, and run the cross-check oracles.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "treehom/decide.hpp"
#include "treehom/errors.hpp"
#include "treehom/hatldp.hpp"
#include "treehom/io.hpp"

namespace {

using namespace treehom;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;      // parse or validation failure
constexpr int kExitRejected = 2;   // input outside the decidable class
constexpr int kExitMismatch = 4;   // oracle found a counterexample
constexpr int kExitNonregular = 10;

struct WtaHomInput {
  Wtg a;
  Homomorphism h;
};

WtaHomInput load_wta_hom(const std::string& wta_file,
                         const std::string& hom_file) {
  io::ParsedWtg a = io::parse_wtg(io::read_file(wta_file));
  io::ParsedHom h = io::parse_hom(io::read_file(hom_file));
  if (!a.value.is_wta())
    a.value = to_wta(a.value);
  return {std::move(a.value),
          io::rebind_source(h.value, a.value.alphabet())};
}

Wtah load_or_build_wtah(const std::string& wtah_file,
                        const std::string& wta_file,
                        const std::string& hom_file) {
  if (!wtah_file.empty())
    return io::parse_wtah(io::read_file(wtah_file)).value;
  if (wta_file.empty() || hom_file.empty())
    throw Error("give either --wtah, or --wta together with --hom");
  WtaHomInput input = load_wta_hom(wta_file, hom_file);
  return hom_image(input.a, input.h);
}

int cmd_decide(const std::string& wta_file, const std::string& hom_file,
               const std::string& out_dir) {
  WtaHomInput input = load_wta_hom(wta_file, hom_file);
  std::string report;
  int exit_code;
  std::optional<Wtg> certificate;
  try {
    Decision decision = decide_hom(input.a, input.h);
    report = io::format_decision_report(decision);
    certificate = std::move(decision.certificate);
    exit_code = decision.regular ? kExitOk : kExitNonregular;
  } catch (const RejectedInputError& e) {
    report = io::format_rejection_report(e);
    exit_code = kExitRejected;
  }
  std::cout << report;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    io::write_file(out_dir + "/report.txt", report);
    if (certificate)
      io::write_file(out_dir + "/certificate.wtg",
                     io::print_wtg(*certificate, "certificate"));
  }
  return exit_code;
}

int cmd_eval(const std::string& wtg_file, const std::string& wtah_file,
             const std::string& term) {
  Tree t = parse_term(term);
  Rational value;
  if (!wtg_file.empty()) {
    io::ParsedWtg g = io::parse_wtg(io::read_file(wtg_file));
    validate_tree(g.value.alphabet(), t);
    value = evaluate(g.value, t);
  } else if (!wtah_file.empty()) {
    io::ParsedWtah m = io::parse_wtah(io::read_file(wtah_file));
    validate_tree(m.value.alphabet(), t);
    value = wtah_evaluate(m.value, t);
  } else {
    throw Error("give --wtg or --wtah");
  }
  std::cout << rational_str(value) << "\n";
  return kExitOk;
}

int cmd_oracle_image(const std::string& wta_file, const std::string& hom_file,
                     const std::string& wtah_file, int max_height) {
  WtaHomInput input = load_wta_hom(wta_file, hom_file);
  Wtah claimed = wtah_file.empty()
                     ? hom_image(input.a, input.h)
                     : io::parse_wtah(io::read_file(wtah_file)).value;
  ImageOracleResult result =
      check_image_oracle(claimed, input.a, input.h, max_height);
  std::cout << "trees_checked=" << result.trees_checked << "\n";
  if (result.ok) {
    std::cout << "ORACLE: pass\n";
    return kExitOk;
  }
  std::cout << "ORACLE: fail\n";
  std::cout << "mismatch: " << result.mismatch->str() << "\n";
  std::cout << "claimed=" << rational_str(result.claimed_value) << "\n";
  std::cout << "preimage_sum=" << rational_str(result.oracle_value) << "\n";
  return kExitMismatch;
}

int cmd_tetris_free(const std::string& hom_file) {
  io::ParsedHom h = io::parse_hom(io::read_file(hom_file));
  TetrisResult result = is_tetris_free(h.value);
  if (result.tetris_free) {
    std::cout << "TETRIS-FREE: yes\n";
  } else {
    std::cout << "TETRIS-FREE: no\n";
    std::cout << "witness_pair: " << result.witness->first.str() << " , "
              << result.witness->second.str() << "\n";
  }
  return kExitOk;
}

int cmd_ldp(const std::string& wtah_file, const std::string& wta_file,
            const std::string& hom_file) {
  Wtah m = load_or_build_wtah(wtah_file, wta_file, hom_file);
  LdpReport report = decide_ldp(m);
  std::cout << "LDP: " << (report.has_ldp ? "yes" : "no") << "\n";
  std::cout << "N=" << report.N << "\n";
  std::cout << "N_hat=" << report.N_hat << "\n";
  std::cout << "basis_dim=" << report.basis_dim << "\n";
  if (report.witness) {
    std::cout << "witness=" << report.witness->tree.str() << "\n";
    std::cout << "rule_position=" << report.witness->rule_position.str()
              << "\n";
    std::cout << "constrained_position="
              << report.witness->constrained_position.str() << "\n";
    std::cout << "subtree_height=" << report.witness->subtree_height << "\n";
  }
  return kExitOk;
}

int cmd_linearize(const std::string& wtah_file, const std::string& wta_file,
                  const std::string& hom_file, const std::string& out_file) {
  Wtah m = load_or_build_wtah(wtah_file, wta_file, hom_file);
  LdpReport report = decide_ldp(m);
  if (report.has_ldp) {
    std::cout << "LDP: yes; the series has no constraint-free presentation\n";
    if (report.witness)
      std::cout << "witness=" << report.witness->tree.str() << "\n";
    return kExitRejected;
  }
  Wtg certificate = linearize(m, report.N);
  std::string text = io::print_wtg(certificate, "certificate");
  std::cout << text;
  if (!out_file.empty()) io::write_file(out_file, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted tree automata: regularity of homomorphic images"};
  app.require_subcommand(1);

  std::string wta_file, hom_file, wtah_file, wtg_file, term, out_path;
  int max_height = 4;

  CLI::App* decide = app.add_subcommand(
      "decide", "decide whether the image series is regular");
  decide->add_option("--wta", wta_file, "automaton file")->required();
  decide->add_option("--hom", hom_file, "homomorphism file")->required();
  decide->add_option("--out", out_path, "directory for report + certificate");

  CLI::App* eval = app.add_subcommand("eval", "evaluate an automaton on a tree");
  eval->add_option("--wtg", wtg_file, "grammar file");
  eval->add_option("--wtah", wtah_file, "constrained automaton file");
  eval->add_option("--tree", term, "term to evaluate")->required();

  CLI::App* oracle = app.add_subcommand(
      "oracle-image", "check an image automaton against the preimage sums");
  oracle->add_option("--wta", wta_file, "automaton file")->required();
  oracle->add_option("--hom", hom_file, "homomorphism file")->required();
  oracle->add_option("--wtah", wtah_file,
                     "claimed image automaton (default: constructed)");
  oracle->add_option("--max-height", max_height, "probe height bound");

  CLI::App* tetris = app.add_subcommand(
      "tetris-free", "check the tetris-free condition");
  tetris->add_option("--hom", hom_file, "homomorphism file")->required();

  CLI::App* ldp = app.add_subcommand(
      "ldp", "decide the large duplication property");
  ldp->add_option("--wtah", wtah_file, "constrained automaton file");
  ldp->add_option("--wta", wta_file, "automaton file");
  ldp->add_option("--hom", hom_file, "homomorphism file");

  CLI::App* lin = app.add_subcommand(
      "linearize", "emit the constraint-free certificate grammar");
  lin->add_option("--wtah", wtah_file, "constrained automaton file");
  lin->add_option("--wta", wta_file, "automaton file");
  lin->add_option("--hom", hom_file, "homomorphism file");
  lin->add_option("--out", out_path, "certificate output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (decide->parsed()) return cmd_decide(wta_file, hom_file, out_path);
    if (eval->parsed()) return cmd_eval(wtg_file, wtah_file, term);
    if (oracle->parsed())
      return cmd_oracle_image(wta_file, hom_file, wtah_file, max_height);
    if (tetris->parsed()) return cmd_tetris_free(hom_file);
    if (ldp->parsed()) return cmd_ldp(wtah_file, wta_file, hom_file);
    if (lin->parsed())
      return cmd_linearize(wtah_file, wta_file, hom_file, out_path);
  } catch (const treehom::RejectedInputError& e) {
    std::cout << treehom::io::format_rejection_report(e);
    return kExitRejected;
  } catch (const treehom::PreconditionError& e) {
    std::cerr << "rejected: " << e.what() << "\n";
    return kExitRejected;
  } catch (const treehom::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitError;
  } catch (const treehom::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
