#include <doctest.h>

#include "fixtures.hpp"
#include "treehom/errors.hpp"
#include "treehom/io.hpp"

using namespace treehom;
using fx::T;

TEST_CASE("object kinds are sniffed from the leading keyword") {
  CHECK(io::sniff_kind("wtg A over Q { states q; }") == io::ObjectKind::wtg);
  CHECK(io::sniff_kind("# c\n wtah A over Q { states q; sink BOT; }") ==
        io::ObjectKind::wtah);
  CHECK(io::sniff_kind("hom h : S -> D { }") == io::ObjectKind::hom);
  CHECK_THROWS_AS(io::sniff_kind("wtgX A"), ParseError);
}

TEST_CASE("grammar files round-trip through print and parse") {
  for (const char* name : {"a.wtg", "b.wtg", "c.wtg", "g.wtg"}) {
    Wtg g = fx::load_wtg(name);
    io::ParsedWtg again = io::parse_wtg(io::print_wtg(g, "X"));
    CHECK(again.name == "X");
    CHECK(io::print_wtg(again.value) == io::print_wtg(g));
  }
}

TEST_CASE("constrained automaton files round-trip") {
  for (const char* name :
       {"aprime.wtah", "bprime.wtah", "cprime.wtah", "afinal.wtah",
        "subseq.wtah", "afin.wtah"}) {
    Wtah m = fx::load_wtah(name);
    io::ParsedWtah again = io::parse_wtah(io::print_wtah(m, "X"));
    CHECK(io::print_wtah(again.value) == io::print_wtah(m));
  }
}

TEST_CASE("homomorphism files round-trip") {
  for (const char* name :
       {"hom_h.hom", "hom_tetris.hom", "hom_tetris_bad.hom", "hom_kappa.hom",
        "hom_phi.hom", "hom_relabel.hom"}) {
    Homomorphism h = fx::load_hom(name);
    io::ParsedHom again = io::parse_hom(io::print_hom(h));
    CHECK(io::print_hom(again.value) == io::print_hom(h));
  }
}

TEST_CASE("parsed fixtures carry the expected content") {
  Wtg a = fx::load_wtg("a.wtg");
  CHECK(a.states() == std::set<std::string>{"q", "qf"});
  CHECK(a.alphabet().rank("psi") == 2);
  CHECK(a.alphabet().rank("gamma") == 1);
  CHECK(a.final_weights().at("qf") == 1);
  CHECK(a.rules().size() == 3);

  Wtah aprime = fx::load_wtah("aprime.wtah");
  CHECK(aprime.sink() == "BOT");
  CHECK(aprime.finals() == std::set<std::string>{"qf"});
  CHECK(aprime.rules().size() == 6);
  bool constrained = false;
  for (const ConstrainedRule& r : aprime.rules())
    if (r.constraints.str() == "[2=3]") constrained = true;
  CHECK(constrained);

  Homomorphism h = fx::load_hom("hom_h.hom");
  CHECK(h.source().rank("psi") == 2);
  CHECK(h.image_of("psi") == T("f(x2,x1,x1)"));
}

TEST_CASE("negative and fractional weights parse") {
  io::ParsedWtg parsed = io::parse_wtg(
      "wtg W over Q { states q; final q: 3/2; rule a -> q @ -2; }");
  CHECK(parsed.value.final_weights().at("q") == Rational(3, 2));
  CHECK(parsed.value.rules().front().weight == -2);
}

TEST_CASE("parse errors carry line information") {
  CHECK_THROWS_AS(io::parse_wtg("wtg A over N { }"), ParseError);
  CHECK_THROWS_AS(io::parse_wtg("wtg A over Q { states q; rule a -> q; }"),
                  ParseError);
  CHECK_THROWS_AS(io::parse_wtg("wtg A over Q { states q; } trailing"),
                  ParseError);
  // inconsistent ranks across rules
  CHECK_THROWS_AS(
      io::parse_wtg("wtg A over Q { states q; rule g(a) -> q @ 1; "
                    "rule g(a,a) -> q @ 1; }"),
      ValidationError);
  CHECK_THROWS_AS(
      io::parse_hom("hom h : S -> D { alpha -> a; alpha -> b; }"),
      ParseError);
}

TEST_CASE("source ranks rebind against an automaton alphabet") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = fx::load_hom("hom_h.hom");
  Homomorphism bound = io::rebind_source(h, a.alphabet());
  CHECK(bound.source() == a.alphabet());
  // a missing image or an over-indexed variable is a validation error
  RankedAlphabet wider = a.alphabet();
  wider.add("extra", 0);
  CHECK_THROWS_AS(io::rebind_source(h, wider), ValidationError);
  RankedAlphabet narrower{{"alpha", 0}, {"gamma", 1}, {"psi", 1}};
  CHECK_THROWS_AS(io::rebind_source(h, narrower), ValidationError);
}

TEST_CASE("workspace resolves names and pairs alphabets") {
  io::Workspace ws;
  CHECK(ws.load(fx::path("a.wtg")) == "A");
  CHECK(ws.load(fx::path("hom_h.hom")) == "h");
  CHECK_NOTHROW(ws.wtg("A"));
  CHECK_THROWS_AS(ws.wtg("B"), Error);
  Homomorphism paired = ws.paired("A", "h");
  CHECK(paired.source() == ws.wtg("A").alphabet());
}

TEST_CASE("decision reports carry the machine-readable block") {
  Wtg a = fx::load_wtg("a.wtg");
  Homomorphism h = io::rebind_source(fx::load_hom("hom_h.hom"), a.alphabet());
  Decision decision = decide_hom(a, h);
  std::string report = io::format_decision_report(decision);
  CHECK(report.rfind("RESULT: NONREGULAR", 0) == 0);
  CHECK(report.find("result=nonregular") != std::string::npos);
  CHECK(report.find("ldp=yes") != std::string::npos);
  CHECK(report.find("N=2") != std::string::npos);
  CHECK(report.find("witness=") != std::string::npos);
  CHECK(report.find("stage.duplication-check.ms=") != std::string::npos);
}
