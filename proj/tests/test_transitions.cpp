#include <doctest.h>

#include "sdistill/corpus/pcfg.hpp"
#include "sdistill/transitions/oracle.hpp"
#include "sdistill/transitions/state.hpp"
#include "sdistill/util/text.hpp"
#include "test_support.hpp"

using namespace sdistill;
using namespace sdistill::transitions;
using corpus::parse_bracketed;
using corpus::render_bracketed;

namespace {

const char* kExample = "(S (NP (WORD The) (WORD d ##og)) (VP (WORD ba ##rk ##s)))";
const char* kL2R =
    "NT(S) NT(NP) NT(WORD) GEN(The) REDUCE NT(WORD) GEN(d) GEN(##og) REDUCE REDUCE NT(VP) NT(WORD) "
    "GEN(ba) GEN(##rk) GEN(##s) REDUCE REDUCE REDUCE";
const char* kR2L =
    "NT(S) NT(VP) NT(WORD) GEN(##s) GEN(##rk) GEN(ba) REDUCE REDUCE NT(NP) NT(WORD) GEN(##og) "
    "GEN(d) REDUCE NT(WORD) GEN(The) REDUCE REDUCE REDUCE";

std::string render(const ActionSequence& seq) {
  std::vector<std::string> parts;
  for (const auto& a : seq) parts.push_back(a.to_string());
  return join(parts, " ");
}

ActionSequence parse_seq(const std::string& s) {
  ActionSequence out;
  for (const auto& w : split_whitespace(s)) out.push_back(Action::parse(w));
  return out;
}

}  // namespace

TEST_CASE("action text form") {
  CHECK(Action::nt("S").to_string() == "NT(S)");
  CHECK(Action::gen("##og").to_string() == "GEN(##og)");
  CHECK(Action::reduce().to_string() == "REDUCE");
  CHECK(Action::parse("GEN(-LRB-)") == Action::gen("("));
  CHECK(Action::gen("(").to_string() == "GEN(-LRB-)");
  CHECK_THROWS(Action::parse("SHIFT"));
  CHECK_THROWS(Action::parse("NT()"));
}

TEST_CASE("oracle reproduces both example action sequences") {
  const auto t = parse_bracketed(kExample);
  const auto l2r = oracle(t, Direction::kL2R);
  const auto r2l = oracle(t, Direction::kR2L);
  CHECK(l2r.size() == 18);
  CHECK(r2l.size() == 18);
  CHECK(render(l2r) == kL2R);
  CHECK(render(r2l) == kR2L);
  CHECK(render(oracle(parse_bracketed("(S (WORD a))"), Direction::kL2R)) == "NT(S) NT(WORD) GEN(a) REDUCE REDUCE");
}

TEST_CASE("replay inverts the example sequences") {
  CHECK(render_bracketed(replay(parse_seq(kL2R), Direction::kL2R)) == kExample);
  CHECK(render_bracketed(replay(parse_seq(kR2L), Direction::kR2L)) == kExample);
  try {
    replay(parse_seq("NT(S) REDUCE"), Direction::kL2R);
    FAIL("expected an error");
  } catch (const TransitionError& e) {
    CHECK(e.step() == 1);
    CHECK(std::string(e.what()).find("REDUCE on empty constituent") != std::string::npos);
  }
  CHECK_THROWS_AS(replay(parse_seq("NT(S) NT(WORD) GEN(a) REDUCE"), Direction::kL2R), TransitionError);
}

TEST_CASE("stack machine steps") {
  TransitionState s;
  CHECK(legal_actions(s) == LegalSet{true, false, false});
  s.apply(Action::nt("S"));
  CHECK(s.stack().size() == 1);
  CHECK(s.stack()[0].open);
  CHECK(legal_actions(s) == LegalSet{true, true, false});
  s.apply(Action::nt("WORD"));
  s.apply(Action::gen("The"));
  s.apply(Action::reduce());
  REQUIRE(s.stack().size() == 2);
  CHECK(s.stack()[0].open);
  CHECK(render_bracketed(s.stack()[1].tree) == "(WORD The)");
  CHECK(s.summary() == "(S | (WORD The)");
}

TEST_CASE("legality after step 16 of the example") {
  const auto seq = parse_seq(kL2R);
  Limits lim;
  lim.max_generated = 6;
  TransitionState s;
  for (std::size_t k = 0; k < 16; ++k) s.apply(seq[k], lim);
  CHECK(legal_actions(s, lim) == LegalSet{false, false, true});
  s.apply(seq[16], lim);
  s.apply(seq[17], lim);
  CHECK(s.terminated());
  CHECK(legal_actions(s, lim) == LegalSet{});
  CHECK(render_bracketed(s.result()) == kExample);
}

TEST_CASE("depth cap forbids further NT") {
  Limits lim;
  lim.max_open = 2;
  TransitionState s;
  s.apply(Action::nt("S"), lim);
  s.apply(Action::nt("NP"), lim);
  CHECK_FALSE(legal_actions(s, lim).nt);
  CHECK_THROWS_AS(s.apply(Action::nt("X"), lim), TransitionError);
}

TEST_CASE("mirror is an involution and relates the two directions") {
  const auto t = parse_bracketed(kExample);
  CHECK(corpus::mirror(corpus::mirror(t)) == t);
  CHECK(oracle(corpus::mirror(t), Direction::kL2R) == oracle(t, Direction::kR2L));
}

TEST_CASE("round trip and action counts on sampled trees") {
  const auto& g = testing::demo_grammar();
  const auto& tok = testing::demo_tokenizer();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto t = corpus::subwordify(corpus::sample_pcfg(g, seed), tok);
    for (Direction d : {Direction::kL2R, Direction::kR2L}) {
      const auto seq = oracle(t, d);
      std::size_t nt = 0, gen = 0, red = 0;
      for (const auto& a : seq) {
        nt += a.kind == ActionKind::kNT;
        gen += a.kind == ActionKind::kGen;
        red += a.kind == ActionKind::kReduce;
      }
      CHECK(nt == corpus::count_internal(t));
      CHECK(red == nt);
      CHECK(gen == corpus::count_leaves(t));
      REQUIRE(replay(seq, d) == t);
    }
  }
}

TEST_CASE("action file round trip") {
  const auto t = parse_bracketed(kExample);
  const std::vector<ActionSequence> seqs = {oracle(t, Direction::kR2L), oracle(t, Direction::kR2L)};
  const auto text = format_action_file(Direction::kR2L, seqs);
  CHECK(text.rfind("#direction=r2l\nNT(S)\nNT(VP)\n", 0) == 0);
  Direction d = Direction::kL2R;
  CHECK(parse_action_file(text, &d) == seqs);
  CHECK(d == Direction::kR2L);
  CHECK_THROWS(parse_action_file("NT(S)\n", &d));
}
