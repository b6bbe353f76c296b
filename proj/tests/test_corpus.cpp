#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <set>

#include "sdistill/corpus/pcfg.hpp"
#include "sdistill/corpus/supertags.hpp"
#include "sdistill/corpus/tokenizer.hpp"
#include "sdistill/corpus/tree.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/rng.hpp"
#include "test_support.hpp"

using namespace sdistill;
using namespace sdistill::corpus;

namespace {

const char* kExample = "(S (NP (WORD The) (WORD d ##og)) (VP (WORD ba ##rk ##s)))";

Vocabulary piece_vocab() {
  const std::vector<std::string> toks = {"the", "d", "##og", "ba", "##rk", "##s", "a", "b", "c"};
  return Vocabulary(toks);
}

void collect_phrase_labels(const PhraseTree& t, std::multiset<std::string>& out) {
  if (t.is_leaf() || t.is_preterminal() || t.label == kWordLabel) return;
  out.insert(t.label);
  for (const auto& c : t.children) collect_phrase_labels(c, out);
}

std::string joined(const std::vector<std::string>& v) { return join(v, " "); }

}  // namespace

TEST_CASE("parse_bracketed on minimal and example trees") {
  const auto t = parse_bracketed("(S (WORD a))");
  CHECK(t == PhraseTree::node("S", {PhraseTree::node("WORD", {PhraseTree::leaf("a")})}));
  CHECK(render_bracketed(t) == "(S (WORD a))");

  const auto ex = parse_bracketed(kExample);
  CHECK(render_bracketed(ex) == kExample);
  CHECK(leaves(ex) == std::vector<std::string>{"The", "d", "##og", "ba", "##rk", "##s"});
  CHECK(count_internal(ex) == 6);
  CHECK(is_valid(ex, true));
}

TEST_CASE("parse errors carry kind and offset") {
  try {
    parse_bracketed("(S (NP");
    FAIL("expected an error");
  } catch (const TreeParseError& e) {
    CHECK(e.kind() == TreeParseError::Kind::kUnbalanced);
    CHECK(e.offset() == 7);
  }
  CHECK_THROWS_AS(parse_bracketed("(S ())"), TreeParseError);
  CHECK_THROWS_AS(parse_bracketed("(S a) b"), TreeParseError);
  CHECK_THROWS_AS(parse_bracketed("(S)"), TreeParseError);
  CHECK_THROWS_AS(parse_bracketed("(S a))"), TreeParseError);
}

TEST_CASE("round trip with whitespace normalisation and escaping") {
  const auto t = parse_bracketed("  (S\t(NP   (WORD x))\n (VP (WORD y)) ) ");
  CHECK(render_bracketed(t) == "(S (NP (WORD x)) (VP (WORD y)))");
  const auto p = PhraseTree::node("S", {PhraseTree::node("WORD", {PhraseTree::leaf("(")})});
  CHECK(render_bracketed(p) == "(S (WORD -LRB-))");
  CHECK(parse_bracketed(render_bracketed(p)) == p);
  CHECK(unescape_terminal("-RRB-") == ")");
}

TEST_CASE("tokenize_word greedy longest match") {
  const auto v = piece_vocab();
  Tokenizer tok(v);
  CHECK(tokenize_word("barks", tok) == std::vector<std::string>{"ba", "##rk", "##s"});
  CHECK(tokenize_word("dog", tok) == std::vector<std::string>{"d", "##og"});
  CHECK(tokenize_word("qzx", tok) == std::vector<std::string>{"<unk>"});
  CHECK(tokenize_word("", tok) == std::vector<std::string>{});
}

TEST_CASE("tokenize_word concatenation property on a fuzz set") {
  const auto& tok = testing::demo_tokenizer();
  Rng rng(1);
  const std::string alphabet = "abcdegiklmnorstwyhTv";
  int covered = 0;
  for (int n = 0; n < 10000; ++n) {
    std::string w;
    const auto len = 1 + rng.below(8);
    for (std::uint64_t k = 0; k < len; ++k) w += alphabet[rng.below(alphabet.size())];
    const auto pieces = tok.tokenize_word(w);
    REQUIRE(!pieces.empty());
    CHECK(tok.tokenize_word(w) == pieces);
    if (pieces.size() == 1 && pieces[0] == "<unk>") continue;
    ++covered;
    std::string cat;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      CHECK((i == 0) != (pieces[i].rfind("##", 0) == 0));
      cat += i == 0 ? pieces[i] : pieces[i].substr(2);
    }
    CHECK(cat == w);
  }
  CHECK(covered > 0);
}

TEST_CASE("subwordify drops POS and wraps pieces") {
  const auto v = piece_vocab();
  Tokenizer tok(v);
  const auto in = parse_bracketed("(S (NP (DT the) (NN dog)) (VP (VBZ barks)))");
  const auto out = subwordify(in, tok);
  CHECK(render_bracketed(out) == "(S (NP (WORD the) (WORD d ##og)) (VP (WORD ba ##rk ##s)))");
  CHECK(render_bracketed(subwordify(parse_bracketed("(S (NN dog))"), tok)) == "(S (WORD d ##og))");
  CHECK(subwordify(out, tok) == out);
  CHECK(is_valid(out, true));
}

TEST_CASE("subwordify preserves phrase labels and word order on sampled trees") {
  const auto& g = testing::demo_grammar();
  const auto& tok = testing::demo_tokenizer();
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto raw = sample_pcfg(g, s);
    const auto aug = subwordify(raw, tok);
    CHECK(is_valid(aug, true));
    std::multiset<std::string> a, b;
    collect_phrase_labels(raw, a);
    collect_phrase_labels(aug, b);
    CHECK(a == b);
    std::vector<std::string> pieces;
    for (const auto& w : leaves(raw)) {
      for (const auto& p : tok.tokenize_word(w)) pieces.push_back(p);
    }
    CHECK(leaves(aug) == pieces);
    CHECK(parse_bracketed(render_bracketed(aug)) == aug);
    CHECK(parse_bracketed(render_bracketed(raw)) == raw);
  }
}

TEST_CASE("PCFG parsing and validation") {
  CHECK_THROWS_AS(Pcfg::parse("S -> \"a\" 0.5\n"), DataError);
  CHECK_THROWS_AS(Pcfg::parse("S -> A B 1.0\nA -> \"a\" 1.0\n"), DataError);
  const auto g = Pcfg::parse("# c\nS -> A B 1\nA -> \"a\" 0.5\nA -> \"b\" 0.5\nB -> \"c\" 1\n");
  CHECK(g.start() == "S");
  CHECK(g.rules().size() == 4);
  CHECK(g.min_depth() == 2);
}

TEST_CASE("sample_pcfg trivial grammar and frequencies") {
  const auto one = Pcfg::parse("S -> \"a\" 1.0\n");
  for (std::uint64_t s = 0; s < 5; ++s) CHECK(render_bracketed(sample_pcfg(one, s)) == "(S a)");

  const auto g = Pcfg::parse("S -> A B 1\nA -> \"a\" 0.5\nA -> \"b\" 0.5\nB -> \"c\" 1\n");
  int ac = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    if (joined(leaves(sample_pcfg(g, s))) == "a c") ++ac;
  }
  CHECK(ac / 10000.0 >= 0.48);
  CHECK(ac / 10000.0 <= 0.52);
}

TEST_CASE("sample_pcfg depth cap") {
  const auto rec = Pcfg::parse("S -> S S 0.9\nS -> \"x\" 0.1\n", 6);
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(count_leaves(sample_pcfg(rec, s)) <= 32);
  CHECK_THROWS(sample_pcfg(Pcfg::parse("S -> A A 1\nA -> B B 1\nB -> \"x\" 1\n", 2), 1));
}

TEST_CASE("sample_pcfg golden tree for seed 42") {
  const auto tree = sample_pcfg(testing::demo_grammar(), 42);
  const auto golden = read_lines(testing::golden_path("sample_seed42.tree"));
  REQUIRE(!golden.empty());
  CHECK(render_bracketed(tree) == golden[0]);
  CHECK(render_bracketed(sample_pcfg(testing::demo_grammar(), 42)) == golden[0]);
}

TEST_CASE("enumerate_pcfg") {
  const auto g = Pcfg::parse("S -> A B 1\nA -> \"a\" 0.5\nA -> \"b\" 0.5\nB -> \"c\" 1\n");
  const auto e = enumerate_pcfg(g);
  REQUIRE(e.size() == 2);
  CHECK(joined(e[0].tokens) == "a c");
  CHECK(e[0].prob == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(joined(e[1].tokens) == "b c");
  const auto one = enumerate_pcfg(Pcfg::parse("S -> \"a\" 1.0\n"));
  REQUIRE(one.size() == 1);
  CHECK(one[0].prob == 1.0);

  const auto demo = enumerate_pcfg(testing::demo_grammar());
  CHECK(demo.size() == 19536);
  double total = 0.0;
  for (const auto& s : demo) {
    CHECK(s.prob > 0.0);
    for (const auto& t : s.tokens) CHECK((t != "<s>" && t != "</s>"));
    total += s.prob;
  }
  CHECK(std::abs(total - 1.0) < 1e-12);
  CHECK_THROWS(enumerate_pcfg(testing::demo_grammar(), 1000));
}

TEST_CASE("sample frequencies agree with enumeration (chi-square)") {
  const auto& g = testing::demo_grammar();
  const auto e = enumerate_pcfg(g);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < e.size(); ++i) index[joined(e[i].tokens)] = i;
  const std::size_t n = 100000;
  std::vector<double> observed(e.size(), 0.0);
  for (std::uint64_t s = 0; s < n; ++s) {
    auto it = index.find(joined(leaves(sample_pcfg(g, derive_seed(99, "chi", s)))));
    REQUIRE(it != index.end());
    observed[it->second] += 1.0;
  }
  // Pool consecutive strings until every cell expects at least 5 draws.
  double chi2 = 0.0, exp_acc = 0.0, obs_acc = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    exp_acc += e[i].prob * n;
    obs_acc += observed[i];
    if (exp_acc >= 5.0 || i + 1 == e.size()) {
      chi2 += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
      ++cells;
      exp_acc = obs_acc = 0.0;
    }
  }
  boost::math::chi_squared dist(cells - 1);
  const double p = 1.0 - boost::math::cdf(dist, chi2);
  INFO("chi2=" << chi2 << " cells=" << cells << " p=" << p);
  CHECK(p > 0.001);
}

TEST_CASE("supertags follow the derivation chain and pieces inherit") {
  Tokenizer tok(testing::demo_vocab());
  const auto t = parse_bracketed("(S (NP_SG (DET the) (N_SG dog)) (VP_SG (VI_SG runs) (ADV today)))");
  const auto tagged = supertag(t, tok);
  CHECK(tagged.tokens == std::vector<std::string>{"the", "d", "##og", "runs", "today"});
  CHECK(tagged.labels[0] == "DET^NP_SG^S");
  CHECK(tagged.labels[1] == "N_SG^NP_SG^S");
  CHECK(tagged.labels[2] == tagged.labels[1]);
  CHECK(tagged.labels[3] == "VI_SG^VP_SG^S");
}

TEST_CASE("vocabulary file and reserved ids") {
  const auto& v = testing::demo_vocab();
  CHECK(v.token(kPad) == "<pad>");
  CHECK(v.token(kEos) == "</s>");
  CHECK(v.id("zzz") == kUnk);
  CHECK(v.hash() == Vocabulary::load(testing::data_path("demo/vocab.txt")).hash());
  write_file(testing::temp_path("badvocab.txt"), "<pad>\n<s>\n");
  CHECK_THROWS_AS(Vocabulary::load(testing::temp_path("badvocab.txt")), DataError);
}
