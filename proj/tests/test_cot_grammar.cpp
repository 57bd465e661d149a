#include <doctest.h>

#include <array>
#include <random>

#include "dialectic/cot_grammar.hpp"

using namespace dialectic;

TEST_CASE("parse: well-formed dialectic response") {
  const auto p = parse(
      "<think>[Clue] six fingers [Why fake] extra digit [If real] foreshortening could merge "
      "fingers</think><answer>Fake</answer>");
  CHECK(p.format_ok);
  REQUIRE(p.verdict);
  CHECK(*p.verdict == Verdict::Fake);
  REQUIRE(p.units.size() == 1);
  CHECK(p.structure_ok);
  CHECK(p.units[0].clue_text == "six fingers");
  CHECK(p.units[0].primary == StanceTag::WhyFake);
  CHECK(p.units[0].primary_text == "extra digit");
  CHECK(p.units[0].counter == StanceTag::IfReal);
  CHECK(p.units[0].counter_text == "foreshortening could merge fingers");
}

TEST_CASE("parse: empty input") {
  const auto p = parse("");
  CHECK_FALSE(p.format_ok);
  CHECK_FALSE(p.verdict);
  CHECK(p.units.empty());
  CHECK_FALSE(p.structure_ok);
  CHECK_FALSE(p.think_block);
  CHECK_FALSE(p.answer_block);
}

TEST_CASE("parse: answer without think still yields a verdict") {
  const auto p = parse("<answer>Fake</answer>");
  CHECK_FALSE(p.format_ok);
  REQUIRE(p.verdict);
  CHECK(*p.verdict == Verdict::Fake);
  CHECK_FALSE(p.structure_ok);
}

TEST_CASE("parse: verdict case and whitespace are canonicalized") {
  const auto p = parse("  <think>x</think>\n<answer>  rEaL \n</answer>\n");
  CHECK(p.format_ok);
  REQUIRE(p.verdict);
  CHECK(*p.verdict == Verdict::Real);
  CHECK(to_string(*p.verdict) == "Real");
}

TEST_CASE("parse: format failures") {
  SUBCASE("non-binary answer") {
    const auto p = parse("<think>x</think><answer>Probably fake</answer>");
    CHECK_FALSE(p.format_ok);
    CHECK_FALSE(p.verdict);
    REQUIRE(p.answer_block);
  }
  SUBCASE("duplicated answer tag") {
    const auto p = parse("<think>x</think><answer>Fake</answer><answer>Real</answer>");
    CHECK_FALSE(p.format_ok);
    REQUIRE(p.verdict);
    CHECK(*p.verdict == Verdict::Fake);
  }
  SUBCASE("duplicated think tag") {
    CHECK_FALSE(parse("<think>a</think><think>b</think><answer>Fake</answer>").format_ok);
  }
  SUBCASE("missing answer") { CHECK_FALSE(parse("<think>a</think>").format_ok); }
  SUBCASE("text outside the tags") {
    CHECK_FALSE(parse("Sure! <think>a</think><answer>Fake</answer>").format_ok);
    CHECK_FALSE(parse("<think>a</think> so <answer>Fake</answer>").format_ok);
    CHECK_FALSE(parse("<think>a</think><answer>Fake</answer> done").format_ok);
  }
  SUBCASE("answer before think") {
    const auto p = parse("<answer>Fake</answer><think>a</think>");
    CHECK_FALSE(p.format_ok);
    CHECK(p.think_block);
  }
  SUBCASE("uppercase tags are not tags") {
    CHECK_FALSE(parse("<THINK>a</THINK><answer>Fake</answer>").format_ok);
  }
}

TEST_CASE("parse: nested think takes the innermost pair") {
  const auto p = parse("<think>outer <think>inner</think><answer>Real</answer>");
  REQUIRE(p.think_block);
  CHECK(*p.think_block == "inner");
  CHECK_FALSE(p.format_ok);
}

TEST_CASE("markers are case-insensitive with a single space") {
  CHECK(match_dialectic("[clue] a [WHY REAL] b [if FAKE] c"));
  CHECK_FALSE(match_dialectic("[Clue] a [Why  real] b [If fake] c"));
}

TEST_CASE("match_dialectic") {
  SUBCASE("one unit, WhyFake then IfReal") {
    CHECK(match_dialectic("[Clue] a [Why fake] b [If real] c"));
  }
  SUBCASE("second clue has a non-opposing counter") {
    const auto p = parse(
        "<think>[Clue] a [Why fake] b [If real] c [Clue] d [Why real] e [If real] f</think>"
        "<answer>Fake</answer>");
    CHECK(p.format_ok);
    CHECK_FALSE(match_dialectic(p));
    CHECK_FALSE(p.structure_ok);
    CHECK(p.units.size() == 1);
  }
  SUBCASE("no units") { CHECK_FALSE(match_dialectic("")); }
  SUBCASE("unidirectional clue") {
    CHECK_FALSE(match_dialectic("[Clue] a [Why fake] b"));
    CHECK_FALSE(match_dialectic("[Clue] a [Why fake] b [If real] c [Clue] d [Why fake] e"));
  }
  SUBCASE("two counter-proofs on one clue") {
    CHECK_FALSE(match_dialectic("[Clue] a [Why fake] b [If real] c [If real] d"));
  }
  SUBCASE("stance before any clue") {
    CHECK_FALSE(match_dialectic("[Why fake] z [Clue] a [Why fake] b [If real] c"));
  }
  SUBCASE("empty body") {
    CHECK_FALSE(match_dialectic("[Clue] a [Why fake]   [If real] c"));
    CHECK(extract_units("[Clue] a [Why fake]   [If real] c").empty());
  }
  SUBCASE("preamble text before the first clue is allowed") {
    CHECK(match_dialectic("Looking at the hand. [Clue] a [Why real] b [If fake] c"));
  }
  SUBCASE("parsed without think block") {
    ParsedResponse p;
    CHECK_FALSE(match_dialectic(p));
  }
}

TEST_CASE("to_yes_no over all combinations") {
  for (auto v : {Verdict::Real, Verdict::Fake}) {
    for (auto a : {Verdict::Real, Verdict::Fake}) {
      CHECK((to_yes_no(v, {a}) == YesNo::Yes) == (v == a));
    }
  }
  CHECK(to_yes_no(Verdict::Fake, {Verdict::Fake}) == YesNo::Yes);
  CHECK(to_yes_no(Verdict::Fake, {Verdict::Real}) == YesNo::No);
  CHECK(to_yes_no(Verdict::Real, {Verdict::Real}) == YesNo::Yes);
}

TEST_CASE("whitespace token count") {
  CHECK(whitespace_token_count("") == 0);
  CHECK(whitespace_token_count("  a b\n\tc  ") == 3);
  CHECK(RawResponse::from_text("one two").token_count == 2);
}

namespace {

std::string random_word(std::mt19937_64& rng) {
  static constexpr std::string_view letters = "abcdefghijklmnopqrstuvwxyz";
  std::string w;
  const auto len = 1 + rng() % 8;
  for (std::size_t i = 0; i < len; ++i) w += letters[rng() % letters.size()];
  return w;
}

std::string random_text(std::mt19937_64& rng) {
  std::string s;
  const auto n = 1 + rng() % 5;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + random_word(rng);
  return s;
}

ParsedResponse random_valid(std::mt19937_64& rng) {
  ParsedResponse p;
  p.verdict = rng() % 2 ? Verdict::Real : Verdict::Fake;
  const auto n = rng() % 4;
  for (std::size_t i = 0; i < n; ++i) {
    const auto primary = rng() % 2 ? StanceTag::WhyFake : StanceTag::WhyReal;
    p.units.push_back({random_text(rng), primary, random_text(rng), counter_of(primary),
                       random_text(rng)});
  }
  if (n == 0) p.think_block = random_text(rng);
  p.format_ok = true;
  p.structure_ok = n > 0;
  return p;
}

}  // namespace

TEST_CASE("property: render then parse round trip") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const auto original = random_valid(rng);
    const auto text = render(original);
    const auto back = parse(text);
    CHECK(back.format_ok == original.format_ok);
    CHECK(back.structure_ok == original.structure_ok);
    CHECK(back.verdict == original.verdict);
    CHECK(back.units.size() == original.units.size());
    if (!original.units.empty()) CHECK(back.units == original.units);
    CHECK(parse(text) == back);  // determinism
  }
}

TEST_CASE("property: surrounding whitespace never changes structure_ok") {
  std::mt19937_64 rng(99);
  const std::array<std::string, 4> pads{" ", "\n\n", "\t \n", "   "};
  for (int trial = 0; trial < 200; ++trial) {
    auto original = random_valid(rng);
    if (trial % 3 == 0 && !original.units.empty()) original.units.back().counter = StanceTag::IfFake;
    const auto text = render(original);
    const auto base = parse(text);
    for (const auto& pad : pads) {
      CHECK(parse(pad + text).structure_ok == base.structure_ok);
      CHECK(parse(text + pad).structure_ok == base.structure_ok);
    }
  }
}
