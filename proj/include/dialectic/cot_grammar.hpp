#pragma once

// Dialectical chain-of-thought response grammar.
//
//   <think> ... [Clue] c [Why fake] h [If real] p ... </think>
//   <answer>Real|Fake</answer>
//
// Tags are lowercase and must each appear exactly once for a response to be
// well formed. Bracket markers are matched case-insensitively and must use a
// single internal space.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dialectic {

enum class Verdict { Real, Fake };

/// "Real" / "Fake".
std::string_view to_string(Verdict v) noexcept;

/// Case-insensitive, surrounding whitespace ignored. Anything else is nullopt.
std::optional<Verdict> parse_verdict(std::string_view text);

Verdict opposite(Verdict v) noexcept;

/// Whitespace-delimited word count; the fallback length unit when a backend
/// does not report token usage.
std::size_t whitespace_token_count(std::string_view text) noexcept;

struct RawResponse {
  std::string text;
  std::size_t token_count = 0;

  /// Builds a response whose length is the whitespace token count of `text`.
  static RawResponse from_text(std::string text);
};

enum class StanceTag { WhyFake, WhyReal, IfFake, IfReal };

std::string_view marker_text(StanceTag tag) noexcept;
bool is_primary(StanceTag tag) noexcept;
/// The counter-proof tag that must follow a primary stance.
StanceTag counter_of(StanceTag primary) noexcept;

struct DialecticUnit {
  std::string clue_text;
  StanceTag primary = StanceTag::WhyFake;
  std::string primary_text;
  StanceTag counter = StanceTag::IfReal;
  std::string counter_text;

  bool operator==(const DialecticUnit&) const = default;
};

struct ParsedResponse {
  std::optional<std::string> think_block;
  std::optional<std::string> answer_block;
  std::optional<Verdict> verdict;
  std::vector<DialecticUnit> units;
  bool format_ok = false;
  bool structure_ok = false;

  bool operator==(const ParsedResponse&) const = default;
};

/// Total: every input yields a ParsedResponse, malformed text just fails the
/// flags.
ParsedResponse parse(std::string_view text);
inline ParsedResponse parse(const RawResponse& raw) { return parse(raw.text); }

/// Complete dialectic units found in a think block, in order. Incomplete or
/// empty-bodied triples are skipped.
std::vector<DialecticUnit> extract_units(std::string_view think_text);

/// True iff the think block is a non-empty sequence of
/// [Clue] -> [Why x] -> [If not-x] triples with non-empty bodies.
bool match_dialectic(const ParsedResponse& parsed);
bool match_dialectic(std::string_view think_text);

/// Renders a response back to text. Units take precedence over think_block
/// when both are present.
std::string render(const ParsedResponse& parsed);

enum class YesNo { Yes, No };

std::string_view to_string(YesNo v) noexcept;

/// Which verdict an affirmative answer stands for. "Is this image
/// AI-generated?" has affirmative_means = Fake.
struct QuestionPolarity {
  Verdict affirmative_means = Verdict::Fake;
};

YesNo to_yes_no(Verdict verdict, QuestionPolarity polarity) noexcept;

}  // namespace dialectic
