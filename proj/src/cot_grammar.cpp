#include "dialectic/cot_grammar.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace dialectic {
namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool all_space(std::string_view s) noexcept { return std::all_of(s.begin(), s.end(), is_space); }

bool iequals(std::string_view a, std::string_view b) noexcept {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::size_t count_of(std::string_view text, std::string_view needle) noexcept {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

struct Span {
  std::size_t open = 0;   // position of the opening tag
  std::size_t begin = 0;  // first content byte
  std::size_t end = 0;    // one past last content byte (= position of closing tag)
  std::size_t close_end = 0;
};

// Innermost pair: the first closing tag at or after `from`, matched with the
// nearest opening tag before it.
std::optional<Span> find_pair(std::string_view text, std::string_view open,
                              std::string_view close, std::size_t from) {
  const auto close_pos = text.find(close, from);
  if (close_pos == std::string_view::npos) return std::nullopt;
  const auto head = text.substr(0, close_pos);
  auto open_pos = head.rfind(open);
  if (open_pos == std::string_view::npos || open_pos < from) return std::nullopt;
  return Span{open_pos, open_pos + open.size(), close_pos, close_pos + close.size()};
}

enum class Marker { Clue, WhyFake, WhyReal, IfFake, IfReal };

struct MarkerHit {
  Marker kind;
  std::size_t begin;
  std::size_t end;
};

constexpr std::array<std::pair<std::string_view, Marker>, 5> kMarkers{{
    {"[Clue]", Marker::Clue},
    {"[Why fake]", Marker::WhyFake},
    {"[Why real]", Marker::WhyReal},
    {"[If fake]", Marker::IfFake},
    {"[If real]", Marker::IfReal},
}};

std::vector<MarkerHit> scan_markers(std::string_view text) {
  std::vector<MarkerHit> hits;
  for (std::size_t pos = text.find('['); pos != std::string_view::npos;
       pos = text.find('[', pos + 1)) {
    for (const auto& [literal, kind] : kMarkers) {
      if (iequals(text.substr(pos, literal.size()), literal)) {
        hits.push_back({kind, pos, pos + literal.size()});
        break;
      }
    }
  }
  return hits;
}

std::optional<StanceTag> stance_of(Marker m) noexcept {
  switch (m) {
    case Marker::WhyFake: return StanceTag::WhyFake;
    case Marker::WhyReal: return StanceTag::WhyReal;
    case Marker::IfFake: return StanceTag::IfFake;
    case Marker::IfReal: return StanceTag::IfReal;
    case Marker::Clue: break;
  }
  return std::nullopt;
}

struct TripleScan {
  std::vector<DialecticUnit> units;
  bool strict = false;  // the marker sequence is exactly a run of valid triples
};

TripleScan scan_triples(std::string_view think) {
  const auto hits = scan_markers(think);
  TripleScan out;
  out.strict = !hits.empty() && hits.size() % 3 == 0;

  const auto body = [&](std::size_t i) {
    const auto from = hits[i].end;
    const auto to = i + 1 < hits.size() ? hits[i + 1].begin : think.size();
    return std::string(trim(think.substr(from, to - from)));
  };

  std::size_t i = 0;
  while (i < hits.size()) {
    if (hits[i].kind != Marker::Clue) {
      out.strict = false;
      ++i;
      continue;
    }
    StanceTag primary_tag{}, counter_tag{};
    bool paired = false;
    if (i + 2 < hits.size()) {
      const auto primary = stance_of(hits[i + 1].kind);
      const auto counter = stance_of(hits[i + 2].kind);
      if (primary && counter) {
        primary_tag = *primary;
        counter_tag = *counter;
        paired = is_primary(primary_tag) && counter_tag == counter_of(primary_tag);
      }
    }
    if (!paired) {
      out.strict = false;
      ++i;
      continue;
    }
    DialecticUnit unit{body(i), primary_tag, body(i + 1), counter_tag, body(i + 2)};
    if (unit.clue_text.empty() || unit.primary_text.empty() || unit.counter_text.empty())
      out.strict = false;
    else
      out.units.push_back(std::move(unit));
    i += 3;
  }
  return out;
}

}  // namespace

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Real ? "Real" : "Fake"; }

std::optional<Verdict> parse_verdict(std::string_view text) {
  const auto t = trim(text);
  if (iequals(t, "real")) return Verdict::Real;
  if (iequals(t, "fake")) return Verdict::Fake;
  return std::nullopt;
}

Verdict opposite(Verdict v) noexcept { return v == Verdict::Real ? Verdict::Fake : Verdict::Real; }

std::size_t whitespace_token_count(std::string_view text) noexcept {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

RawResponse RawResponse::from_text(std::string text) {
  const auto count = whitespace_token_count(text);
  return RawResponse{std::move(text), count};
}

std::string_view marker_text(StanceTag tag) noexcept {
  switch (tag) {
    case StanceTag::WhyFake: return "[Why fake]";
    case StanceTag::WhyReal: return "[Why real]";
    case StanceTag::IfFake: return "[If fake]";
    case StanceTag::IfReal: return "[If real]";
  }
  return "";
}

bool is_primary(StanceTag tag) noexcept {
  return tag == StanceTag::WhyFake || tag == StanceTag::WhyReal;
}

StanceTag counter_of(StanceTag primary) noexcept {
  return primary == StanceTag::WhyFake ? StanceTag::IfReal : StanceTag::IfFake;
}

ParsedResponse parse(std::string_view text) {
  ParsedResponse out;

  const auto think = find_pair(text, kThinkOpen, kThinkClose, 0);
  if (think) out.think_block = std::string(text.substr(think->begin, think->end - think->begin));

  const auto answer = find_pair(text, kAnswerOpen, kAnswerClose, think ? think->close_end : 0);
  if (answer) {
    out.answer_block = std::string(text.substr(answer->begin, answer->end - answer->begin));
    out.verdict = parse_verdict(*out.answer_block);
  }

  const bool unique_tags = count_of(text, kThinkOpen) == 1 && count_of(text, kThinkClose) == 1 &&
                           count_of(text, kAnswerOpen) == 1 && count_of(text, kAnswerClose) == 1;
  out.format_ok = unique_tags && think && answer && out.verdict &&
                  all_space(text.substr(0, think->open)) &&
                  all_space(text.substr(think->close_end, answer->open - think->close_end)) &&
                  all_space(text.substr(answer->close_end));

  if (out.think_block) {
    auto scan = scan_triples(*out.think_block);
    out.units = std::move(scan.units);
    out.structure_ok = scan.strict && !out.units.empty();
  }
  return out;
}

std::vector<DialecticUnit> extract_units(std::string_view think_text) {
  return scan_triples(think_text).units;
}

bool match_dialectic(std::string_view think_text) {
  const auto scan = scan_triples(think_text);
  return scan.strict && !scan.units.empty();
}

bool match_dialectic(const ParsedResponse& parsed) {
  return parsed.think_block && !parsed.units.empty() && match_dialectic(*parsed.think_block);
}

std::string render(const ParsedResponse& parsed) {
  std::string think;
  if (!parsed.units.empty()) {
    for (const auto& u : parsed.units) {
      if (!think.empty()) think += ' ';
      think += "[Clue] " + u.clue_text + ' ' + std::string(marker_text(u.primary)) + ' ' +
               u.primary_text + ' ' + std::string(marker_text(u.counter)) + ' ' + u.counter_text;
    }
  } else if (parsed.think_block) {
    think = *parsed.think_block;
  }
  std::string answer = parsed.verdict ? std::string(to_string(*parsed.verdict))
                                      : parsed.answer_block.value_or("");
  return std::string(kThinkOpen) + think + std::string(kThinkClose) + std::string(kAnswerOpen) +
         answer + std::string(kAnswerClose);
}

std::string_view to_string(YesNo v) noexcept { return v == YesNo::Yes ? "Yes" : "No"; }

YesNo to_yes_no(Verdict verdict, QuestionPolarity polarity) noexcept {
  return verdict == polarity.affirmative_means ? YesNo::Yes : YesNo::No;
}

}  // namespace dialectic
