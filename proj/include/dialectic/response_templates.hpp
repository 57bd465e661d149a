#pragma once

// The finite response space used by the toy policy and by the mock generation
// backend: one malformed template plus
// {Real, Fake} x {dialectic, unidirectional} x {short, long}.

#include <array>
#include <cstddef>

#include "dialectic/cot_grammar.hpp"

namespace dialectic {

inline constexpr int kTemplateCount = 9;
inline constexpr std::size_t kShortTokens = 120;
inline constexpr std::size_t kLongTokens = 900;

enum class Structure { Dialectic, Unidirectional };

struct TemplateSpec {
  bool malformed = false;
  Verdict verdict = Verdict::Real;  // meaningless when malformed
  Structure structure = Structure::Unidirectional;
  std::size_t token_count = kShortTokens;
};

/// Index 0 is the malformed template; index 1 + 4*v + 2*s + len otherwise,
/// with v (0 Real, 1 Fake), s (0 dialectic, 1 unidirectional), len (0 short,
/// 1 long).
const std::array<TemplateSpec, kTemplateCount>& template_space() noexcept;

/// Deterministic text for a template in a given context. Throws
/// std::out_of_range for a bad template id.
RawResponse render_template(int template_id, int context);

}  // namespace dialectic
