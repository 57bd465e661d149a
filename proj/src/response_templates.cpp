#include "dialectic/response_templates.hpp"

#include <stdexcept>
#include <string>

namespace dialectic {

const std::array<TemplateSpec, kTemplateCount>& template_space() noexcept {
  static const auto space = [] {
    std::array<TemplateSpec, kTemplateCount> s{};
    s[0] = TemplateSpec{true, Verdict::Real, Structure::Unidirectional, kShortTokens};
    for (int v = 0; v < 2; ++v)
      for (int st = 0; st < 2; ++st)
        for (int len = 0; len < 2; ++len)
          s[1 + 4 * v + 2 * st + len] = TemplateSpec{
              false, v == 0 ? Verdict::Real : Verdict::Fake,
              st == 0 ? Structure::Dialectic : Structure::Unidirectional,
              len == 0 ? kShortTokens : kLongTokens};
    return s;
  }();
  return space;
}

RawResponse render_template(int template_id, int context) {
  if (template_id < 0 || template_id >= kTemplateCount)
    throw std::out_of_range("template id " + std::to_string(template_id) + " outside [0, 9)");
  const auto& spec = template_space()[static_cast<std::size_t>(template_id)];
  const auto ctx = std::to_string(context);
  if (spec.malformed)
    return {"I think this image from context " + ctx + " is probably fake.", spec.token_count};

  const bool fake = spec.verdict == Verdict::Fake;
  std::string think = "[Clue] texture pattern in region " + ctx;
  think += fake ? " [Why fake] repeated micro-texture typical of diffusion upsampling"
                : " [Why real] sensor noise is spatially uncorrelated";
  if (spec.structure == Structure::Dialectic)
    think += fake ? " [If real] a real fabric weave would vary with perspective"
                  : " [If fake] a generator would smooth the noise floor";
  if (spec.token_count == kLongTokens) think += " and the global lighting agrees with the shadows";
  return {"<think>" + think + "</think><answer>" + std::string(to_string(spec.verdict)) +
              "</answer>",
          spec.token_count};
}

}  // namespace dialectic
