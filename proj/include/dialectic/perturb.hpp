#pragma once

// Image perturbations for robustness evaluation and the relative-change
// robustness report.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dialectic/eval.hpp"
#include "dialectic/image.hpp"

namespace dialectic {

enum class PerturbationKind { Jpeg, Resize, GaussianNoise, FlipH, Rotate, Sharpen, Contrast, Blur };

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::FlipH;
  double parameter = 0;  // quality, factor, sigma, degrees or radius; unused for flips
  std::optional<std::uint64_t> seed;  // required by gaussian_noise

  /// Throws std::invalid_argument on an out-of-range parameter.
  void validate() const;
  /// Human label, e.g. "JPEG 70" or "Flip horizontal".
  std::string label() const;
  /// File-system friendly name, e.g. "jpeg_70".
  std::string slug() const;
};

/// Pure function of (spec, image). Dimensions change only for resize.
///   jpeg           encode at quality, decode
///   resize         bilinear (half-pixel centers) to round(dim * factor), min 1
///   gaussian_noise p + N(0, sigma^2) per channel, seeded
///   flip_h         mirror columns
///   rotate         about the center, bilinear, same canvas, black outside
///   sharpen        p + (f - 1) * (p - box3(p))
///   contrast       L + f * (p - L), L the mean luma (0.299, 0.587, 0.114)
///   blur           Gaussian, sigma = radius, kernel truncated at 3 sigma
/// Borders replicate edge pixels; results are rounded and clamped to [0, 255].
Image apply(const PerturbationSpec& spec, const Image& image);

/// The twelve standard settings, in report order.
std::vector<PerturbationSpec> table_vi_suite();

enum class DeltaMode { Relative, PercentagePoint };

struct RobustnessRow {
  std::string label;
  // overall_acc, real_acc, fake_acc; nullopt when the clean value is 0 in
  // relative mode
  std::array<std::optional<double>, 3> delta;
};

struct RobustnessReport {
  DeltaMode mode = DeltaMode::Relative;
  std::vector<RobustnessRow> rows;
  std::array<std::optional<double>, 3> overall;  // mean |delta| per column
  std::array<bool, 3> undefined_column{};         // excluded because clean value was 0
};

RobustnessReport robustness_report(const DetectionReport& clean,
                                   const std::vector<std::pair<PerturbationSpec, DetectionReport>>& perturbed,
                                   DeltaMode mode = DeltaMode::Relative);

/// Aligned table: Conversion | Acc Real Fake, with an Overall row.
std::string render_table(const RobustnessReport& report);

}  // namespace dialectic
