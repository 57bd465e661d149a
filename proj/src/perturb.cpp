#include "dialectic/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dialectic/random.hpp"

namespace dialectic {
namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

std::string trim_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Samples channel c at a real position. Neighbors outside the frame read as
// black.
double sample_black(const Image& img, double sx, double sy, int c) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0, fy = sy - y0;
  auto px = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
    return img.at(x, y, c);
  };
  return (1 - fy) * ((1 - fx) * px(x0, y0) + fx * px(x0 + 1, y0)) +
         fy * ((1 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1));
}

Image jpeg(const Image& img, double quality) {
  return decode_jpeg(encode_jpeg(img, static_cast<int>(std::lround(quality))));
}

Image resize(const Image& img, double factor) {
  const int w = std::max(1, static_cast<int>(std::lround(img.width * factor)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height * factor)));
  const double sx_scale = static_cast<double>(img.width) / w;
  const double sy_scale = static_cast<double>(img.height) / h;
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < w; ++x) {
      const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - fy) * ((1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c)) +
                         fy * ((1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c));
        out.at(x, y, c) = to_byte(v);
      }
    }
  }
  return out;
}

Image gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
  Image out = img;
  Rng rng(seed);
  for (auto& v : out.rgb) v = to_byte(v + sigma * standard_normal(rng));
  return out;
}

Image flip_h(const Image& img) {
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(img.width - 1 - x, y, c) = img.at(x, y, c);
  return out;
}

// Positive angles turn the content counter-clockwise as displayed.
Image rotate(const Image& img, double degrees) {
  if (std::fmod(degrees, 360.0) == 0.0) return img;
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double sx = cx + cs * dx - sn * dy;
      const double sy = cy + sn * dx + cs * dy;
      if (sx <= -1 || sy <= -1 || sx >= img.width || sy >= img.height) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = to_byte(sample_black(img, sx, sy, c));
    }
  }
  return out;
}

// Separable filter with replicated borders; works in double precision.
std::vector<double> convolve(const Image& img, const std::vector<double>& kernel) {
  const int r = static_cast<int>(kernel.size() / 2);
  const int w = img.width, h = img.height;
  std::vector<double> tmp(img.rgb.size()), out(img.rgb.size());
  auto idx = [w](int x, int y, int c) { return (static_cast<std::size_t>(y) * w + x) * 3 + c; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int k = -r; k <= r; ++k) acc += kernel[k + r] * img.at(std::clamp(x + k, 0, w - 1), y, c);
        tmp[idx(x, y, c)] = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int k = -r; k <= r; ++k) acc += kernel[k + r] * tmp[idx(x, std::clamp(y + k, 0, h - 1), c)];
        out[idx(x, y, c)] = acc;
      }
  return out;
}

Image sharpen(const Image& img, double factor) {
  if (factor == 1.0) return img;
  const auto base = convolve(img, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.rgb.size(); ++i)
    out.rgb[i] = to_byte(img.rgb[i] + (factor - 1) * (img.rgb[i] - base[i]));
  return out;
}

Image contrast(const Image& img, double factor) {
  double luma = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      luma += 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
  luma /= static_cast<double>(img.width) * img.height;
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) out.rgb[i] = to_byte(luma + factor * (img.rgb[i] - luma));
  return out;
}

Image blur(const Image& img, double sigma) {
  if (sigma == 0) return img;
  const int r = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * r + 1));
  double sum = 0;
  for (int k = -r; k <= r; ++k) sum += kernel[k + r] = std::exp(-(k * k) / (2 * sigma * sigma));
  for (auto& v : kernel) v /= sum;
  const auto blurred = convolve(img, kernel);
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) out.rgb[i] = to_byte(blurred[i]);
  return out;
}

}  // namespace

void PerturbationSpec::validate() const {
  const double p = parameter;
  auto fail = [&](const char* what) {
    throw std::invalid_argument(label() + ": " + what);
  };
  if (!std::isfinite(p)) fail("parameter must be finite");
  switch (kind) {
    case PerturbationKind::Jpeg:
      if (p < 1 || p > 100) fail("JPEG quality must be in [1, 100]");
      break;
    case PerturbationKind::Resize:
      if (p <= 0) fail("resize factor must be > 0");
      break;
    case PerturbationKind::GaussianNoise:
      if (p < 0) fail("noise sigma must be >= 0");
      if (!seed) fail("gaussian noise needs a seed");
      break;
    case PerturbationKind::Sharpen:
    case PerturbationKind::Contrast:
      if (p <= 0) fail("factor must be > 0");
      break;
    case PerturbationKind::Blur:
      if (p < 0) fail("blur radius must be >= 0");
      break;
    case PerturbationKind::FlipH:
    case PerturbationKind::Rotate:
      break;
  }
}

std::string PerturbationSpec::label() const {
  const auto p = trim_number(parameter);
  switch (kind) {
    case PerturbationKind::Jpeg: return "JPEG " + p;
    case PerturbationKind::Resize: return "Resize " + p;
    case PerturbationKind::GaussianNoise: return "Gaussian " + p;
    case PerturbationKind::FlipH: return "Flip horizontal";
    case PerturbationKind::Rotate: return "Rotate " + p;
    case PerturbationKind::Sharpen: return "Sharpen " + p;
    case PerturbationKind::Contrast: return "Contrast " + p;
    case PerturbationKind::Blur: return "Blur " + p;
  }
  return "?";
}

std::string PerturbationSpec::slug() const {
  auto s = label();
  for (auto& ch : s) ch = ch == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

Image apply(const PerturbationSpec& spec, const Image& image) {
  spec.validate();
  if (image.empty() || image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3)
    throw ImageError("cannot perturb an empty or inconsistent image");
  switch (spec.kind) {
    case PerturbationKind::Jpeg: return jpeg(image, spec.parameter);
    case PerturbationKind::Resize: return resize(image, spec.parameter);
    case PerturbationKind::GaussianNoise: return gaussian_noise(image, spec.parameter, *spec.seed);
    case PerturbationKind::FlipH: return flip_h(image);
    case PerturbationKind::Rotate: return rotate(image, spec.parameter);
    case PerturbationKind::Sharpen: return sharpen(image, spec.parameter);
    case PerturbationKind::Contrast: return contrast(image, spec.parameter);
    case PerturbationKind::Blur: return blur(image, spec.parameter);
  }
  throw std::logic_error("unknown perturbation kind");
}

std::vector<PerturbationSpec> table_vi_suite() {
  using K = PerturbationKind;
  return {{K::Jpeg, 70, {}},         {K::Jpeg, 80, {}},         {K::Resize, 0.5, {}},
          {K::Resize, 0.75, {}},     {K::GaussianNoise, 10, {}}, {K::GaussianNoise, 5, {}},
          {K::FlipH, 0, {}},         {K::Rotate, 15, {}},       {K::Sharpen, 1.5, {}},
          {K::Contrast, 0.7, {}},    {K::Contrast, 1.3, {}},    {K::Blur, 3, {}}};
}

RobustnessReport robustness_report(const DetectionReport& clean,
                                   const std::vector<std::pair<PerturbationSpec, DetectionReport>>& perturbed,
                                   DeltaMode mode) {
  RobustnessReport rep;
  rep.mode = mode;
  const std::array<double, 3> base{clean.overall_acc, clean.real_acc, clean.fake_acc};
  for (int c = 0; c < 3; ++c) rep.undefined_column[c] = mode == DeltaMode::Relative && base[c] == 0;

  std::array<double, 3> abs_sum{};
  for (const auto& [spec, report] : perturbed) {
    const std::array<double, 3> value{report.overall_acc, report.real_acc, report.fake_acc};
    RobustnessRow row{spec.label(), {}};
    for (int c = 0; c < 3; ++c) {
      if (rep.undefined_column[c]) continue;
      const double d = mode == DeltaMode::Relative ? (value[c] - base[c]) / base[c] * 100.0
                                                   : (value[c] - base[c]) * 100.0;
      row.delta[c] = d;
      abs_sum[c] += std::abs(d);
    }
    rep.rows.push_back(std::move(row));
  }
  if (!rep.rows.empty())
    for (int c = 0; c < 3; ++c)
      if (!rep.undefined_column[c]) rep.overall[c] = abs_sum[c] / static_cast<double>(rep.rows.size());
  return rep;
}

std::string render_table(const RobustnessReport& rep) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-18s%9s%9s%9s\n", "Conversion", "Acc", "Real", "Fake");
  os << buf;
  auto cell = [](const std::optional<double>& v) {
    char b[16];
    if (v)
      std::snprintf(b, sizeof b, "%.2f", *v);
    else
      std::snprintf(b, sizeof b, "n/a");
    return std::string(b);
  };
  for (const auto& row : rep.rows) {
    std::snprintf(buf, sizeof buf, "%-18s%9s%9s%9s\n", row.label.c_str(), cell(row.delta[0]).c_str(),
                  cell(row.delta[1]).c_str(), cell(row.delta[2]).c_str());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-18s%9s%9s%9s\n", "Overall", cell(rep.overall[0]).c_str(),
                cell(rep.overall[1]).c_str(), cell(rep.overall[2]).c_str());
  os << buf;
  if (rep.mode == DeltaMode::PercentagePoint) os << "(percentage-point changes)\n";
  for (int c = 0; c < 3; ++c)
    if (rep.undefined_column[c])
      os << "note: " << std::array{"Acc", "Real", "Fake"}[c]
         << " column undefined (clean accuracy is 0), excluded from Overall\n";
  return os.str();
}

}  // namespace dialectic
