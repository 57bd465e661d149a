#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace dialectic {

/// 8-bit RGB raster, row-major, channels interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  bool empty() const noexcept { return width <= 0 || height <= 0; }

  std::uint8_t& at(int x, int y, int c) noexcept { return rgb[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const noexcept { return rgb[index(x, y, c)]; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 +
           static_cast<std::size_t>(c);
  }
};

/// Thrown for unreadable or undecodable image data.
class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool is_supported_image(const std::filesystem::path& path);

/// PNG, JPEG or binary PPM (P6), chosen by extension.
Image read_image(const std::filesystem::path& path);
/// Format chosen by extension; JPEG output uses `jpeg_quality`.
void write_image(const Image& image, const std::filesystem::path& path, int jpeg_quality = 95);

std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality);
Image decode_jpeg(const std::vector<std::uint8_t>& bytes);

}  // namespace dialectic
