#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bcop {

// 8-bit interleaved image, row-major, RGB channel order.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
};

inline constexpr int kImageExtent = 32;

// Decodes PNG/JPEG/PPM (or a raw 32x32x3 ".rgb" dump) to RGB and resizes
// to 32x32. Throws ErrorCode::kIo with the path on failure.
Image load_image(const std::filesystem::path& path);

// Area-interpolated resize to 32x32.
Image resize_to_input(const Image& image);

// Encodes by extension (.png, .ppm, .jpg). Throws kIo on failure.
void save_image(const Image& image, const std::filesystem::path& path);

}  // namespace bcop
