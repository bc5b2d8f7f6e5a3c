#include "bcop/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace bcop {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

AugmentDraw draw_augment(std::uint64_t seed, const AugmentConfig& config) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentDraw d;
  d.contrast = config.contrast_min + (config.contrast_max - config.contrast_min) * unit(rng);
  d.brightness = config.brightness_max * (2.0 * unit(rng) - 1.0);
  d.noise_sigma = config.noise_sigma;
  d.noise_seed = rng();
  d.flip = unit(rng) < config.flip_probability;
  d.rotation_deg = config.max_rotation_deg * (2.0 * unit(rng) - 1.0);
  return d;
}

namespace {

double sample_clamped(const std::vector<double>& plane, int w, int h, int ch, int c, double x,
                      double y) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  auto at = [&](int xx, int yy) { return plane[(static_cast<std::size_t>(yy) * w + xx) * ch + c]; };
  return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) +
         fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
}

}  // namespace

Image apply_augment(const Image& image, const AugmentDraw& d) {
  const int w = image.width;
  const int h = image.height;
  const int ch = image.channels;
  std::vector<double> px(image.pixels.begin(), image.pixels.end());

  if (d.contrast != 1.0 || d.brightness != 0.0) {
    for (auto& v : px) v = (v - 127.5) * d.contrast + 127.5 + d.brightness * 255.0;
  }
  if (d.noise_sigma > 0.0) {
    std::mt19937_64 rng(d.noise_seed);
    std::normal_distribution<double> noise(0.0, d.noise_sigma * 255.0);
    for (auto& v : px) v += noise(rng);
  }
  if (d.flip) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w / 2; ++x) {
        for (int c = 0; c < ch; ++c) {
          std::swap(px[(static_cast<std::size_t>(y) * w + x) * ch + c],
                    px[(static_cast<std::size_t>(y) * w + (w - 1 - x)) * ch + c]);
        }
      }
    }
  }
  if (d.rotation_deg != 0.0) {
    const double rad = d.rotation_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    std::vector<double> rotated(px.size());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Inverse map: destination pixel back into the source.
        const double dx = x - cx;
        const double dy = y - cy;
        const double sx = cs * dx + sn * dy + cx;
        const double sy = -sn * dx + cs * dy + cy;
        for (int c = 0; c < ch; ++c) {
          rotated[(static_cast<std::size_t>(y) * w + x) * ch + c] = sample_clamped(px, w, h, ch, c, sx, sy);
        }
      }
    }
    px = std::move(rotated);
  }
  Image out(w, h, ch);
  for (std::size_t i = 0; i < px.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(px[i]), 0L, 255L));
  }
  return out;
}

}  // namespace bcop
