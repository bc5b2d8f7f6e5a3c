#include "bcop/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bcop/error.hpp"

namespace bcop {
namespace {

std::uint8_t clamp_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Each class has its own texture so that the patch, not only its position,
// carries the class: checkerboard, horizontal stripes, vertical stripes,
// diagonal stripes.
bool pattern_on(int label, int u, int v) {
  switch (label) {
    case 0: return (u + v) % 2 == 0;
    case 1: return v % 2 == 0;
    case 2: return u % 2 == 0;
    default: return (u + v) % 3 == 0;
  }
}

Image make_sample(int label, std::mt19937_64& rng) {
  constexpr int kQuadrant = kImageExtent / 2;
  std::uniform_int_distribution<int> base_dist(100, 155);
  std::normal_distribution<double> noise(0.0, 8.0);
  Image img(kImageExtent, kImageExtent, 3);
  const int base[3] = {base_dist(rng), base_dist(rng), base_dist(rng)};
  for (int y = 0; y < kImageExtent; ++y) {
    for (int x = 0; x < kImageExtent; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = clamp_pixel(base[c] + noise(rng));
    }
  }
  std::uniform_int_distribution<int> size_dist(8, 12);
  const int size = size_dist(rng);
  std::uniform_int_distribution<int> off_dist(1, kQuadrant - size - 1);
  const int x0 = (label % 2) * kQuadrant + off_dist(rng);
  const int y0 = (label / 2) * kQuadrant + off_dist(rng);
  std::uniform_int_distribution<int> dark_dist(10, 50);
  std::uniform_int_distribution<int> bright_dist(205, 245);
  std::uniform_int_distribution<int> cell_dist(1, 2);
  const int dark = dark_dist(rng);
  const int bright = bright_dist(rng);
  const int cell = cell_dist(rng);
  for (int y = y0; y < y0 + size; ++y) {
    for (int x = x0; x < x0 + size; ++x) {
      const int u = (x - x0) / cell;
      const int v = (y - y0) / cell;
      const bool on = pattern_on(label, u, v);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = clamp_pixel((on ? bright : dark) + noise(rng) * 0.25);
    }
  }
  return img;
}

}  // namespace

Dataset synth_quadrant_dataset(int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) fail(ErrorCode::kInvalidArgument, "synth_quadrant_dataset: n_per_class must be >= 1");
  std::mt19937_64 rng(seed);
  Dataset data;
  const auto total = static_cast<std::size_t>(n_per_class) * 4;
  data.images.reserve(total);
  data.labels.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const int label = static_cast<int>(i % 4);
    data.images.push_back(make_sample(label, rng));
    data.labels.push_back(label);
  }
  return data;
}

}  // namespace bcop
