#pragma once

#include <cstdint>

#include "bcop/data/image.hpp"

namespace bcop {

// Ranges for the random augmentation draw. Defaults are ours, not tuned
// values from any reference setup.
struct AugmentConfig {
  double contrast_min = 0.8;
  double contrast_max = 1.2;
  double brightness_max = 0.2;  // +-, as a fraction of full scale
  double noise_sigma = 0.02;    // fraction of full scale
  double flip_probability = 0.5;
  double max_rotation_deg = 15.0;
};

// One concrete draw. The identity draw leaves an image unchanged.
struct AugmentDraw {
  double contrast = 1.0;
  double brightness = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  bool flip = false;
  double rotation_deg = 0.0;

  static AugmentDraw identity() { return {}; }
};

AugmentDraw draw_augment(std::uint64_t seed, const AugmentConfig& config = {});

// Applies contrast (about mid-gray), brightness, gaussian noise, horizontal
// flip and rotation about the centre (bilinear, edge clamp), then clamps to
// [0, 255].
Image apply_augment(const Image& image, const AugmentDraw& draw);

inline Image augment(const Image& image, std::uint64_t seed, const AugmentConfig& config = {}) {
  return apply_augment(image, draw_augment(seed, config));
}

// Per-record seed derived from a global seed and record index (splitmix64),
// so results do not depend on worker scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace bcop
