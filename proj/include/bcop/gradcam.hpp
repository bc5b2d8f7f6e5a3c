#pragma once

// Gradient-weighted class activation maps over the latent binarized model.
// The target representation is the pooled output of the second conv group
// (5x5 for the builtin architectures), taken before binarization.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bcop/data/image.hpp"
#include "bcop/model.hpp"

namespace bcop {

struct Heatmap {
  int target_class = 0;
  int raw_width = 0;
  int raw_height = 0;
  std::vector<double> raw;  // raw_height x raw_width, >= 0
  int width = 0;
  int height = 0;
  std::vector<double> upsampled;  // height x width, bilinear from raw
  double norm_max = 0.0;          // normalized = upsampled / norm_max

  std::vector<double> normalized() const;
};

// Spec index of the Grad-CAM target: the second max-pool layer. Throws
// kShapeMismatch when the network has fewer than two pools.
std::size_t gradcam_target_layer(const NetworkSpec& spec);

// ReLU(sum_c mean_xy(grad_c) * act_c) on an h x w x c channels-last map,
// then upsampled to out_w x out_h.
Heatmap heatmap_from(std::span<const double> activations, std::span<const double> gradients, int w, int h,
                     int c, int target_class, int out_w = kImageExtent, int out_h = kImageExtent);

// Throws kInvalidArgument when class_id is outside [0, num_classes).
Heatmap grad_cam(const TrainedModel& model, const Image& image, int class_id);

// Half-pixel-centre bilinear resize with edge clamping.
std::vector<double> bilinear_upsample(std::span<const double> src, int src_w, int src_h, int dst_w, int dst_h);

// Fraction of upsampled heatmap mass inside image quadrant q (0 top-left,
// 1 top-right, 2 bottom-left, 3 bottom-right); 0 for an all-zero map.
double quadrant_mass_fraction(const Heatmap& heatmap, int quadrant);

// Jet colormap: 0 -> dark blue (0, 0, 128), 1 -> dark red (128, 0, 0).
std::array<std::uint8_t, 3> jet_color(double t);

// alpha * jet(normalized) + (1 - alpha) * image, per channel, rounded.
// Throws kShapeMismatch when the heatmap and image geometries differ.
Image overlay(const Heatmap& heatmap, const Image& image, double alpha = 0.5);

void write_overlay(const Heatmap& heatmap, const Image& image, const std::filesystem::path& path,
                   double alpha = 0.5);

}  // namespace bcop
