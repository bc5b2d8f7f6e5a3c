#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bcop {

enum class LayerKind { kConv, kMaxPool, kFullyConnected };

std::string_view to_string(LayerKind kind);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  int kernel = 3;        // conv: K; pool: window extent
  int in_channels = 0;   // fc: flattened fan-in
  int out_channels = 0;  // pool: equals in_channels
  int stride = 1;
  bool has_bn_sign = true;

  bool weighted() const { return kind != LayerKind::kMaxPool; }
  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  std::string arch_name;
  std::vector<LayerSpec> layers;
  int input_width = 32;
  int input_height = 32;
  int input_channels = 3;
  int input_bits = 8;
  int num_classes = 4;

  std::vector<std::size_t> weighted_layers() const;
  bool operator==(const NetworkSpec&) const = default;
};

struct LayerShape {
  int in_width = 0, in_height = 0, in_channels = 0;
  int out_width = 0, out_height = 0, out_channels = 0;
  // Weight-row length: K*K*Ci for conv, flattened input for fc, 0 for pools.
  int fan_in = 0;
  // Output channels as dimensioned in hardware (final fc rounded up to 64).
  int padded_out_channels = 0;
  // Output vectors per frame: Xo*Yo for conv, 1 for fc.
  int output_pixels = 0;
};

struct ShapeInfo {
  std::vector<LayerShape> layers;
};

// Output width that the final classifier is padded to in hardware.
inline constexpr int kFinalLayerPadding = 64;

// "cnv", "n-cnv", "u-cnv" (also "mu-cnv", "μ-CNV"), case-insensitive.
NetworkSpec builtin_spec(std::string_view arch_name);
std::vector<std::string> builtin_arch_names();

// Throws kShapeMismatch on channel mismatches, pools over odd extents, or
// windows larger than their input.
ShapeInfo infer_shapes(const NetworkSpec& spec);

// XNOR and popcount counted separately: conv 2*K^2*Ci*Co*Xo*Yo, fc
// 2*Fin*Co_padded, pools 0. One entry per layer (pools included).
std::vector<std::uint64_t> count_binary_ops(const NetworkSpec& spec, const ShapeInfo& shapes);

std::string to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(std::string_view text);

}  // namespace bcop
