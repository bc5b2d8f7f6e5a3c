#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bcop/bit_tensor.hpp"
#include "bcop/model.hpp"
#include "bcop/netspec.hpp"

namespace bcop {

// Per-channel integer thresholds in the accumulator domain of a layer.
// For binary-input layers that domain is the XNOR match count p in [0, F];
// for the 8-bit first layer it is s = sum((pixel - 128) * w).
// A channel fires (+1) iff v >= T, or iff v <= T when flipped.
struct ThresholdParams {
  std::vector<std::int32_t> thresholds;
  std::vector<std::uint8_t> flip;  // 0/1 per channel
  int fan_in = 0;

  std::size_t channels() const { return thresholds.size(); }
  bool fires(std::size_t c, std::int64_t v) const {
    return flip[c] ? v <= thresholds[c] : v >= thresholds[c];
  }
  bool operator==(const ThresholdParams&) const = default;
};

struct FoldResult {
  ThresholdParams params;
  std::vector<std::size_t> zero_gamma_channels;  // folded to constants
};

// sign(BatchNorm(2p - F)) as a popcount threshold: T = ceil((tau + F) / 2)
// for gamma > 0, T = floor((tau + F) / 2) with flip for gamma < 0, where
// tau = mu - beta * sqrt(var + eps) / gamma. Constant channels (including
// gamma == 0) are stored unflipped with T = 0 (always +1) or T = F + 1
// (always -1). Requires fan_in >= 1.
FoldResult fold_batchnorm_to_threshold(const BatchNormParams& bn, int fan_in);

// Same folding for the 8-bit first layer, in the s domain where the real
// accumulator is s / 128.
FoldResult fold_batchnorm_to_integer_threshold(const BatchNormParams& bn, int fan_in);

enum class InputKind : std::uint8_t { kBinary = 0, kInt8 = 1 };

struct CompiledLayer {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  InputKind input_kind = InputKind::kBinary;
  int kernel = 0;
  int stride = 1;
  int in_width = 0, in_height = 0, in_channels = 0;
  int out_width = 0, out_height = 0, out_channels = 0;
  int padded_out_channels = 0;
  int fan_in = 0;
  std::vector<BitTensor> weight_rows;         // one per output channel
  std::optional<ThresholdParams> thresholds;  // absent on the final layer

  bool operator==(const CompiledLayer&) const = default;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct CompiledModel {
  std::string arch_name;
  std::uint32_t version = kModelFormatVersion;
  int num_classes = 4;
  int input_width = 32;
  int input_height = 32;
  int input_channels = 3;
  int input_bits = 8;
  std::vector<CompiledLayer> layers;  // pools included, spec order

  bool operator==(const CompiledModel&) const = default;
};

// Binarizes and packs every weight row and folds every batch-norm + sign
// into thresholds. Zero-gamma channels are reported through `warnings`.
CompiledModel compile_model(const TrainedModel& trained, const NetworkSpec& spec,
                            std::vector<std::string>* warnings = nullptr);

}  // namespace bcop
