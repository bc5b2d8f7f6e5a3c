#pragma once

// Functional execution of a CompiledModel with the accelerator's operator
// semantics: sliding-window reshaping, matrix-vector-threshold units and
// OR-pooling. Values only; timing lives in perfmodel.

#include <cstdint>
#include <span>
#include <vector>

#include "bcop/bit_tensor.hpp"
#include "bcop/compile.hpp"
#include "bcop/data/image.hpp"

namespace bcop {

// PE splits the output channels, SIMD splits the fan-in. Both only change
// how partial popcounts are grouped, never the result.
struct MvtuConfig {
  int pe = 1;
  int simd = 1;
};

// Row-major sequence of per-pixel vectors. Binary streams fill `bits`,
// the 8-bit image stream fills `ints` (pixel - 128).
struct FeatureStream {
  int width = 0;
  int height = 0;
  int channels = 0;  // per-vector length
  std::vector<BitTensor> bits;
  std::vector<std::vector<std::int32_t>> ints;

  bool is_integer() const { return !ints.empty(); }
  std::size_t size() const { return is_integer() ? ints.size() : bits.size(); }
};

FeatureStream image_stream(const Image& image);

// One window vector per output pixel, interior order (ky, kx, channel).
// Throws kShapeMismatch when the window does not fit.
FeatureStream sliding_window(const FeatureStream& input, int kernel, int stride);

// Concatenates all pixel vectors in (y, x, channel) order into one vector.
FeatureStream flatten(const FeatureStream& input);

// Per-channel accumulators: XNOR match count p for binary windows,
// sum((pixel - 128) * w) for integer windows. Throws kInvalidArgument when
// PE does not divide the row count or SIMD does not divide the fan-in.
std::vector<std::int64_t> mvtu_accumulate(const MvtuConfig& cfg, std::span<const BitTensor> weights,
                                          const BitTensor& window);
std::vector<std::int64_t> mvtu_accumulate(const MvtuConfig& cfg, std::span<const BitTensor> weights,
                                          std::span<const std::int32_t> window);

struct MvtuOutput {
  BitTensor bits;                    // thresholded layers
  std::vector<std::int64_t> values;  // final layer: signed +-1 dot products
};

// Accumulate, then threshold to one bit per channel, or return the raw
// signed dot product (2p - F for binary inputs) when the layer has none.
MvtuOutput mvtu_execute(const MvtuConfig& cfg, const CompiledLayer& layer, const BitTensor& window);
MvtuOutput mvtu_execute(const MvtuConfig& cfg, const CompiledLayer& layer,
                        std::span<const std::int32_t> window);

// k x k OR-pool with stride k. Throws kShapeMismatch on extents not
// divisible by k.
FeatureStream maxpool_or(const FeatureStream& input, int kernel = 2);

struct Prediction {
  int label = 0;
  std::vector<std::int64_t> logits;  // num_classes valid logits
};

// Full pipeline. Throws kShapeMismatch if the image geometry differs from
// the model input.
Prediction classify(const CompiledModel& model, const Image& image);
std::vector<Prediction> classify_batch(const CompiledModel& model, std::span<const Image> images);

}  // namespace bcop
