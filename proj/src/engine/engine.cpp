#include "bcop/engine.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "bcop/error.hpp"
#include "bcop/simd/kernels.hpp"

namespace bcop {
namespace {

// XNOR matches of a and b over bits [begin, end).
std::int64_t range_matches(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                           std::size_t begin, std::size_t end) {
  std::int64_t total = 0;
  while (begin < end) {
    const std::size_t w = begin / 64;
    const std::size_t lo = begin % 64;
    const std::size_t hi = std::min<std::size_t>(64, lo + (end - begin));
    std::uint64_t mask = hi == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << hi) - 1);
    mask &= ~std::uint64_t{0} << lo;
    total += std::popcount(~(a[w] ^ b[w]) & mask);
    begin += hi - lo;
  }
  return total;
}

void check_folding(const MvtuConfig& cfg, std::size_t rows, std::size_t fan_in) {
  if (cfg.pe < 1 || cfg.simd < 1) fail(ErrorCode::kInvalidArgument, "mvtu: PE and SIMD must be >= 1");
  if (rows % static_cast<std::size_t>(cfg.pe) != 0) {
    fail(ErrorCode::kInvalidArgument, "mvtu: PE " + std::to_string(cfg.pe) + " does not divide " +
                                          std::to_string(rows) + " output channels");
  }
  if (fan_in % static_cast<std::size_t>(cfg.simd) != 0) {
    fail(ErrorCode::kInvalidArgument, "mvtu: SIMD " + std::to_string(cfg.simd) + " does not divide fan-in " +
                                          std::to_string(fan_in));
  }
}

void check_row(const BitTensor& row, std::size_t fan_in) {
  if (row.bit_len() != fan_in) {
    fail(ErrorCode::kShapeMismatch, "mvtu: weight row of " + std::to_string(row.bit_len()) +
                                        " bits against a window of " + std::to_string(fan_in));
  }
}

// Visits (row, lo, hi) chunks in the order the folded hardware would:
// neuron fold, then synapse fold, PE rows in parallel within each step.
template <typename Chunk>
void folded(const MvtuConfig& cfg, std::size_t rows, std::size_t fan_in, Chunk chunk) {
  const auto pe = static_cast<std::size_t>(cfg.pe);
  const auto simd = static_cast<std::size_t>(cfg.simd);
  for (std::size_t nf = 0; nf < rows / pe; ++nf) {
    for (std::size_t sf = 0; sf < fan_in / simd; ++sf) {
      for (std::size_t p = 0; p < pe; ++p) chunk(nf * pe + p, sf * simd, (sf + 1) * simd);
    }
  }
}

MvtuConfig unfolded(const CompiledLayer& layer) {
  return {static_cast<int>(layer.weight_rows.size()), layer.fan_in};
}

MvtuOutput finish(const CompiledLayer& layer, const std::vector<std::int64_t>& acc, bool binary_input) {
  MvtuOutput out;
  if (layer.thresholds) {
    const ThresholdParams& t = *layer.thresholds;
    if (t.channels() != acc.size()) fail(ErrorCode::kShapeMismatch, "mvtu: threshold count mismatch");
    out.bits = BitTensor::vector(acc.size());
    for (std::size_t c = 0; c < acc.size(); ++c) out.bits.set_bit(c, t.fires(c, acc[c]));
  } else {
    out.values.resize(acc.size());
    for (std::size_t c = 0; c < acc.size(); ++c) {
      out.values[c] = binary_input ? 2 * acc[c] - layer.fan_in : acc[c];
    }
  }
  return out;
}

FeatureStream run_layer(const CompiledLayer& layer, const FeatureStream& in, std::vector<std::int64_t>* logits) {
  if (layer.kind == LayerKind::kMaxPool) return maxpool_or(in, layer.kernel);
  const FeatureStream windows =
      layer.kind == LayerKind::kConv ? sliding_window(in, layer.kernel, layer.stride) : flatten(in);
  const MvtuConfig cfg = unfolded(layer);
  FeatureStream out;
  out.width = windows.width;
  out.height = windows.height;
  out.channels = static_cast<int>(layer.weight_rows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    MvtuOutput r = windows.is_integer() ? mvtu_execute(cfg, layer, windows.ints[i])
                                        : mvtu_execute(cfg, layer, windows.bits[i]);
    if (!layer.thresholds) {
      if (!logits || windows.size() != 1) {
        fail(ErrorCode::kFormat, "layer " + layer.name + " has no thresholds but is not the final classifier");
      }
      *logits = std::move(r.values);
    } else {
      out.bits.push_back(std::move(r.bits));
    }
  }
  return out;
}

}  // namespace

FeatureStream image_stream(const Image& image) {
  FeatureStream s;
  s.width = image.width;
  s.height = image.height;
  s.channels = image.channels;
  const auto c = static_cast<std::size_t>(image.channels);
  s.ints.resize(static_cast<std::size_t>(image.width) * image.height);
  for (std::size_t i = 0; i < s.ints.size(); ++i) {
    s.ints[i].resize(c);
    for (std::size_t k = 0; k < c; ++k) s.ints[i][k] = static_cast<std::int32_t>(image.pixels[i * c + k]) - 128;
  }
  return s;
}

FeatureStream sliding_window(const FeatureStream& in, int kernel, int stride) {
  if (kernel < 1 || stride < 1) fail(ErrorCode::kInvalidArgument, "sliding_window: kernel and stride must be >= 1");
  if (kernel > in.width || kernel > in.height) {
    fail(ErrorCode::kShapeMismatch, "sliding_window: " + std::to_string(kernel) + "x" + std::to_string(kernel) +
                                        " window exceeds " + std::to_string(in.width) + "x" +
                                        std::to_string(in.height) + " input");
  }
  if (in.size() != static_cast<std::size_t>(in.width) * in.height) {
    fail(ErrorCode::kShapeMismatch, "sliding_window: stream length does not match its geometry");
  }
  FeatureStream out;
  out.width = (in.width - kernel) / stride + 1;
  out.height = (in.height - kernel) / stride + 1;
  const auto c = static_cast<std::size_t>(in.channels);
  const std::size_t len = static_cast<std::size_t>(kernel) * kernel * c;
  out.channels = static_cast<int>(len);
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
  if (in.is_integer()) {
    out.ints.reserve(n);
  } else {
    out.bits.reserve(n);
  }
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      std::vector<std::int32_t> iw;
      BitTensor bw;
      if (in.is_integer()) {
        iw.reserve(len);
      } else {
        bw = BitTensor::vector(len);
      }
      std::size_t pos = 0;
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const std::size_t src = static_cast<std::size_t>(oy * stride + ky) * in.width + ox * stride + kx;
          if (in.is_integer()) {
            iw.insert(iw.end(), in.ints[src].begin(), in.ints[src].end());
          } else {
            copy_bits(in.bits[src].words(), 0, bw.mutable_words(), pos, c);
          }
          pos += c;
        }
      }
      if (in.is_integer()) {
        out.ints.push_back(std::move(iw));
      } else {
        out.bits.push_back(std::move(bw));
      }
    }
  }
  return out;
}

FeatureStream flatten(const FeatureStream& in) {
  FeatureStream out;
  out.width = 1;
  out.height = 1;
  const auto c = static_cast<std::size_t>(in.channels);
  const std::size_t len = in.size() * c;
  out.channels = static_cast<int>(len);
  if (in.is_integer()) {
    std::vector<std::int32_t> v;
    v.reserve(len);
    for (const auto& p : in.ints) v.insert(v.end(), p.begin(), p.end());
    out.ints.push_back(std::move(v));
  } else {
    BitTensor v = BitTensor::vector(len);
    for (std::size_t i = 0; i < in.bits.size(); ++i) copy_bits(in.bits[i].words(), 0, v.mutable_words(), i * c, c);
    out.bits.push_back(std::move(v));
  }
  return out;
}

std::vector<std::int64_t> mvtu_accumulate(const MvtuConfig& cfg, std::span<const BitTensor> weights,
                                          const BitTensor& window) {
  const std::size_t fan_in = window.bit_len();
  check_folding(cfg, weights.size(), fan_in);
  for (const auto& row : weights) check_row(row, fan_in);
  std::vector<std::int64_t> acc(weights.size(), 0);
  if (static_cast<std::size_t>(cfg.simd) == fan_in) {
    // One synapse fold: the whole row in a single vectorized popcount.
    for (std::size_t r = 0; r < weights.size(); ++r) {
      acc[r] = static_cast<std::int64_t>(xnor_popcount(weights[r].words(), window.words(), fan_in));
    }
    return acc;
  }
  folded(cfg, weights.size(), fan_in, [&](std::size_t r, std::size_t lo, std::size_t hi) {
    acc[r] += range_matches(weights[r].words(), window.words(), lo, hi);
  });
  return acc;
}

std::vector<std::int64_t> mvtu_accumulate(const MvtuConfig& cfg, std::span<const BitTensor> weights,
                                          std::span<const std::int32_t> window) {
  const std::size_t fan_in = window.size();
  check_folding(cfg, weights.size(), fan_in);
  for (const auto& row : weights) check_row(row, fan_in);
  std::vector<std::int64_t> acc(weights.size(), 0);
  folded(cfg, weights.size(), fan_in, [&](std::size_t r, std::size_t lo, std::size_t hi) {
    std::int64_t s = 0;
    for (std::size_t j = lo; j < hi; ++j) s += weights[r].bit(j) ? window[j] : -window[j];
    acc[r] += s;
  });
  return acc;
}

MvtuOutput mvtu_execute(const MvtuConfig& cfg, const CompiledLayer& layer, const BitTensor& window) {
  return finish(layer, mvtu_accumulate(cfg, layer.weight_rows, window), true);
}

MvtuOutput mvtu_execute(const MvtuConfig& cfg, const CompiledLayer& layer, std::span<const std::int32_t> window) {
  return finish(layer, mvtu_accumulate(cfg, layer.weight_rows, window), false);
}

FeatureStream maxpool_or(const FeatureStream& in, int kernel) {
  if (kernel < 1) fail(ErrorCode::kInvalidArgument, "maxpool_or: kernel must be >= 1");
  if (in.is_integer()) fail(ErrorCode::kInvalidArgument, "maxpool_or: expects a binary stream");
  if (in.width % kernel != 0 || in.height % kernel != 0) {
    fail(ErrorCode::kShapeMismatch, "maxpool_or: " + std::to_string(in.width) + "x" + std::to_string(in.height) +
                                        " is not divisible by " + std::to_string(kernel));
  }
  if (in.bits.size() != static_cast<std::size_t>(in.width) * in.height) {
    fail(ErrorCode::kShapeMismatch, "maxpool_or: stream length does not match its geometry");
  }
  FeatureStream out;
  out.width = in.width / kernel;
  out.height = in.height / kernel;
  out.channels = in.channels;
  out.bits.reserve(static_cast<std::size_t>(out.width) * out.height);
  for (int oy = 0; oy < out.height; ++oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      BitTensor v = BitTensor::vector(static_cast<std::size_t>(in.channels));
      auto dst = v.mutable_words();
      for (int dy = 0; dy < kernel; ++dy) {
        for (int dx = 0; dx < kernel; ++dx) {
          const auto src = in.bits[static_cast<std::size_t>(oy * kernel + dy) * in.width + ox * kernel + dx].words();
          for (std::size_t w = 0; w < dst.size(); ++w) dst[w] |= src[w];
        }
      }
      out.bits.push_back(std::move(v));
    }
  }
  return out;
}

Prediction classify(const CompiledModel& model, const Image& image) {
  if (image.width != model.input_width || image.height != model.input_height ||
      image.channels != model.input_channels ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    fail(ErrorCode::kShapeMismatch, "classify: image is " + std::to_string(image.width) + "x" +
                                        std::to_string(image.height) + "x" + std::to_string(image.channels) +
                                        ", model expects " + std::to_string(model.input_width) + "x" +
                                        std::to_string(model.input_height) + "x" +
                                        std::to_string(model.input_channels));
  }
  FeatureStream s = image_stream(image);
  std::vector<std::int64_t> logits;
  for (const auto& layer : model.layers) s = run_layer(layer, s, &logits);
  if (logits.size() < static_cast<std::size_t>(model.num_classes)) {
    fail(ErrorCode::kFormat, "classify: model produced " + std::to_string(logits.size()) + " logits for " +
                                 std::to_string(model.num_classes) + " classes");
  }
  logits.resize(static_cast<std::size_t>(model.num_classes));
  Prediction p;
  p.label = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[static_cast<std::size_t>(p.label)]) p.label = static_cast<int>(c);
  }
  p.logits = std::move(logits);
  return p;
}

std::vector<Prediction> classify_batch(const CompiledModel& model, std::span<const Image> images) {
  std::vector<Prediction> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(classify(model, img));
  return out;
}

}  // namespace bcop
