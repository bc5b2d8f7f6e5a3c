#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bcop/netspec.hpp"

namespace bcop {

template <typename T>
struct BasicBatchNorm {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> mean;  // running statistics
  std::vector<T> var;
  T eps = T(1e-5);

  std::size_t channels() const { return gamma.size(); }
};

// Latent (real-valued) parameters of one weighted layer. Weight rows are
// per output channel, fan-in ordered (ky, kx, channel) for conv and by
// flattened (y, x, channel) input index for fc.
template <typename T>
struct BasicLatentLayer {
  std::size_t spec_index = 0;
  int out_channels = 0;
  int fan_in = 0;
  std::vector<T> weights;
  std::optional<BasicBatchNorm<T>> bn;
};

template <typename T>
struct BasicModel {
  NetworkSpec spec;
  std::vector<BasicLatentLayer<T>> layers;  // one per weighted spec layer
  // Positive scale applied to the final logits inside the loss only.
  T logit_scale = T(1);

  template <typename U>
  BasicModel<U> cast() const {
    BasicModel<U> out;
    out.spec = spec;
    out.logit_scale = static_cast<U>(logit_scale);
    for (const auto& l : layers) {
      BasicLatentLayer<U> c;
      c.spec_index = l.spec_index;
      c.out_channels = l.out_channels;
      c.fan_in = l.fan_in;
      c.weights.assign(l.weights.begin(), l.weights.end());
      if (l.bn) {
        BasicBatchNorm<U> bn;
        bn.gamma.assign(l.bn->gamma.begin(), l.bn->gamma.end());
        bn.beta.assign(l.bn->beta.begin(), l.bn->beta.end());
        bn.mean.assign(l.bn->mean.begin(), l.bn->mean.end());
        bn.var.assign(l.bn->var.begin(), l.bn->var.end());
        bn.eps = static_cast<U>(l.bn->eps);
        c.bn = std::move(bn);
      }
      out.layers.push_back(std::move(c));
    }
    return out;
  }
};

using BatchNormParams = BasicBatchNorm<float>;
using LatentLayer = BasicLatentLayer<float>;
using TrainedModel = BasicModel<float>;

// Inference-mode batch norm of accumulator value `a` on channel `c`,
// evaluated in double and rounded to float. The latent forward pass and
// threshold folding both go through this function, so their sign
// decisions agree bit for bit.
float bn_inference(const BatchNormParams& bn, std::size_t c, double a);

// Glorot-uniform latent weights, identity batch norm, deterministic in seed.
TrainedModel init_model(const NetworkSpec& spec, std::uint64_t seed);

// Checks layer count, row lengths and batch-norm widths against the model's NetworkSpec.
void validate_model(const TrainedModel& model);

}  // namespace bcop
