#pragma once

// Latent-weight network: binarized forward pass and straight-through
// backward pass over the layer list of a NetworkSpec. Instantiated for
// float (training) and double (finite-difference checks).

#include <cstdint>
#include <span>
#include <vector>

#include "bcop/model.hpp"

namespace bcop {

enum class BnMode {
  kBatchStats,    // training: normalize with the statistics of this batch
  kRunningStats,  // inference: normalize with the stored running statistics
};

enum class Activation {
  kSign,      // sign() forward, clipped straight-through backward
  kHardTanh,  // clip(x, -1, 1) forward: the differentiable surrogate
};

struct ForwardOptions {
  BnMode bn_mode = BnMode::kRunningStats;
  Activation activation = Activation::kSign;
};

// Everything backward() needs. All tensors are batch-major, channels-last;
// indices are spec layer indices.
template <typename T>
struct ForwardTrace {
  std::size_t batch = 0;
  ForwardOptions options;
  std::vector<std::vector<T>> inputs;   // as consumed by layer i
  std::vector<std::vector<T>> pre_bn;   // accumulators A (weighted layers)
  std::vector<std::vector<T>> outputs;  // BN output, pooled value or logits
  std::vector<std::vector<std::uint32_t>> pool_argmax;
  std::vector<std::vector<T>> batch_mean;
  std::vector<std::vector<T>> batch_var;
  std::vector<std::vector<T>> batch_inv_std;
  std::vector<std::vector<T>> effective_weights;  // binarized (or clipped) rows
  ShapeInfo shapes;

  const std::vector<T>& logits() const { return outputs.back(); }
};

template <typename T>
struct Gradients {
  std::vector<std::vector<T>> weights;  // per model layer, latent-weight gradient
  std::vector<std::vector<T>> gamma;
  std::vector<std::vector<T>> beta;
  std::vector<std::vector<T>> outputs;  // dL/d outputs[i], per spec layer
  // dL/d inputs[i] for weighted layers after the first: the gradient with
  // respect to the binarized activation, before the STE mask.
  std::vector<std::vector<T>> inputs;
};

// Maps 8-bit pixels to the first layer's input domain (p - 128) / 128.
std::vector<float> pixels_to_input(std::span<const std::uint8_t> pixels);

// Added to outputs[layer] right after that layer runs; lets gradient
// checks perturb an intermediate representation.
template <typename T>
struct ActivationOffset {
  std::size_t layer = 0;
  std::vector<T> delta;
};

template <typename T>
ForwardTrace<T> forward(const BasicModel<T>& model, std::span<const T> inputs, std::size_t batch,
                        const ForwardOptions& options, const ActivationOffset<T>* offset = nullptr);

template <typename T>
Gradients<T> backward(const BasicModel<T>& model, const ForwardTrace<T>& trace,
                      std::span<const T> dlogits);

// Clipped straight-through estimator: upstream where |latent| <= 1, else 0.
template <typename T>
std::vector<T> ste_backward(std::span<const T> upstream, std::span<const T> latent);

// Mean softmax cross-entropy of scale * logits. Writes dL/dlogits when
// `dlogits` is non-null.
template <typename T>
T cross_entropy(std::span<const T> logits, std::size_t batch, std::size_t classes,
                std::span<const int> labels, T scale, std::vector<T>* dlogits);

// Argmax with ties resolved toward the lowest index.
template <typename T>
int argmax(std::span<const T> values);

// running = momentum * running + (1 - momentum) * batch, biased variance.
void update_running_stats(TrainedModel& model, const ForwardTrace<float>& trace, float momentum);

}  // namespace bcop
