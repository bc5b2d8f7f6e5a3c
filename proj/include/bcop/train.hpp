#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bcop/data/augment.hpp"
#include "bcop/data/image.hpp"
#include "bcop/data/metrics.hpp"
#include "bcop/model.hpp"

namespace bcop {

struct TrainConfig {
  int epochs = 1;
  int batch_size = 64;
  float learning_rate = 1e-3f;
  std::uint64_t seed = 1;
  bool augment = false;
  AugmentConfig augment_config;
  float bn_momentum = 0.9f;

  void validate() const;
};

struct EpochMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t samples = 0;
};

// Adam on the latent weights and batch-norm affine parameters, with
// latent weights clipped to [-1, 1] after every step.
class Trainer {
 public:
  Trainer(TrainedModel model, TrainConfig config);

  // One pass over `data` in a seed-determined order. Throws
  // kEmptyDataset when `data` is empty.
  EpochMetrics train_epoch(const Dataset& data);

  // One optimizer step on an explicit batch; returns the batch loss.
  double train_step(std::span<const float> inputs, std::span<const int> labels);

  const TrainedModel& model() const { return model_; }
  TrainedModel& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  int epochs_done() const { return epoch_; }

 private:
  struct Moments {
    std::vector<float> m;
    std::vector<float> v;
  };
  void adam(std::vector<float>& param, const std::vector<float>& grad, Moments& state) const;

  TrainedModel model_;
  TrainConfig config_;
  std::vector<Moments> weight_state_;
  std::vector<Moments> gamma_state_;
  std::vector<Moments> beta_state_;
  std::uint64_t step_ = 0;
  int epoch_ = 0;
  double last_accuracy_ = 0.0;
};

// Latent-model inference (running statistics): raw logits per image.
std::vector<float> latent_logits(const TrainedModel& model, const Image& image);
int latent_predict(const TrainedModel& model, const Image& image);

// Batched running-statistics evaluation. Fills `confusion` when given.
double evaluate_accuracy(const TrainedModel& model, const Dataset& data,
                         ConfusionMatrix* confusion = nullptr);

}  // namespace bcop
