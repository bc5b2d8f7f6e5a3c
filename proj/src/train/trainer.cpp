#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "bcop/error.hpp"
#include "bcop/network.hpp"
#include "bcop/train.hpp"

namespace bcop {

namespace {

constexpr float kBeta1 = 0.9f;
constexpr float kBeta2 = 0.999f;
constexpr float kAdamEps = 1e-8f;

std::size_t image_size(const NetworkSpec& spec) {
  return static_cast<std::size_t>(spec.input_width) * spec.input_height * spec.input_channels;
}

void append_input(const NetworkSpec& spec, const Image& image, std::vector<float>& out) {
  if (image.width != spec.input_width || image.height != spec.input_height ||
      image.channels != spec.input_channels) {
    fail(ErrorCode::kShapeMismatch, "image is " + std::to_string(image.width) + "x" +
                                        std::to_string(image.height) + "x" + std::to_string(image.channels) +
                                        ", network expects " + std::to_string(spec.input_width) + "x" +
                                        std::to_string(spec.input_height) + "x" +
                                        std::to_string(spec.input_channels));
  }
  const auto x = pixels_to_input(image.pixels);
  out.insert(out.end(), x.begin(), x.end());
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0f) || !(bn_momentum > 0.0f) ||
      !(bn_momentum < 1.0f)) {
    fail(ErrorCode::kInvalidArgument, "train config: epochs, batch size and learning rate must be positive");
  }
}

Trainer::Trainer(TrainedModel model, TrainConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  config_.validate();
  validate_model(model_);
  for (const auto& l : model_.layers) {
    weight_state_.push_back({std::vector<float>(l.weights.size()), std::vector<float>(l.weights.size())});
    const std::size_t bn = l.bn ? l.bn->channels() : 0;
    gamma_state_.push_back({std::vector<float>(bn), std::vector<float>(bn)});
    beta_state_.push_back({std::vector<float>(bn), std::vector<float>(bn)});
  }
}

void Trainer::adam(std::vector<float>& param, const std::vector<float>& grad, Moments& s) const {
  const double t = static_cast<double>(step_);
  const auto c1 = static_cast<float>(1.0 - std::pow(static_cast<double>(kBeta1), t));
  const auto c2 = static_cast<float>(1.0 - std::pow(static_cast<double>(kBeta2), t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    s.m[i] = kBeta1 * s.m[i] + (1.0f - kBeta1) * grad[i];
    s.v[i] = kBeta2 * s.v[i] + (1.0f - kBeta2) * grad[i] * grad[i];
    const float mhat = s.m[i] / c1;
    const float vhat = s.v[i] / c2;
    param[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
  }
}

double Trainer::train_step(std::span<const float> inputs, std::span<const int> labels) {
  const std::size_t batch = labels.size();
  const ForwardTrace<float> trace =
      forward<float>(model_, inputs, batch, {BnMode::kBatchStats, Activation::kSign});
  const auto classes = static_cast<std::size_t>(model_.spec.num_classes);
  std::vector<float> dlogits;
  const float loss = cross_entropy<float>(trace.logits(), batch, classes, labels, model_.logit_scale, &dlogits);
  const Gradients<float> grads = backward<float>(model_, trace, dlogits);

  std::size_t correct = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const std::span<const float> row(trace.logits().data() + b * classes, classes);
    if (argmax(row) == labels[b]) ++correct;
  }
  last_accuracy_ = static_cast<double>(correct) / static_cast<double>(batch);

  ++step_;
  for (std::size_t k = 0; k < model_.layers.size(); ++k) {
    auto& layer = model_.layers[k];
    adam(layer.weights, grads.weights[k], weight_state_[k]);
    for (auto& w : layer.weights) w = std::clamp(w, -1.0f, 1.0f);
    if (layer.bn) {
      adam(layer.bn->gamma, grads.gamma[k], gamma_state_[k]);
      adam(layer.bn->beta, grads.beta[k], beta_state_[k]);
    }
  }
  update_running_stats(model_, trace, config_.bn_momentum);
  return loss;
}

EpochMetrics Trainer::train_epoch(const Dataset& data) {
  if (data.size() == 0) fail(ErrorCode::kEmptyDataset, "train_epoch: dataset is empty");
  if (data.labels.size() != data.images.size()) {
    fail(ErrorCode::kShapeMismatch, "train_epoch: label count differs from image count");
  }
  const auto epoch_seed = derive_seed(config_.seed, static_cast<std::uint64_t>(epoch_));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);

  EpochMetrics metrics;
  double loss_sum = 0.0;
  double correct = 0.0;
  const auto bs = static_cast<std::size_t>(config_.batch_size);
  std::vector<float> inputs;
  std::vector<int> labels;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t end = std::min(order.size(), start + bs);
    inputs.clear();
    labels.clear();
    inputs.reserve((end - start) * image_size(model_.spec));
    for (std::size_t j = start; j < end; ++j) {
      const std::size_t idx = order[j];
      if (config_.augment) {
        append_input(model_.spec, augment(data.images[idx], derive_seed(epoch_seed, idx), config_.augment_config),
                     inputs);
      } else {
        append_input(model_.spec, data.images[idx], inputs);
      }
      labels.push_back(data.labels[idx]);
    }
    const double loss = train_step(inputs, labels);
    loss_sum += loss * static_cast<double>(labels.size());
    correct += last_accuracy_ * static_cast<double>(labels.size());
  }
  ++epoch_;
  metrics.samples = order.size();
  metrics.loss = loss_sum / static_cast<double>(order.size());
  metrics.accuracy = correct / static_cast<double>(order.size());
  return metrics;
}

std::vector<float> latent_logits(const TrainedModel& model, const Image& image) {
  std::vector<float> inputs;
  append_input(model.spec, image, inputs);
  const auto trace = forward<float>(model, inputs, 1, {BnMode::kRunningStats, Activation::kSign});
  return trace.logits();
}

int latent_predict(const TrainedModel& model, const Image& image) {
  const auto logits = latent_logits(model, image);
  return argmax<float>(logits);
}

double evaluate_accuracy(const TrainedModel& model, const Dataset& data, ConfusionMatrix* confusion) {
  if (data.size() == 0) fail(ErrorCode::kEmptyDataset, "evaluate: dataset is empty");
  constexpr std::size_t kChunk = 64;
  const auto classes = static_cast<std::size_t>(model.spec.num_classes);
  std::size_t correct = 0;
  std::vector<float> inputs;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t end = std::min(data.size(), start + kChunk);
    inputs.clear();
    for (std::size_t i = start; i < end; ++i) append_input(model.spec, data.images[i], inputs);
    const auto trace = forward<float>(model, inputs, end - start, {BnMode::kRunningStats, Activation::kSign});
    for (std::size_t i = start; i < end; ++i) {
      const std::span<const float> row(trace.logits().data() + (i - start) * classes, classes);
      const int pred = argmax(row);
      if (pred == data.labels[i]) ++correct;
      if (confusion) confusion->add(data.labels[i], pred);
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace bcop
