#include <cmath>
#include <random>
#include <string>

#include "bcop/error.hpp"
#include "bcop/model.hpp"

namespace bcop {

float bn_inference(const BatchNormParams& bn, std::size_t c, double a) {
  const double inv_std = 1.0 / std::sqrt(static_cast<double>(bn.var[c]) + static_cast<double>(bn.eps));
  const double y = (a - static_cast<double>(bn.mean[c])) * inv_std * static_cast<double>(bn.gamma[c]) +
                   static_cast<double>(bn.beta[c]);
  return static_cast<float>(y);
}

TrainedModel init_model(const NetworkSpec& spec, std::uint64_t seed) {
  const ShapeInfo shapes = infer_shapes(spec);
  TrainedModel model;
  model.spec = spec;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& ls = spec.layers[i];
    if (!ls.weighted()) continue;
    const LayerShape& s = shapes.layers[i];
    LatentLayer layer;
    layer.spec_index = i;
    layer.out_channels = s.out_channels;
    layer.fan_in = s.fan_in;
    const double limit = std::sqrt(6.0 / (s.fan_in + s.out_channels));
    std::uniform_real_distribution<double> dist(-limit, limit);
    layer.weights.resize(static_cast<std::size_t>(s.fan_in) * s.out_channels);
    for (auto& w : layer.weights) w = static_cast<float>(dist(rng));
    if (ls.has_bn_sign) {
      BatchNormParams bn;
      const auto n = static_cast<std::size_t>(s.out_channels);
      bn.gamma.assign(n, 1.0f);
      bn.beta.assign(n, 0.0f);
      bn.mean.assign(n, 0.0f);
      bn.var.assign(n, 1.0f);
      layer.bn = std::move(bn);
    }
    model.layers.push_back(std::move(layer));
  }
  if (!model.layers.empty()) {
    model.logit_scale = static_cast<float>(1.0 / std::sqrt(static_cast<double>(model.layers.back().fan_in)));
  }
  return model;
}

void validate_model(const TrainedModel& model) {
  const ShapeInfo shapes = infer_shapes(model.spec);
  const auto weighted = model.spec.weighted_layers();
  if (weighted.size() != model.layers.size()) {
    fail(ErrorCode::kShapeMismatch, "model has " + std::to_string(model.layers.size()) +
                                        " weighted layers, spec '" + model.spec.arch_name +
                                        "' has " + std::to_string(weighted.size()));
  }
  for (std::size_t k = 0; k < weighted.size(); ++k) {
    const LatentLayer& l = model.layers[k];
    const std::size_t i = weighted[k];
    const LayerShape& s = shapes.layers[i];
    const std::string name = model.spec.layers[i].name;
    if (l.spec_index != i || l.out_channels != s.out_channels || l.fan_in != s.fan_in ||
        l.weights.size() != static_cast<std::size_t>(s.out_channels) * s.fan_in) {
      fail(ErrorCode::kShapeMismatch, "layer " + name + ": weight shape does not match spec");
    }
    if (l.bn.has_value() != model.spec.layers[i].has_bn_sign) {
      fail(ErrorCode::kShapeMismatch, "layer " + name + ": batch-norm presence does not match spec");
    }
    if (l.bn) {
      const auto n = static_cast<std::size_t>(s.out_channels);
      if (l.bn->gamma.size() != n || l.bn->beta.size() != n || l.bn->mean.size() != n ||
          l.bn->var.size() != n) {
        fail(ErrorCode::kShapeMismatch, "layer " + name + ": batch-norm width mismatch");
      }
    }
  }
}

}  // namespace bcop
