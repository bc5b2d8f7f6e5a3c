#include "bcop/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bcop/error.hpp"
#include "bcop/network.hpp"

namespace bcop {

std::vector<double> Heatmap::normalized() const {
  std::vector<double> out(upsampled.size(), 0.0);
  if (norm_max > 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = upsampled[i] / norm_max;
  }
  return out;
}

std::size_t gradcam_target_layer(const NetworkSpec& spec) {
  int pools = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == LayerKind::kMaxPool && ++pools == 2) return i;
  }
  fail(ErrorCode::kShapeMismatch, "grad-cam: " + spec.arch_name + " has no second pooling layer");
}

std::vector<double> bilinear_upsample(std::span<const double> src, int src_w, int src_h, int dst_w, int dst_h) {
  if (src_w < 1 || src_h < 1 || dst_w < 1 || dst_h < 1 ||
      src.size() != static_cast<std::size_t>(src_w) * src_h) {
    fail(ErrorCode::kInvalidArgument, "bilinear_upsample: bad geometry");
  }
  auto coord = [](int d, int src_n, int dst_n, int& i0, int& i1, double& f) {
    double s = (d + 0.5) * src_n / dst_n - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, src_n - 1);
    f = s - i0;
  };
  std::vector<double> out(static_cast<std::size_t>(dst_w) * dst_h);
  for (int y = 0; y < dst_h; ++y) {
    int y0, y1;
    double fy;
    coord(y, src_h, dst_h, y0, y1, fy);
    for (int x = 0; x < dst_w; ++x) {
      int x0, x1;
      double fx;
      coord(x, src_w, dst_w, x0, x1, fx);
      auto at = [&](int yy, int xx) { return src[static_cast<std::size_t>(yy) * src_w + xx]; };
      const double top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
      const double bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
      out[static_cast<std::size_t>(y) * dst_w + x] = top * (1.0 - fy) + bottom * fy;
    }
  }
  return out;
}

Heatmap heatmap_from(std::span<const double> act, std::span<const double> grad, int w, int h, int c,
                     int target_class, int out_w, int out_h) {
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (w < 1 || h < 1 || c < 1 || act.size() != n * c || grad.size() != n * c) {
    fail(ErrorCode::kShapeMismatch, "grad-cam: activation and gradient maps must both be " + std::to_string(w) +
                                        "x" + std::to_string(h) + "x" + std::to_string(c));
  }
  std::vector<double> weight(static_cast<std::size_t>(c), 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    for (int k = 0; k < c; ++k) weight[k] += grad[p * c + k];
  }
  for (auto& v : weight) v /= static_cast<double>(n);

  Heatmap hm;
  hm.target_class = target_class;
  hm.raw_width = w;
  hm.raw_height = h;
  hm.raw.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += weight[k] * act[p * c + k];
    hm.raw[p] = std::max(s, 0.0);
  }
  hm.width = out_w;
  hm.height = out_h;
  hm.upsampled = bilinear_upsample(hm.raw, w, h, out_w, out_h);
  hm.norm_max = *std::max_element(hm.upsampled.begin(), hm.upsampled.end());
  return hm;
}

Heatmap grad_cam(const TrainedModel& model, const Image& image, int class_id) {
  const NetworkSpec& spec = model.spec;
  if (class_id < 0 || class_id >= spec.num_classes) {
    fail(ErrorCode::kInvalidArgument, "grad-cam: class " + std::to_string(class_id) + " outside [0, " +
                                          std::to_string(spec.num_classes) + ")");
  }
  if (image.width != spec.input_width || image.height != spec.input_height ||
      image.channels != spec.input_channels) {
    fail(ErrorCode::kShapeMismatch, "grad-cam: image geometry does not match the model input");
  }
  const std::size_t target = gradcam_target_layer(spec);
  const std::vector<float> input = pixels_to_input(image.pixels);
  const ForwardOptions opts{BnMode::kRunningStats, Activation::kSign};
  const ForwardTrace<float> tr = forward<float>(model, input, 1, opts);
  std::vector<float> dlogits(tr.logits().size(), 0.0f);
  dlogits[static_cast<std::size_t>(class_id)] = 1.0f;
  const Gradients<float> g = backward<float>(model, tr, dlogits);

  const LayerShape& s = tr.shapes.layers[target];
  const std::vector<double> act(tr.outputs[target].begin(), tr.outputs[target].end());
  const std::vector<double> grad(g.outputs[target].begin(), g.outputs[target].end());
  return heatmap_from(act, grad, s.out_width, s.out_height, s.out_channels, class_id, spec.input_width,
                      spec.input_height);
}

double quadrant_mass_fraction(const Heatmap& hm, int quadrant) {
  if (quadrant < 0 || quadrant > 3) fail(ErrorCode::kInvalidArgument, "quadrant must be in [0, 3]");
  const int half_w = hm.width / 2;
  const int half_h = hm.height / 2;
  const int qx = quadrant % 2;
  const int qy = quadrant / 2;
  double total = 0.0;
  double inside = 0.0;
  for (int y = 0; y < hm.height; ++y) {
    for (int x = 0; x < hm.width; ++x) {
      const double v = hm.upsampled[static_cast<std::size_t>(y) * hm.width + x];
      total += v;
      if ((x >= half_w) == (qx == 1) && (y >= half_h) == (qy == 1)) inside += v;
    }
  }
  return total > 0.0 ? inside / total : 0.0;
}

std::array<std::uint8_t, 3> jet_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto channel = [t](double centre) {
    const double v = std::clamp(1.5 - std::abs(4.0 * t - centre), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
  };
  return {channel(3.0), channel(2.0), channel(1.0)};
}

Image overlay(const Heatmap& hm, const Image& image, double alpha) {
  if (image.width != hm.width || image.height != hm.height || image.channels != 3) {
    fail(ErrorCode::kShapeMismatch, "overlay: heatmap is " + std::to_string(hm.width) + "x" +
                                        std::to_string(hm.height) + ", image is " + std::to_string(image.width) +
                                        "x" + std::to_string(image.height) + "x" +
                                        std::to_string(image.channels));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::kInvalidArgument, "overlay: alpha must be in [0, 1]");
  const std::vector<double> norm = hm.normalized();
  Image out(image.width, image.height, 3);
  for (std::size_t p = 0; p < norm.size(); ++p) {
    const auto col = jet_color(norm[p]);
    for (std::size_t k = 0; k < 3; ++k) {
      const double v = alpha * col[k] + (1.0 - alpha) * image.pixels[p * 3 + k];
      out.pixels[p * 3 + k] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
    }
  }
  return out;
}

void write_overlay(const Heatmap& hm, const Image& image, const std::filesystem::path& path, double alpha) {
  save_image(overlay(hm, image, alpha), path);
}

}  // namespace bcop
