#include "bcop/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "bcop/error.hpp"
#include "bcop/simd/kernels.hpp"

namespace bcop {
namespace {

// C[MxN] += A[MxK] * B[KxN]
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc) {
  if constexpr (std::is_same_v<T, float>) {
    simd::active().gemm(m, n, k, a, lda, b, ldb, c, ldc);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const T av = a[i * lda + p];
        for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] += av * b[p * ldb + j];
      }
    }
  }
}

template <typename T>
void transpose(const T* src, std::size_t rows, std::size_t cols, T* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

template <typename T>
T activate(T y, Activation act) {
  if (act == Activation::kSign) return y >= T(0) ? T(1) : T(-1);
  return std::clamp(y, T(-1), T(1));
}

template <typename T>
bool ste_pass(T x) {
  return std::abs(x) <= T(1);
}

// Window rows in (ky, kx, channel) order, one row per output pixel.
template <typename T>
void im2col(const T* in, const LayerSpec& ls, const LayerShape& s, T* col) {
  const int k = ls.kernel;
  const int c = s.in_channels;
  const std::size_t row_len = static_cast<std::size_t>(k) * k * c;
  for (int oy = 0; oy < s.out_height; ++oy) {
    for (int ox = 0; ox < s.out_width; ++ox) {
      T* row = col + (static_cast<std::size_t>(oy) * s.out_width + ox) * row_len;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * ls.stride + ky;
        const T* src = in + (static_cast<std::size_t>(iy) * s.in_width + ox * ls.stride) * c;
        std::copy(src, src + static_cast<std::size_t>(k) * c, row + static_cast<std::size_t>(ky) * k * c);
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const LayerSpec& ls, const LayerShape& s, T* in) {
  const int k = ls.kernel;
  const int c = s.in_channels;
  const std::size_t row_len = static_cast<std::size_t>(k) * k * c;
  for (int oy = 0; oy < s.out_height; ++oy) {
    for (int ox = 0; ox < s.out_width; ++ox) {
      const T* row = col + (static_cast<std::size_t>(oy) * s.out_width + ox) * row_len;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * ls.stride + ky;
        T* dst = in + (static_cast<std::size_t>(iy) * s.in_width + ox * ls.stride) * c;
        const T* src = row + static_cast<std::size_t>(ky) * k * c;
        for (std::size_t j = 0; j < static_cast<std::size_t>(k) * c; ++j) dst[j] += src[j];
      }
    }
  }
}

std::size_t in_size(const LayerShape& s) {
  return static_cast<std::size_t>(s.in_width) * s.in_height * s.in_channels;
}

std::size_t out_size(const LayerShape& s) {
  return static_cast<std::size_t>(s.out_width) * s.out_height * s.out_channels;
}

}  // namespace

std::vector<float> pixels_to_input(std::span<const std::uint8_t> pixels) {
  std::vector<float> out(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    out[i] = static_cast<float>(static_cast<int>(pixels[i]) - 128) / 128.0f;
  }
  return out;
}

template <typename T>
ForwardTrace<T> forward(const BasicModel<T>& model, std::span<const T> inputs, std::size_t batch,
                        const ForwardOptions& options, const ActivationOffset<T>* offset) {
  const NetworkSpec& spec = model.spec;
  ForwardTrace<T> tr;
  tr.batch = batch;
  tr.options = options;
  tr.shapes = infer_shapes(spec);
  const std::size_t n_layers = spec.layers.size();
  const std::size_t image_size = static_cast<std::size_t>(spec.input_width) * spec.input_height *
                                 spec.input_channels;
  if (inputs.size() != image_size * batch) {
    fail(ErrorCode::kShapeMismatch, "forward: expected " + std::to_string(batch) + " x " +
                                        std::to_string(image_size) + " inputs, got " +
                                        std::to_string(inputs.size()));
  }
  if (model.layers.size() != spec.weighted_layers().size()) {
    fail(ErrorCode::kShapeMismatch, "forward: model does not match its spec");
  }
  tr.inputs.resize(n_layers);
  tr.pre_bn.resize(n_layers);
  tr.outputs.resize(n_layers);
  tr.pool_argmax.resize(n_layers);
  tr.batch_mean.resize(n_layers);
  tr.batch_var.resize(n_layers);
  tr.batch_inv_std.resize(n_layers);
  tr.effective_weights.resize(n_layers);

  auto apply_offset = [&](std::size_t i) {
    if (!offset || offset->layer != i) return;
    auto& out = tr.outputs[i];
    if (offset->delta.size() != out.size()) fail(ErrorCode::kShapeMismatch, "forward: offset has wrong length");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += offset->delta[j];
  };
  std::size_t model_idx = 0;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const LayerSpec& ls = spec.layers[i];
    const LayerShape& s = tr.shapes.layers[i];
    const std::size_t isz = in_size(s);
    const std::size_t osz = out_size(s);

    if (i == 0) {
      tr.inputs[i].assign(inputs.begin(), inputs.end());
    } else if (ls.weighted()) {
      const auto& prev = tr.outputs[i - 1];
      tr.inputs[i].resize(prev.size());
      for (std::size_t j = 0; j < prev.size(); ++j) tr.inputs[i][j] = activate(prev[j], options.activation);
    } else {
      tr.inputs[i] = tr.outputs[i - 1];
    }

    if (ls.kind == LayerKind::kMaxPool) {
      const int k = ls.kernel;
      auto& out = tr.outputs[i];
      auto& arg = tr.pool_argmax[i];
      out.assign(batch * osz, T(0));
      arg.assign(batch * osz, 0);
      for (std::size_t b = 0; b < batch; ++b) {
        const T* in = tr.inputs[i].data() + b * isz;
        for (int oy = 0; oy < s.out_height; ++oy) {
          for (int ox = 0; ox < s.out_width; ++ox) {
            for (int c = 0; c < s.out_channels; ++c) {
              std::size_t best = (static_cast<std::size_t>(oy * k) * s.in_width + ox * k) * s.in_channels + c;
              for (int dy = 0; dy < k; ++dy) {
                for (int dx = 0; dx < k; ++dx) {
                  const std::size_t idx =
                      (static_cast<std::size_t>(oy * k + dy) * s.in_width + ox * k + dx) * s.in_channels + c;
                  if (in[idx] > in[best]) best = idx;
                }
              }
              const std::size_t o = b * osz + (static_cast<std::size_t>(oy) * s.out_width + ox) * s.out_channels + c;
              out[o] = in[best];
              arg[o] = static_cast<std::uint32_t>(best);
            }
          }
        }
      }
      apply_offset(i);
      continue;
    }

    const BasicLatentLayer<T>& layer = model.layers[model_idx++];
    const auto co = static_cast<std::size_t>(s.out_channels);
    const auto fan = static_cast<std::size_t>(s.fan_in);
    const auto pix = static_cast<std::size_t>(s.output_pixels);

    auto& weff = tr.effective_weights[i];
    weff.resize(layer.weights.size());
    for (std::size_t j = 0; j < weff.size(); ++j) weff[j] = activate(layer.weights[j], options.activation);
    std::vector<T> weff_t(weff.size());
    transpose(weff.data(), co, fan, weff_t.data());

    auto& acc = tr.pre_bn[i];
    acc.assign(batch * pix * co, T(0));
    std::vector<T> col(ls.kind == LayerKind::kConv ? pix * fan : 0);
    for (std::size_t b = 0; b < batch; ++b) {
      const T* in = tr.inputs[i].data() + b * isz;
      const T* rows = in;
      if (ls.kind == LayerKind::kConv) {
        im2col(in, ls, s, col.data());
        rows = col.data();
      }
      gemm(pix, co, fan, rows, fan, weff_t.data(), co, acc.data() + b * pix * co, co);
    }

    auto& out = tr.outputs[i];
    if (!layer.bn) {
      out = acc;
    } else {
      const auto& bn = *layer.bn;
      out.resize(acc.size());
      const std::size_t count = batch * pix;
      if (options.bn_mode == BnMode::kBatchStats) {
        auto& mean = tr.batch_mean[i];
        auto& var = tr.batch_var[i];
        auto& inv = tr.batch_inv_std[i];
        mean.assign(co, T(0));
        var.assign(co, T(0));
        inv.assign(co, T(0));
        std::vector<double> sum(co, 0.0);
        std::vector<double> sq(co, 0.0);
        for (std::size_t r = 0; r < count; ++r) {
          for (std::size_t c = 0; c < co; ++c) sum[c] += static_cast<double>(acc[r * co + c]);
        }
        for (std::size_t c = 0; c < co; ++c) sum[c] /= static_cast<double>(count);
        for (std::size_t r = 0; r < count; ++r) {
          for (std::size_t c = 0; c < co; ++c) {
            const double d = static_cast<double>(acc[r * co + c]) - sum[c];
            sq[c] += d * d;
          }
        }
        for (std::size_t c = 0; c < co; ++c) {
          mean[c] = static_cast<T>(sum[c]);
          var[c] = static_cast<T>(sq[c] / static_cast<double>(count));
          inv[c] = static_cast<T>(1.0 / std::sqrt(sq[c] / static_cast<double>(count) +
                                                  static_cast<double>(bn.eps)));
        }
        for (std::size_t r = 0; r < count; ++r) {
          for (std::size_t c = 0; c < co; ++c) {
            const std::size_t j = r * co + c;
            out[j] = (acc[j] - mean[c]) * inv[c] * bn.gamma[c] + bn.beta[c];
          }
        }
      } else if constexpr (std::is_same_v<T, float>) {
        for (std::size_t r = 0; r < count; ++r) {
          for (std::size_t c = 0; c < co; ++c) {
            out[r * co + c] = bn_inference(bn, c, static_cast<double>(acc[r * co + c]));
          }
        }
      } else {
        for (std::size_t c = 0; c < co; ++c) {
          const T inv = T(1) / std::sqrt(bn.var[c] + bn.eps);
          for (std::size_t r = 0; r < count; ++r) {
            const std::size_t j = r * co + c;
            out[j] = (acc[j] - bn.mean[c]) * inv * bn.gamma[c] + bn.beta[c];
          }
        }
      }
    }
    apply_offset(i);
  }
  return tr;
}

template <typename T>
Gradients<T> backward(const BasicModel<T>& model, const ForwardTrace<T>& tr,
                      std::span<const T> dlogits) {
  const NetworkSpec& spec = model.spec;
  const std::size_t n_layers = spec.layers.size();
  const std::size_t batch = tr.batch;
  if (dlogits.size() != tr.outputs.back().size()) {
    fail(ErrorCode::kShapeMismatch, "backward: logit gradient has wrong length");
  }
  Gradients<T> g;
  g.weights.resize(model.layers.size());
  g.gamma.resize(model.layers.size());
  g.beta.resize(model.layers.size());
  g.outputs.resize(n_layers);
  g.inputs.resize(n_layers);
  g.outputs[n_layers - 1].assign(dlogits.begin(), dlogits.end());

  const auto weighted = spec.weighted_layers();
  const std::size_t first = weighted.empty() ? n_layers : weighted.front();
  std::size_t model_idx = model.layers.size();

  for (std::size_t i = n_layers; i-- > 0;) {
    const LayerSpec& ls = spec.layers[i];
    const LayerShape& s = tr.shapes.layers[i];
    const std::size_t isz = in_size(s);
    const auto& dout = g.outputs[i];

    if (ls.kind == LayerKind::kMaxPool) {
      if (i == 0) break;
      auto& din = g.outputs[i - 1];
      din.assign(batch * isz, T(0));
      const std::size_t osz = out_size(s);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < osz; ++o) {
          din[b * isz + tr.pool_argmax[i][b * osz + o]] += dout[b * osz + o];
        }
      }
      continue;
    }

    const BasicLatentLayer<T>& layer = model.layers[--model_idx];
    const auto co = static_cast<std::size_t>(s.out_channels);
    const auto fan = static_cast<std::size_t>(s.fan_in);
    const auto pix = static_cast<std::size_t>(s.output_pixels);
    const std::size_t count = batch * pix;
    const auto& acc = tr.pre_bn[i];

    std::vector<T> da(dout.size());
    if (!layer.bn) {
      da = dout;
    } else {
      const auto& bn = *layer.bn;
      auto& dgamma = g.gamma[model_idx];
      auto& dbeta = g.beta[model_idx];
      dgamma.assign(co, T(0));
      dbeta.assign(co, T(0));
      std::vector<T> mean(co);
      std::vector<T> inv(co);
      if (tr.options.bn_mode == BnMode::kBatchStats) {
        mean = tr.batch_mean[i];
        inv = tr.batch_inv_std[i];
      } else {
        for (std::size_t c = 0; c < co; ++c) {
          mean[c] = bn.mean[c];
          inv[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(bn.var[c]) + static_cast<double>(bn.eps)));
        }
      }
      std::vector<double> sum_dxhat(co, 0.0);
      std::vector<double> sum_dxhat_xhat(co, 0.0);
      for (std::size_t r = 0; r < count; ++r) {
        for (std::size_t c = 0; c < co; ++c) {
          const std::size_t j = r * co + c;
          const T xhat = (acc[j] - mean[c]) * inv[c];
          dgamma[c] += dout[j] * xhat;
          dbeta[c] += dout[j];
          const T dxhat = dout[j] * bn.gamma[c];
          sum_dxhat[c] += static_cast<double>(dxhat);
          sum_dxhat_xhat[c] += static_cast<double>(dxhat * xhat);
        }
      }
      if (tr.options.bn_mode == BnMode::kBatchStats) {
        const T n = static_cast<T>(count);
        for (std::size_t r = 0; r < count; ++r) {
          for (std::size_t c = 0; c < co; ++c) {
            const std::size_t j = r * co + c;
            const T xhat = (acc[j] - mean[c]) * inv[c];
            const T dxhat = dout[j] * bn.gamma[c];
            da[j] = inv[c] / n *
                    (n * dxhat - static_cast<T>(sum_dxhat[c]) - xhat * static_cast<T>(sum_dxhat_xhat[c]));
          }
        }
      } else {
        for (std::size_t r = 0; r < count; ++r) {
          for (std::size_t c = 0; c < co; ++c) da[r * co + c] = dout[r * co + c] * bn.gamma[c] * inv[c];
        }
      }
    }

    // dWeff[co x fan] += dA^T[co x pix] * rows[pix x fan], per sample.
    std::vector<T> dweff(co * fan, T(0));
    std::vector<T> da_t(co * pix);
    std::vector<T> col(ls.kind == LayerKind::kConv ? pix * fan : 0);
    const bool need_input_grad = i != first;
    std::vector<T> dcol(need_input_grad ? pix * fan : 0);
    if (need_input_grad) g.outputs[i - 1].assign(batch * isz, T(0));
    const auto& weff = tr.effective_weights[i];
    for (std::size_t b = 0; b < batch; ++b) {
      const T* in = tr.inputs[i].data() + b * isz;
      const T* rows = in;
      if (ls.kind == LayerKind::kConv) {
        im2col(in, ls, s, col.data());
        rows = col.data();
      }
      const T* da_b = da.data() + b * pix * co;
      transpose(da_b, pix, co, da_t.data());
      gemm(co, fan, pix, da_t.data(), pix, rows, fan, dweff.data(), fan);
      if (need_input_grad) {
        std::fill(dcol.begin(), dcol.end(), T(0));
        gemm(pix, fan, co, da_b, co, weff.data(), fan, dcol.data(), fan);
        T* din = g.outputs[i - 1].data() + b * isz;
        if (ls.kind == LayerKind::kConv) {
          col2im_add(dcol.data(), ls, s, din);
        } else {
          for (std::size_t j = 0; j < fan; ++j) din[j] += dcol[j];
        }
      }
    }
    auto& dw = g.weights[model_idx];
    dw.resize(dweff.size());
    for (std::size_t j = 0; j < dw.size(); ++j) dw[j] = ste_pass(layer.weights[j]) ? dweff[j] : T(0);

    if (need_input_grad) {
      // Through the binarization applied to the previous layer's output.
      auto& din = g.outputs[i - 1];
      g.inputs[i] = din;
      const auto& prev = tr.outputs[i - 1];
      for (std::size_t j = 0; j < din.size(); ++j) {
        if (!ste_pass(prev[j])) din[j] = T(0);
      }
    }
    if (i == first) break;
  }
  return g;
}

template <typename T>
std::vector<T> ste_backward(std::span<const T> upstream, std::span<const T> latent) {
  if (upstream.size() != latent.size()) {
    fail(ErrorCode::kShapeMismatch, "ste_backward: gradient and latent lengths differ");
  }
  std::vector<T> out(upstream.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ste_pass(latent[i]) ? upstream[i] : T(0);
  return out;
}

template <typename T>
T cross_entropy(std::span<const T> logits, std::size_t batch, std::size_t classes,
                std::span<const int> labels, T scale, std::vector<T>* dlogits) {
  if (logits.size() != batch * classes || labels.size() != batch) {
    fail(ErrorCode::kShapeMismatch, "cross_entropy: logits/labels do not match batch");
  }
  if (dlogits) dlogits->assign(logits.size(), T(0));
  double total = 0.0;
  std::vector<double> p(classes);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* z = logits.data() + b * classes;
    double mx = static_cast<double>(scale * z[0]);
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, static_cast<double>(scale * z[c]));
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      p[c] = std::exp(static_cast<double>(scale * z[c]) - mx);
      denom += p[c];
    }
    const auto label = static_cast<std::size_t>(labels[b]);
    total += -(static_cast<double>(scale * z[label]) - mx - std::log(denom));
    if (dlogits) {
      for (std::size_t c = 0; c < classes; ++c) {
        const double prob = p[c] / denom - (c == label ? 1.0 : 0.0);
        (*dlogits)[b * classes + c] = static_cast<T>(prob * static_cast<double>(scale) / static_cast<double>(batch));
      }
    }
  }
  return static_cast<T>(total / static_cast<double>(batch));
}

template <typename T>
int argmax(std::span<const T> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

void update_running_stats(TrainedModel& model, const ForwardTrace<float>& trace, float momentum) {
  if (trace.options.bn_mode != BnMode::kBatchStats) return;
  for (auto& layer : model.layers) {
    if (!layer.bn) continue;
    const auto& mean = trace.batch_mean[layer.spec_index];
    const auto& var = trace.batch_var[layer.spec_index];
    for (std::size_t c = 0; c < layer.bn->channels(); ++c) {
      layer.bn->mean[c] = momentum * layer.bn->mean[c] + (1.0f - momentum) * mean[c];
      layer.bn->var[c] = momentum * layer.bn->var[c] + (1.0f - momentum) * var[c];
    }
  }
}

template ForwardTrace<float> forward(const BasicModel<float>&, std::span<const float>, std::size_t,
                                     const ForwardOptions&, const ActivationOffset<float>*);
template ForwardTrace<double> forward(const BasicModel<double>&, std::span<const double>, std::size_t,
                                      const ForwardOptions&, const ActivationOffset<double>*);
template Gradients<float> backward(const BasicModel<float>&, const ForwardTrace<float>&,
                                   std::span<const float>);
template Gradients<double> backward(const BasicModel<double>&, const ForwardTrace<double>&,
                                    std::span<const double>);
template std::vector<float> ste_backward(std::span<const float>, std::span<const float>);
template std::vector<double> ste_backward(std::span<const double>, std::span<const double>);
template float cross_entropy(std::span<const float>, std::size_t, std::size_t, std::span<const int>,
                             float, std::vector<float>*);
template double cross_entropy(std::span<const double>, std::size_t, std::size_t, std::span<const int>,
                              double, std::vector<double>*);
template int argmax(std::span<const float>);
template int argmax(std::span<const double>);
template int argmax(std::span<const int>);

}  // namespace bcop
