#include "bcop/netspec.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "bcop/error.hpp"

namespace bcop {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kFullyConnected: return "fc";
  }
  return "unknown";
}

std::vector<std::size_t> NetworkSpec::weighted_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weighted()) out.push_back(i);
  }
  return out;
}

namespace {

LayerSpec conv(std::string name, int ci, int co) {
  return {std::move(name), LayerKind::kConv, 3, ci, co, 1, true};
}

LayerSpec pool(std::string name, int channels) {
  return {std::move(name), LayerKind::kMaxPool, 2, channels, channels, 2, false};
}

LayerSpec fc(std::string name, int fan_in, int co, bool bn_sign = true) {
  return {std::move(name), LayerKind::kFullyConnected, 1, fan_in, co, 1, bn_sign};
}

std::string normalize_arch(std::string_view name) {
  std::string s;
  for (char ch : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "cnv") return "CNV";
  if (s == "n-cnv" || s == "ncnv") return "n-CNV";
  if (s == "u-cnv" || s == "ucnv" || s == "mu-cnv" || s == "\xce\xbc-cnv") return "u-CNV";
  return {};
}

// Group channel widths: {g1, g2, g3, fc}.
NetworkSpec six_conv(std::string arch, int g1, int g2, int g3, int fc_width) {
  NetworkSpec spec;
  spec.arch_name = std::move(arch);
  spec.layers = {
      conv("Conv1_1", 3, g1),  conv("Conv1_2", g1, g1), pool("Pool1", g1),
      conv("Conv2_1", g1, g2), conv("Conv2_2", g2, g2), pool("Pool2", g2),
      conv("Conv3_1", g2, g3), conv("Conv3_2", g3, g3),
      // 32 -> 30 -> 28 -> 14 -> 12 -> 10 -> 5 -> 3 -> 1
      fc("FC1", g3, fc_width), fc("FC2", fc_width, fc_width), fc("FC3", fc_width, 4, false),
  };
  return spec;
}

}  // namespace

std::vector<std::string> builtin_arch_names() { return {"cnv", "n-cnv", "u-cnv"}; }

NetworkSpec builtin_spec(std::string_view arch_name) {
  const std::string arch = normalize_arch(arch_name);
  if (arch == "CNV") return six_conv(arch, 64, 128, 256, 512);
  if (arch == "n-CNV") return six_conv(arch, 16, 32, 64, 128);
  if (arch == "u-CNV") {
    NetworkSpec spec;
    spec.arch_name = arch;
    spec.layers = {
        conv("Conv1_1", 3, 16),  conv("Conv1_2", 16, 16), pool("Pool1", 16),
        conv("Conv2_1", 16, 32), conv("Conv2_2", 32, 32), pool("Pool2", 32),
        conv("Conv3_1", 32, 64),
        // 3x3x64 flattened
        fc("FC1", 576, 128),     fc("FC2", 128, 4, false),
    };
    return spec;
  }
  fail(ErrorCode::kUnknownArch, "unknown architecture '" + std::string(arch_name) +
                                    "' (expected cnv, n-cnv or u-cnv)");
}

ShapeInfo infer_shapes(const NetworkSpec& spec) {
  ShapeInfo info;
  int w = spec.input_width;
  int h = spec.input_height;
  int c = spec.input_channels;
  const auto weighted = spec.weighted_layers();
  const std::size_t last_weighted = weighted.empty() ? spec.layers.size() : weighted.back();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    LayerShape s;
    s.in_width = w;
    s.in_height = h;
    s.in_channels = c;
    const std::string where = "layer " + layer.name + ": ";
    switch (layer.kind) {
      case LayerKind::kConv: {
        if (layer.in_channels != c) {
          fail(ErrorCode::kShapeMismatch, where + "expects " + std::to_string(layer.in_channels) +
                                              " input channels, producer has " + std::to_string(c));
        }
        if (layer.kernel < 1 || layer.stride < 1 || layer.out_channels < 1) {
          fail(ErrorCode::kShapeMismatch, where + "kernel, stride and channels must be >= 1");
        }
        if (layer.kernel > w || layer.kernel > h) {
          fail(ErrorCode::kShapeMismatch, where + "window larger than " + std::to_string(w) + "x" +
                                              std::to_string(h) + " input");
        }
        s.out_width = (w - layer.kernel) / layer.stride + 1;
        s.out_height = (h - layer.kernel) / layer.stride + 1;
        s.out_channels = layer.out_channels;
        s.fan_in = layer.kernel * layer.kernel * c;
        s.output_pixels = s.out_width * s.out_height;
        break;
      }
      case LayerKind::kMaxPool: {
        if (layer.in_channels != c || layer.out_channels != c) {
          fail(ErrorCode::kShapeMismatch, where + "pool must preserve " + std::to_string(c) +
                                              " channels");
        }
        if (layer.kernel < 1 || w % layer.kernel != 0 || h % layer.kernel != 0) {
          fail(ErrorCode::kShapeMismatch, where + "pool window " + std::to_string(layer.kernel) +
                                              " does not divide " + std::to_string(w) + "x" +
                                              std::to_string(h));
        }
        s.out_width = w / layer.kernel;
        s.out_height = h / layer.kernel;
        s.out_channels = c;
        s.output_pixels = s.out_width * s.out_height;
        break;
      }
      case LayerKind::kFullyConnected: {
        const int flat = w * h * c;
        if (layer.in_channels != flat) {
          fail(ErrorCode::kShapeMismatch, where + "expects fan-in " +
                                              std::to_string(layer.in_channels) +
                                              ", flattened producer output is " +
                                              std::to_string(flat));
        }
        if (layer.out_channels < 1) fail(ErrorCode::kShapeMismatch, where + "needs >= 1 output");
        s.out_width = 1;
        s.out_height = 1;
        s.out_channels = layer.out_channels;
        s.fan_in = flat;
        s.output_pixels = 1;
        break;
      }
    }
    s.padded_out_channels = s.out_channels;
    if (i == last_weighted && !layer.has_bn_sign) {
      s.padded_out_channels =
          (s.out_channels + kFinalLayerPadding - 1) / kFinalLayerPadding * kFinalLayerPadding;
    }
    info.layers.push_back(s);
    w = s.out_width;
    h = s.out_height;
    c = s.out_channels;
  }
  return info;
}

std::vector<std::uint64_t> count_binary_ops(const NetworkSpec& spec, const ShapeInfo& shapes) {
  std::vector<std::uint64_t> ops(spec.layers.size(), 0);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!spec.layers[i].weighted()) continue;
    const LayerShape& s = shapes.layers.at(i);
    ops[i] = std::uint64_t{2} * static_cast<std::uint64_t>(s.fan_in) *
             static_cast<std::uint64_t>(s.padded_out_channels) *
             static_cast<std::uint64_t>(s.output_pixels);
  }
  return ops;
}

std::string to_json(const NetworkSpec& spec) {
  nlohmann::ordered_json j;
  j["arch_name"] = spec.arch_name;
  j["input"] = {{"width", spec.input_width},
                {"height", spec.input_height},
                {"channels", spec.input_channels},
                {"bits", spec.input_bits}};
  j["num_classes"] = spec.num_classes;
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : spec.layers) {
    j["layers"].push_back({{"name", l.name},
                           {"kind", std::string(to_string(l.kind))},
                           {"kernel", l.kernel},
                           {"in_channels", l.in_channels},
                           {"out_channels", l.out_channels},
                           {"stride", l.stride},
                           {"has_bn_sign", l.has_bn_sign}});
  }
  return j.dump(2);
}

NetworkSpec network_spec_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    NetworkSpec spec;
    spec.arch_name = j.at("arch_name").get<std::string>();
    const auto& in = j.at("input");
    spec.input_width = in.at("width").get<int>();
    spec.input_height = in.at("height").get<int>();
    spec.input_channels = in.at("channels").get<int>();
    spec.input_bits = in.at("bits").get<int>();
    spec.num_classes = j.at("num_classes").get<int>();
    for (const auto& l : j.at("layers")) {
      LayerSpec layer;
      layer.name = l.at("name").get<std::string>();
      const auto kind = l.at("kind").get<std::string>();
      if (kind == "conv") {
        layer.kind = LayerKind::kConv;
      } else if (kind == "maxpool") {
        layer.kind = LayerKind::kMaxPool;
      } else if (kind == "fc") {
        layer.kind = LayerKind::kFullyConnected;
      } else {
        fail(ErrorCode::kFormat, "network spec: unknown layer kind '" + kind + "'");
      }
      layer.kernel = l.at("kernel").get<int>();
      layer.in_channels = l.at("in_channels").get<int>();
      layer.out_channels = l.at("out_channels").get<int>();
      layer.stride = l.at("stride").get<int>();
      layer.has_bn_sign = l.at("has_bn_sign").get<bool>();
      spec.layers.push_back(std::move(layer));
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("network spec: ") + e.what());
  }
}

}  // namespace bcop
