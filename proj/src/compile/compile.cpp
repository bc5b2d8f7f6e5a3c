#include <string>

#include "bcop/compile.hpp"
#include "bcop/error.hpp"

namespace bcop {

CompiledModel compile_model(const TrainedModel& trained, const NetworkSpec& spec,
                            std::vector<std::string>* warnings) {
  if (!(trained.spec == spec)) {
    fail(ErrorCode::kShapeMismatch, "compile: model was trained for '" + trained.spec.arch_name +
                                        "', not the given '" + spec.arch_name + "' spec");
  }
  validate_model(trained);
  const ShapeInfo shapes = infer_shapes(spec);

  CompiledModel out;
  out.arch_name = spec.arch_name;
  out.num_classes = spec.num_classes;
  out.input_width = spec.input_width;
  out.input_height = spec.input_height;
  out.input_channels = spec.input_channels;
  out.input_bits = spec.input_bits;

  std::size_t model_idx = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& ls = spec.layers[i];
    const LayerShape& s = shapes.layers[i];
    CompiledLayer cl;
    cl.name = ls.name;
    cl.kind = ls.kind;
    cl.input_kind = i == 0 ? InputKind::kInt8 : InputKind::kBinary;
    cl.kernel = ls.kernel;
    cl.stride = ls.stride;
    cl.in_width = s.in_width;
    cl.in_height = s.in_height;
    cl.in_channels = s.in_channels;
    cl.out_width = s.out_width;
    cl.out_height = s.out_height;
    cl.out_channels = s.out_channels;
    cl.padded_out_channels = s.padded_out_channels;
    cl.fan_in = s.fan_in;
    if (ls.weighted()) {
      const LatentLayer& layer = trained.layers[model_idx++];
      const auto fan = static_cast<std::size_t>(s.fan_in);
      for (int c = 0; c < s.out_channels; ++c) {
        const std::span<const float> row(layer.weights.data() + static_cast<std::size_t>(c) * fan, fan);
        cl.weight_rows.push_back(binarize(row));
      }
      if (layer.bn) {
        FoldResult folded = cl.input_kind == InputKind::kInt8
                                ? fold_batchnorm_to_integer_threshold(*layer.bn, s.fan_in)
                                : fold_batchnorm_to_threshold(*layer.bn, s.fan_in);
        if (warnings) {
          for (auto c : folded.zero_gamma_channels) {
            warnings->push_back("layer " + ls.name + " channel " + std::to_string(c) +
                                ": gamma == 0, folded to a constant output");
          }
        }
        cl.thresholds = std::move(folded.params);
      }
    }
    out.layers.push_back(std::move(cl));
  }
  return out;
}

}  // namespace bcop
