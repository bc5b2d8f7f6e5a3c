#include <gtest/gtest.h>

#include "bcop/error.hpp"
#include "bcop/netspec.hpp"

using bcop::LayerKind;

namespace {

bcop::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const bcop::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no bcop::Error thrown";
  return bcop::ErrorCode::kFormat;
}

}  // namespace

TEST(Builtin, NamesAndAliases) {
  EXPECT_EQ(bcop::builtin_spec("cnv").arch_name, "CNV");
  EXPECT_EQ(bcop::builtin_spec("N-CNV").arch_name, "n-CNV");
  EXPECT_EQ(bcop::builtin_spec("n_cnv").arch_name, "n-CNV");
  EXPECT_EQ(bcop::builtin_spec("mu-cnv").arch_name, "u-CNV");
  EXPECT_EQ(bcop::builtin_spec("\xce\xbc-CNV").arch_name, "u-CNV");
  EXPECT_EQ(code_of([] { bcop::builtin_spec("resnet"); }), bcop::ErrorCode::kUnknownArch);
  for (const auto& name : bcop::builtin_arch_names()) EXPECT_NO_THROW(bcop::builtin_spec(name));
}

TEST(Builtin, LayerWidthsMatchArchitectureTable) {
  const auto cnv = bcop::builtin_spec("cnv");
  const std::vector<int> cnv_out{64, 64, 64, 128, 128, 128, 256, 256, 512, 512, 4};
  const auto ncnv = bcop::builtin_spec("n-cnv");
  const std::vector<int> ncnv_out{16, 16, 16, 32, 32, 32, 64, 64, 128, 128, 4};
  ASSERT_EQ(cnv.layers.size(), cnv_out.size());
  ASSERT_EQ(ncnv.layers.size(), ncnv_out.size());
  for (std::size_t i = 0; i < cnv_out.size(); ++i) {
    EXPECT_EQ(cnv.layers[i].out_channels, cnv_out[i]) << cnv.layers[i].name;
    EXPECT_EQ(ncnv.layers[i].out_channels, ncnv_out[i]) << ncnv.layers[i].name;
  }
  const auto ucnv = bcop::builtin_spec("u-cnv");
  EXPECT_EQ(ucnv.weighted_layers().size(), 7u);
  EXPECT_EQ(ucnv.layers.back().out_channels, 4);
}

TEST(Shapes, NcnvValidConvolutionChain) {
  const auto spec = bcop::builtin_spec("n-cnv");
  const auto s = bcop::infer_shapes(spec);
  const std::vector<int> widths{30, 28, 14, 12, 10, 5, 3, 1, 1, 1, 1};
  for (std::size_t i = 0; i < widths.size(); ++i) EXPECT_EQ(s.layers[i].out_width, widths[i]) << i;
  EXPECT_EQ(s.layers[0].fan_in, 27);
  EXPECT_EQ(s.layers[1].fan_in, 144);
  EXPECT_EQ(s.layers[8].fan_in, 64);
  // Pool2 output is the 5x5 Grad-CAM target.
  EXPECT_EQ(s.layers[5].out_width, 5);
  EXPECT_EQ(s.layers[5].out_height, 5);
  // Only the final classifier is padded.
  EXPECT_EQ(s.layers[10].out_channels, 4);
  EXPECT_EQ(s.layers[10].padded_out_channels, 64);
  EXPECT_EQ(s.layers[9].padded_out_channels, 128);
}

TEST(Shapes, UcnvFlattensThreeByThree) {
  const auto s = bcop::infer_shapes(bcop::builtin_spec("u-cnv"));
  EXPECT_EQ(s.layers[7].fan_in, 576);
}

TEST(Shapes, ChannelMismatchIsReported) {
  auto spec = bcop::builtin_spec("n-cnv");
  spec.layers[3].in_channels = 17;
  EXPECT_EQ(code_of([&] { bcop::infer_shapes(spec); }), bcop::ErrorCode::kShapeMismatch);
}

TEST(Shapes, OddPoolAndOversizedWindowAreReported) {
  auto spec = bcop::builtin_spec("n-cnv");
  spec.input_width = 33;
  EXPECT_EQ(code_of([&] { bcop::infer_shapes(spec); }), bcop::ErrorCode::kShapeMismatch);
  spec = bcop::builtin_spec("n-cnv");
  spec.input_width = spec.input_height = 2;
  EXPECT_EQ(code_of([&] { bcop::infer_shapes(spec); }), bcop::ErrorCode::kShapeMismatch);
}

TEST(Ops, NcnvMatchesPublishedBars) {
  const auto spec = bcop::builtin_spec("n-cnv");
  const auto ops = bcop::count_binary_ops(spec, bcop::infer_shapes(spec));
  std::vector<std::uint64_t> weighted;
  for (std::size_t i : spec.weighted_layers()) weighted.push_back(ops[i]);
  EXPECT_EQ(weighted, (std::vector<std::uint64_t>{777600, 3612672, 1327104, 1843200, 331776, 73728, 16384, 32768,
                                                  16384}));
  EXPECT_EQ(ops[2], 0u);
  EXPECT_EQ(ops[5], 0u);
}

TEST(Ops, IndependentFormula) {
  // Recompute 2*K^2*Ci*Co*Xo*Yo from layer parameters alone for every
  // builtin; fc uses the padded width.
  for (const auto& name : bcop::builtin_arch_names()) {
    const auto spec = bcop::builtin_spec(name);
    const auto shapes = bcop::infer_shapes(spec);
    const auto ops = bcop::count_binary_ops(spec, shapes);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      const auto& l = spec.layers[i];
      const auto& s = shapes.layers[i];
      std::uint64_t want = 0;
      if (l.kind == LayerKind::kConv) {
        want = 2ull * l.kernel * l.kernel * l.in_channels * l.out_channels * s.out_width * s.out_height;
      } else if (l.kind == LayerKind::kFullyConnected) {
        want = 2ull * l.in_channels * s.padded_out_channels;
      }
      EXPECT_EQ(ops[i], want) << name << " " << l.name;
    }
  }
}

TEST(Json, RoundTripsEveryBuiltin) {
  for (const auto& name : bcop::builtin_arch_names()) {
    const auto spec = bcop::builtin_spec(name);
    EXPECT_EQ(bcop::network_spec_from_json(bcop::to_json(spec)), spec) << name;
  }
}

TEST(Json, RoundTripsEditedSpec) {
  auto spec = bcop::builtin_spec("n-cnv");
  spec.input_bits = 6;
  spec.layers[0].stride = 2;
  spec.layers.back().has_bn_sign = true;
  EXPECT_EQ(bcop::network_spec_from_json(bcop::to_json(spec)), spec);
}

TEST(Json, MalformedInputIsFormatError) {
  EXPECT_EQ(code_of([] { bcop::network_spec_from_json("{"); }), bcop::ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { bcop::network_spec_from_json(R"({"arch_name": "x"})"); }), bcop::ErrorCode::kFormat);
  auto text = bcop::to_json(bcop::builtin_spec("n-cnv"));
  text.replace(text.find("\"maxpool\""), 9, "\"avgpool\"");
  EXPECT_EQ(code_of([&] { bcop::network_spec_from_json(text); }), bcop::ErrorCode::kFormat);
}
