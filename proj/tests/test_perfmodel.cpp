#include <gtest/gtest.h>

#include <json.hpp>
#include <numeric>
#include <random>

#include "bcop/error.hpp"
#include "bcop/perfmodel.hpp"

namespace {

struct Arch {
  bcop::NetworkSpec spec;
  bcop::ShapeInfo shapes;
  std::vector<std::size_t> weighted;
};

Arch arch(const char* name) {
  Arch a{bcop::builtin_spec(name), {}, {}};
  a.shapes = bcop::infer_shapes(a.spec);
  a.weighted = a.spec.weighted_layers();
  return a;
}

std::uint64_t cycles_of(const Arch& a, std::size_t j, bcop::LayerFolding f) {
  return bcop::layer_cycles(a.spec.layers[a.weighted[j]], a.shapes.layers[a.weighted[j]], f);
}

std::uint64_t max_cycles(const Arch& a, const bcop::FoldingConfig& f) {
  std::uint64_t m = 0;
  for (std::size_t j = 0; j < a.weighted.size(); ++j) m = std::max(m, cycles_of(a, j, f.layers[j]));
  return m;
}

}  // namespace

TEST(Cycles, PublishedLayerExamples) {
  const auto a = arch("n-cnv");
  EXPECT_EQ(cycles_of(a, 0, {16, 3}), 8100u);
  EXPECT_EQ(cycles_of(a, 1, {16, 16}), 7056u);
  EXPECT_EQ(cycles_of(a, 8, {1, 1}), 8192u);
}

TEST(Cycles, BuiltinFoldingReproducesLatencyBars) {
  const auto a = arch("n-cnv");
  const auto r = bcop::pipeline_report(a.spec, bcop::builtin_folding("n-cnv"), 100e6);
  std::vector<std::uint64_t> cycles;
  for (const auto& l : r.layers) cycles.push_back(l.cycles);
  EXPECT_EQ(cycles, (std::vector<std::uint64_t>{8100, 7056, 2592, 1800, 1296, 1152, 2048, 2048, 8192}));
  EXPECT_EQ(r.latency_cycles, 34284u);
  EXPECT_EQ(r.bottleneck, "FC3");
  EXPECT_EQ(r.max_cycles, 8192u);
  EXPECT_EQ(r.throughput_setter, "Conv1_2");
}

TEST(Cycles, UnitFoldingIsFullSerialWork) {
  for (const char* name : {"cnv", "n-cnv", "u-cnv"}) {
    const auto a = arch(name);
    for (std::size_t j = 0; j < a.weighted.size(); ++j) {
      const auto& s = a.shapes.layers[a.weighted[j]];
      EXPECT_EQ(cycles_of(a, j, {1, 1}),
                static_cast<std::uint64_t>(s.fan_in) * s.padded_out_channels * s.output_pixels);
    }
  }
}

TEST(Cycles, DoublingPeHalvesExactly) {
  const auto a = arch("n-cnv");
  EXPECT_EQ(cycles_of(a, 1, {8, 16}), 2 * cycles_of(a, 1, {16, 16}));
  EXPECT_EQ(cycles_of(a, 8, {1, 1}), 2 * cycles_of(a, 8, {2, 1}));
}

TEST(Cycles, MonotoneInPeAndSimd) {
  std::mt19937_64 rng(1);
  const auto a = arch("cnv");
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t j = rng() % a.weighted.size();
    const int pe = 1 + static_cast<int>(rng() % 64), simd = 1 + static_cast<int>(rng() % 64);
    const auto base = cycles_of(a, j, {pe, simd});
    EXPECT_LE(cycles_of(a, j, {pe + 1, simd}), base);
    EXPECT_LE(cycles_of(a, j, {pe, simd + 1}), base);
  }
}

TEST(Cycles, PoolsCostNothingAndZeroFoldingThrows) {
  const auto a = arch("n-cnv");
  EXPECT_EQ(bcop::layer_cycles(a.spec.layers[2], a.shapes.layers[2], {1, 1}), 0u);
  EXPECT_THROW(cycles_of(a, 0, {0, 1}), bcop::Error);
}

TEST(Memory, WeightBitsAndConservation) {
  const auto a = arch("n-cnv");
  const auto& c12 = a.shapes.layers[a.weighted[1]];
  const auto one = bcop::weight_memory(c12, {1, 16});
  const auto sixteen = bcop::weight_memory(c12, {16, 16});
  EXPECT_EQ(one.total_bits, 2304u);
  EXPECT_EQ(sixteen.total_bits, 2304u);
  EXPECT_EQ(one.depth_per_pe, 16 * sixteen.depth_per_pe);
  EXPECT_EQ(sixteen.fragmentation, 16);
  EXPECT_EQ(sixteen.word_bits, 16);
  EXPECT_EQ(bcop::weight_memory(a.shapes.layers[a.weighted[8]], {1, 1}).total_bits, 8192u);
}

TEST(Report, ThroughputTimesBottleneckIsClock) {
  for (const char* name : {"cnv", "n-cnv", "u-cnv"}) {
    const auto a = arch(name);
    for (double clock : {100e6, 125e6, 3.3e6}) {
      const auto r = bcop::pipeline_report(a.spec, bcop::builtin_folding(name), clock);
      EXPECT_NEAR(r.throughput_fps * static_cast<double>(r.max_cycles), clock, clock * 1e-12);
      EXPECT_NEAR(r.latency_s * clock, static_cast<double>(r.latency_cycles), 1e-6);
      EXPECT_FALSE(r.note.empty());
    }
  }
}

TEST(Report, RejectsBadInputs) {
  const auto a = arch("n-cnv");
  EXPECT_THROW(bcop::pipeline_report(a.spec, bcop::builtin_folding("n-cnv"), 0.0), bcop::Error);
  EXPECT_THROW(bcop::pipeline_report(a.spec, bcop::builtin_folding("u-cnv"), 1e8), bcop::Error);
}

TEST(Report, JsonSchema) {
  const auto a = arch("n-cnv");
  const auto j = nlohmann::json::parse(bcop::to_json(bcop::pipeline_report(a.spec, bcop::builtin_folding("n-cnv"), 1e8)));
  for (const char* key : {"arch", "clock_hz", "layers", "bottleneck", "bottleneck_cycles", "throughput_setter",
                          "throughput_fps", "latency_cycles", "latency_s", "note"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  ASSERT_EQ(j["layers"].size(), 9u);
  for (const char* key : {"layer", "ops", "cycles", "pe", "simd", "weight_bits", "pe_depth", "fragmentation"}) {
    EXPECT_TRUE(j["layers"][0].contains(key)) << key;
  }
  EXPECT_EQ(j["bottleneck_cycles"], 8192);
  EXPECT_EQ(j["layers"][1]["ops"], 3612672);
}

TEST(Folding, BuiltinsAreValid) {
  for (const char* name : {"cnv", "n-cnv", "u-cnv"}) {
    EXPECT_NO_THROW(bcop::validate_folding(bcop::builtin_spec(name), bcop::builtin_folding(name))) << name;
  }
  auto bad = bcop::builtin_folding("n-cnv");
  bad.layers[1].simd = 7;
  try {
    bcop::validate_folding(bcop::builtin_spec("n-cnv"), bad);
    FAIL() << "expected throw";
  } catch (const bcop::Error& e) {
    EXPECT_NE(std::string(e.what()).find("Conv1_2"), std::string::npos);
  }
}

TEST(Dse, NoWorseThanBuiltinAtSameBudget) {
  for (const char* name : {"cnv", "n-cnv", "u-cnv"}) {
    const auto a = arch(name);
    const auto builtin = bcop::builtin_folding(name);
    int pe = 0, simd = 0;
    for (const auto& l : builtin.layers) {
      pe += l.pe;
      simd += l.simd;
    }
    const auto f = bcop::suggest_folding(a.spec, pe, simd);
    int pe_used = 0, simd_used = 0;
    for (const auto& l : f.layers) {
      pe_used += l.pe;
      simd_used += l.simd;
    }
    EXPECT_LE(pe_used, pe);
    EXPECT_LE(simd_used, simd);
    EXPECT_NO_THROW(bcop::validate_folding(a.spec, f));
    EXPECT_LE(max_cycles(a, f), max_cycles(a, builtin)) << name;
  }
}

TEST(Dse, MoreBudgetNeverHurts) {
  const auto a = arch("n-cnv");
  std::uint64_t prev = UINT64_MAX;
  for (int budget : {9, 18, 36, 72, 144, 288}) {
    const auto m = max_cycles(a, bcop::suggest_folding(a.spec, budget, budget));
    EXPECT_LE(m, prev) << budget;
    prev = m;
  }
}

TEST(Dse, MinimalBudgetIsUnitFolding) {
  const auto a = arch("u-cnv");
  EXPECT_EQ(bcop::suggest_folding(a.spec, 7, 7), bcop::unit_folding(a.spec));
  EXPECT_THROW(bcop::suggest_folding(a.spec, 6, 100), bcop::Error);
}
