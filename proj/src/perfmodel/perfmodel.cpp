#include "bcop/perfmodel.hpp"

#include <json.hpp>
#include <string>

#include "bcop/error.hpp"

namespace bcop {
namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

FoldingConfig make(std::initializer_list<int> pe, std::initializer_list<int> simd) {
  FoldingConfig f;
  auto s = simd.begin();
  for (int p : pe) f.layers.push_back({p, *s++});
  return f;
}

// Smallest divisor of n above `current`, or 0 when current is already n.
int next_divisor(int n, int current) {
  for (int d = current + 1; d <= n; ++d) {
    if (n % d == 0) return d;
  }
  return 0;
}

}  // namespace

FoldingConfig builtin_folding(std::string_view arch_name) {
  const std::string arch = builtin_spec(arch_name).arch_name;
  if (arch == "CNV") return make({16, 32, 16, 16, 4, 1, 1, 1, 4}, {3, 32, 32, 32, 32, 32, 4, 8, 1});
  if (arch == "n-CNV") return make({16, 16, 16, 16, 4, 1, 1, 1, 1}, {3, 16, 16, 32, 32, 32, 4, 8, 1});
  return make({4, 4, 4, 4, 1, 1, 1}, {3, 16, 16, 32, 32, 16, 1});
}

FoldingConfig unit_folding(const NetworkSpec& spec) {
  FoldingConfig f;
  f.layers.assign(spec.weighted_layers().size(), LayerFolding{});
  return f;
}

void validate_folding(const NetworkSpec& spec, const FoldingConfig& folding) {
  const ShapeInfo shapes = infer_shapes(spec);
  const auto weighted = spec.weighted_layers();
  if (folding.layers.size() != weighted.size()) {
    fail(ErrorCode::kInvalidArgument, "folding has " + std::to_string(folding.layers.size()) + " entries, " +
                                          spec.arch_name + " has " + std::to_string(weighted.size()) +
                                          " weighted layers");
  }
  for (std::size_t j = 0; j < weighted.size(); ++j) {
    const LayerShape& s = shapes.layers[weighted[j]];
    const LayerFolding& f = folding.layers[j];
    const std::string& name = spec.layers[weighted[j]].name;
    if (f.pe < 1 || f.simd < 1) fail(ErrorCode::kInvalidArgument, name + ": PE and SIMD must be >= 1");
    if (s.padded_out_channels % f.pe != 0) {
      fail(ErrorCode::kInvalidArgument, name + ": PE " + std::to_string(f.pe) + " does not divide " +
                                            std::to_string(s.padded_out_channels) + " output channels");
    }
    if (s.fan_in % f.simd != 0) {
      fail(ErrorCode::kInvalidArgument, name + ": SIMD " + std::to_string(f.simd) + " does not divide fan-in " +
                                            std::to_string(s.fan_in));
    }
  }
}

std::uint64_t layer_cycles(const LayerSpec& layer, const LayerShape& shape, const LayerFolding& folding) {
  if (!layer.weighted()) return 0;
  if (folding.pe < 1 || folding.simd < 1) fail(ErrorCode::kInvalidArgument, layer.name + ": PE and SIMD must be >= 1");
  return ceil_div(static_cast<std::uint64_t>(shape.padded_out_channels), static_cast<std::uint64_t>(folding.pe)) *
         ceil_div(static_cast<std::uint64_t>(shape.fan_in), static_cast<std::uint64_t>(folding.simd)) *
         static_cast<std::uint64_t>(shape.output_pixels);
}

WeightMemory weight_memory(const LayerShape& shape, const LayerFolding& folding) {
  if (folding.pe < 1 || folding.simd < 1) fail(ErrorCode::kInvalidArgument, "weight_memory: PE and SIMD must be >= 1");
  WeightMemory m;
  const auto co = static_cast<std::uint64_t>(shape.padded_out_channels);
  const auto wmat = static_cast<std::uint64_t>(shape.fan_in);
  m.total_bits = wmat * co;
  m.depth_per_pe = ceil_div(co, static_cast<std::uint64_t>(folding.pe)) *
                   ceil_div(wmat, static_cast<std::uint64_t>(folding.simd));
  m.word_bits = folding.simd;
  m.fragmentation = folding.pe;
  return m;
}

PipelineReport pipeline_report(const NetworkSpec& spec, const FoldingConfig& folding, double clock_hz) {
  if (!(clock_hz > 0.0)) fail(ErrorCode::kInvalidArgument, "pipeline_report: clock must be positive");
  const ShapeInfo shapes = infer_shapes(spec);
  const auto weighted = spec.weighted_layers();
  if (folding.layers.size() != weighted.size()) {
    fail(ErrorCode::kInvalidArgument, "pipeline_report: folding has " + std::to_string(folding.layers.size()) +
                                          " entries for " + std::to_string(weighted.size()) + " weighted layers");
  }
  const auto ops = count_binary_ops(spec, shapes);
  PipelineReport r;
  r.arch_name = spec.arch_name;
  r.clock_hz = clock_hz;
  std::uint64_t max_ops = 0;
  for (std::size_t j = 0; j < weighted.size(); ++j) {
    const std::size_t i = weighted[j];
    LayerReport l;
    l.name = spec.layers[i].name;
    l.ops = ops[i];
    l.cycles = layer_cycles(spec.layers[i], shapes.layers[i], folding.layers[j]);
    l.pe = folding.layers[j].pe;
    l.simd = folding.layers[j].simd;
    l.memory = weight_memory(shapes.layers[i], folding.layers[j]);
    r.latency_cycles += l.cycles;
    // Strict comparisons: the earliest layer wins ties.
    if (l.cycles > r.max_cycles) {
      r.max_cycles = l.cycles;
      r.bottleneck = l.name;
    }
    if (l.ops > max_ops) {
      max_ops = l.ops;
      r.throughput_setter = l.name;
    }
    r.layers.push_back(std::move(l));
  }
  r.throughput_fps = r.max_cycles == 0 ? 0.0 : clock_hz / static_cast<double>(r.max_cycles);
  r.latency_s = static_cast<double>(r.latency_cycles) / clock_hz;
  r.note =
      "analytic MVTU-only bound: throughput = clock / bottleneck cycles, latency = sum of layer cycles; "
      "sliding-window, FIFO and I/O overheads are not modeled, so measured hardware figures will be lower";
  return r;
}

std::string to_json(const PipelineReport& r) {
  nlohmann::ordered_json j;
  j["arch"] = r.arch_name;
  j["clock_hz"] = r.clock_hz;
  auto& layers = j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : r.layers) {
    layers.push_back({{"layer", l.name},
                      {"ops", l.ops},
                      {"cycles", l.cycles},
                      {"pe", l.pe},
                      {"simd", l.simd},
                      {"weight_bits", l.memory.total_bits},
                      {"pe_depth", l.memory.depth_per_pe},
                      {"fragmentation", l.memory.fragmentation}});
  }
  j["bottleneck"] = r.bottleneck;
  j["bottleneck_cycles"] = r.max_cycles;
  j["throughput_setter"] = r.throughput_setter;
  j["throughput_fps"] = r.throughput_fps;
  j["latency_cycles"] = r.latency_cycles;
  j["latency_s"] = r.latency_s;
  j["note"] = r.note;
  return j.dump(2);
}

FoldingConfig suggest_folding(const NetworkSpec& spec, int pe_budget, int simd_budget) {
  const ShapeInfo shapes = infer_shapes(spec);
  const auto weighted = spec.weighted_layers();
  const auto n = static_cast<int>(weighted.size());
  if (pe_budget < n || simd_budget < n) {
    fail(ErrorCode::kInvalidArgument, "suggest_folding: budgets (PE " + std::to_string(pe_budget) + ", SIMD " +
                                          std::to_string(simd_budget) + ") are below the " + std::to_string(n) +
                                          " weighted layers of " + spec.arch_name);
  }
  FoldingConfig f = unit_folding(spec);
  int pe_used = n;
  int simd_used = n;
  auto cycles = [&](std::size_t j, LayerFolding lf) {
    return layer_cycles(spec.layers[weighted[j]], shapes.layers[weighted[j]], lf);
  };
  for (;;) {
    std::size_t worst = 0;
    for (std::size_t j = 1; j < weighted.size(); ++j) {
      if (cycles(j, f.layers[j]) > cycles(worst, f.layers[worst])) worst = j;
    }
    const LayerShape& s = shapes.layers[weighted[worst]];
    LayerFolding cur = f.layers[worst];
    const int pe_next = next_divisor(s.padded_out_channels, cur.pe);
    const int simd_next = next_divisor(s.fan_in, cur.simd);
    const bool pe_ok = pe_next != 0 && pe_used - cur.pe + pe_next <= pe_budget;
    const bool simd_ok = simd_next != 0 && simd_used - cur.simd + simd_next <= simd_budget;
    if (!pe_ok && !simd_ok) break;
    LayerFolding by_pe{pe_next, cur.simd};
    LayerFolding by_simd{cur.pe, simd_next};
    // Both possible: prefer the larger cycle saving per fraction of its
    // budget, i.e. gain_pe / (dpe / pe_budget) >= gain_simd / (dsimd / simd_budget).
    bool take_pe = pe_ok;
    if (pe_ok && simd_ok) {
      const std::uint64_t now = cycles(worst, cur);
      const auto gain_pe = static_cast<unsigned __int128>(now - cycles(worst, by_pe));
      const auto gain_simd = static_cast<unsigned __int128>(now - cycles(worst, by_simd));
      const auto dpe = static_cast<unsigned __int128>(pe_next - cur.pe);
      const auto dsimd = static_cast<unsigned __int128>(simd_next - cur.simd);
      take_pe = gain_pe * static_cast<unsigned>(pe_budget) * dsimd >=
                gain_simd * static_cast<unsigned>(simd_budget) * dpe;
    }
    if (take_pe) {
      pe_used += pe_next - cur.pe;
      f.layers[worst] = by_pe;
    } else {
      simd_used += simd_next - cur.simd;
      f.layers[worst] = by_simd;
    }
  }
  validate_folding(spec, f);
  return f;
}

}  // namespace bcop
