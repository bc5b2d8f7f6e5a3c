#pragma once

// Analytical cycle, throughput and weight-memory model of the streaming
// accelerator, plus a greedy rate-matching folding search.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bcop/netspec.hpp"

namespace bcop {

struct LayerFolding {
  int pe = 1;
  int simd = 1;
  bool operator==(const LayerFolding&) const = default;
};

// One entry per weighted layer, in spec order.
struct FoldingConfig {
  std::vector<LayerFolding> layers;
  bool operator==(const FoldingConfig&) const = default;
};

// The hardware dimensioning shipped with each builtin architecture.
FoldingConfig builtin_folding(std::string_view arch_name);
FoldingConfig unit_folding(const NetworkSpec& spec);

// Throws kInvalidArgument naming the layer when a PE count does not divide
// the padded output channels or a SIMD width does not divide the fan-in.
void validate_folding(const NetworkSpec& spec, const FoldingConfig& folding);

// ceil(Co_padded / PE) * ceil(Wmat / SIMD) * output pixels; 0 for pools.
std::uint64_t layer_cycles(const LayerSpec& layer, const LayerShape& shape, const LayerFolding& folding);

struct WeightMemory {
  std::uint64_t total_bits = 0;    // Wmat * Co_padded, independent of folding
  std::uint64_t depth_per_pe = 0;  // entries of SIMD bits in each PE memory
  int word_bits = 0;               // SIMD
  int fragmentation = 0;           // number of separate memories (PE)
};

WeightMemory weight_memory(const LayerShape& shape, const LayerFolding& folding);

struct LayerReport {
  std::string name;
  std::uint64_t ops = 0;
  std::uint64_t cycles = 0;
  int pe = 1;
  int simd = 1;
  WeightMemory memory;
};

struct PipelineReport {
  std::string arch_name;
  std::vector<LayerReport> layers;  // weighted layers only
  std::string bottleneck;           // max cycles
  std::string throughput_setter;    // max ops
  std::uint64_t max_cycles = 0;
  std::uint64_t latency_cycles = 0;
  double clock_hz = 0.0;
  double throughput_fps = 0.0;
  double latency_s = 0.0;
  std::string note;
};

// Throws kInvalidArgument on a folding of the wrong length or a
// non-positive clock.
PipelineReport pipeline_report(const NetworkSpec& spec, const FoldingConfig& folding, double clock_hz);

std::string to_json(const PipelineReport& report);

// Starts from PE = SIMD = 1 and repeatedly gives the current bottleneck
// layer its next larger PE divisor of Co_padded or SIMD divisor of Wmat,
// whichever saves more cycles per fraction of its budget, while the summed
// PE and SIMD stay within budget. Stops when the bottleneck can grow no further. Throws
// kInvalidArgument when a budget is below the weighted layer count.
FoldingConfig suggest_folding(const NetworkSpec& spec, int pe_budget, int simd_budget);

}  // namespace bcop
