#include <atomic>
#include <cstdlib>

#include "bcop/simd/kernels.hpp"

namespace bcop::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  if (name == "neon") return Isa::kNeon;
  return std::nullopt;
}

const Kernels* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return &scalar_kernels();
    case Isa::kAvx2: return avx2_kernels();
    case Isa::kNeon: return neon_kernels();
  }
  return nullptr;
}

namespace {

const Kernels* detect() {
  if (const char* env = std::getenv("BCOP_SIMD")) {
    if (auto isa = parse_isa(env)) {
      if (const Kernels* k = kernels_for(*isa)) return k;
    }
  }
  if (const Kernels* k = avx2_kernels()) return k;
  if (const Kernels* k = neon_kernels()) return k;
  return &scalar_kernels();
}

std::atomic<const Kernels*>& current() {
  static std::atomic<const Kernels*> table{detect()};
  return table;
}

}  // namespace

const Kernels& active() { return *current().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const Kernels* k = kernels_for(isa);
  if (k == nullptr) return false;
  current().store(k, std::memory_order_release);
  return true;
}

}  // namespace bcop::simd
