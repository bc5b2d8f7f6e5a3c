#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference;
// vector variants are selected at runtime and must agree with it
// (bit-exactly for the integer kernels).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace bcop::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view to_string(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

struct Kernels {
  Isa isa;

  // Number of positions where a and b agree, i.e. popcount(~(a ^ b)),
  // over `words` words. The last word is ANDed with `tail_mask`.
  std::uint64_t (*xnor_popcount)(const std::uint64_t* a, const std::uint64_t* b,
                                 std::size_t words, std::uint64_t tail_mask);

  // Packs sign bits (x >= 0 -> 1) LSB-first. `out` must hold ceil(n/64)
  // words; padding bits are written as zero.
  void (*binarize)(const float* x, std::size_t n, std::uint64_t* out);

  // C[MxN] += A[MxK] * B[KxN], all row-major with explicit leading dims.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const float* a,
               std::size_t lda, const float* b, std::size_t ldb, float* c,
               std::size_t ldc);
};

const Kernels& scalar_kernels();
// nullptr when the variant was not compiled in or the CPU lacks support.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

const Kernels* kernels_for(Isa isa);

// Best supported variant, unless BCOP_SIMD=scalar|avx2|neon overrides it.
const Kernels& active();

// Forces a variant for the rest of the process; returns false if the
// variant is unavailable on this machine.
bool select(Isa isa);

inline std::uint64_t tail_mask(std::size_t bit_len) {
  const std::size_t rem = bit_len % 64;
  return rem == 0 ? ~std::uint64_t{0} : ((std::uint64_t{1} << rem) - 1);
}

inline std::size_t words_for(std::size_t bit_len) { return (bit_len + 63) / 64; }

}  // namespace bcop::simd
