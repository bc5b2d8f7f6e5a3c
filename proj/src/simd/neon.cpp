#include "bcop/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace bcop::simd {

#if defined(__aarch64__)
namespace {

std::uint64_t xnor_popcount_neon(const std::uint64_t* a, const std::uint64_t* b,
                                 std::size_t words, std::uint64_t tail) {
  if (words == 0) return 0;
  const std::size_t body = words - 1;
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= body; i += 2) {
    const uint64x2_t x = veorq_u64(vld1q_u64(a + i), vld1q_u64(b + i));
    const uint8x16_t v = vmvnq_u8(vreinterpretq_u8_u64(x));
    acc = vpadalq_u32(acc, vpaddlq_u16(vpaddlq_u8(vcntq_u8(v))));
  }
  std::uint64_t count = vgetq_lane_u64(acc, 0) + vgetq_lane_u64(acc, 1);
  for (; i < body; ++i) count += static_cast<std::uint64_t>(__builtin_popcountll(~(a[i] ^ b[i])));
  count += static_cast<std::uint64_t>(__builtin_popcountll(~(a[body] ^ b[body]) & tail));
  return count;
}

void binarize_neon(const float* x, std::size_t n, std::uint64_t* out) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  const uint32x4_t weights = {1u, 2u, 4u, 8u};
  std::size_t i = 0;
  std::size_t w = 0;
  for (; i + 64 <= n; i += 64, ++w) {
    std::uint64_t word = 0;
    for (int q = 0; q < 16; ++q) {
      const uint32x4_t ge = vcgeq_f32(vld1q_f32(x + i + 4 * q), zero);
      const std::uint64_t nib = vaddvq_u32(vandq_u32(ge, weights));
      word |= nib << (4 * q);
    }
    out[w] = word;
  }
  if (i < n) {
    std::uint64_t word = 0;
    for (std::size_t j = 0; i + j < n; ++j) {
      if (x[i + j] >= 0.0f) word |= std::uint64_t{1} << j;
    }
    out[w] = word;
  }
}

void gemm_neon(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
               const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    float* crow = c + i * ldc;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      float32x4_t acc = vdupq_n_f32(0.0f);
      for (std::size_t p = 0; p < k; ++p) {
        acc = vfmaq_n_f32(acc, vld1q_f32(b + p * ldb + j), a[i * lda + p]);
      }
      vst1q_f32(crow + j, vaddq_f32(vld1q_f32(crow + j), acc));
    }
    for (; j < n; ++j) {
      float acc = 0.0f;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * lda + p] * b[p * ldb + j];
      crow[j] += acc;
    }
  }
}

}  // namespace

const Kernels* neon_kernels() {
  static const Kernels table{Isa::kNeon, &xnor_popcount_neon, &binarize_neon, &gemm_neon};
  return &table;
}

#else

const Kernels* neon_kernels() { return nullptr; }

#endif

}  // namespace bcop::simd
