#include "bcop/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define BCOP_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define BCOP_HAVE_AVX2_BUILD 0
#endif

namespace bcop::simd {

#if BCOP_HAVE_AVX2_BUILD
namespace {

#define BCOP_AVX2 __attribute__((target("avx2,fma,popcnt")))

BCOP_AVX2 inline std::uint64_t hsum_epi64(__m256i v) {
  const __m128i lo = _mm256_castsi256_si128(v);
  const __m128i hi = _mm256_extracti128_si256(v, 1);
  const __m128i s = _mm_add_epi64(lo, hi);
  return static_cast<std::uint64_t>(_mm_cvtsi128_si64(s)) +
         static_cast<std::uint64_t>(_mm_extract_epi64(s, 1));
}

// Nibble lookup popcount over 4 words at a time, partial sums via SAD.
BCOP_AVX2 std::uint64_t xnor_popcount_avx2(const std::uint64_t* a,
                                           const std::uint64_t* b,
                                           std::size_t words,
                                           std::uint64_t tail) {
  if (words == 0) return 0;
  const std::size_t body = words - 1;
  const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                          0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low = _mm256_set1_epi8(0x0f);
  const __m256i ones = _mm256_set1_epi8(-1);
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= body; i += 4) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    const __m256i v = _mm256_xor_si256(_mm256_xor_si256(va, vb), ones);
    const __m256i lo = _mm256_and_si256(v, low);
    const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low);
    const __m256i cnt = _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo),
                                        _mm256_shuffle_epi8(lookup, hi));
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(cnt, _mm256_setzero_si256()));
  }
  std::uint64_t count = hsum_epi64(acc);
  for (; i < body; ++i) count += static_cast<std::uint64_t>(_mm_popcnt_u64(~(a[i] ^ b[i])));
  count += static_cast<std::uint64_t>(_mm_popcnt_u64(~(a[body] ^ b[body]) & tail));
  return count;
}

BCOP_AVX2 void binarize_avx2(const float* x, std::size_t n, std::uint64_t* out) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  std::size_t w = 0;
  for (; i + 64 <= n; i += 64, ++w) {
    std::uint64_t word = 0;
    for (int lane = 0; lane < 8; ++lane) {
      const __m256 v = _mm256_loadu_ps(x + i + 8 * lane);
      const auto bits =
          static_cast<std::uint64_t>(_mm256_movemask_ps(_mm256_cmp_ps(v, zero, _CMP_GE_OQ)));
      word |= bits << (8 * lane);
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

BCOP_AVX2 inline __m256i tail_lanes(std::size_t count) {
  const __m256i idx = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  return _mm256_cmpgt_epi32(_mm256_set1_epi32(static_cast<int>(count)), idx);
}

// R rows of C, 16 columns per step; 8-wide and masked steps for the tail.
template <int R>
BCOP_AVX2 void gemm_rows(std::size_t n, std::size_t k, const float* a, std::size_t lda,
                         const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256 acc0[R];
    __m256 acc1[R];
    for (int r = 0; r < R; ++r) {
      acc0[r] = _mm256_setzero_ps();
      acc1[r] = _mm256_setzero_ps();
    }
    for (std::size_t p = 0; p < k; ++p) {
      const __m256 b0 = _mm256_loadu_ps(b + p * ldb + j);
      const __m256 b1 = _mm256_loadu_ps(b + p * ldb + j + 8);
      for (int r = 0; r < R; ++r) {
        const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
        acc0[r] = _mm256_fmadd_ps(av, b0, acc0[r]);
        acc1[r] = _mm256_fmadd_ps(av, b1, acc1[r]);
      }
    }
    for (int r = 0; r < R; ++r) {
      float* crow = c + r * ldc + j;
      _mm256_storeu_ps(crow, _mm256_add_ps(_mm256_loadu_ps(crow), acc0[r]));
      _mm256_storeu_ps(crow + 8, _mm256_add_ps(_mm256_loadu_ps(crow + 8), acc1[r]));
    }
  }
  for (; j < n; j += 8) {
    const std::size_t width = n - j < 8 ? n - j : 8;
    const __m256i mask = tail_lanes(width);
    __m256 acc[R];
    for (int r = 0; r < R; ++r) acc[r] = _mm256_setzero_ps();
    for (std::size_t p = 0; p < k; ++p) {
      const __m256 bv = _mm256_maskload_ps(b + p * ldb + j, mask);
      for (int r = 0; r < R; ++r) {
        acc[r] = _mm256_fmadd_ps(_mm256_broadcast_ss(a + r * lda + p), bv, acc[r]);
      }
    }
    for (int r = 0; r < R; ++r) {
      float* crow = c + r * ldc + j;
      _mm256_maskstore_ps(crow, mask, _mm256_add_ps(_mm256_maskload_ps(crow, mask), acc[r]));
    }
  }
}

BCOP_AVX2 void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const float* a,
                         std::size_t lda, const float* b, std::size_t ldb, float* c,
                         std::size_t ldc) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) gemm_rows<4>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc);
  for (; i < m; ++i) gemm_rows<1>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc);
}

}  // namespace

const Kernels* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2") &&
                                __builtin_cpu_supports("fma") &&
                                __builtin_cpu_supports("popcnt");
  static const Kernels table{Isa::kAvx2, &xnor_popcount_avx2, &binarize_avx2, &gemm_avx2};
  return supported ? &table : nullptr;
}

#else

const Kernels* avx2_kernels() { return nullptr; }

#endif

}  // namespace bcop::simd
