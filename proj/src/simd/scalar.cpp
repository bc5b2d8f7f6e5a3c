#include <bit>
#include <cstring>

#include "bcop/simd/kernels.hpp"

namespace bcop::simd {
namespace {

std::uint64_t xnor_popcount_scalar(const std::uint64_t* a, const std::uint64_t* b,
                                   std::size_t words, std::uint64_t tail) {
  if (words == 0) return 0;
  std::uint64_t count = 0;
  for (std::size_t i = 0; i + 1 < words; ++i) {
    count += static_cast<std::uint64_t>(std::popcount(~(a[i] ^ b[i])));
  }
  count += static_cast<std::uint64_t>(
      std::popcount(~(a[words - 1] ^ b[words - 1]) & tail));
  return count;
}

void binarize_scalar(const float* x, std::size_t n, std::uint64_t* out) {
  const std::size_t words = words_for(n);
  std::memset(out, 0, words * sizeof(std::uint64_t));
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] >= 0.0f) out[i / 64] |= std::uint64_t{1} << (i % 64);
  }
}

void gemm_scalar(std::size_t m, std::size_t n, std::size_t k, const float* a,
                 std::size_t lda, const float* b, std::size_t ldb, float* c,
                 std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    float* crow = c + i * ldc;
    const float* arow = a + i * lda;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      const float* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels table{Isa::kScalar, &xnor_popcount_scalar, &binarize_scalar,
                             &gemm_scalar};
  return table;
}

}  // namespace bcop::simd
