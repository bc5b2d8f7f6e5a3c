#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bcop {

// Dense real tensor, row-major, channels-last.
struct RealTensor {
  std::vector<std::size_t> dims;
  std::vector<float> values;

  RealTensor() = default;
  RealTensor(std::vector<std::size_t> d, std::vector<float> v);
  explicit RealTensor(std::vector<std::size_t> d);

  std::size_t size() const { return values.size(); }
};

std::size_t element_count(std::span<const std::size_t> dims);

// Packed {-1,+1} tensor. Bit i of word j holds element 64*j+i; a set bit
// is +1, a clear bit is -1. Padding bits past bit_len() are kept at zero.
class BitTensor {
 public:
  BitTensor() = default;
  // All elements -1.
  explicit BitTensor(std::vector<std::size_t> dims);
  // Takes ownership of `words`, clearing any padding bits.
  BitTensor(std::vector<std::size_t> dims, std::vector<std::uint64_t> words);

  static BitTensor vector(std::size_t bit_len) { return BitTensor({bit_len}); }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t bit_len() const { return bit_len_; }
  std::size_t word_count() const { return words_.size(); }

  std::span<const std::uint64_t> words() const { return words_; }
  // Writers must not leave padding bits set; use clear_padding() after
  // bulk writes if unsure.
  std::span<std::uint64_t> mutable_words() { return words_; }
  void clear_padding();

  bool bit(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set_bit(std::size_t i, bool on);
  int value(std::size_t i) const { return bit(i) ? 1 : -1; }

  bool operator==(const BitTensor&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::size_t bit_len_ = 0;
  std::vector<std::uint64_t> words_;
};

// sign() with the zero-maps-to-+1 boundary.
BitTensor binarize(const RealTensor& x);
BitTensor binarize(std::span<const float> x);

// Signed +-1 dot product of two packed vectors of equal length F:
// 2 * popcount(XNOR(a, b) & valid) - F. Padding bits are masked inside,
// so callers need not keep them clean. Throws on length mismatch.
int xnor_popcount_dot(const BitTensor& a, const BitTensor& b);
// Matching-bit count only (the popcount-domain value p).
std::size_t xnor_popcount(const BitTensor& a, const BitTensor& b);
std::size_t xnor_popcount(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b, std::size_t bit_len);

BitTensor pack(std::span<const int> values);
std::vector<int> unpack(const BitTensor& t);

// Flips every valid bit.
BitTensor complement(const BitTensor& t);

// Copies `count` bits from src[src_bit...] into dst[dst_bit...].
void copy_bits(std::span<const std::uint64_t> src, std::size_t src_bit,
               std::span<std::uint64_t> dst, std::size_t dst_bit, std::size_t count);

}  // namespace bcop
