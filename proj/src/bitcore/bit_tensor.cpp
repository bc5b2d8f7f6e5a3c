#include "bcop/bit_tensor.hpp"

#include <functional>
#include <numeric>
#include <string>

#include "bcop/error.hpp"
#include "bcop/simd/kernels.hpp"

namespace bcop {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kUnknownArch: return "unknown architecture";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "unsupported version";
    case ErrorCode::kTruncated: return "truncated input";
    case ErrorCode::kBounds: return "value out of bounds";
    case ErrorCode::kFormat: return "malformed file";
    case ErrorCode::kEmptyDataset: return "empty dataset";
  }
  return "error";
}

std::size_t element_count(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

RealTensor::RealTensor(std::vector<std::size_t> d, std::vector<float> v)
    : dims(std::move(d)), values(std::move(v)) {
  if (element_count(dims) != values.size()) {
    fail(ErrorCode::kShapeMismatch, "RealTensor: dims describe " +
                                        std::to_string(element_count(dims)) +
                                        " elements, got " + std::to_string(values.size()));
  }
}

RealTensor::RealTensor(std::vector<std::size_t> d)
    : dims(std::move(d)), values(element_count(dims), 0.0f) {}

BitTensor::BitTensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)),
      bit_len_(element_count(dims_)),
      words_(simd::words_for(bit_len_), 0) {}

BitTensor::BitTensor(std::vector<std::size_t> dims, std::vector<std::uint64_t> words)
    : dims_(std::move(dims)), bit_len_(element_count(dims_)), words_(std::move(words)) {
  if (words_.size() != simd::words_for(bit_len_)) {
    fail(ErrorCode::kShapeMismatch, "BitTensor: expected " +
                                        std::to_string(simd::words_for(bit_len_)) +
                                        " words, got " + std::to_string(words_.size()));
  }
  clear_padding();
}

void BitTensor::clear_padding() {
  if (!words_.empty()) words_.back() &= simd::tail_mask(bit_len_);
}

void BitTensor::set_bit(std::size_t i, bool on) {
  const std::uint64_t m = std::uint64_t{1} << (i % 64);
  if (on) {
    words_[i / 64] |= m;
  } else {
    words_[i / 64] &= ~m;
  }
}

BitTensor binarize(std::span<const float> x) {
  BitTensor out = BitTensor::vector(x.size());
  if (!x.empty()) simd::active().binarize(x.data(), x.size(), out.mutable_words().data());
  return out;
}

BitTensor binarize(const RealTensor& x) {
  BitTensor flat = binarize(std::span<const float>(x.values));
  return BitTensor(x.dims, std::vector<std::uint64_t>(flat.words().begin(), flat.words().end()));
}

std::size_t xnor_popcount(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                          std::size_t bit_len) {
  const std::size_t words = simd::words_for(bit_len);
  if (a.size() < words || b.size() < words) {
    fail(ErrorCode::kShapeMismatch, "xnor_popcount: word span shorter than bit length");
  }
  return static_cast<std::size_t>(
      simd::active().xnor_popcount(a.data(), b.data(), words, simd::tail_mask(bit_len)));
}

std::size_t xnor_popcount(const BitTensor& a, const BitTensor& b) {
  if (a.bit_len() != b.bit_len()) {
    fail(ErrorCode::kShapeMismatch, "xnor_popcount: length " + std::to_string(a.bit_len()) +
                                        " vs " + std::to_string(b.bit_len()));
  }
  return xnor_popcount(a.words(), b.words(), a.bit_len());
}

int xnor_popcount_dot(const BitTensor& a, const BitTensor& b) {
  const auto p = static_cast<long long>(xnor_popcount(a, b));
  return static_cast<int>(2 * p - static_cast<long long>(a.bit_len()));
}

BitTensor pack(std::span<const int> values) {
  BitTensor out = BitTensor::vector(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 1) {
      out.set_bit(i, true);
    } else if (values[i] != -1) {
      fail(ErrorCode::kInvalidArgument, "pack: element " + std::to_string(i) + " is " +
                                            std::to_string(values[i]) + ", expected -1 or +1");
    }
  }
  return out;
}

std::vector<int> unpack(const BitTensor& t) {
  std::vector<int> out(t.bit_len());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.value(i);
  return out;
}

BitTensor complement(const BitTensor& t) {
  std::vector<std::uint64_t> words(t.words().begin(), t.words().end());
  for (auto& w : words) w = ~w;
  return BitTensor(t.dims(), std::move(words));
}

void copy_bits(std::span<const std::uint64_t> src, std::size_t src_bit,
               std::span<std::uint64_t> dst, std::size_t dst_bit, std::size_t count) {
  while (count > 0) {
    const std::size_t s_off = src_bit % 64;
    const std::size_t d_off = dst_bit % 64;
    std::size_t chunk = 64 - (s_off > d_off ? s_off : d_off);
    if (chunk > count) chunk = count;
    const std::uint64_t mask =
        chunk == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << chunk) - 1);
    const std::uint64_t bits = (src[src_bit / 64] >> s_off) & mask;
    std::uint64_t& d = dst[dst_bit / 64];
    d = (d & ~(mask << d_off)) | (bits << d_off);
    src_bit += chunk;
    dst_bit += chunk;
    count -= chunk;
  }
}

}  // namespace bcop
