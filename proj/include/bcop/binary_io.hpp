#pragma once

// Little-endian byte streams for the checkpoint and model file formats.
// The reader never trusts a length field: every read is checked against
// the remaining bytes before anything is allocated.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcop/error.hpp"

namespace bcop {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  // Throws kTruncated unless `count` items of `item_size` bytes remain.
  void require(std::size_t count, std::size_t item_size, std::string_view what) const {
    if (item_size != 0 && count > remaining() / item_size) {
      fail(ErrorCode::kTruncated, std::string(what) + ": needs " + std::to_string(count) + " x " +
                                      std::to_string(item_size) + " bytes, " +
                                      std::to_string(remaining()) + " left");
    }
  }

  std::uint8_t u8(std::string_view what) {
    require(1, 1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(std::string_view what) {
    require(1, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int32_t i32(std::string_view what) { return static_cast<std::int32_t>(u32(what)); }
  std::uint64_t u64(std::string_view what) {
    require(1, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32(std::string_view what) { return std::bit_cast<float>(u32(what)); }
  std::string raw(std::size_t n, std::string_view what) {
    require(n, 1, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::string str(std::string_view what, std::size_t max_len) {
    const std::uint32_t n = u32(what);
    if (n > max_len) {
      fail(ErrorCode::kBounds, std::string(what) + ": length " + std::to_string(n) + " exceeds " +
                                   std::to_string(max_len));
    }
    return raw(n, what);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace bcop
