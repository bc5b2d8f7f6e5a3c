#include <gtest/gtest.h>

#include <filesystem>

#include "bcop/binary_io.hpp"
#include "bcop/error.hpp"
#include "bcop/model_file.hpp"

namespace {

bcop::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const bcop::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no bcop::Error thrown";
  return bcop::ErrorCode::kFormat;
}

bcop::CompiledModel sample(const char* arch = "n-cnv") {
  const auto spec = bcop::builtin_spec(arch);
  return bcop::compile_model(bcop::init_model(spec, 12), spec);
}

// Header up to and including the layer count.
std::vector<std::uint8_t> header(std::uint32_t version, std::uint32_t layers) {
  bcop::ByteWriter w;
  w.raw("BCOP");
  w.u32(version);
  w.str("n-CNV");
  for (std::uint32_t v : {4u, 32u, 32u, 3u, 8u}) w.u32(v);
  w.u32(layers);
  return w.take();
}

}  // namespace

TEST(ModelFile, RoundTripEveryBuiltin) {
  for (const char* arch : {"cnv", "n-cnv", "u-cnv"}) {
    const auto m = sample(arch);
    EXPECT_EQ(bcop::deserialize_model(bcop::serialize_model(m)), m) << arch;
  }
}

TEST(ModelFile, FileRoundTripAndMissingFile) {
  const auto m = sample();
  const auto path = std::filesystem::temp_directory_path() / "bcop_test_model.bcop";
  bcop::emit_model(m, path);
  EXPECT_EQ(bcop::load_model(path), m);
  std::filesystem::remove(path);
  EXPECT_EQ(code_of([&] { bcop::load_model(path); }), bcop::ErrorCode::kIo);
}

TEST(ModelFile, TruncationAnywhereIsRejected) {
  const auto bytes = bcop::serialize_model(sample("u-cnv"));
  for (std::size_t len = 0; len < bytes.size(); len += 1 + len / 32) {
    std::span<const std::uint8_t> cut(bytes.data(), len);
    EXPECT_THROW(bcop::deserialize_model(cut), bcop::Error) << "len " << len;
  }
  // Past the magic and version, a cut is always reported as truncation.
  std::span<const std::uint8_t> cut(bytes.data(), bytes.size() - 1);
  EXPECT_EQ(code_of([&] { bcop::deserialize_model(cut); }), bcop::ErrorCode::kTruncated);
}

TEST(ModelFile, HugeLayerCountIsBoundsError) {
  const auto bytes = header(bcop::kModelFormatVersion, 1000000000u);
  EXPECT_EQ(code_of([&] { bcop::deserialize_model(bytes); }), bcop::ErrorCode::kBounds);
}

TEST(ModelFile, BadMagicAndVersion) {
  auto bytes = bcop::serialize_model(sample());
  auto bad = bytes;
  bad[3] = 'Q';
  EXPECT_EQ(code_of([&] { bcop::deserialize_model(bad); }), bcop::ErrorCode::kBadMagic);
  EXPECT_EQ(code_of([&] { bcop::deserialize_model(header(2, 0)); }), bcop::ErrorCode::kBadVersion);
  EXPECT_EQ(code_of([&] { bcop::deserialize_model(header(0, 0)); }), bcop::ErrorCode::kBadVersion);
}

TEST(ModelFile, TrailingBytesAreFormatError) {
  auto bytes = bcop::serialize_model(sample("u-cnv"));
  bytes.push_back(7);
  EXPECT_EQ(code_of([&] { bcop::deserialize_model(bytes); }), bcop::ErrorCode::kFormat);
}

TEST(ModelFile, CheckpointIsNotAModel) {
  bcop::ByteWriter w;
  w.raw("BCKP");
  w.u32(1);
  EXPECT_EQ(code_of([&] { bcop::deserialize_model(w.bytes()); }), bcop::ErrorCode::kBadMagic);
}

TEST(ModelFile, FlippedBytesNeverCrash) {
  // Single-byte corruption: either loads (a different but valid model) or
  // throws a bcop::Error.
  const auto bytes = bcop::serialize_model(sample("u-cnv"));
  for (std::size_t i = 0; i < 200 && i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] ^= 0xFF;
    try {
      bcop::deserialize_model(bad);
    } catch (const bcop::Error&) {
    }
  }
}
