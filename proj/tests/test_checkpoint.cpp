#include <gtest/gtest.h>

#include <filesystem>

#include "bcop/checkpoint.hpp"
#include "bcop/error.hpp"

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

void expect_same(const bcop::TrainedModel& a, const bcop::TrainedModel& b) {
  EXPECT_EQ(a.spec, b.spec);
  EXPECT_EQ(a.logit_scale, b.logit_scale);
  ASSERT_EQ(a.layers.size(), b.layers.size());
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    EXPECT_EQ(a.layers[i].spec_index, b.layers[i].spec_index);
    EXPECT_EQ(a.layers[i].weights, b.layers[i].weights);
    ASSERT_EQ(a.layers[i].bn.has_value(), b.layers[i].bn.has_value());
    if (!a.layers[i].bn) continue;
    EXPECT_EQ(a.layers[i].bn->gamma, b.layers[i].bn->gamma);
    EXPECT_EQ(a.layers[i].bn->beta, b.layers[i].bn->beta);
    EXPECT_EQ(a.layers[i].bn->mean, b.layers[i].bn->mean);
    EXPECT_EQ(a.layers[i].bn->var, b.layers[i].bn->var);
    EXPECT_EQ(a.layers[i].bn->eps, b.layers[i].bn->eps);
  }
}

}  // namespace

TEST(Checkpoint, RoundTripEveryBuiltin) {
  for (const auto& name : bcop::builtin_arch_names()) {
    auto m = bcop::init_model(bcop::builtin_spec(name), 17);
    m.layers[0].bn->mean[0] = 3.25f;
    m.layers[0].bn->var[1] = 0.125f;
    const auto bytes = bcop::serialize_checkpoint(m);
    expect_same(bcop::deserialize_checkpoint(bytes), m);
    EXPECT_EQ(bcop::serialize_checkpoint(bcop::deserialize_checkpoint(bytes)), bytes) << name;
  }
}

TEST(Checkpoint, FileRoundTrip) {
  const auto m = bcop::init_model(bcop::builtin_spec("n-cnv"), 2);
  const auto path = std::filesystem::temp_directory_path() / "bcop_test_ckpt.bckp";
  bcop::save_checkpoint(m, path);
  expect_same(bcop::load_checkpoint(path), m);
  std::filesystem::remove(path);
}

TEST(Checkpoint, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { bcop::load_checkpoint("/nonexistent/dir/model.bckp"); }), bcop::ErrorCode::kIo);
}

TEST(Checkpoint, BadMagicAndVersion) {
  auto bytes = bcop::serialize_checkpoint(bcop::init_model(bcop::builtin_spec("u-cnv"), 1));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { bcop::deserialize_checkpoint(bad); }), bcop::ErrorCode::kBadMagic);
  bad = bytes;
  bad[4] = 99;
  EXPECT_EQ(code_of([&] { bcop::deserialize_checkpoint(bad); }), bcop::ErrorCode::kBadVersion);
  EXPECT_EQ(code_of([] { bcop::deserialize_checkpoint({}); }), bcop::ErrorCode::kBadMagic);
}

TEST(Checkpoint, EveryTruncationIsRejected) {
  const auto bytes = bcop::serialize_checkpoint(bcop::init_model(bcop::builtin_spec("u-cnv"), 1));
  // Cutting anywhere must throw a bcop::Error, never crash or succeed.
  for (std::size_t len = 0; len < bytes.size(); len += 1 + len / 16) {
    std::span<const std::uint8_t> cut(bytes.data(), len);
    EXPECT_THROW(bcop::deserialize_checkpoint(cut), bcop::Error) << "len " << len;
  }
}

TEST(Checkpoint, TrailingBytesAreFormatError) {
  auto bytes = bcop::serialize_checkpoint(bcop::init_model(bcop::builtin_spec("u-cnv"), 1));
  bytes.push_back(0);
  EXPECT_EQ(code_of([&] { bcop::deserialize_checkpoint(bytes); }), bcop::ErrorCode::kFormat);
}
