#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "bcop/data/augment.hpp"
#include "bcop/data/manifest.hpp"
#include "bcop/data/metrics.hpp"
#include "bcop/data/synth.hpp"
#include "bcop/error.hpp"

namespace fs = std::filesystem;

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

// Fresh scratch directory per test.
class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("bcop_test_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_corpus(const fs::path& root, int per_class) {
  for (int c = 0; c < bcop::kNumClasses; ++c) {
    const fs::path dir = root / std::string(bcop::kClassNames[c]);
    fs::create_directories(dir);
    for (int i = 0; i < per_class; ++i) {
      bcop::Image img(8, 6, 3, static_cast<std::uint8_t>(40 * c + i));
      bcop::save_image(img, dir / ("img" + std::to_string(i) + ".png"));
    }
  }
}

bcop::Manifest fake_manifest(std::array<int, 4> counts) {
  bcop::Manifest m;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < counts[c]; ++i) m.records.push_back({"c" + std::to_string(c) + "_" + std::to_string(i), c});
  }
  return m;
}

}  // namespace

TEST(ClassNames, CanonicalAndFolderNames) {
  EXPECT_EQ(bcop::class_from_name("correct"), 0);
  EXPECT_EQ(bcop::class_from_name("CMFD"), 0);
  EXPECT_EQ(bcop::class_from_name("IMFD_Nose"), 1);
  EXPECT_EQ(bcop::class_from_name("imfd_nose_mouth"), 2);
  EXPECT_EQ(bcop::class_from_name("IMFD_Chin"), 3);
  EXPECT_FALSE(bcop::class_from_name("hat").has_value());
}

TEST(Manifest, FourByTenGivesForty) {
  TempDir tmp("manifest40");
  write_corpus(tmp.path(), 10);
  std::ofstream(tmp.path() / "correct" / "notes.txt") << "not an image";
  const auto m = bcop::build_manifest(tmp.path());
  EXPECT_EQ(m.records.size(), 40u);
  EXPECT_EQ(m.class_counts(), (std::array<std::size_t, 4>{10, 10, 10, 10}));
  EXPECT_EQ(m.warnings, 1u);
  EXPECT_TRUE(std::is_sorted(m.records.begin(), m.records.end(),
                             [](const auto& a, const auto& b) { return a.path < b.path; }));
}

TEST(Manifest, EmptyRootWarns) {
  TempDir tmp("manifest_empty");
  const auto m = bcop::build_manifest(tmp.path());
  EXPECT_TRUE(m.records.empty());
  EXPECT_GE(m.warnings, 1u);
}

TEST(Manifest, MissingRootIsIoError) {
  EXPECT_EQ(code_of([] { bcop::build_manifest("/nonexistent/bcop/root"); }), bcop::ErrorCode::kIo);
}

TEST(Manifest, SameFileUnderTwoClassesIsError) {
  TempDir tmp("manifest_dup");
  write_corpus(tmp.path(), 2);
  fs::create_symlink(tmp.path() / "correct" / "img0.png", tmp.path() / "chin" / "alias.png");
  EXPECT_EQ(code_of([&] { bcop::build_manifest(tmp.path()); }), bcop::ErrorCode::kInvalidArgument);
}

TEST(Manifest, UnknownClassDirectoryIsError) {
  TempDir tmp("manifest_unknown");
  write_corpus(tmp.path(), 1);
  fs::create_directories(tmp.path() / "sunglasses");
  EXPECT_EQ(code_of([&] { bcop::build_manifest(tmp.path()); }), bcop::ErrorCode::kInvalidArgument);
}

TEST(Manifest, CsvRoundTripAndErrors) {
  auto m = fake_manifest({2, 1, 1, 3});
  m.records[1].split = bcop::Split::kTest;
  std::stringstream ss;
  bcop::write_manifest_csv(m, ss);
  EXPECT_EQ(bcop::read_manifest_csv(ss).records, m.records);
  std::istringstream bad_header("file,label\n");
  EXPECT_EQ(code_of([&] { bcop::read_manifest_csv(bad_header); }), bcop::ErrorCode::kFormat);
  std::istringstream bad_label("path,label,split\na.png,7,train\n");
  EXPECT_EQ(code_of([&] { bcop::read_manifest_csv(bad_label); }), bcop::ErrorCode::kFormat);
  std::istringstream dup("path,label,split\na.png,1,train\na.png,2,train\n");
  EXPECT_EQ(code_of([&] { bcop::read_manifest_csv(dup); }), bcop::ErrorCode::kFormat);
}

TEST(Manifest, LoadDatasetResizesTo32) {
  TempDir tmp("manifest_load");
  write_corpus(tmp.path(), 2);
  const auto data = bcop::load_dataset(bcop::build_manifest(tmp.path()));
  ASSERT_EQ(data.size(), 8u);
  for (const auto& img : data.images) {
    EXPECT_EQ(img.width, 32);
    EXPECT_EQ(img.height, 32);
    EXPECT_EQ(img.channels, 3);
  }
  EXPECT_EQ(code_of([&] { bcop::load_image(tmp.path() / "missing.png"); }), bcop::ErrorCode::kIo);
}

TEST(Balance, SkewedCountsReduceToMinority) {
  // 51/39/5/5 split of a large corpus, scaled down.
  const auto m = fake_manifest({5100, 3900, 500, 500});
  const auto b = bcop::balance(m, 3);
  EXPECT_EQ(b.class_counts(), (std::array<std::size_t, 4>{500, 500, 500, 500}));
  for (const auto& r : b.records) {
    EXPECT_NE(std::find(m.records.begin(), m.records.end(), r), m.records.end());
  }
}

TEST(Balance, BalancedInputIsPermutation) {
  const auto m = fake_manifest({7, 7, 7, 7});
  auto b = bcop::balance(m, 1).records;
  auto a = m.records;
  auto by_path = [](const auto& x, const auto& y) { return x.path < y.path; };
  std::sort(a.begin(), a.end(), by_path);
  std::sort(b.begin(), b.end(), by_path);
  EXPECT_EQ(a, b);
}

TEST(Balance, IdempotentAndDeterministic) {
  const auto m = fake_manifest({30, 12, 9, 40});
  const auto once = bcop::balance(m, 5);
  EXPECT_EQ(bcop::balance(once, 5).class_counts(), once.class_counts());
  EXPECT_EQ(bcop::balance(m, 5).records, once.records);
  EXPECT_NE(bcop::balance(m, 6).records, once.records);
  EXPECT_EQ(code_of([] { bcop::balance(fake_manifest({3, 0, 3, 3}), 1); }), bcop::ErrorCode::kEmptyDataset);
}

TEST(Augment, IdentityDrawLeavesImageUnchanged) {
  const auto img = bcop::synth_quadrant_dataset(1, 2).images[3];
  EXPECT_EQ(bcop::apply_augment(img, bcop::AugmentDraw::identity()), img);
}

TEST(Augment, FlipMirrorsColumns) {
  const auto img = bcop::synth_quadrant_dataset(1, 2).images[0];
  auto d = bcop::AugmentDraw::identity();
  d.flip = true;
  const auto out = bcop::apply_augment(img, d);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) ASSERT_EQ(out.at(x, y, 1), img.at(31 - x, y, 1));
  }
}

TEST(Augment, DeterministicAndInRange) {
  const auto data = bcop::synth_quadrant_dataset(4, 9);
  bcop::AugmentConfig strong;
  strong.contrast_max = 3.0;
  strong.brightness_max = 0.9;
  strong.noise_sigma = 0.5;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto& img = data.images[s % data.size()];
    const auto a = bcop::augment(img, s, strong);
    EXPECT_EQ(a, bcop::augment(img, s, strong));
    EXPECT_EQ(a.width, 32);
    EXPECT_EQ(a.pixels.size(), img.pixels.size());
  }
  EXPECT_NE(bcop::augment(data.images[0], 1), bcop::augment(data.images[0], 2));
}

TEST(Augment, DrawsRespectConfig) {
  const bcop::AugmentConfig cfg;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto d = bcop::draw_augment(s, cfg);
    EXPECT_GE(d.contrast, cfg.contrast_min);
    EXPECT_LE(d.contrast, cfg.contrast_max);
    EXPECT_LE(std::abs(d.brightness), cfg.brightness_max);
    EXPECT_LE(std::abs(d.rotation_deg), cfg.max_rotation_deg);
  }
  EXPECT_NE(bcop::derive_seed(1, 0), bcop::derive_seed(1, 1));
  EXPECT_EQ(bcop::derive_seed(7, 3), bcop::derive_seed(7, 3));
}

TEST(Synth, CountsAndLabels) {
  const auto d = bcop::synth_quadrant_dataset(100, 1);
  EXPECT_EQ(d.size(), 400u);
  std::array<int, 4> counts{};
  for (int l : d.labels) ++counts[l];
  EXPECT_EQ(counts, (std::array<int, 4>{100, 100, 100, 100}));
  EXPECT_THROW(bcop::synth_quadrant_dataset(0, 1), bcop::Error);
}

TEST(Synth, SeedChangesPixelsNotLabels) {
  const auto a = bcop::synth_quadrant_dataset(5, 1);
  const auto b = bcop::synth_quadrant_dataset(5, 2);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.images[0], b.images[0]);
  EXPECT_EQ(a.images[0], bcop::synth_quadrant_dataset(5, 1).images[0]);
}

TEST(Synth, PatchContrastSitsInLabelQuadrant) {
  // Contrast mass: squared deviation from the image mean.
  const auto d = bcop::synth_quadrant_dataset(50, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& img = d.images[i];
    double mean = 0;
    for (auto p : img.pixels) mean += p;
    mean /= static_cast<double>(img.pixels.size());
    std::array<double, 4> mass{};
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        for (int c = 0; c < 3; ++c) {
          const double dv = img.at(x, y, c) - mean;
          mass[(y >= 16) * 2 + (x >= 16)] += dv * dv;
        }
      }
    }
    const double total = mass[0] + mass[1] + mass[2] + mass[3];
    EXPECT_GT(mass[d.labels[i]] / total, 0.5) << "image " << i;
  }
}

TEST(Metrics, PublishedConfusionMatrix) {
  bcop::ConfusionMatrix cm;
  cm.counts = {{{7125, 41, 1, 90}, {26, 7042, 94, 26}, {4, 79, 5651, 9}, {107, 41, 7, 7363}}};
  const auto m = bcop::metrics_from_confusion(cm);
  EXPECT_EQ(m.total, 27706u);
  EXPECT_NEAR(m.accuracy, 0.9810, 0.005);
  EXPECT_NEAR(*m.recall[0], 7125.0 / 7257, 1e-12);
  EXPECT_NEAR(*m.precision[3], 7363.0 / 7488, 1e-12);
}

TEST(Metrics, DiagonalAndUniform) {
  bcop::ConfusionMatrix diag;
  for (int c = 0; c < 4; ++c) diag.counts[c][c] = 10 + c;
  EXPECT_DOUBLE_EQ(bcop::metrics_from_confusion(diag).accuracy, 1.0);
  bcop::ConfusionMatrix uniform;
  for (auto& row : uniform.counts) row.fill(5);
  const auto u = bcop::metrics_from_confusion(uniform);
  EXPECT_DOUBLE_EQ(u.accuracy, 0.25);
  for (int c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(*u.recall[c], 0.25);
}

TEST(Metrics, MissingClassAndEmptyMatrix) {
  bcop::ConfusionMatrix cm;
  cm.add(0, 0);
  cm.add(1, 0);
  const auto m = bcop::metrics_from_confusion(cm);
  EXPECT_FALSE(m.recall[2].has_value());
  EXPECT_FALSE(m.precision[1].has_value());
  EXPECT_DOUBLE_EQ(*m.precision[0], 0.5);
  const auto j = nlohmann::json::parse(bcop::to_json(cm, m));
  EXPECT_TRUE(j["recall"][2].is_null());
  EXPECT_EQ(j["total"], 2);
  EXPECT_EQ(code_of([] { bcop::metrics_from_confusion({}); }), bcop::ErrorCode::kEmptyDataset);
  EXPECT_THROW(cm.add(4, 0), bcop::Error);
}
