#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bcop/data/synth.hpp"
#include "bcop/error.hpp"
#include "bcop/network.hpp"
#include "bcop/train.hpp"

namespace {

bcop::LayerSpec layer(const char* name, bcop::LayerKind kind, int k, int ci, int co, bool bn) {
  bcop::LayerSpec l;
  l.name = name;
  l.kind = kind;
  l.kernel = k;
  l.in_channels = ci;
  l.out_channels = co;
  l.stride = kind == bcop::LayerKind::kMaxPool ? k : 1;
  l.has_bn_sign = bn;
  return l;
}

// 14x14 miniature of the conv/pool/fc pattern; cheap enough for
// finite differences.
bcop::NetworkSpec tiny_spec() {
  bcop::NetworkSpec s;
  s.arch_name = "tiny";
  s.input_width = s.input_height = 14;
  s.layers = {layer("Conv1", bcop::LayerKind::kConv, 3, 3, 4, true),
              layer("Pool1", bcop::LayerKind::kMaxPool, 2, 4, 4, false),
              layer("Conv2", bcop::LayerKind::kConv, 3, 4, 6, true),
              layer("Pool2", bcop::LayerKind::kMaxPool, 2, 6, 6, false),
              layer("FC1", bcop::LayerKind::kFullyConnected, 1, 24, 8, true),
              layer("FC2", bcop::LayerKind::kFullyConnected, 1, 8, 4, false)};
  return s;
}

// Random batch norm so that no layer sits at the identity.
template <typename T>
void randomize_bn(bcop::BasicModel<T>& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5), s(-0.3, 0.3);
  for (auto& l : m.layers) {
    if (!l.bn) continue;
    for (std::size_t c = 0; c < l.bn->channels(); ++c) {
      l.bn->gamma[c] = static_cast<T>(u(rng));
      l.bn->beta[c] = static_cast<T>(s(rng));
      l.bn->mean[c] = static_cast<T>(s(rng) * 4);
      l.bn->var[c] = static_cast<T>(u(rng) * 3);
    }
  }
}

std::vector<float> random_input(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 0.99f);
  std::vector<float> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST(Ste, PassesInsideUnitIntervalOnly) {
  const std::vector<float> up{1, 2, 3, 4, 5};
  const std::vector<float> latent{-1.5f, -1.0f, 0.0f, 1.0f, 1.0001f};
  EXPECT_EQ(bcop::ste_backward<float>(up, latent), (std::vector<float>{0, 2, 3, 4, 0}));
  const std::vector<float> short_latent{0.0f};
  EXPECT_THROW(bcop::ste_backward<float>(up, short_latent), bcop::Error);
}

TEST(CrossEntropy, UniformLogits) {
  const std::vector<float> z(8, 0.5f);
  const std::vector<int> labels{0, 3};
  std::vector<float> d;
  const float loss = bcop::cross_entropy<float>(z, 2, 4, labels, 1.0f, &d);
  EXPECT_NEAR(loss, std::log(4.0f), 1e-6);
  // d = (softmax - onehot) / batch
  EXPECT_NEAR(d[0], (0.25f - 1.0f) / 2, 1e-6);
  EXPECT_NEAR(d[1], 0.25f / 2, 1e-6);
  EXPECT_NEAR(d[7], (0.25f - 1.0f) / 2, 1e-6);
}

TEST(Argmax, TiesGoToLowestIndex) {
  const std::vector<float> v{1.0f, 3.0f, 3.0f, -2.0f};
  EXPECT_EQ(bcop::argmax<float>(v), 1);
}

TEST(Forward, ZeroImageGivesZeroFirstLayerAccumulators) {
  auto m = bcop::init_model(bcop::builtin_spec("n-cnv"), 3);
  for (auto& w : m.layers[0].weights) w = std::abs(w) + 0.01f;
  const std::vector<float> zeros(32 * 32 * 3, 0.0f);
  const auto tr = bcop::forward<float>(m, zeros, 1, {});
  for (float a : tr.pre_bn[0]) ASSERT_EQ(a, 0.0f);
  EXPECT_EQ(tr.logits().size(), 4u);
}

TEST(Forward, DeterministicBitwise) {
  const auto m = bcop::init_model(bcop::builtin_spec("n-cnv"), 5);
  std::mt19937_64 rng(1);
  const auto x = random_input(2 * 32 * 32 * 3, rng);
  const auto a = bcop::forward<float>(m, x, 2, {bcop::BnMode::kBatchStats, bcop::Activation::kSign});
  const auto b = bcop::forward<float>(m, x, 2, {bcop::BnMode::kBatchStats, bcop::Activation::kSign});
  EXPECT_EQ(a.logits(), b.logits());
}

TEST(Forward, LaterLayersSeeOnlySigns) {
  const auto m = bcop::init_model(bcop::builtin_spec("n-cnv"), 6);
  std::mt19937_64 rng(2);
  const auto x = random_input(32 * 32 * 3, rng);
  const auto tr = bcop::forward<float>(m, x, 1, {});
  for (std::size_t i = 1; i < tr.inputs.size(); ++i) {
    if (!m.spec.layers[i].weighted()) continue;
    for (float v : tr.inputs[i]) ASSERT_TRUE(v == 1.0f || v == -1.0f) << m.spec.layers[i].name;
  }
}

TEST(Forward, WrongInputSizeThrows) {
  const auto m = bcop::init_model(bcop::builtin_spec("n-cnv"), 1);
  const std::vector<float> x(100, 0.0f);
  EXPECT_THROW(bcop::forward<float>(m, x, 1, {}), bcop::Error);
}

TEST(InitModel, DeterministicAndValid) {
  const auto spec = bcop::builtin_spec("u-cnv");
  const auto a = bcop::init_model(spec, 9);
  const auto b = bcop::init_model(spec, 9);
  const auto c = bcop::init_model(spec, 10);
  EXPECT_EQ(a.layers[0].weights, b.layers[0].weights);
  EXPECT_NE(a.layers[0].weights, c.layers[0].weights);
  EXPECT_NO_THROW(bcop::validate_model(a));
  EXPECT_FALSE(a.layers.back().bn.has_value());
}

TEST(InitModel, ValidateCatchesShapeDamage) {
  auto m = bcop::init_model(bcop::builtin_spec("n-cnv"), 1);
  m.layers[2].weights.pop_back();
  EXPECT_THROW(bcop::validate_model(m), bcop::Error);
}

TEST(Backward, BatchStatsGradientsMatchFiniteDifferences) {
  // Hard-tanh surrogate with batch statistics: the training-mode path.
  std::mt19937_64 rng(21);
  auto mf = bcop::init_model(tiny_spec(), 4);
  randomize_bn(mf, rng);
  const auto m = mf.cast<double>();
  const std::size_t batch = 3;
  const auto xf = random_input(batch * 14 * 14 * 3, rng);
  const std::vector<double> x(xf.begin(), xf.end());
  const bcop::ForwardOptions opts{bcop::BnMode::kBatchStats, bcop::Activation::kHardTanh};
  std::vector<double> r(batch * 4);
  std::normal_distribution<double> n01;
  for (auto& v : r) v = n01(rng);
  auto loss = [&](const bcop::BasicModel<double>& mm) {
    const auto tr = bcop::forward<double>(mm, x, batch, opts);
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * tr.logits()[i];
    return s;
  };
  const auto tr = bcop::forward<double>(m, x, batch, opts);
  const auto g = bcop::backward<double>(m, tr, r);
  const double h = 1e-6;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    for (int k = 0; k < 6; ++k) {
      const std::size_t j = rng() % m.layers[li].weights.size();
      auto plus = m, minus = m;
      plus.layers[li].weights[j] += h;
      minus.layers[li].weights[j] -= h;
      const double fd = (loss(plus) - loss(minus)) / (2 * h);
      EXPECT_NEAR(g.weights[li][j], fd, 1e-4 * (1 + std::abs(fd))) << "layer " << li << " weight " << j;
    }
    if (!m.layers[li].bn) continue;
    for (std::size_t c = 0; c < m.layers[li].bn->channels(); ++c) {
      auto plus = m, minus = m;
      plus.layers[li].bn->gamma[c] += h;
      minus.layers[li].bn->gamma[c] -= h;
      const double fd = (loss(plus) - loss(minus)) / (2 * h);
      EXPECT_NEAR(g.gamma[li][c], fd, 1e-4 * (1 + std::abs(fd))) << "layer " << li << " gamma " << c;
    }
  }
}

TEST(RunningStats, ConvergeToBatchStatistics) {
  auto m = bcop::init_model(tiny_spec(), 2);
  std::mt19937_64 rng(3);
  const auto x = random_input(8 * 14 * 14 * 3, rng);
  const bcop::ForwardOptions opts{bcop::BnMode::kBatchStats, bcop::Activation::kSign};
  bcop::ForwardTrace<float> tr;
  for (int i = 0; i < 300; ++i) {
    tr = bcop::forward<float>(m, x, 8, opts);
    bcop::update_running_stats(m, tr, 0.9f);
  }
  for (const auto& l : m.layers) {
    if (!l.bn) continue;
    for (std::size_t c = 0; c < l.bn->channels(); ++c) {
      EXPECT_NEAR(l.bn->mean[c], tr.batch_mean[l.spec_index][c], 1e-3 * (1 + std::abs(l.bn->mean[c])));
      EXPECT_NEAR(l.bn->var[c], tr.batch_var[l.spec_index][c], 1e-3 * (1 + l.bn->var[c]));
    }
  }
}

TEST(Trainer, LatentWeightsStayClipped) {
  bcop::TrainConfig cfg;
  cfg.learning_rate = 0.5f;  // large on purpose
  bcop::Trainer t(bcop::init_model(tiny_spec(), 1), cfg);
  std::mt19937_64 rng(4);
  const auto x = random_input(4 * 14 * 14 * 3, rng);
  const std::vector<int> labels{0, 1, 2, 3};
  for (int i = 0; i < 5; ++i) t.train_step(x, labels);
  for (const auto& l : t.model().layers) {
    for (float w : l.weights) ASSERT_TRUE(w >= -1.0f && w <= 1.0f);
  }
}

TEST(Trainer, LossDecreasesOnFixedBatch) {
  bcop::TrainConfig cfg;
  cfg.learning_rate = 0.01f;
  bcop::Trainer t(bcop::init_model(bcop::builtin_spec("n-cnv"), 1), cfg);
  const auto data = bcop::synth_quadrant_dataset(4, 11);
  std::vector<float> x;
  for (const auto& img : data.images) {
    const auto v = bcop::pixels_to_input(img.pixels);
    x.insert(x.end(), v.begin(), v.end());
  }
  const double first = t.train_step(x, data.labels);
  double last = first;
  for (int i = 0; i < 10; ++i) last = t.train_step(x, data.labels);
  EXPECT_LT(last, first);
}

TEST(Trainer, EmptyDatasetAndBadConfig) {
  bcop::Trainer t(bcop::init_model(tiny_spec(), 1), {});
  EXPECT_THROW(t.train_epoch(bcop::Dataset{}), bcop::Error);
  bcop::TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), bcop::Error);
}

TEST(Trainer, EpochIsDeterministic) {
  const auto data = bcop::synth_quadrant_dataset(16, 5);
  bcop::TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.augment = true;
  cfg.seed = 8;
  bcop::Trainer a(bcop::init_model(bcop::builtin_spec("n-cnv"), 1), cfg);
  bcop::Trainer b(bcop::init_model(bcop::builtin_spec("n-cnv"), 1), cfg);
  const auto ma = a.train_epoch(data);
  const auto mb = b.train_epoch(data);
  EXPECT_EQ(ma.loss, mb.loss);
  for (std::size_t i = 0; i < a.model().layers.size(); ++i) {
    EXPECT_EQ(a.model().layers[i].weights, b.model().layers[i].weights);
  }
}
