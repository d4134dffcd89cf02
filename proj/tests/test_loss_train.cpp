#include "artifact/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "artifact/augment.hpp"
#include "artifact/digest.hpp"
#include "artifact/nn/adam.hpp"
#include "artifact/nn/loss.hpp"
#include "artifact/nn/net.hpp"
#include "artifact/rng.hpp"
#include "artifact/toyforge.hpp"

namespace {

using namespace artifact;
namespace fs = std::filesystem;

nn::Tensor<float> logits_of(std::initializer_list<float> vals) {
  nn::Tensor<float> t;
  t.resize({static_cast<int>(vals.size())});
  int i = 0;
  for (float v : vals) t.ptr()[i++] = v;
  return t;
}

TEST(Loss, FrozenConstants) {
  const auto peaked = logits_of({2, 0, 0, 0, 0, 0, 0});
  EXPECT_NEAR(nn::smoothed_ce(peaked, 0, 0.05, 7), 0.68015194994760469318, 1e-15);
  EXPECT_NEAR(nn::smoothed_ce(peaked, 0, 0.0, 7), 0.59443766423331897889, 1e-15);
  const auto flat = logits_of({0, 0, 0, 0, 0, 0, 0});
  // Uniform logits cost ln K at any smoothing level.
  EXPECT_NEAR(nn::smoothed_ce(flat, 3, 0.05, 7), 1.9459101490553133051, 1e-15);
  EXPECT_NEAR(nn::smoothed_ce(flat, 0, 0.3, 7), 1.9459101490553133051, 1e-15);
}

// Independent long-double oracle, shift-free formulation.
long double oracle_smoothed_ce(const std::vector<long double>& z, int t, long double eps) {
  const std::size_t K = z.size();
  long double mx = z[0];
  for (long double v : z) mx = std::max(mx, v);
  long double sum = 0;
  for (long double v : z) sum += std::exp(v - mx);
  const long double lse = mx + std::log(sum);
  long double loss = 0;
  for (std::size_t c = 0; c < K; ++c) {
    const long double q = (c == static_cast<std::size_t>(t) ? 1.0L - eps : 0.0L) + eps / K;
    loss += q * (lse - z[c]);
  }
  return loss;
}

TEST(Loss, MatchesLongDoubleOracle) {
  Rng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = static_cast<int>(rng.uniform_int(2, 9));
    nn::Tensor<float> t;
    t.resize({K});
    std::vector<long double> z(K);
    for (int c = 0; c < K; ++c) {
      t.ptr()[c] = static_cast<float>(rng.uniform_real(-12, 12));
      z[c] = t.ptr()[c];
    }
    const int label = static_cast<int>(rng.uniform_int(0, K - 1));
    const double eps = rng.uniform_real(0, 0.3);
    const double got = nn::smoothed_ce(t, label, eps, K);
    const double want = static_cast<double>(oracle_smoothed_ce(z, label, eps));
    ASSERT_NEAR(got, want, 1e-6) << "K=" << K << " eps=" << eps;
  }
}

TEST(Loss, GradMatchesFiniteDifferenceAndSumsToZero) {
  Rng rng(405);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = static_cast<int>(rng.uniform_int(2, 7));
    nn::Tensor<double> t;
    t.resize({K});
    for (int c = 0; c < K; ++c) t.ptr()[c] = rng.uniform_real(-4, 4);
    const int label = static_cast<int>(rng.uniform_int(0, K - 1));
    const double eps = rng.uniform_real(0, 0.2);
    nn::Tensor<double> g;
    nn::smoothed_ce_grad(t, label, eps, K, g);
    double sum = 0;
    for (int c = 0; c < K; ++c) {
      const double keep = t.ptr()[c];
      t.ptr()[c] = keep + 1e-6;
      const double up = nn::smoothed_ce(t, label, eps, K);
      t.ptr()[c] = keep - 1e-6;
      const double dn = nn::smoothed_ce(t, label, eps, K);
      t.ptr()[c] = keep;
      ASSERT_NEAR(g.ptr()[c], (up - dn) / 2e-6, 1e-4);
      sum += g.ptr()[c];
    }
    ASSERT_NEAR(sum, 0.0, 1e-12);
  }
}

TEST(Loss, RejectsBadArguments) {
  const auto t = logits_of({1, 2, 3});
  EXPECT_THROW(nn::smoothed_ce(t, 3, 0.05, 3), std::exception);
  EXPECT_THROW(nn::smoothed_ce(t, -1, 0.05, 3), std::exception);
  EXPECT_THROW(nn::smoothed_ce(t, 0, 1.0, 3), std::exception);
  EXPECT_THROW(nn::smoothed_ce(t, 0, 0.05, 4), std::exception);
  auto bad = logits_of({1, 2, 3});
  bad.ptr()[1] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(nn::smoothed_ce(bad, 0, 0.05, 3), std::exception);
}

TEST(Train, LrSchedule) {
  TrainConfig cfg;
  cfg.lr0 = 1e-4;
  cfg.decay_gamma = 0.9;
  EXPECT_DOUBLE_EQ(lr_at(0, cfg), 1e-4);
  EXPECT_DOUBLE_EQ(lr_at(1, cfg), 1e-4 * 0.9);
  EXPECT_DOUBLE_EQ(lr_at(5, cfg), 1e-4 * std::pow(0.9, 5));
  cfg.decay_gamma = 1.0;
  EXPECT_DOUBLE_EQ(lr_at(9, cfg), 1e-4);
}

TEST(Adam, ZeroLrLeavesParamsBitIdentical) {
  nn::ModelConfig cfg;
  cfg.stage_depths = {1};
  cfg.stage_widths = {5};
  cfg.num_classes = 3;
  cfg.input_size = 12;
  nn::Net<float> net(cfg, 3);
  // Force a negative zero into the parameters to catch sign flips.
  net.params()[0].value.ptr()[0] = -0.0f;
  std::vector<std::vector<float>> before;
  for (const auto& p : net.params())
    before.emplace_back(p.value.ptr(), p.value.ptr() + p.value.numel());

  nn::Workspace<float> ws;
  nn::Tensor<float> x;
  x.resize({3, 12, 12});
  Rng rng(8);
  for (std::size_t i = 0; i < x.numel(); ++i)
    x.ptr()[i] = static_cast<float>(rng.uniform_real(-1, 1));
  net.zero_grads();
  const auto& logits = net.forward(x, ws);
  nn::Tensor<float> dl;
  nn::smoothed_ce_grad(logits, 0, 0.05, 3, dl);
  net.backward(dl, ws);

  nn::Adam<float> opt(net.params());
  opt.step(net.params(), 0.0);
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    const auto& p = net.params()[i].value;
    for (std::size_t j = 0; j < p.numel(); ++j) {
      ASSERT_EQ(std::memcmp(&p.ptr()[j], &before[i][j], sizeof(float)), 0)
          << net.params()[i].name << "[" << j << "]";
    }
  }
}

TEST(Adam, DrivesQuadraticToMinimum) {
  std::vector<nn::Param<double>> params(1);
  params[0].name = "w";
  params[0].value.resize({4});
  params[0].grad.resize({4});
  const double target[4] = {1.5, -2.0, 0.25, 3.0};
  for (int i = 0; i < 4; ++i) params[0].value.ptr()[i] = 0;
  nn::Adam<double> opt(params);
  for (int step = 0; step < 2000; ++step) {
    for (int i = 0; i < 4; ++i)
      params[0].grad.ptr()[i] = 2 * (params[0].value.ptr()[i] - target[i]);
    opt.step(params, 0.01);
  }
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(params[0].value.ptr()[i], target[i], 1e-3);
  EXPECT_EQ(opt.steps(), 2000);
}

Image probe_image(int side, std::uint64_t seed) {
  Image img(side, side);
  Rng rng(seed);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = clamp_u8(110 + 70 * std::sin(0.22 * x + 0.4 * c) +
                                   45 * std::cos(0.17 * y) + rng.uniform_real(-12, 12));
  return img;
}

TEST(Augment, AllFlagsOffIsIdentity) {
  const Image img = probe_image(40, 1);
  Rng rng(2);
  const Image out = augment(img, AugmentConfig::none(), rng);
  EXPECT_EQ(out.pixels, img.pixels);
  // And the stream is untouched: next draw equals a fresh stream's first.
  Rng fresh(2);
  EXPECT_EQ(rng.next_u64(), fresh.next_u64());
}

TEST(Augment, HorizontalFlipIsInvolution) {
  AugmentConfig cfg = AugmentConfig::none();
  cfg.hflip = true;
  cfg.p_hflip = 1.0;
  const Image img = probe_image(32, 3);
  Rng r1(4), r2(5);
  const Image once = augment(img, cfg, r1);
  EXPECT_NE(once.pixels, img.pixels);
  const Image twice = augment(once, cfg, r2);
  EXPECT_EQ(twice.pixels, img.pixels);
}

TEST(Augment, VerticalFlipIsInvolution) {
  AugmentConfig cfg = AugmentConfig::none();
  cfg.vflip = true;
  cfg.p_vflip = 1.0;
  const Image img = probe_image(32, 6);
  Rng r1(7), r2(8);
  const Image twice = augment(augment(img, cfg, r1), cfg, r2);
  EXPECT_EQ(twice.pixels, img.pixels);
}

TEST(Augment, CutoutPaintsASingleGraySquare) {
  AugmentConfig cfg = AugmentConfig::none();
  cfg.cutout = true;
  cfg.p_cutout = 1.0;
  cfg.cutout_holes = 1;
  cfg.cutout_max_frac = 0.25;
  const Image img = probe_image(40, 9);
  Rng rng(10);
  const Image out = augment(img, cfg, rng);
  int changed = 0, gray = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (out.pixels[i] != img.pixels[i]) {
      ++changed;
      if (out.pixels[i] == 128) ++gray;
    }
  }
  EXPECT_GT(changed, 0);
  EXPECT_EQ(changed, gray);
  EXPECT_LE(changed, 3 * 10 * 10);  // at most the max hole area
}

TEST(Augment, SeededStreamIsReproducible) {
  AugmentConfig cfg;  // everything on
  const Image img = probe_image(48, 11);
  Rng r1 = derive_rng(21, "aug:x:3");
  Rng r2 = derive_rng(21, "aug:x:3");
  const Image a = augment(img, cfg, r1);
  const Image b = augment(img, cfg, r2);
  EXPECT_EQ(a.pixels, b.pixels);
  Rng r3 = derive_rng(21, "aug:x:4");
  const Image c = augment(img, cfg, r3);
  EXPECT_NE(c.pixels, a.pixels);
}

TEST(Augment, OutputStaysInRangeUnderEverything) {
  AugmentConfig cfg;
  const Image img = probe_image(36, 12);
  for (int i = 0; i < 25; ++i) {
    Rng rng = derive_rng(31, "range:" + std::to_string(i));
    const Image out = augment(img, cfg, rng);
    ASSERT_EQ(out.width, img.width);
    ASSERT_EQ(out.height, img.height);
    ASSERT_EQ(out.pixels.size(), img.pixels.size());
  }
}

// The core sanity bar: a handful of images, a couple hundred steps, and
// the mean loss must at least halve.
TEST(Train, OverfitsTinyBatch) {
  ToySpec spec;
  spec.image_size = 64;
  nn::ModelConfig cfg;
  cfg.input_size = 64;
  cfg.head_mode = nn::HeadMode::Binary;
  cfg.num_classes = 2;
  nn::Net<float> net(cfg, 1);
  nn::Workspace<float> ws;
  std::vector<nn::Tensor<float>> xs(8);
  std::vector<int> ys(8);
  const ToyGenSpec gen{"gx", 8, 12, 0.3, GeneratorFamily::GAN, true};
  for (int i = 0; i < 8; ++i) {
    Rng rng = derive_rng(5, "ov:" + std::to_string(i));
    const Image img = toy_image(spec, i % 2 ? &gen : nullptr, rng);
    nn::image_to_tensor(img, xs[i]);
    ys[i] = i % 2;
  }
  nn::Adam<float> opt(net.params());
  double first = 0, last = 0;
  for (int step = 0; step < 200; ++step) {
    net.zero_grads();
    double loss = 0;
    for (int i = 0; i < 8; ++i) {
      const auto& logits = net.forward(xs[i], ws);
      loss += nn::smoothed_ce(logits, ys[i], 0.05, 2);
      nn::Tensor<float> dl;
      nn::smoothed_ce_grad(logits, ys[i], 0.05, 2, dl);
      for (std::size_t j = 0; j < dl.numel(); ++j) dl.ptr()[j] /= 8.0f;
      net.backward(dl, ws);
    }
    loss /= 8;
    if (step == 0) first = loss;
    last = loss;
    opt.step(net.params(), 1e-3);
  }
  EXPECT_LT(last, 0.5 * first) << "first " << first << " last " << last;
}

struct TrainFixture {
  fs::path dir;
  Manifest manifest;

  TrainFixture() {
    dir = fs::temp_directory_path() / ("artifact-train-" + std::to_string(::getpid()));
    ToySpec spec;
    spec.n_generators = 3;
    spec.k_seen = 2;
    spec.images_per_class = 12;
    spec.image_size = 40;
    spec.seed = 6;
    spec.amplitude = 30;
    const ToyDataset ds = synth_dataset(spec, dir.string(), 2);
    manifest = ds.manifest;
  }

  ~TrainFixture() { fs::remove_all(dir); }
};

TrainConfig quick_tcfg() {
  TrainConfig tcfg;
  tcfg.lr0 = 1e-3;
  tcfg.epochs = 2;
  tcfg.batch_size = 8;
  tcfg.seed = 9;
  tcfg.aug = AugmentConfig::none();
  return tcfg;
}

nn::ModelConfig small_model() {
  nn::ModelConfig cfg;
  cfg.stage_depths = {1, 1};
  cfg.stage_widths = {8, 16};
  cfg.input_size = 40;
  return cfg;
}

TEST(Train, FoldRunProducesLogAndIsDeterministic) {
  TrainFixture fx;
  const auto run = [&](int workers) {
    return train_fold(fx.manifest.entries, fx.manifest.taxonomy, fx.dir.string(),
                      TrainMode::MultiUf, false, small_model(), quick_tcfg(), workers);
  };
  const TrainFoldResult a = run(1);
  ASSERT_EQ(a.log.size(), 2u);
  EXPECT_EQ(a.log[0].epoch, 0);
  EXPECT_EQ(a.log[1].epoch, 1);
  EXPECT_TRUE(std::isfinite(a.log[1].loss));
  EXPECT_DOUBLE_EQ(a.log[0].lr, 1e-3);
  EXPECT_DOUBLE_EQ(a.log[1].lr, 9e-4);
  EXPECT_EQ(a.spec.num_classes, 4);

  const TrainFoldResult b = run(4);
  ASSERT_EQ(b.log.size(), a.log.size());
  for (std::size_t e = 0; e < a.log.size(); ++e) {
    EXPECT_EQ(a.log[e].loss, b.log[e].loss) << "epoch " << e;
    EXPECT_EQ(a.log[e].val_balanced_accuracy, b.log[e].val_balanced_accuracy);
  }
  for (std::size_t i = 0; i < a.net.params().size(); ++i) {
    const auto& pa = a.net.params()[i].value;
    const auto& pb = b.net.params()[i].value;
    for (std::size_t j = 0; j < pa.numel(); ++j)
      ASSERT_EQ(pa.ptr()[j], pb.ptr()[j]) << a.net.params()[i].name;
  }
}

TEST(Train, EntryOrderDoesNotMatter) {
  TrainFixture fx;
  std::vector<ManifestEntry> shuffled = fx.manifest.entries;
  Rng rng(12);
  for (std::size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1],
              shuffled[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  const TrainFoldResult a =
      train_fold(fx.manifest.entries, fx.manifest.taxonomy, fx.dir.string(), TrainMode::Multi,
                 false, small_model(), quick_tcfg(), 2);
  const TrainFoldResult b = train_fold(shuffled, fx.manifest.taxonomy, fx.dir.string(),
                                       TrainMode::Multi, false, small_model(), quick_tcfg(), 2);
  for (std::size_t e = 0; e < a.log.size(); ++e) EXPECT_EQ(a.log[e].loss, b.log[e].loss);
}

TEST(Train, BinaryModeUsesTwoClasses) {
  TrainFixture fx;
  const TrainFoldResult r =
      train_fold(fx.manifest.entries, fx.manifest.taxonomy, fx.dir.string(), TrainMode::Binary,
                 false, small_model(), quick_tcfg(), 2);
  EXPECT_EQ(r.spec.num_classes, 2);
  EXPECT_EQ(r.net.config().num_classes, 2);
  EXPECT_EQ(r.net.config().head_mode, nn::HeadMode::Binary);
}

TEST(Train, MultiWithoutUfDropsUnseenEntries) {
  TrainFixture fx;
  const TrainFoldResult r =
      train_fold(fx.manifest.entries, fx.manifest.taxonomy, fx.dir.string(), TrainMode::Multi,
                 false, small_model(), quick_tcfg(), 2);
  // real + two seen generators; the unseen-fake class is absent.
  EXPECT_EQ(r.spec.num_classes, 3);
}

TEST(Train, RejectsBadConfigs) {
  TrainConfig bad = quick_tcfg();
  bad.lr0 = 0;
  EXPECT_THROW(bad.check(), std::exception);
  bad = quick_tcfg();
  bad.decay_gamma = 1.5;
  EXPECT_THROW(bad.check(), std::exception);
  bad = quick_tcfg();
  bad.label_smoothing = 1.0;
  EXPECT_THROW(bad.check(), std::exception);
  bad = quick_tcfg();
  bad.epochs = 0;
  EXPECT_THROW(bad.check(), std::exception);
  bad = quick_tcfg();
  bad.batch_size = 0;
  EXPECT_THROW(bad.check(), std::exception);
}

}  // namespace
