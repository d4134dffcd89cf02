#include "artifact/eval.hpp"

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <filesystem>
#include <sstream>
#include <vector>

#include "artifact/nn/loss.hpp"
#include "artifact/rng.hpp"
#include "artifact/toyforge.hpp"

namespace {

using namespace artifact;
namespace fs = std::filesystem;
using BigRat = boost::multiprecision::cpp_rational;

TEST(ExactRatioTest, ReducesAndPrints) {
  ExactRatio r{6, 8};
  r.reduce();
  EXPECT_EQ(r.str(), "3/4");
  ExactRatio z{0, 5};
  z.reduce();
  EXPECT_EQ(z.str(), "0/1");
  ExactRatio sum;  // starts at 0/1
  sum.add(1, 3);
  sum.add(1, 6);
  EXPECT_EQ(sum.str(), "1/2");
  EXPECT_DOUBLE_EQ((ExactRatio{1, 2}).to_double(), 0.5);
}

TEST(Binary, ComplementOfRealProbability) {
  Rng rng(51);
  for (int trial = 0; trial < 1000; ++trial) {
    const int K = static_cast<int>(rng.uniform_int(2, 9));
    nn::Tensor<float> logits;
    logits.resize({K});
    for (int c = 0; c < K; ++c)
      logits.ptr()[c] = static_cast<float>(rng.uniform_real(-9, 9));
    const std::vector<double> probs = nn::softmax_probs(logits);
    const int real_index = static_cast<int>(rng.uniform_int(0, K - 1));
    const double p_fake = to_binary(probs, real_index);
    // Equals the sum of all non-real probabilities.
    double manual = 0;
    for (int c = 0; c < K; ++c)
      if (c != real_index) manual += probs[c];
    ASSERT_NEAR(p_fake, manual, 1e-9);
    ASSERT_GE(p_fake, -1e-12);
    ASSERT_LE(p_fake, 1.0 + 1e-12);
  }
}

TEST(Binary, DecisionTiesGoToFake) {
  EXPECT_TRUE(binary_decision(0.5));
  EXPECT_TRUE(binary_decision(0.7));
  EXPECT_FALSE(binary_decision(0.49999));
}

TEST(Binary, RejectsMalformedDistributions) {
  EXPECT_THROW(to_binary({0.5, 0.4}, 0), std::exception);       // does not sum to 1
  EXPECT_THROW(to_binary({1.2, -0.2}, 0), std::exception);      // negative entry
  EXPECT_THROW(to_binary({0.5, 0.5}, 2), std::exception);       // bad index
}

// Independent oracle on arbitrary-precision rationals.
std::string oracle_ba(const std::vector<int>& yt, const std::vector<int>& yp, int K) {
  std::vector<long long> support(K, 0), correct(K, 0);
  for (std::size_t i = 0; i < yt.size(); ++i) {
    ++support[yt[i]];
    if (yt[i] == yp[i]) ++correct[yt[i]];
  }
  BigRat sum = 0;
  for (int c = 0; c < K; ++c) sum += BigRat(correct[c], support[c]);
  sum /= K;
  std::ostringstream os;
  os << boost::multiprecision::numerator(sum) << "/" << boost::multiprecision::denominator(sum);
  return os.str();
}

TEST(BalancedAccuracy, MatchesBigRationalOracleExactly) {
  Rng rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = static_cast<int>(rng.uniform_int(2, 7));
    const int n = static_cast<int>(rng.uniform_int(K, 180));
    std::vector<int> yt, yp;
    // Guarantee support for every class, then fill randomly.
    for (int c = 0; c < K; ++c) yt.push_back(c);
    for (int i = K; i < n; ++i) yt.push_back(static_cast<int>(rng.uniform_int(0, K - 1)));
    for (int i = 0; i < n; ++i) yp.push_back(static_cast<int>(rng.uniform_int(0, K - 1)));
    const ExactRatio got = balanced_accuracy_exact(yt, yp, K);
    ASSERT_EQ(got.str(), oracle_ba(yt, yp, K)) << "K=" << K << " n=" << n;
    ASSERT_NEAR(balanced_accuracy(yt, yp, K), got.to_double(), 0.0);
  }
}

TEST(BalancedAccuracy, KnownSmallCases) {
  // Perfect two-class split.
  EXPECT_EQ(balanced_accuracy_exact({0, 1}, {0, 1}, 2).str(), "1/1");
  // One of two right in each class: (1/2 + 1/2) / 2.
  EXPECT_EQ(balanced_accuracy_exact({0, 0, 1, 1}, {0, 1, 1, 0}, 2).str(), "1/2");
  // Skewed support: recall 2/3 and 1/1 -> 5/6.
  EXPECT_EQ(balanced_accuracy_exact({0, 0, 0, 1}, {0, 0, 1, 1}, 2).str(), "5/6");
}

TEST(BalancedAccuracy, ErrorsOnEmptyClassOrBadInput) {
  EXPECT_THROW(balanced_accuracy_exact({0, 0}, {0, 0}, 2), std::exception);
  EXPECT_THROW(balanced_accuracy_exact({0, 1}, {0}, 2), std::exception);
  EXPECT_THROW(balanced_accuracy_exact({0, 2}, {0, 2}, 2), std::exception);
  EXPECT_THROW(balanced_accuracy_exact({}, {}, 2), std::exception);
}

TEST(BalancedAccuracy, PresentVariantSkipsEmptyClasses) {
  // Class 2 absent: mean over the two supported classes only.
  EXPECT_EQ(recall_mean_present({0, 0, 1}, {0, 1, 1}, 3).str(), "3/4");
  EXPECT_DOUBLE_EQ(recall_mean_present({0, 0, 1}, {0, 1, 1}, 3).to_double(), 0.75);
  EXPECT_THROW(recall_mean_present({}, {}, 3), std::exception);
}

struct EvalFixture {
  fs::path dir;
  Manifest manifest;

  EvalFixture() {
    dir = fs::temp_directory_path() / ("artifact-eval-" + std::to_string(::getpid()));
    ToySpec spec;
    spec.n_generators = 3;
    spec.k_seen = 2;
    spec.images_per_class = 8;
    spec.image_size = 40;
    spec.seed = 14;
    spec.amplitude = 30;
    manifest = synth_dataset(spec, dir.string(), 2).manifest;
  }

  ~EvalFixture() { fs::remove_all(dir); }
};

nn::ModelConfig eval_model_cfg(int num_classes) {
  nn::ModelConfig cfg;
  cfg.stage_depths = {1};
  cfg.stage_widths = {8};
  cfg.input_size = 40;
  cfg.num_classes = num_classes;
  if (num_classes == 2) cfg.head_mode = nn::HeadMode::Binary;
  return cfg;
}

TEST(Evaluate, ReportInvariantsHold) {
  EvalFixture fx;
  nn::Net<float> net(eval_model_cfg(4), 3);
  const EvalReport rep =
      evaluate_fold(net, fx.manifest.taxonomy, fx.manifest.entries, fx.manifest.taxonomy,
                    fx.dir.string(), 0);
  EXPECT_EQ(rep.mode, "multi+uf");
  EXPECT_EQ(rep.n_model_classes, 4);
  EXPECT_EQ(rep.rows.size(), fx.manifest.entries.size());

  // Confusion row sums equal class supports; binary counts match rows.
  long long tp = 0, fn = 0, tn = 0, fp = 0;
  for (const auto& row : rep.rows) {
    if (row.true_fake && row.pred_fake) ++tp;
    if (row.true_fake && !row.pred_fake) ++fn;
    if (!row.true_fake && !row.pred_fake) ++tn;
    if (!row.true_fake && row.pred_fake) ++fp;
    ASSERT_GE(row.p_fake, 0.0);
    ASSERT_LE(row.p_fake, 1.0);
    ASSERT_EQ(row.pred_fake, row.p_fake >= 0.5);
  }
  EXPECT_EQ(tp, rep.bin_tp);
  EXPECT_EQ(fn, rep.bin_fn);
  EXPECT_EQ(tn, rep.bin_tn);
  EXPECT_EQ(fp, rep.bin_fp);
  for (int c = 0; c < rep.n_model_classes; ++c) {
    long long sum = 0;
    for (int p = 0; p < rep.n_model_classes; ++p) sum += rep.confusion[c][p];
    EXPECT_EQ(sum, rep.class_support[c]);
    EXPECT_EQ(rep.confusion[c][c], rep.class_correct[c]);
  }

  // Binary BA from the stored counts reproduces the reported rational.
  ExactRatio manual;
  manual.add(rep.bin_tp, rep.bin_tp + rep.bin_fn);
  manual.add(rep.bin_tn, rep.bin_tn + rep.bin_fp);
  manual.den *= 2;
  manual.reduce();
  EXPECT_EQ(manual.str(), rep.binary_ba_exact.str());

  // Head BA equals the mean recall over supported classes.
  std::vector<int> yt, yp;
  for (const auto& row : rep.rows) {
    yt.push_back(row.model_true);
    yp.push_back(row.model_pred);
  }
  EXPECT_DOUBLE_EQ(rep.multi_balanced_accuracy,
                   recall_mean_present(yt, yp, rep.n_model_classes).to_double());
}

TEST(Evaluate, BinaryHeadReport) {
  EvalFixture fx;
  nn::Net<float> net(eval_model_cfg(2), 5);
  const EvalReport rep = evaluate_fold(net, fx.manifest.taxonomy, fx.manifest.entries,
                                       fx.manifest.taxonomy, fx.dir.string(), 1);
  EXPECT_EQ(rep.mode, "binary");
  EXPECT_EQ(rep.fold, 1);
  // Every fake entry maps to model class 1, real to 0.
  for (const auto& row : rep.rows) EXPECT_EQ(row.model_true, row.true_fake ? 1 : 0);
}

TEST(Evaluate, MultiWithoutUfSkipsUnseenInHeadSpace) {
  EvalFixture fx;
  nn::Net<float> net(eval_model_cfg(3), 7);
  const EvalReport rep = evaluate_fold(net, fx.manifest.taxonomy, fx.manifest.entries,
                                       fx.manifest.taxonomy, fx.dir.string(), 0);
  EXPECT_EQ(rep.mode, "multi");
  for (const auto& row : rep.rows) {
    if (row.class_index == fx.manifest.taxonomy.uf_index) {
      EXPECT_EQ(row.model_true, -1);  // not a head class, binary-only entry
    } else {
      EXPECT_EQ(row.model_true, row.class_index);
    }
  }
}

TEST(Evaluate, SubsetBaSplitsSeenUnseen) {
  EvalFixture fx;
  nn::Net<float> net(eval_model_cfg(4), 9);
  const EvalReport rep = evaluate_fold(net, fx.manifest.taxonomy, fx.manifest.entries,
                                       fx.manifest.taxonomy, fx.dir.string(), 0);
  const ExactRatio seen =
      subset_binary_ba(rep, [](const EvalReport::Row& r) { return !r.unseen_generator; });
  const ExactRatio all = subset_binary_ba(rep, [](const EvalReport::Row&) { return true; });
  EXPECT_EQ(all.str(), rep.binary_ba_exact.str());
  EXPECT_GT(seen.den, 0);
  // Unseen rows exist in this fixture and carry generator ids.
  int unseen_rows = 0;
  for (const auto& row : rep.rows) unseen_rows += row.unseen_generator;
  EXPECT_GT(unseen_rows, 0);
}

TEST(Evaluate, WriterFormatsRoundWholeReport) {
  EvalFixture fx;
  nn::Net<float> net(eval_model_cfg(4), 11);
  const EvalReport rep = evaluate_fold(net, fx.manifest.taxonomy, fx.manifest.entries,
                                       fx.manifest.taxonomy, fx.dir.string(), 0);
  std::ostringstream csv;
  write_eval_csv(rep, csv, {"hdr"});
  const std::string text = csv.str();
  EXPECT_NE(text.find("# hdr"), std::string::npos);
  EXPECT_NE(text.find("entry_id,class_index,"), std::string::npos);
  // One line per entry plus header rows.
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  EXPECT_EQ(lines, rep.rows.size() + 2);
  std::ostringstream txt;
  write_eval_text(rep, txt);
  EXPECT_NE(txt.str().find("binary balanced accuracy"), std::string::npos);
}

TEST(Evaluate, RejectsEmptyTestSetAndTaxonomyMismatch) {
  EvalFixture fx;
  nn::Net<float> net(eval_model_cfg(4), 13);
  EXPECT_THROW(evaluate_fold(net, fx.manifest.taxonomy, {}, fx.manifest.taxonomy,
                             fx.dir.string(), 0),
               std::exception);
  ClassTaxonomy other = fx.manifest.taxonomy;
  other.class_names.back() = "different";
  EXPECT_THROW(evaluate_fold(net, other, fx.manifest.entries, fx.manifest.taxonomy,
                             fx.dir.string(), 0),
               std::exception);
}

}  // namespace
