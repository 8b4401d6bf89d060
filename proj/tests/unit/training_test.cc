// Copyright 2026 The Longform RL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "longform/common/error.h"
#include "longform/common/rng.h"
#include "longform/common/stats.h"
#include "longform/training/datasets.h"
#include "longform/training/losses.h"
#include "longform/training/scorer.h"
#include "longform/training/trainer.h"
#include "test_util.h"

namespace longform::training {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

nn::EncoderConfig TinyConfig(nn::Pooling pooling = nn::Pooling::kMean) {
  nn::EncoderConfig config;
  config.max_length = 40;
  config.d_model = 16;
  config.num_heads = 2;
  config.num_layers = 1;
  config.d_ff = 16;
  config.pooling = pooling;
  return config;
}

TEST(NormalizeLikertTest, MapsScaleEndpointsAndMidpoint) {
  EXPECT_EQ(NormalizeLikert(1), 0.0);
  EXPECT_EQ(NormalizeLikert(2), 0.25);
  EXPECT_EQ(NormalizeLikert(3), 0.5);
  EXPECT_EQ(NormalizeLikert(4), 0.75);
  EXPECT_EQ(NormalizeLikert(5), 1.0);
  for (int s = 1; s < 5; ++s) EXPECT_LT(NormalizeLikert(s), NormalizeLikert(s + 1));
  EXPECT_THROW(NormalizeLikert(0), ValidationError);
  EXPECT_THROW(NormalizeLikert(6), ValidationError);
}

TEST(MseLossTest, Examples) {
  const std::vector<double> a = {0.3, 0.7};
  EXPECT_EQ(MseLoss(a, a), 0.0);
  EXPECT_EQ(MseLoss(std::vector<double>{0.0}, std::vector<double>{1.0}), 1.0);
  EXPECT_DOUBLE_EQ(MseLoss(std::vector<double>{0.5, 0.0},
                           std::vector<double>{1.0, 0.0}),
                   0.125);
  EXPECT_THROW(MseLoss(std::vector<double>{0.5}, a), ValidationError);
  EXPECT_THROW(MseLoss(std::vector<double>{}, std::vector<double>{}),
               ValidationError);
}

TEST(BtLossTest, EqualScoresGiveLnTwo) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double x = 50.0 * (rng.Uniform() - 0.5);
    EXPECT_NEAR(BtLoss(x, x), std::log(2.0), 1e-9);
  }
}

TEST(BtLossTest, SaturatesWithoutOverflow) {
  EXPECT_LT(BtLoss(20.0, 0.0), 1e-8);
  EXPECT_NEAR(BtLoss(0.0, 20.0), 20.0 + std::log1p(std::exp(-20.0)), 1e-12);
  EXPECT_NEAR(BtLoss(-400.0, 400.0), 800.0, 1e-9);
  EXPECT_TRUE(std::isfinite(BtLoss(-1e6, 1e6)));
}

TEST(BtLossTest, SymmetricSumIsAtLeastTwoLnTwo) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const double a = 10.0 * rng.Normal();
    const double b = 10.0 * rng.Normal();
    EXPECT_GE(BtLoss(a, b) + BtLoss(b, a), 2.0 * std::log(2.0) - 1e-12);
  }
  EXPECT_NEAR(BtLoss(1.5, 1.5) * 2, 2.0 * std::log(2.0), 1e-12);
  EXPECT_GT(BtLoss(1.5, 1.6) + BtLoss(1.6, 1.5), 2.0 * std::log(2.0));
}

// Central-difference derivative of `f` around `x`, perturbing x[i].
template <typename F>
double CentralDiff(F f, double* x, double h = 1e-6) {
  const double saved = *x;
  *x = saved + h;
  const double up = f();
  *x = saved - h;
  const double down = f();
  *x = saved;
  return (up - down) / (2 * h);
}

void ExpectRelClose(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  EXPECT_LT(std::abs(analytic - numeric) / scale, 1e-4)
      << analytic << " vs " << numeric;
}

TEST(HeadGradientTest, MseMatchesFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.UniformInt(6));
    const int d = 1 + static_cast<int>(rng.UniformInt(5));
    Eigen::MatrixXd f(n, d);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = rng.Normal();
    Eigen::VectorXd w(d);
    for (int i = 0; i < d; ++i) w[i] = rng.Normal();
    double b = rng.Normal();
    std::vector<double> y(n);
    for (double& v : y) v = rng.Uniform();
    const HeadGradient g = MseHeadGradient(f, y, w, b);
    auto loss = [&] {
      std::vector<double> p(n);
      for (int i = 0; i < n; ++i) p[i] = Sigmoid(f.row(i).dot(w) + b);
      return MseLoss(p, y);
    };
    EXPECT_NEAR(g.loss, loss(), 1e-12);
    for (int j = 0; j < d; ++j) ExpectRelClose(g.d_weights[j], CentralDiff(loss, &w[j]));
    ExpectRelClose(g.d_bias, CentralDiff(loss, &b));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        ExpectRelClose(g.d_features(i, j), CentralDiff(loss, &f(i, j)));
      }
    }
  }
}

TEST(HeadGradientTest, BtMatchesFiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.UniformInt(6));
    const int d = 1 + static_cast<int>(rng.UniformInt(5));
    Eigen::MatrixXd c(n, d), r(n, d);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      c(i) = rng.Normal();
      r(i) = rng.Normal();
    }
    Eigen::VectorXd w(d);
    for (int i = 0; i < d; ++i) w[i] = rng.Normal();
    double b = rng.Normal();
    const HeadGradient g = BtHeadGradient(c, r, w, b);
    auto loss = [&] {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        total += BtLoss(c.row(i).dot(w) + b, r.row(i).dot(w) + b);
      }
      return total / n;
    };
    EXPECT_NEAR(g.loss, loss(), 1e-12);
    for (int j = 0; j < d; ++j) ExpectRelClose(g.d_weights[j], CentralDiff(loss, &w[j]));
    EXPECT_EQ(g.d_bias, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        ExpectRelClose(g.d_features(i, j), CentralDiff(loss, &c(i, j)));
        ExpectRelClose(g.d_features(n + i, j), CentralDiff(loss, &r(i, j)));
      }
    }
  }
}

nn::WordTokenizer WordsTokenizer() {
  return nn::WordTokenizer::Build({"ref gen a b c d e f g h"}, 100, 1, 0);
}

TEST(BuildPairInputTest, MarkersSegmentsAndOrder) {
  const auto tok = WordsTokenizer();
  const PairInput p = BuildPairInput(tok, "ref", "gen", 16);
  const int ref = tok.Encode("ref")[0];
  const int gen = tok.Encode("gen")[0];
  EXPECT_THAT(p.input.ids, ElementsAre(nn::WordTokenizer::kCls, ref,
                                       nn::WordTokenizer::kSep, gen));
  EXPECT_THAT(p.input.segments, ElementsAre(0, 0, 0, 1));
  EXPECT_FALSE(p.degenerate);
  EXPECT_FALSE(p.truncated);
  EXPECT_NE(BuildPairInput(tok, "a b", "c", 16).input.ids,
            BuildPairInput(tok, "c", "a b", 16).input.ids);
}

TEST(BuildPairInputTest, EmptyReferenceIsDegenerate) {
  const auto tok = WordsTokenizer();
  const PairInput p = BuildPairInput(tok, "", "gen", 16);
  EXPECT_TRUE(p.degenerate);
  EXPECT_THAT(p.input.ids,
              ElementsAre(nn::WordTokenizer::kCls, nn::WordTokenizer::kSep,
                          tok.Encode("gen")[0]));
}

TEST(BuildPairInputTest, TruncatesGenerationFirstKeepingHeads) {
  const auto tok = WordsTokenizer();
  // Budget 6 content tokens: reference of 2 fits, generation cut to 4.
  PairInput p = BuildPairInput(tok, "a b", "c d e f g h", 8);
  EXPECT_TRUE(p.truncated);
  EXPECT_EQ(p.input.ids, BuildPairInput(tok, "a b", "c d e f", 8).input.ids);
  // Long reference: generation keeps half the budget, reference the rest.
  p = BuildPairInput(tok, "a b c d e f", "g h a b c d", 8);
  EXPECT_EQ(p.input.ids, BuildPairInput(tok, "a b c", "g h a", 8).input.ids);
  EXPECT_EQ(p.input.ids.size(), 8u);
}

TEST(DatasetsTest, OverlapCorpusScoresFollowQuantizedOverlap) {
  const auto corpus = MakeOverlapLikertCorpus(300, 9);
  ASSERT_EQ(corpus.size(), 300u);
  std::set<int> levels;
  for (const LikertExample& ex : corpus) {
    std::istringstream rs(ex.reference), gs(ex.generation);
    std::set<std::string> ref{std::istream_iterator<std::string>(rs), {}};
    int shared = 0;
    std::set<std::string> seen;
    for (std::istream_iterator<std::string> it(gs), end; it != end; ++it) {
      if (ref.count(*it) && seen.insert(*it).second) ++shared;
    }
    const int expected = 1 + static_cast<int>(std::floor(4.0 * shared / 12 + 0.5));
    EXPECT_EQ(ex.gold_score, expected);
    EXPECT_EQ(DistinctOverlap(ex.reference, ex.generation), shared);
    levels.insert(ex.gold_score);
  }
  EXPECT_EQ(levels.size(), 5u);
  EXPECT_EQ(MakeOverlapLikertCorpus(20, 9), MakeOverlapLikertCorpus(20, 9));
}

TEST(DatasetsTest, JsonlRoundTripAndValidation) {
  testing::TempDir dir;
  const auto examples = MakeOverlapLikertCorpus(5, 1);
  SaveLikertExamples(dir.path() / "l.jsonl", examples);
  EXPECT_EQ(LoadLikertExamples(dir.path() / "l.jsonl"), examples);
  const auto pairs = MakeTopicPreferencePairs(5, 1);
  SavePreferencePairs(dir.path() / "p.jsonl", pairs);
  EXPECT_EQ(LoadPreferencePairs(dir.path() / "p.jsonl"), pairs);

  dir.Write("bad.jsonl",
            "{\"reference\":\"a\",\"generation\":\"b\",\"score\":9}\n");
  EXPECT_THROW(LoadLikertExamples(dir.path() / "bad.jsonl"), ValidationError);
  dir.Write("same.jsonl",
            "{\"prompt\":\"p\",\"chosen\":\"x\",\"rejected\":\"x\"}\n");
  EXPECT_THROW(LoadPreferencePairs(dir.path() / "same.jsonl"), ValidationError);
}

TEST(PairScorerTest, ZeroHeadScoresOneHalf) {
  PairScorer scorer(ScorerKind::kPrefBert, WordsTokenizer(), TinyConfig(), 1);
  scorer.head_weights().setZero();
  scorer.head_bias().setZero();
  EXPECT_EQ(scorer.Score("a b", "c d"), 0.5);
  EXPECT_EQ(scorer.Score("", "zzz"), 0.5);
}

TEST(PairScorerTest, SaveLoadGivesIdenticalScores) {
  testing::TempDir dir;
  const auto data = MakeOverlapLikertCorpus(60, 2);
  TrainConfig config;
  config.learning_rate = 1e-3;
  config.epochs = 1;
  TrainResult trained = TrainPrefBert(data, TinyConfig(), config);
  trained.model.Save(dir.path() / "model");
  const PairScorer loaded = PairScorer::Load(dir.path() / "model");
  const Json manifest = ReadJsonFile(dir.path() / "model" / "manifest.json");
  EXPECT_EQ(manifest["kind"], "prefbert");
  EXPECT_EQ(manifest["pooling"], "mean");
  EXPECT_EQ(manifest["max_length"], 40);
  EXPECT_EQ(manifest["tokenizer_id"], trained.model.tokenizer().id());
  Rng rng(7);
  const auto probes = MakeOverlapLikertCorpus(100, 77);
  for (const auto& p : probes) {
    const double a = trained.model.Score(p.reference, p.generation);
    const double b = loaded.Score(p.reference, p.generation);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, trained.model.Score(p.reference, p.generation));
  }
  EXPECT_THROW(PairScorer::Load(dir.path() / "missing"), ConfigError);
}

TEST(TrainPrefBertTest, ConstantTargetsConvergeToOneHalf) {
  auto data = MakeOverlapLikertCorpus(100, 3);
  for (auto& ex : data) ex.gold_score = 3;
  TrainConfig config;
  config.learning_rate = 1e-2;
  config.epochs = 20;
  config.batch_size = 16;
  const TrainResult r = TrainPrefBert(data, TinyConfig(), config);
  ASSERT_TRUE(r.report.has_heldout);
  EXPECT_EQ(r.report.heldout_size, 20u);
  EXPECT_LT(r.report.heldout_mse, 1e-3);
  EXPECT_NEAR(r.model.Score(data[0].reference, data[0].generation), 0.5, 0.03);
}

TEST(TrainPrefBertTest, EmptyHeldoutIsFlagged) {
  const auto data = MakeOverlapLikertCorpus(2, 3);
  TrainConfig config;
  config.epochs = 1;
  const TrainResult r = TrainPrefBert(data, TinyConfig(), config);
  EXPECT_FALSE(r.report.has_heldout);
  EXPECT_FALSE(ToJson(r.report).contains("heldout_mse"));
  EXPECT_EQ(r.report.epoch_train_loss.size(), 1u);
  EXPECT_THROW(TrainPrefBert({data[0]}, TinyConfig(), config), ValidationError);
}

TEST(TrainPrefBertTest, ZeroEpochsLeavesModelAtInitialization) {
  const auto data = MakeOverlapLikertCorpus(10, 3);
  TrainConfig config;
  config.epochs = 0;
  const TrainResult a = TrainPrefBert(data, TinyConfig(), config);
  const TrainResult b = TrainPrefBert(data, TinyConfig(), config);
  EXPECT_TRUE(a.report.epoch_train_loss.empty());
  EXPECT_EQ(a.model.Score("w001", "w002"), b.model.Score("w001", "w002"));
}

// One-dimensional features: the minimizer of the sigmoid-MSE head should
// agree with ordinary least squares on logit(clip(target)).
TEST(FitMseHeadTest, MatchesClosedFormLogitRegression) {
  Rng rng(11);
  const int n = 400;
  Eigen::MatrixXd features(n, 1);
  std::vector<double> targets(n);
  for (int i = 0; i < n; ++i) {
    features(i, 0) = 4.0 * rng.Uniform() - 2.0;
    const double noise = 0.02 * rng.Normal();
    targets[i] = std::clamp(Sigmoid(1.5 * features(i, 0) - 0.3) + noise, 0.0, 1.0);
  }
  // Oracle: 2x2 normal equations on z = logit(clip(y, 0.01, 0.99)).
  double sx = 0, sz = 0, sxx = 0, sxz = 0;
  for (int i = 0; i < n; ++i) {
    const double y = std::clamp(targets[i], 0.01, 0.99);
    const double z = std::log(y / (1 - y));
    const double x = features(i, 0);
    sx += x, sz += z, sxx += x * x, sxz += x * z;
  }
  const double slope = (n * sxz - sx * sz) / (n * sxx - sx * sx);
  const double intercept = (sz - slope * sx) / n;

  nn::Matrix w = nn::Matrix::Zero(1, 1), b = nn::Matrix::Zero(1, 1);
  TrainConfig config;
  config.learning_rate = 0.05;
  config.epochs = 300;
  config.batch_size = 50;
  const auto losses = FitMseHead(features, targets, config, &w, &b);
  EXPECT_LT(losses.back(), losses.front());
  EXPECT_NEAR(w(0, 0), slope, 0.05);
  EXPECT_NEAR(b(0, 0), intercept, 0.05);
}

TEST(FitMseHeadTest, NonFiniteLossAborts) {
  Eigen::MatrixXd features(2, 1);
  features << 1.0, std::nan("");
  nn::Matrix w = nn::Matrix::Ones(1, 1), b = nn::Matrix::Zero(1, 1);
  TrainConfig config;
  config.epochs = 1;
  try {
    FitMseHead(features, std::vector<double>{0.5, 0.5}, config, &w, &b);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_THAT(e.what(), HasSubstr("epoch 1"));
  }
}

TEST(TrainPrefBertTest, FrozenEncoderTrainsHeadOnly) {
  const auto data = MakeOverlapLikertCorpus(50, 4);
  TrainConfig config;
  config.epochs = 2;
  config.learning_rate = 1e-2;
  config.freeze_encoder = true;
  const TrainResult frozen = TrainPrefBert(data, TinyConfig(), config);
  config.epochs = 0;
  TrainResult init = TrainPrefBert(data, TinyConfig(), config);
  auto a = frozen.model.encoder().weights();
  auto b = init.model.encoder().weights();
  const auto ta = a.Tensors(), tb = b.Tensors();
  for (size_t i = 0; i < ta.size(); ++i) {
    EXPECT_EQ(*ta[i].second, *tb[i].second) << ta[i].first;
  }
  EXPECT_NE(frozen.model.head_weights(), init.model.head_weights());
}

TEST(TrainGrmTest, SinglePairConverges) {
  const std::vector<PreferencePair> pairs = {
      {"what is up", "the sky is up", "potato"}};
  TrainConfig config;
  config.learning_rate = 1e-2;
  config.epochs = 400;
  const TrainResult r = TrainGrm(pairs, TinyConfig(), config);
  EXPECT_FALSE(r.report.has_heldout);
  EXPECT_LT(r.report.epoch_train_loss.back(), 0.01);
  const double gap = r.model.Raw(pairs[0].prompt, pairs[0].chosen) -
                     r.model.Raw(pairs[0].prompt, pairs[0].rejected);
  EXPECT_GT(gap, 4.6);
  EXPECT_LT(BtLoss(r.model.Raw(pairs[0].prompt, pairs[0].chosen),
                   r.model.Raw(pairs[0].prompt, pairs[0].rejected)),
            0.01);
}

TEST(TrainGrmTest, SeparablePairsReachHighAccuracy) {
  const auto pairs = MakeTopicPreferencePairs(600, 5);
  TrainConfig config;
  config.learning_rate = 3e-3;
  config.epochs = 15;
  const TrainResult r = TrainGrm(pairs, TinyConfig(), config);
  ASSERT_TRUE(r.report.has_heldout);
  EXPECT_EQ(r.report.heldout_size, 120u);
  EXPECT_GT(r.report.heldout_pairwise_accuracy, 0.9);
}

TEST(TrainGrmTest, UntrainedModelIsAtChanceOnRandomPairs) {
  // Both sides drawn from the same distribution: no signal to exploit.
  Rng rng(6);
  std::vector<PreferencePair> pairs;
  auto words = [&](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += "w" + std::to_string(rng.UniformInt(60)) + " ";
    return s;
  };
  while (pairs.size() < 1000) {
    PreferencePair p{words(5), words(8), words(8)};
    if (p.chosen != p.rejected) pairs.push_back(p);
  }
  TrainConfig config;
  config.epochs = 0;
  const TrainResult r = TrainGrm(pairs, TinyConfig(), config);
  EXPECT_NEAR(r.report.heldout_pairwise_accuracy, 0.5, 0.1);
}

}  // namespace
}  // namespace longform::training
