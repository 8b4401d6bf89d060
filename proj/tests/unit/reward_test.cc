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
#include <functional>
#include <map>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "longform/common/error.h"
#include "longform/common/rng.h"
#include "longform/common/text.h"
#include "longform/reward/signals.h"
#include "longform/training/datasets.h"
#include "longform/training/trainer.h"
#include "test_util.h"

namespace longform::reward {
namespace {

using training::PairScorer;
using training::ScorerKind;

// Memoized recursive LCS over raw token vectors.
int OracleLcs(const std::vector<std::string>& a,
              const std::vector<std::string>& b) {
  std::map<std::pair<size_t, size_t>, int> memo;
  std::function<int(size_t, size_t)> go = [&](size_t i, size_t j) -> int {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const int v = a[i] == b[j] ? 1 + go(i + 1, j + 1)
                               : std::max(go(i + 1, j), go(i, j + 1));
    memo[key] = v;
    return v;
  };
  return go(0, 0);
}

TEST(RougeLTest, Examples) {
  EXPECT_EQ(RougeL("the cat sat", "the cat sat"), 1.0);
  EXPECT_NEAR(RougeL("the cat sat", "the cat"), 0.8, 1e-15);
  EXPECT_EQ(RougeL("a b c", "x y z"), 0.0);
  EXPECT_EQ(RougeL("", "x"), 0.0);
  EXPECT_EQ(RougeL("x", ""), 0.0);
}

TEST(RougeLTest, SelfSimilarityAndTrailingWhitespace) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    std::string s;
    const int n = 1 + static_cast<int>(rng.UniformInt(10));
    for (int k = 0; k < n; ++k) s += "t" + std::to_string(rng.UniformInt(5)) + " ";
    EXPECT_EQ(RougeL(s, s), 1.0);
    EXPECT_EQ(RougeL(s, s + "  \n\t"), 1.0);
    EXPECT_EQ(RougeL("t1 t2 t3", s), RougeL("t1 t2 t3", s + "   "));
  }
}

TEST(RougeLTest, MatchesBruteForceOracleOn200Pairs) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> a(rng.UniformInt(31)), b(rng.UniformInt(31));
    for (auto& t : a) t = "w" + std::to_string(rng.UniformInt(8));
    for (auto& t : b) t = "w" + std::to_string(rng.UniformInt(8));
    std::string sa, sb;
    for (auto& t : a) sa += t + " ";
    for (auto& t : b) sb += t + " ";
    const int l = OracleLcs(a, b);
    double expected = 0.0;
    if (!a.empty() && !b.empty() && l > 0) {
      const double p = static_cast<double>(l) / b.size();
      const double r = static_cast<double>(l) / a.size();
      expected = 2 * p * r / (p + r);
    }
    EXPECT_EQ(RougeL(sa, sb), expected) << sa << " | " << sb;
  }
}

// Provider with a fixed vector per token string.
class TableProvider : public EmbeddingProvider {
 public:
  explicit TableProvider(std::map<std::string, Eigen::VectorXd> table)
      : table_(std::move(table)) {}
  std::vector<TokenEmbedding> EmbedTokens(std::string_view text) const override {
    std::vector<TokenEmbedding> out;
    for (const auto& t : NormalizedTokens(text)) {
      out.push_back({t, table_.at(t).normalized()});
    }
    return out;
  }

 private:
  std::map<std::string, Eigen::VectorXd> table_;
};

Eigen::VectorXd Vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(EmbedSimilarityTest, IdentityAndConstantProvider) {
  HashedEmbeddingProvider hashed;
  EXPECT_NEAR(EmbedSimilarity("the quick fox", "the quick fox", hashed), 1.0,
              1e-12);
  TableProvider constant({{"a", Vec({1, 1})}, {"b", Vec({1, 1})},
                          {"c", Vec({1, 1})}});
  EXPECT_NEAR(EmbedSimilarity("a b", "c", constant), 1.0, 1e-12);
}

TEST(EmbedSimilarityTest, TwoByTwoCosineMatrices) {
  TableProvider orthogonal({{"r1", Vec({1, 0})}, {"r2", Vec({0, 1})},
                            {"g1", Vec({1, 0})}, {"g2", Vec({0, 1})}});
  EXPECT_NEAR(EmbedSimilarity("r1 r2", "g1 g2", orthogonal), 1.0, 1e-12);
  // Every cross cosine equals 0.5.
  const double s = std::sqrt(3.0) / 2;
  TableProvider half({{"r1", Vec({1, 0})}, {"r2", Vec({1, 0})},
                      {"g1", Vec({0.5, s})}, {"g2", Vec({0.5, s})}});
  EXPECT_NEAR(EmbedSimilarity("r1 r2", "g1 g2", half), 0.5, 1e-12);
}

TEST(EmbedSimilarityTest, NegativeCosinesClampAndEmptyIsFlagged) {
  TableProvider opposite({{"a", Vec({1, 0})}, {"b", Vec({-1, 0})}});
  EXPECT_EQ(EmbedSimilarity("a", "b", opposite), 0.0);
  bool degenerate = false;
  EXPECT_EQ(EmbedSimilarity("", "a", opposite, &degenerate), 0.0);
  EXPECT_TRUE(degenerate);
  EXPECT_EQ(EmbedSimilarity("a", "a", opposite, &degenerate), 1.0);
  EXPECT_FALSE(degenerate);
}

TEST(EmbeddingProviderTest, VectorsAreUnitLength) {
  HashedEmbeddingProvider hashed(32, 0.5, 3);
  for (const auto& t : hashed.EmbedTokens("Hello, world! hello again")) {
    EXPECT_NEAR(t.vector.norm(), 1.0, 1e-6);
  }
  auto model = std::make_shared<PairScorer>(
      ScorerKind::kPrefBert,
      nn::WordTokenizer::Build({"hello world"}, 10, 1, 8), nn::EncoderConfig{},
      1);
  EncoderEmbeddingProvider encoder(model);
  const auto tokens = encoder.EmbedTokens("hello unknown world");
  ASSERT_EQ(tokens.size(), 3u);
  for (const auto& t : tokens) EXPECT_NEAR(t.vector.norm(), 1.0, 1e-6);
  EXPECT_NEAR(EmbedSimilarity("hello world", "hello world", encoder), 1.0,
              1e-12);
}

std::shared_ptr<PairScorer> UntrainedScorer(ScorerKind kind) {
  nn::EncoderConfig config;
  config.max_length = 32;
  return std::make_shared<PairScorer>(
      kind, nn::WordTokenizer::Build({"a b c d e"}, 10, 1, 32), config, 5);
}

TEST(LearnedSignalsTest, GrmScoreIsSigmoidOfRaw) {
  auto model = UntrainedScorer(ScorerKind::kGrm);
  model->head_weights().setZero();
  model->head_bias().setZero();
  GrmSignal signal(model);
  EXPECT_EQ(signal.Score({"p", "r", "g"}).value, 0.5);
  model->head_bias()(0, 0) = 20.0;
  EXPECT_NEAR(signal.Score({"p", "r", "g"}).value, 1.0, 1e-8);

  auto trained = UntrainedScorer(ScorerKind::kGrm);
  GrmSignal monotone(trained);
  const double ra = trained->Raw("a b", "c d");
  const double rb = trained->Raw("a b", "e");
  const double sa = monotone.Score({"a b", "", "c d"}).value;
  const double sb = monotone.Score({"a b", "", "e"}).value;
  EXPECT_EQ(ra > rb, sa > sb);
  // Reference-free.
  EXPECT_EQ(monotone.Score({"a b", "x y z", "c d"}).value, sa);
}

TEST(LearnedSignalsTest, PrefBertZeroHeadAndDeterminism) {
  auto model = UntrainedScorer(ScorerKind::kPrefBert);
  PrefBertSignal signal(model);
  const SignalScore a = signal.Score({"", "a b c", "c b a"});
  const SignalScore b = signal.Score({"", "a b c", "c b a"});
  EXPECT_EQ(a.value, b.value);
  model->head_weights().setZero();
  model->head_bias().setZero();
  EXPECT_EQ(signal.Score({"", "a b c", "c b a"}).value, 0.5);
}

TEST(LearnedSignalsTest, TruncationIsFlaggedNotFatal) {
  auto model = UntrainedScorer(ScorerKind::kPrefBert);
  PrefBertSignal signal(model);
  std::string long_text;
  for (int i = 0; i < 100; ++i) long_text += "a b ";
  const SignalScore s = signal.Score({"", long_text, long_text});
  EXPECT_TRUE(s.truncated);
  EXPECT_GE(s.value, 0.0);
  EXPECT_LE(s.value, 1.0);
}

TEST(LearnedSignalsTest, WrongOrMissingModelIsConfigError) {
  EXPECT_THROW(GrmSignal(UntrainedScorer(ScorerKind::kPrefBert)), ConfigError);
  EXPECT_THROW(PrefBertSignal(nullptr), ConfigError);
  EXPECT_THROW(MakeSignal({.name = "grm"}), ConfigError);
  EXPECT_THROW(MakeSignal({.name = "prefbert", .model_path = "/nonexistent"}),
               ConfigError);
  EXPECT_THROW(MakeSignal({.name = "bleu"}), ConfigError);
}

TEST(LearnedSignalsTest, MakeSignalLoadsSavedModels) {
  testing::TempDir dir;
  UntrainedScorer(ScorerKind::kPrefBert)->Save(dir.path() / "pb");
  UntrainedScorer(ScorerKind::kGrm)->Save(dir.path() / "grm");
  EXPECT_EQ(MakeSignal({.name = "prefbert",
                        .model_path = (dir.path() / "pb").string()})
                ->name(),
            "prefbert");
  EXPECT_EQ(
      MakeSignal({.name = "grm", .model_path = (dir.path() / "grm").string()})
          ->name(),
      "grm");
  EXPECT_EQ(MakeSignal({.name = "embed_sim",
                        .model_path = (dir.path() / "pb").string()})
                ->name(),
            "embed_sim");
  EXPECT_THROW(
      MakeSignal({.name = "prefbert", .model_path = (dir.path() / "grm").string()}),
      ConfigError);
}

std::string RandomText(Rng& rng) {
  static const std::string kAlphabet =
      "abc xyz  ,.!?\n\t\"'<>/{}#`|-0123456789\xc3\xa9\xe2\x80\x94";
  std::string s;
  const int n = static_cast<int>(rng.UniformInt(40));
  for (int i = 0; i < n; ++i) s += kAlphabet[rng.UniformInt(kAlphabet.size())];
  return s;
}

TEST(SignalFuzzTest, AllSignalsStayInUnitInterval) {
  auto hashed = std::make_shared<HashedEmbeddingProvider>();
  std::vector<std::unique_ptr<RewardSignal>> signals;
  signals.push_back(std::make_unique<RougeLSignal>());
  signals.push_back(std::make_unique<EmbedSimSignal>(hashed));
  signals.push_back(std::make_unique<GrmSignal>(UntrainedScorer(ScorerKind::kGrm)));
  signals.push_back(
      std::make_unique<PrefBertSignal>(UntrainedScorer(ScorerKind::kPrefBert)));
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const RewardRequest req{RandomText(rng), RandomText(rng), RandomText(rng)};
    for (const auto& signal : signals) {
      const double v = signal->Score(req).value;
      ASSERT_TRUE(std::isfinite(v)) << signal->name();
      ASSERT_GE(v, 0.0) << signal->name();
      ASSERT_LE(v, 1.0) << signal->name();
    }
  }
}

TEST(LengthSignalsTest, Values) {
  TargetLengthSignal target(12);
  EXPECT_EQ(target.Score({"", "", "a b c d e f g h i j k l"}).value, 1.0);
  EXPECT_EQ(target.Score({"", "", "a b c d e f"}).value, 0.5);
  EXPECT_EQ(target.Score({"", "", ""}).value, 0.0);
  std::string long_text;
  for (int i = 0; i < 30; ++i) long_text += "x ";
  EXPECT_EQ(target.Score({"", "", long_text}).value, 0.0);
  LengthSignal length(10);
  EXPECT_EQ(length.Score({"", "", "a b c"}).value, 0.3);
  EXPECT_EQ(length.Score({"", "", long_text}).value, 1.0);
}

TEST(ScoreGroupTest, FormatGateSemantics) {
  RougeLSignal rouge;
  const std::vector<std::string> responses = {"<answer>x</answer>", "junk"};
  auto gated = ScoreGroup(rouge, "q", "x", responses, true);
  ASSERT_EQ(gated.size(), 2u);
  EXPECT_EQ(gated[0].value, 1.0);
  EXPECT_TRUE(gated[0].format_ok);
  EXPECT_EQ(gated[1].value, 0.0);
  EXPECT_FALSE(gated[1].format_ok);
  EXPECT_EQ(gated[0].signal_name, "rouge_l");

  auto open = ScoreGroup(rouge, "q", "x", responses, false);
  EXPECT_EQ(open[1].value, RougeL("x", "junk"));
  EXPECT_FALSE(open[1].format_ok);

  const std::vector<std::string> same(4, "<answer>the cat</answer>");
  auto four = ScoreGroup(rouge, "q", "the cat sat", same, true);
  ASSERT_EQ(four.size(), 4u);
  for (const auto& v : four) EXPECT_EQ(v.value, four[0].value);
  EXPECT_THROW(ScoreGroup(rouge, "q", "x", {}, true), ValidationError);
}

TEST(ScoreGroupTest, PreservesOrder) {
  TargetLengthSignal target(4);
  const std::vector<std::string> responses = {
      "<answer>a</answer>", "<answer>a b c d</answer>", "<answer>a b</answer>"};
  const auto values = ScoreGroup(target, "", "", responses, true);
  EXPECT_EQ(values[0].value, 0.25);
  EXPECT_EQ(values[1].value, 1.0);
  EXPECT_EQ(values[2].value, 0.5);
}

// A Likert regressor trained on overlap data should rank a full-overlap
// generation above a disjoint one for unseen references.
TEST(PrefBertOrderingTest, HighOverlapBeatsDisjointOnHeldOutReferences) {
  const auto data = training::MakeOverlapLikertCorpus(2000, 21);
  nn::EncoderConfig config;
  config.max_length = 32;
  config.d_model = 32;
  config.num_heads = 4;
  config.num_layers = 1;
  config.d_ff = 32;
  config.pooling = nn::Pooling::kMean;
  training::TrainConfig train;
  train.learning_rate = 1e-3;
  train.epochs = 10;
  auto model = std::make_shared<PairScorer>(
      training::TrainPrefBert(data, config, train).model);
  PrefBertSignal signal(model);
  const auto probes = training::MakeOverlapLikertCorpus(400, 22);
  Rng rng(23);
  int ordered = 0, total = 0;
  for (const auto& p : probes) {
    std::vector<std::string> ref;
    for (auto w : SplitWords(p.reference)) ref.emplace_back(w);
    rng.Shuffle(ref);
    std::string copy;
    for (const auto& w : ref) copy += w + " ";
    std::string disjoint;
    for (int i = 0; i < 40 && WordCount(disjoint) < 12; ++i) {
      const std::string w = "w0" + std::to_string(10 + i);
      if (p.reference.find(w) == std::string::npos) disjoint += w + " ";
    }
    ++total;
    if (signal.Score({"", p.reference, copy}).value >
        signal.Score({"", p.reference, disjoint}).value) {
      ++ordered;
    }
  }
  EXPECT_GE(static_cast<double>(ordered) / total, 0.95);
}

}  // namespace
}  // namespace longform::reward
