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

#include "longform/training/scorer.h"

#include <algorithm>

#include "longform/common/error.h"
#include "longform/common/rng.h"
#include "longform/common/stats.h"

namespace longform::training {
namespace {

constexpr int kManifestVersion = 1;

}  // namespace

std::string_view ScorerKindName(ScorerKind kind) {
  return kind == ScorerKind::kPrefBert ? "prefbert" : "grm";
}

ScorerKind ParseScorerKind(std::string_view name) {
  if (name == "prefbert") return ScorerKind::kPrefBert;
  if (name == "grm") return ScorerKind::kGrm;
  throw ConfigError("unknown reward model kind '" + std::string(name) +
                    "' (expected prefbert or grm)");
}

PairInput BuildPairInput(const nn::WordTokenizer& tokenizer,
                         std::string_view first, std::string_view second,
                         int max_length) {
  if (max_length < 2) throw ConfigError("max_length must be >= 2");
  std::vector<int> a = tokenizer.Encode(first);
  std::vector<int> b = tokenizer.Encode(second);
  PairInput out;
  out.degenerate = a.empty() || b.empty();
  const size_t budget = static_cast<size_t>(max_length) - 2;
  if (a.size() + b.size() > budget) {
    out.truncated = true;
    const size_t second_floor = std::min(b.size(), budget / 2);
    const size_t keep_b =
        std::max(second_floor, budget - std::min(a.size(), budget));
    b.resize(std::min(b.size(), keep_b));
    a.resize(std::min(a.size(), budget - b.size()));
  }
  auto& ids = out.input.ids;
  auto& segments = out.input.segments;
  ids.reserve(a.size() + b.size() + 2);
  ids.push_back(nn::WordTokenizer::kCls);
  ids.insert(ids.end(), a.begin(), a.end());
  ids.push_back(nn::WordTokenizer::kSep);
  segments.assign(ids.size(), 0);
  ids.insert(ids.end(), b.begin(), b.end());
  segments.resize(ids.size(), 1);
  return out;
}

PairScorer::PairScorer(ScorerKind kind, nn::WordTokenizer tokenizer,
                       nn::EncoderConfig config, uint64_t seed)
    : kind_(kind), tokenizer_(std::move(tokenizer)) {
  config.vocab_size = tokenizer_.vocab_size();
  Rng rng(seed);
  encoder_ = nn::TinyEncoder(config, rng.Fork());
  head_weights_ = nn::Matrix(config.d_model, 1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  for (Eigen::Index i = 0; i < head_weights_.size(); ++i) {
    head_weights_(i) = scale * rng.Normal();
  }
  head_bias_ = nn::Matrix::Zero(1, 1);
}

PairInput PairScorer::Encode(std::string_view first,
                             std::string_view second) const {
  return BuildPairInput(tokenizer_, first, second,
                        encoder_.config().max_length);
}

double PairScorer::RawFromFeatures(const Eigen::RowVectorXd& features) const {
  return features.dot(head_weights_.col(0)) + head_bias_(0, 0);
}

double PairScorer::Raw(std::string_view first, std::string_view second,
                       PairInput* encoded) const {
  PairInput local = Encode(first, second);
  const double raw = RawFromFeatures(encoder_.Forward(local.input, nullptr));
  if (encoded) *encoded = std::move(local);
  return raw;
}

double PairScorer::Score(std::string_view first, std::string_view second,
                         PairInput* encoded) const {
  return Sigmoid(Raw(first, second, encoded));
}

nn::TensorList PairScorer::Tensors() {
  nn::TensorList list = encoder_.weights().Tensors();
  list.emplace_back("head.weights", &head_weights_);
  list.emplace_back("head.bias", &head_bias_);
  return list;
}

Json PairScorer::Manifest() const {
  const nn::EncoderConfig& config = encoder_.config();
  return Json{
      {"format_version", kManifestVersion},
      {"kind", ScorerKindName(kind_)},
      {"pooling", nn::PoolingName(config.pooling)},
      {"max_length", config.max_length},
      {"tokenizer_id", tokenizer_.id()},
      {"normalization", kind_ == ScorerKind::kPrefBert
                            ? "target=(s-1)/4; score=sigmoid(w.h+b)"
                            : "score=sigmoid(w.h+b)"},
      {"input", kind_ == ScorerKind::kPrefBert
                    ? "[CLS] reference [SEP] generation"
                    : "[CLS] prompt [SEP] generation"},
      {"encoder", nn::ToJson(config)}};
}

void PairScorer::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  WriteJsonFile(dir / "manifest.json", Manifest());
  tokenizer_.Save(dir / "vocab.txt");
  PairScorer& self = const_cast<PairScorer&>(*this);
  nn::SaveTensors(dir / "encoder.bin", self.encoder_.weights().Tensors());
  nn::SaveTensors(dir / "head.bin", {{"head.weights", &self.head_weights_},
                                     {"head.bias", &self.head_bias_}});
}

PairScorer PairScorer::Load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("reward model directory not found: " + dir.string());
  }
  const Json manifest = ReadJsonFile(dir / "manifest.json");
  try {
    if (manifest.at("format_version").get<int>() != kManifestVersion) {
      throw ConfigError("unsupported reward model format in " + dir.string());
    }
    nn::WordTokenizer tokenizer = nn::WordTokenizer::Load(dir / "vocab.txt");
    if (tokenizer.id() != manifest.at("tokenizer_id").get<std::string>()) {
      throw ConfigError("tokenizer in " + dir.string() +
                        " does not match its manifest");
    }
    const nn::EncoderConfig config =
        nn::EncoderConfigFromJson(manifest.at("encoder"));
    PairScorer scorer(ParseScorerKind(manifest.at("kind").get<std::string>()),
                      std::move(tokenizer), config, 0);
    if (scorer.encoder_.config().vocab_size != config.vocab_size) {
      throw ConfigError("vocabulary size mismatch in " + dir.string());
    }
    nn::LoadTensors(dir / "encoder.bin", scorer.encoder_.weights().Tensors());
    nn::LoadTensors(dir / "head.bin", {{"head.weights", &scorer.head_weights_},
                                       {"head.bias", &scorer.head_bias_}});
    return scorer;
  } catch (const Json::exception& e) {
    throw ConfigError("malformed manifest in " + dir.string() + ": " +
                      e.what());
  }
}

}  // namespace longform::training
