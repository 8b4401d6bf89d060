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

#include "longform/nn/tensors.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "longform/common/error.h"

namespace longform::nn {
namespace {

constexpr char kMagic[8] = {'L', 'F', 'T', 'E', 'N', 'S', '0', '1'};

template <typename T>
void WritePod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

void ZeroTensors(const TensorList& tensors) {
  for (const auto& [name, t] : tensors) t->setZero();
}

double SquaredNorm(const TensorList& tensors) {
  double total = 0.0;
  for (const auto& [name, t] : tensors) total += t->squaredNorm();
  return total;
}

bool AllFinite(const TensorList& tensors) {
  for (const auto& [name, t] : tensors) {
    if (!t->allFinite()) return false;
  }
  return true;
}

void SaveTensors(const std::filesystem::path& path, const TensorList& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  WritePod<uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    WritePod<uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    WritePod<int64_t>(out, t->rows());
    WritePod<int64_t>(out, t->cols());
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void LoadTensors(const std::filesystem::path& path, const TensorList& tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path.string() + ": not a tensor file");
  }
  const auto count = ReadPod<uint64_t>(in);
  if (count != tensors.size()) {
    throw IoError(path.string() + ": expected " +
                  std::to_string(tensors.size()) + " tensors, found " +
                  std::to_string(count));
  }
  for (const auto& [name, t] : tensors) {
    const auto name_len = ReadPod<uint64_t>(in);
    if (!in || name_len > 4096) throw IoError(path.string() + ": corrupt");
    std::string stored(name_len, '\0');
    in.read(stored.data(), static_cast<std::streamsize>(name_len));
    const auto rows = ReadPod<int64_t>(in);
    const auto cols = ReadPod<int64_t>(in);
    if (!in || stored != name || rows != t->rows() || cols != t->cols()) {
      throw IoError(path.string() + ": tensor mismatch at " + name);
    }
    in.read(reinterpret_cast<char*>(t->data()),
            static_cast<std::streamsize>(t->size() * sizeof(double)));
    if (!in) throw IoError(path.string() + ": truncated at " + name);
  }
}

void Adam::Step(const TensorList& params, const TensorList& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("Adam::Step: parameter/gradient mismatch");
  }
  if (first_moment_.empty()) {
    for (const auto& [name, p] : params) {
      first_moment_.push_back(Matrix::Zero(p->rows(), p->cols()));
      second_moment_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++steps_;
  const double bias1 = 1.0 - std::pow(config_.beta1, steps_);
  const double bias2 = 1.0 - std::pow(config_.beta2, steps_);
  const double step_size = config_.learning_rate / bias1;
  for (size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i].second;
    const Matrix& g = *grads[i].second;
    Matrix& m = first_moment_[i];
    Matrix& v = second_moment_[i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    if (config_.weight_decay > 0.0) {
      p *= 1.0 - config_.learning_rate * config_.weight_decay;
    }
    p.array() -= step_size * m.array() /
                 ((v.array() / bias2).sqrt() + config_.epsilon);
  }
}

}  // namespace longform::nn
