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

#ifndef LONGFORM_COMMON_STATS_H_
#define LONGFORM_COMMON_STATS_H_

#include <cstdint>
#include <span>
#include <vector>

namespace longform {

double Sigmoid(double x);

// log(sigmoid(x)) without overflow for large |x|.
double LogSigmoid(double x);

double Mean(std::span<const double> values);

// Standard deviation with divisor N.
double PopulationStd(std::span<const double> values);

// 1-based ranks; tied values share the average of their positions.
std::vector<double> AverageRanks(std::span<const double> values);

// Pearson correlation of average ranks. Returns 0 when either side is
// constant.
double SpearmanCorrelation(std::span<const double> a,
                           std::span<const double> b);

// Round-half-up of a non-negative value.
int64_t RoundHalfUp(double value);

struct IndexSplit {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

// Seeded permutation of [0, n); the first round_half_up(fraction * n)
// indices form the test side. No size checks: callers enforce their own
// preconditions.
IndexSplit SplitIndices(size_t n, double test_fraction, uint64_t seed);

}  // namespace longform

#endif  // LONGFORM_COMMON_STATS_H_
