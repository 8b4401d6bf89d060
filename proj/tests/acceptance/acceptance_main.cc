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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every check recomputes its expectation with an independent oracle
// or hand-computed constants.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <regex>
#include <string>
#include <vector>

#include "../e2e_fixture.h"
#include "longform/common/jsonl.h"
#include "longform/common/rng.h"
#include "longform/common/stats.h"
#include "longform/common/text.h"
#include "longform/corpus/corpus.h"
#include "longform/eval/metrics.h"
#include "longform/grpo/objective.h"
#include "longform/grpo/policy.h"
#include "longform/grpo/trainer.h"
#include "longform/nn/encoder.h"
#include "longform/reward/signals.h"
#include "longform/training/datasets.h"
#include "longform/training/losses.h"
#include "longform/training/trainer.h"

namespace longform {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
  int failures = 0;
  std::string first_failure;

  void Expect(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (failures++ == 0) first_failure = what;
  }
};

std::string Fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, value);
  return buf;
}

double RelError(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// ---------------------------------------------------------------------------

Outcome LikertNormalization() {
  Outcome o;
  const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int s = 1; s <= 5; ++s) {
    o.Expect(training::NormalizeLikert(s) == expected[s - 1],
             "score " + std::to_string(s));
  }
  o.detail = "1..5 -> 0, 0.25, 0.5, 0.75, 1";
  return o;
}

Outcome AdvantageSuite() {
  Outcome o;
  Rng rng(101);
  int constant_groups = 0;
  double worst_mean = 0, worst_std = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int g = 2 + static_cast<int>(rng.UniformInt(7));
    const bool constant = trial % 10 == 0;
    std::vector<double> r(g);
    for (double& v : r) v = constant ? 0.7 : rng.Uniform();
    const auto a = grpo::ComputeAdvantages(r, 1e-6);
    if (constant) {
      ++constant_groups;
      o.Expect(std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; }),
               "constant group not all zero");
      continue;
    }
    long double sum = 0, sq = 0;
    for (double v : a) sum += v;
    const long double mean = sum / g;
    for (double v : a) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(static_cast<double>(sq / g));
    worst_mean = std::max(worst_mean, std::abs(static_cast<double>(mean)));
    worst_std = std::max(worst_std, std::abs(sd - 1.0));
    o.Expect(std::abs(static_cast<double>(mean)) <= 1e-9, "mean");
    o.Expect(std::abs(sd - 1.0) <= 1e-6, "std");

    // Invariance under r -> k r + c. Doubling is exact in floating point.
    std::vector<double> doubled, affine;
    const double k = 0.1 + 5 * rng.Uniform(), c = 10 * rng.Uniform() - 5;
    for (double v : r) {
      doubled.push_back(2 * v);
      affine.push_back(k * v + c);
    }
    o.Expect(grpo::ComputeAdvantages(doubled, 1e-6) == a, "scale by 2 not exact");
    const auto b = grpo::ComputeAdvantages(affine, 1e-6);
    for (int i = 0; i < g; ++i) {
      o.Expect(std::abs(b[i] - a[i]) <= 1e-9, "affine invariance");
    }
  }
  o.detail = "1000 groups (" + std::to_string(constant_groups) +
             " constant), max |mean| " + Fmt("%.1e", worst_mean) +
             ", max |std-1| " + Fmt("%.1e", worst_std);
  return o;
}

// Longest common subsequence by enumerating every subsequence of the shorter
// sequence.
int BruteForceLcs(const std::vector<std::string>& a,
                  const std::vector<std::string>& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  int best = 0;
  for (uint32_t mask = 0; mask < (1u << small.size()); ++mask) {
    const int bits = std::popcount(mask);
    if (bits <= best) continue;
    size_t j = 0;
    bool ok = true;
    for (size_t i = 0; i < small.size() && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < large.size() && large[j] != small[i]) ++j;
      if (j == large.size()) ok = false;
      ++j;
    }
    if (ok) best = bits;
  }
  return best;
}

Outcome RougeAgainstLcsOracle() {
  Outcome o;
  Rng rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> ref(rng.UniformInt(13)), gen(rng.UniformInt(13));
    if (trial % 3 == 0) gen.resize(rng.UniformInt(30));
    for (auto& t : ref) t = "w" + std::to_string(rng.UniformInt(6));
    for (auto& t : gen) t = "w" + std::to_string(rng.UniformInt(6));
    std::string rs, gs;
    for (const auto& t : ref) rs += t + " ";
    for (const auto& t : gen) gs += (trial % 2 ? "  " : "\t") + t;
    const int l = BruteForceLcs(ref, gen);
    double expected = 0.0;
    if (l > 0) {
      const double p = static_cast<double>(l) / gen.size();
      const double r = static_cast<double>(l) / ref.size();
      expected = 2 * p * r / (p + r);
    }
    o.Expect(reward::RougeL(rs, gs) == expected, "pair " + std::to_string(trial));
  }
  o.detail = "200 random pairs, exact equality";
  return o;
}

double CentralDiff(const std::function<double()>& f, double* x,
                   double h = 1e-6) {
  const double saved = *x;
  *x = saved + h;
  const double up = f();
  *x = saved - h;
  const double down = f();
  *x = saved;
  return (up - down) / (2 * h);
}

using LogProbs = std::vector<std::vector<std::vector<double>>>;

int CheckObjectiveGradients(const grpo::GrpoConfig& config, uint64_t seed,
                            Outcome& o, double* worst) {
  Rng rng(seed);
  int instances = 0;
  while (instances < 20) {
    std::vector<grpo::GenerationGroup> groups;
    LogProbs new_lp, ref_lp;
    bool near_kink = false;
    for (int k = 0; k < 2; ++k) {
      grpo::GenerationGroup group;
      group.prompt_id = "p" + std::to_string(k);
      std::vector<std::vector<double>> nl, rl;
      for (int i = 0; i < 3; ++i) {
        const int len = 1 + static_cast<int>(rng.UniformInt(5));
        group.responses.push_back("r");
        group.rewards.push_back(rng.Uniform());
        std::vector<double> old(len), nw(len), rf(len);
        double total = 0;
        for (int t = 0; t < len; ++t) {
          old[t] = -3 * rng.Uniform() - 0.01;
          nw[t] = old[t] + 0.05 * rng.Normal();
          rf[t] = old[t] + 0.05 * rng.Normal();
          total += nw[t] - old[t];
          if (config.token_level_ratio) {
            const double rho = std::exp(nw[t] - old[t]);
            near_kink |= std::abs(std::abs(rho - 1) - config.clip_epsilon) < 1e-4;
          }
        }
        if (!config.token_level_ratio) {
          const double rho = std::exp(total);
          near_kink |= std::abs(std::abs(rho - 1) - config.clip_epsilon) < 1e-4;
        }
        group.old_logprobs.push_back(old);
        nl.push_back(nw);
        rl.push_back(rf);
      }
      group.advantages = grpo::ComputeAdvantages(group.rewards, 1e-6);
      groups.push_back(group);
      new_lp.push_back(nl);
      ref_lp.push_back(rl);
    }
    if (near_kink) continue;
    ++instances;
    const grpo::ObjectiveResult r =
        grpo::GrpoObjective(groups, new_lp, ref_lp, config);
    auto objective = [&] {
      return grpo::GrpoObjective(groups, new_lp, ref_lp, config).objective;
    };
    for (size_t g = 0; g < new_lp.size(); ++g) {
      for (size_t i = 0; i < new_lp[g].size(); ++i) {
        for (size_t t = 0; t < new_lp[g][i].size(); ++t) {
          const double e =
              RelError(r.gradient[g][i][t], CentralDiff(objective, &new_lp[g][i][t]));
          *worst = std::max(*worst, e);
          o.Expect(e < 1e-4, "grpo_objective gradient");
        }
      }
    }
  }
  return instances;
}

Outcome GradientChecks() {
  Outcome o;
  double worst_grpo = 0, worst_mse = 0, worst_bt = 0;
  grpo::GrpoConfig seq;
  seq.kl_beta = 0.05;
  seq.clip_epsilon = 0.1;
  grpo::GrpoConfig tok = seq;
  tok.token_level_ratio = true;
  tok.clip_epsilon = 0.05;
  tok.kl_beta = 0.2;
  const int n_grpo = CheckObjectiveGradients(seq, 31, o, &worst_grpo) +
                     CheckObjectiveGradients(tok, 32, o, &worst_grpo);

  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.UniformInt(6));
    const int d = 1 + static_cast<int>(rng.UniformInt(5));
    Eigen::MatrixXd f(n, d), c(n, d), rj(n, d);
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      f(i) = rng.Normal(), c(i) = rng.Normal(), rj(i) = rng.Normal();
    }
    Eigen::VectorXd w(d);
    for (int i = 0; i < d; ++i) w[i] = rng.Normal();
    double b = rng.Normal();
    std::vector<double> y(n);
    for (double& v : y) v = rng.Uniform();

    // MSE over sigmoid(f w + b), written out directly.
    auto mse = [&] {
      double total = 0;
      for (int i = 0; i < n; ++i) {
        const double p = 1.0 / (1.0 + std::exp(-(f.row(i).dot(w) + b)));
        total += (p - y[i]) * (p - y[i]);
      }
      return total / n;
    };
    const training::HeadGradient gm = training::MseHeadGradient(f, y, w, b);
    auto track = [&](double analytic, double numeric, double* worst,
                     const char* what) {
      const double e = RelError(analytic, numeric);
      *worst = std::max(*worst, e);
      o.Expect(e < 1e-4, what);
    };
    for (int j = 0; j < d; ++j) track(gm.d_weights[j], CentralDiff(mse, &w[j]), &worst_mse, "mse w");
    track(gm.d_bias, CentralDiff(mse, &b), &worst_mse, "mse b");
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        track(gm.d_features(i, j), CentralDiff(mse, &f(i, j)), &worst_mse, "mse f");
      }
    }

    // Mean of log(1 + exp(-(s_c - s_r))).
    auto bt = [&] {
      double total = 0;
      for (int i = 0; i < n; ++i) {
        total += std::log1p(std::exp(-(c.row(i).dot(w) - rj.row(i).dot(w))));
      }
      return total / n;
    };
    const training::HeadGradient gb = training::BtHeadGradient(c, rj, w, b);
    for (int j = 0; j < d; ++j) track(gb.d_weights[j], CentralDiff(bt, &w[j]), &worst_bt, "bt w");
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        track(gb.d_features(i, j), CentralDiff(bt, &c(i, j)), &worst_bt, "bt chosen");
        track(gb.d_features(n + i, j), CentralDiff(bt, &rj(i, j)), &worst_bt, "bt rejected");
      }
    }
  }
  o.detail = std::to_string(n_grpo) + " grpo_objective / 20 mse / 20 bt instances;"
             " max rel err " + Fmt("%.1e", worst_grpo) + " / " +
             Fmt("%.1e", worst_mse) + " / " + Fmt("%.1e", worst_bt);
  return o;
}

std::vector<eval::PairwiseComparison> Repeat(const std::string& a,
                                             const std::string& b,
                                             eval::Outcome outcome, int n) {
  return std::vector<eval::PairwiseComparison>(n, {"p", a, b, outcome});
}

// Three-model log-likelihood maximized by a coarse-to-fine grid over the two
// free log-strengths. Returns win-rate percentages.
std::array<double, 3> GridOracle(const double wins[3][3]) {
  auto loglik = [&](double x, double y) {
    const double w[3] = {1.0, std::exp(x), std::exp(y)};
    double ll = 0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i != j && wins[i][j] > 0) ll += wins[i][j] * std::log(w[i] / (w[i] + w[j]));
      }
    }
    return ll;
  };
  double cx = 0, cy = 0, half = 8.0;
  for (int round = 0; round < 14; ++round) {
    const int steps = 40;
    const double h = 2 * half / steps;
    double best = -1e300, bx = cx, by = cy;
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= steps; ++j) {
        const double x = cx - half + i * h, y = cy - half + j * h;
        const double ll = loglik(x, y);
        if (ll > best) best = ll, bx = x, by = y;
      }
    }
    cx = bx, cy = by, half = 2 * h;
  }
  const double w[3] = {1.0, std::exp(cx), std::exp(cy)};
  const double s = w[0] + w[1] + w[2];
  return {100 * w[0] / s, 100 * w[1] / s, 100 * w[2] / s};
}

Outcome BradleyTerry() {
  Outcome o;
  using eval::Outcome;
  double worst2 = 0, worst3 = 0;
  Rng rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    const int a = 1 + static_cast<int>(rng.UniformInt(8));
    const int b = 1 + static_cast<int>(rng.UniformInt(8));
    auto comps = Repeat("A", "B", Outcome::kAWins, a);
    auto more = Repeat("A", "B", Outcome::kBWins, b);
    comps.insert(comps.end(), more.begin(), more.end());
    const eval::BtRating r = eval::FitBradleyTerry(comps, {.smoothing = 0.0});
    const double e = std::abs(r.win_rate_pct.at("A") - 100.0 * a / (a + b));
    worst2 = std::max(worst2, e);
    o.Expect(e < 1e-6, "2-model closed form");
  }
  const char* names[3] = {"A", "B", "C"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<eval::PairwiseComparison> comps;
    double wins[3][3] = {};
    const eval::BtOptions options;
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        const int w = static_cast<int>(rng.UniformInt(6));
        const int l = static_cast<int>(rng.UniformInt(6));
        const int t = static_cast<int>(rng.UniformInt(3));
        for (auto [outcome, n] : {std::pair{Outcome::kAWins, w},
                                  std::pair{Outcome::kBWins, l},
                                  std::pair{Outcome::kTie, t}}) {
          auto part = Repeat(names[i], names[j], outcome, n);
          comps.insert(comps.end(), part.begin(), part.end());
        }
        wins[i][j] += w + options.tie_weight * t + options.smoothing;
        wins[j][i] += l + options.tie_weight * t + options.smoothing;
      }
    }
    const auto oracle = GridOracle(wins);
    const eval::BtRating fit = eval::FitBradleyTerry(comps, options);
    for (int i = 0; i < 3; ++i) {
      const double e = std::abs(fit.win_rate_pct.at(names[i]) - oracle[i]);
      worst3 = std::max(worst3, e);
      o.Expect(e < 1e-3, "3-model grid oracle");
    }
  }
  o.detail = "50 two-model fits max err " + Fmt("%.1e", worst2) +
             " pp; 20 three-model fits vs grid max err " + Fmt("%.1e", worst3) +
             " pp";
  return o;
}

Outcome BtLossValues() {
  Outcome o;
  Rng rng(505);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = 200 * rng.Uniform() - 100;
    const double e = std::abs(training::BtLoss(x, x) - std::log(2.0));
    worst = std::max(worst, e);
    o.Expect(e <= 1e-9, "bt_loss(x, x)");
  }
  const double win = training::BtLoss(50, -50);
  const double loss = training::BtLoss(-50, 50);
  o.Expect(win >= 0 && win < 1e-40, "bt_loss(50, -50) ~ 0");
  o.Expect(std::abs(loss - 100.0) < 1e-9, "bt_loss(-50, 50) ~ 100");
  o.Expect(std::isfinite(training::BtLoss(-1e4, 1e4)) &&
               std::abs(training::BtLoss(-1e4, 1e4) - 2e4) < 1e-6,
           "no overflow at 2e4");
  o.detail = "max |bt_loss(x,x) - ln 2| " + Fmt("%.1e", worst) +
             "; saturation 50/-50 -> " + Fmt("%.2e", win) + ", -50/50 -> " +
             Fmt("%.6f", loss);
  return o;
}

// Spearman with average ranks for ties, computed from scratch.
double OracleSpearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (size_t i = 0; i < idx.size();) {
      size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0 + 1;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

Outcome PrefBertDeskScale() {
  Outcome o;
  const auto data = training::MakeOverlapLikertCorpus(5000, 0);
  nn::EncoderConfig ec;
  ec.max_length = 40;
  ec.pooling = nn::Pooling::kMean;
  ec = nn::ApplyEncoderPreset("tiny", ec);
  training::TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.epochs = 10;
  tc.batch_size = 32;
  tc.heldout_fraction = 0.2;
  const auto start = std::chrono::steady_clock::now();
  const training::TrainResult r = training::TrainPrefBert(data, ec, tc);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // Fresh draw from the same generator, scored with independent metrics.
  const auto fresh = training::MakeOverlapLikertCorpus(1000, 9999);
  std::vector<double> pred, gold;
  double se = 0;
  for (const auto& ex : fresh) {
    pred.push_back(r.model.Score(ex.reference, ex.generation));
    gold.push_back((ex.gold_score - 1) / 4.0);
    se += (pred.back() - gold.back()) * (pred.back() - gold.back());
  }
  const double fresh_mse = se / fresh.size();
  const double fresh_rho = OracleSpearman(pred, gold);
  o.Expect(r.report.has_heldout, "held-out split present");
  o.Expect(r.report.heldout_spearman > 0.8, "held-out Spearman");
  o.Expect(r.report.heldout_mse < 0.05, "held-out MSE");
  o.Expect(fresh_rho > 0.8, "fresh-sample Spearman");
  o.Expect(fresh_mse < 0.05, "fresh-sample MSE");
  o.Expect(seconds < 15 * 60, "time budget");
  o.detail = "held-out (n=" + std::to_string(r.report.heldout_size) +
             ") Spearman " + Fmt("%.3f", r.report.heldout_spearman) + ", MSE " +
             Fmt("%.4f", r.report.heldout_mse) + "; fresh n=1000 Spearman " +
             Fmt("%.3f", fresh_rho) + ", MSE " + Fmt("%.4f", fresh_mse) + "; " +
             Fmt("%.0f", seconds) + " s";
  return o;
}

std::vector<corpus::PromptRecord> ToyPrompts(int n) {
  std::vector<corpus::PromptRecord> out;
  for (int i = 0; i < n; ++i) {
    corpus::PromptRecord r;
    r.id = "p" + std::to_string(i);
    r.instruction = "question " + std::to_string(i);
    r.reference = "reference " + std::to_string(i);
    out.push_back(r);
  }
  return out;
}

grpo::GrpoRunConfig ToyRun() {
  grpo::GrpoRunConfig config;
  config.grpo.learning_rate = 0.05;
  config.grpo.batch_size = 8;
  config.grpo.kl_beta = 0.01;
  config.grpo.max_gen_tokens = 32;
  config.steps = 200;
  config.seed = 3;
  return config;
}

double MeanOf(const std::vector<grpo::CurvePoint>& curve, size_t begin,
              size_t end, double grpo::CurvePoint::*field) {
  double s = 0;
  for (size_t i = begin; i < end; ++i) s += curve[i].*field;
  return s / (end - begin);
}

Outcome GrpoToyConvergence() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  // Target length 12 words: the reward optimum is 1.
  grpo::ToyPolicy target_policy({.vocabulary = 20, .max_tokens = 32});
  reward::TargetLengthSignal target(12);
  const auto tr = grpo::GrpoTrain(target_policy, ToyPrompts(16), target, ToyRun());
  const double first = MeanOf(tr.curve, 0, 10, &grpo::CurvePoint::mean_reward);
  const double last = MeanOf(tr.curve, tr.curve.size() - 10, tr.curve.size(),
                             &grpo::CurvePoint::mean_reward);
  o.Expect(tr.curve.size() == 200, "200 steps");
  o.Expect(last >= 0.9 * 1.0, "target-length reward >= 0.9 of optimum");

  // Length-proportional reward with a 32-word cap.
  grpo::ToyPolicy length_policy({.vocabulary = 20, .max_tokens = 32});
  reward::LengthSignal length(32);
  const auto lr = grpo::GrpoTrain(length_policy, ToyPrompts(16), length, ToyRun());
  std::vector<double> blocks;
  for (size_t i = 0; i + 10 <= lr.curve.size(); i += 10) {
    blocks.push_back(MeanOf(lr.curve, i, i + 10, &grpo::CurvePoint::mean_length_words));
  }
  const double band = 0.9 * 32;
  size_t i = 1;
  for (; i < blocks.size() && blocks[i - 1] < band; ++i) {
    o.Expect(blocks[i] >= blocks[i - 1], "length non-decreasing");
  }
  o.Expect(i < blocks.size(), "length reaches the cap band");
  for (; i < blocks.size(); ++i) o.Expect(blocks[i] >= band, "length stays at cap");
  // Reward tracks length along the curve.
  std::vector<double> rewards, lengths;
  for (const auto& p : lr.curve) {
    rewards.push_back(p.mean_reward);
    lengths.push_back(p.mean_length_words);
  }
  const double n = static_cast<double>(rewards.size());
  const double mr = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  const double ml = std::accumulate(lengths.begin(), lengths.end(), 0.0) / n;
  double cov = 0, vr = 0, vl = 0;
  for (size_t k = 0; k < rewards.size(); ++k) {
    cov += (rewards[k] - mr) * (lengths[k] - ml);
    vr += (rewards[k] - mr) * (rewards[k] - mr);
    vl += (lengths[k] - ml) * (lengths[k] - ml);
  }
  const double corr = cov / std::sqrt(vr * vl);
  o.Expect(corr > 0.9, "reward/length correlation");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.Expect(seconds < 600, "time budget");
  o.detail = "target-length reward " + Fmt("%.3f", first) + " -> " +
             Fmt("%.3f", last) + "; length " + Fmt("%.1f", blocks.front()) +
             " -> " + Fmt("%.1f", blocks.back()) + " words (cap 32), reward/length r=" +
             Fmt("%.3f", corr) + "; " + Fmt("%.0f", seconds) + " s";
  return o;
}

fs::path TestData(const char* name) {
  return fs::path(LONGFORM_TESTDATA_DIR) / name;
}

// Line-anchored patterns are tried at the start of every line, the others
// anywhere; std::regex (ECMAScript) instead of the library's engine.
bool MarkdownOracle(const std::string& text) {
  static const std::regex anchored[] = {
      std::regex(R"(#{1,6}\s)"), std::regex(R"([-*+]\s)"),
      std::regex(R"(\d+\.\s)"), std::regex(R"(>\s)")};
  static const std::regex floating[] = {std::regex(R"(```[\s\S]+?```)"),
                                        std::regex(R"(`[^`\n]+?`)"),
                                        std::regex(R"(\|.+\|)")};
  for (const auto& re : floating) {
    if (std::regex_search(text, re)) return true;
  }
  size_t start = 0;
  while (start <= text.size()) {
    const size_t end = text.find('\n', start);
    const std::string line = text.substr(
        start, end == std::string::npos ? std::string::npos : end - start + 1);
    for (const auto& re : anchored) {
      if (std::regex_search(line, re, std::regex_constants::match_continuous)) {
        return true;
      }
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return false;
}

Outcome MarkdownFixture() {
  Outcome o;
  const Json cases = ReadJsonFile(TestData("markdown_cases.json"));
  int agree = 0, positives = 0;
  for (const Json& c : cases) {
    const std::string text = c["text"];
    const bool label = c["markdown"];
    positives += label;
    const bool ok = eval::MarkdownCheck(text) == label && MarkdownOracle(text) == label;
    agree += ok;
    o.Expect(ok, text);
  }
  o.Expect(cases.size() == 50, "fixture size");
  o.detail = std::to_string(agree) + "/" + std::to_string(cases.size()) +
             " agree (" + std::to_string(positives) + " positive)";
  return o;
}

Outcome RepetitionFixture() {
  Outcome o;
  const Json cases = ReadJsonFile(TestData("repetition_cases.json"));
  for (const Json& c : cases) {
    const std::string text = c["text"];
    const int b = c["bigrams"], u = c["distinct"];
    const double expected = b <= 1 ? 0.0 : 100.0 * (b - u) / b;
    o.Expect(eval::RepetitionRate(text) == expected, "repetition: " + text);
    o.Expect(WordCount(text) == c["words"].get<int>(), "words: " + text);
  }
  o.Expect(cases.size() == 20, "fixture size");
  o.detail = std::to_string(cases.size()) + " cases, exact equality";
  return o;
}

int RunCli(const fs::path& cwd, const std::string& args) {
  const std::string command = "cd '" + cwd.string() + "' && '" + LONGFORM_CLI +
                              "' " + args + " >/dev/null 2>>cli.log";
  const int raw = std::system(command.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome EndToEndEvaluation() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() /
                       ("longform_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto files = testing::WriteE2eFixture(dir / "fixture");
  const int eval_status = RunCli(
      dir, "evaluate --set run_dir=run eval.smoothing=0 eval.tolerance=1e-13"
           " eval.judge.initial_backoff_ms=0 eval.prompts=" +
               files.prompts.string() + " eval.responses=" + files.responses.string() +
               " eval.judge.recorded_path=" + files.judge.string());
  o.Expect(eval_status == 0, "evaluate exit status");
  const int report_status =
      RunCli(dir, "report --in run/verdicts.jsonl --out rebuilt.json");
  o.Expect(report_status == 0, "report exit status");
  if (!o.pass) {
    o.detail = "CLI failed; see " + (dir / "cli.log").string();
    return o;
  }
  o.Expect(ReadTextFile(dir / "rebuilt.json") == ReadTextFile(dir / "run/report.json"),
           "report not bit-for-bit");
  const Json report = ReadJsonFile(dir / "rebuilt.json");

  // Hand-computed from the fixture table.
  struct Expected {
    const char* block;
    const char* model;
    double mean, success;
  };
  const Expected expected[] = {
      {"overall", "model-a", 117.0 / 30, 100.0 * 20 / 30},
      {"overall", "model-b", 99.0 / 30, 100.0 * 13 / 30},
      {"overall", "model-c", 65.0 / 30, 100.0 * 6 / 30},
      {"eli5", "model-a", 59.0 / 15, 100.0 * 10 / 15},
      {"eli5", "model-b", 50.0 / 15, 100.0 * 7 / 15},
      {"eli5", "model-c", 33.0 / 15, 100.0 * 3 / 15},
      {"alpaca", "model-a", 58.0 / 15, 100.0 * 10 / 15},
      {"alpaca", "model-b", 49.0 / 15, 100.0 * 6 / 15},
      {"alpaca", "model-c", 32.0 / 15, 100.0 * 3 / 15},
  };
  double worst_mean = 0;
  for (const Expected& e : expected) {
    const Json& block = std::string(e.block) == "overall"
                            ? report["overall"]
                            : report["datasets"][e.block];
    const Json& m = block["models"][e.model];
    const double dm = std::abs(m["mean_likert"].get<double>() - e.mean);
    worst_mean = std::max(worst_mean, dm);
    o.Expect(dm < 1e-12, std::string("mean ") + e.block + "/" + e.model);
    o.Expect(std::abs(m["success_rate_pct"].get<double>() - e.success) < 1e-12,
             std::string("success ") + e.block + "/" + e.model);
  }
  // Win counts A>B 20/30, A>C 24/30, B>C 20/30 are matched exactly by
  // strengths (4, 2, 1) / 7.
  const double bt[3] = {400.0 / 7, 200.0 / 7, 100.0 / 7};
  double worst_bt = 0;
  for (int i = 0; i < 3; ++i) {
    const double got =
        report["overall"]["models"][testing::kE2eModels[i]]["bt_win_rate_pct"];
    worst_bt = std::max(worst_bt, std::abs(got - bt[i]));
  }
  o.Expect(worst_bt < 1e-9, "BT win rates");
  o.Expect(report["overall"]["verdicts"] == 90 && report["overall"]["unparsed"] == 0,
           "verdict counts");
  o.detail = "3 models x 30 prompts via evaluate + report; means/success exact "
             "(max err " + Fmt("%.0e", worst_mean) + "), BT " +
             Fmt("%.4f", bt[0]) + "/" + Fmt("%.4f", bt[1]) + "/" +
             Fmt("%.4f", bt[2]) + " (max err " + Fmt("%.0e", worst_bt) +
             "), report rebuilt bit-for-bit";
  fs::remove_all(dir);
  return o;
}

}  // namespace
}  // namespace longform

int main() {
  using longform::Outcome;
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"likert_normalization", longform::LikertNormalization},
      {"advantage_suite", longform::AdvantageSuite},
      {"rouge_l_vs_lcs_oracle", longform::RougeAgainstLcsOracle},
      {"gradient_checks", longform::GradientChecks},
      {"bradley_terry_fit", longform::BradleyTerry},
      {"bt_loss_values", longform::BtLossValues},
      {"prefbert_desk_scale", longform::PrefBertDeskScale},
      {"grpo_toy_convergence", longform::GrpoToyConvergence},
      {"markdown_fixture", longform::MarkdownFixture},
      {"repetition_word_count_fixture", longform::RepetitionFixture},
      {"end_to_end_offline_evaluation", longform::EndToEndEvaluation},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.first_failure = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    failed += !o.pass;
    std::printf("%s %-31s %s", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    if (!o.pass) {
      std::printf(" [%d failure(s), first: %s]", o.failures,
                  o.first_failure.c_str());
    }
    std::printf(" (%.1fs)\n", seconds);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
