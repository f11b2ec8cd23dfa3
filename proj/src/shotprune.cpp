// Copyright 2026 The MaskPress Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "maskpress/shotprune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace maskpress {

const char* ShotStrategyName(ShotStrategy s) {
  switch (s) {
    case ShotStrategy::kRandomVariableK: return "random_variable_k";
    case ShotStrategy::kRandomFixedK: return "random_fixed_k";
    case ShotStrategy::kPluggable: return "pluggable";
  }
  return "random_fixed_k";
}

double JaccardSimilarity::Similarity(const TokenSeq& query,
                                     const TokenSeq& exemplar) const {
  const std::set<TokenId> a(query.tokens().begin(), query.tokens().end());
  const std::set<TokenId> b(exemplar.tokens().begin(), exemplar.tokens().end());
  if (a.empty() && b.empty()) return 0.0;
  size_t inter = 0;
  for (TokenId t : a) inter += b.count(t);
  return static_cast<double>(inter) /
         static_cast<double>(a.size() + b.size() - inter);
}

std::vector<size_t> RetrieveCandidates(const TokenSeq& query,
                                       std::span<const TokenSeq> pool, size_t n,
                                       const SimilarityProvider& sim) {
  if (pool.size() < n) {
    throw ConfigError("candidate pool has " + std::to_string(pool.size()) +
                      " exemplars, need " + std::to_string(n));
  }
  std::vector<double> scores(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) {
    scores[i] = sim.Similarity(query, pool[i]);
    if (!std::isfinite(scores[i])) {
      throw ConfigError("similarity provider returned a non-finite score");
    }
  }
  std::vector<size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });
  order.resize(n);
  return order;
}

namespace {

ShotSelection SampleShots(size_t shot_count, size_t k, ShotStrategy strategy,
                          uint64_t seed, std::mt19937_64& rng) {
  std::vector<size_t> all(shot_count);
  std::iota(all.begin(), all.end(), 0);
  ShotSelection sel;
  std::sample(all.begin(), all.end(), std::back_inserter(sel.kept_shot_indices),
              static_cast<std::ptrdiff_t>(k), rng);
  std::sort(sel.kept_shot_indices.begin(), sel.kept_shot_indices.end());
  sel.strategy = strategy;
  sel.k_effective = sel.kept_shot_indices.size();
  sel.seed = seed;
  return sel;
}

}  // namespace

ShotSelection PruneShotsVariableK(const ShotPrompt& prompt, double mean_target,
                                  uint64_t seed) {
  const auto n = static_cast<long>(prompt.shot_count());
  if (!(mean_target > 0) || mean_target > static_cast<double>(n)) {
    throw ConfigError("mean_target must lie in (0, shot_count]");
  }
  std::mt19937_64 rng(seed);
  const double floor_mean = std::floor(mean_target);
  const double frac = mean_target - floor_mean;
  long center = static_cast<long>(floor_mean);
  // floor(mean) may be 0 when mean < 1; the window then sits at 1.
  if (center < 1 || std::bernoulli_distribution(frac)(rng)) ++center;
  center = std::min(center, n);
  const long half = std::min<long>({kVariableKHalfWidth, center - 1, n - center});
  const long k = std::uniform_int_distribution<long>(center - half,
                                                     center + half)(rng);
  return SampleShots(prompt.shot_count(), static_cast<size_t>(k),
                     ShotStrategy::kRandomVariableK, seed, rng);
}

ShotSelection PruneShotsFixedK(const ShotPrompt& prompt, size_t k,
                               uint64_t seed) {
  if (k < 1 || k > prompt.shot_count()) {
    throw ConfigError("k must lie in [1, shot_count]");
  }
  std::mt19937_64 rng(seed);
  return SampleShots(prompt.shot_count(), k, ShotStrategy::kRandomFixedK, seed,
                     rng);
}

std::pair<TokenSeq, RetentionMask> MaterializeFewerShot(
    const ShotPrompt& prompt, const ShotSelection& selection,
    TokenId mask_id) {
  for (size_t idx : selection.kept_shot_indices) {
    if (idx >= prompt.shot_count()) {
      throw ConfigError("selection refers to a shot outside the prompt");
    }
  }
  RetentionMask mask = RetentionMask::Ones(prompt.base.size());
  size_t kept_pos = 0;
  for (size_t s = 0; s < prompt.shot_count(); ++s) {
    const bool kept =
        kept_pos < selection.kept_shot_indices.size() &&
        selection.kept_shot_indices[kept_pos] == s;
    if (kept) {
      ++kept_pos;
      continue;
    }
    const size_t begin = s == 0 ? prompt.shots[s].begin
                                : prompt.shots[s - 1].end;
    for (size_t i = begin; i < prompt.shots[s].end; ++i) mask.set(i, false);
  }
  TokenSeq fewer = ApplyMask(prompt.base, mask, MaskMode::kDelete, mask_id);
  return {std::move(fewer), std::move(mask)};
}

}  // namespace maskpress
