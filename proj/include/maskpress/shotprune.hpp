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

#pragma once

// Shot-level exemplar pruning.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maskpress/core.hpp"

namespace maskpress {

enum class ShotStrategy { kRandomVariableK, kRandomFixedK, kPluggable };

const char* ShotStrategyName(ShotStrategy s);

struct ShotSelection {
  std::vector<size_t> kept_shot_indices;  // sorted, unique
  ShotStrategy strategy = ShotStrategy::kRandomFixedK;
  size_t k_effective = 0;
  uint64_t seed = 0;
};

class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual std::string name() const = 0;
  // Finite and deterministic; symmetry is not required.
  virtual double Similarity(const TokenSeq& query,
                            const TokenSeq& exemplar) const = 0;
};

// |A ∩ B| / |A ∪ B| over the sets of token ids.
class JaccardSimilarity : public SimilarityProvider {
 public:
  std::string name() const override { return "jaccard"; }
  double Similarity(const TokenSeq& query,
                    const TokenSeq& exemplar) const override;
};

inline constexpr size_t kDefaultCandidateCount = 32;
inline constexpr size_t kDefaultFixedK = 5;
inline constexpr int kVariableKHalfWidth = 3;

// Pool indices of the n best exemplars, by descending score; ties go to the
// lower pool index. Throws ConfigError when the pool holds fewer than n.
std::vector<size_t> RetrieveCandidates(const TokenSeq& query,
                                       std::span<const TokenSeq> pool, size_t n,
                                       const SimilarityProvider& sim);

// k is drawn from a uniform integer window around floor(mean) or
// ceil(mean), mixed so that E[k] == mean_target; the window half-width is
// kVariableKHalfWidth, narrowed symmetrically near 1 and shot_count.
ShotSelection PruneShotsVariableK(const ShotPrompt& prompt, double mean_target,
                                  uint64_t seed);

ShotSelection PruneShotsFixedK(const ShotPrompt& prompt, size_t k,
                               uint64_t seed);

// Mask over the full prompt plus the shot-pruned sequence. Tokens between
// two ranges belong to the range that follows them, so a dropped shot takes
// its leading delimiter with it (shot 0 has none).
std::pair<TokenSeq, RetentionMask> MaterializeFewerShot(
    const ShotPrompt& prompt, const ShotSelection& selection, TokenId mask_id);

}  // namespace maskpress
