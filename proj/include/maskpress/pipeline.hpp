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

// Dataset construction: shot pruning, token pruning, filtering, pair
// emission and split assignment.

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maskpress/core.hpp"
#include "maskpress/prompt_pair.hpp"
#include "maskpress/remote_eval.hpp"
#include "maskpress/shotprune.hpp"
#include "maskpress/synth.hpp"
#include "maskpress/taprune.hpp"

namespace maskpress {

struct FilterRule {
  bool require_beats_full = true;
  bool require_beats_fewer = true;
  double margin = 0.0;

  // Throws ConfigError when both requirements are off or margin < 0.
  void Validate() const;
  // Strict: ties are rejected.
  bool Passes(double score, double full, double fewer) const;
};

struct SplitAssignment {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct ShotConfig {
  ShotStrategy strategy = ShotStrategy::kRandomFixedK;
  size_t k = kDefaultFixedK;
  double mean_target = 10.3;
};

// Output mask over the full prompt: a position is kept iff the shot mask
// keeps it and the token mask keeps its image in the fewer-shot prompt.
RetentionMask ComposeMasks(size_t full_len, const RetentionMask& shot_mask,
                           const RetentionMask& token_mask);

// One full prompt plus a performance function over masks of that prompt.
struct PipelineInput {
  std::string id;
  ShotPrompt prompt;
  std::string tokenizer;
  PerformanceFn score;
};

std::vector<PipelineInput> SynthPipelineInputs(const SynthCorpus& corpus);
std::vector<PipelineInput> LlmPipelineInputs(const SynthCorpus& corpus,
                                             std::vector<EvalItem> eval_set,
                                             const EndpointConfig& endpoint);

struct PipelineConfig {
  ShotConfig shots;
  TaConfig ta;
  FilterRule filter;
  uint64_t seed = 0;
  // Every stride-th improving state is offered as an intermediate pair;
  // 0 disables harvesting.
  size_t harvest_stride = 1;
  double validation_fraction = 0.15;
  int jobs = 1;
  // When set, artifacts and per-prompt search checkpoints go here and an
  // interrupted run resumes from them.
  std::string out_dir;
  StopRequested stop;
  // Simulated kill: the run is interrupted once this many evaluations have
  // been made across all prompts.
  std::optional<size_t> max_evaluations;
};

struct DatasetReport {
  std::map<std::string, size_t> stage_counts;
  std::map<std::string, double> mean_tokens;
  size_t n_prompts = 0;
  size_t improved = 0;
  size_t not_improved = 0;
  size_t trajectory_pairs = 0;
  SplitAssignment splits;
};

struct DatasetResult {
  std::vector<PromptPair> train;
  std::vector<PromptPair> validation;
  std::vector<PromptPair> test;
  DatasetReport report;
};

// Shot selection BuildDataset uses for inputs[index].
ShotSelection PipelineShotSelection(const PipelineInput& input,
                                    const PipelineConfig& cfg, size_t index);

// Throws InterruptedError when stopped; rerunning with the same out_dir
// continues from the saved search state and yields identical artifacts.
DatasetResult BuildDataset(const std::vector<PipelineInput>& inputs,
                           const PipelineConfig& cfg);

std::string EncodeReport(const DatasetReport& report);

// ---------------------------------------------------------------------------
// Token category analysis.

enum class TokenCategory { kWord, kNumeral, kPunctuation, kSymbol, kWhitespace, kOther };
inline constexpr size_t kTokenCategoryCount = 6;
const char* TokenCategoryName(TokenCategory c);
TokenCategory ClassifyPiece(std::string_view piece);

struct CategoryReport {
  std::array<size_t, kTokenCategoryCount> all{};
  std::array<size_t, kTokenCategoryCount> removed{};
  size_t n_tokens = 0;
  size_t n_removed = 0;
  // Total variation distance between the two distributions; nullopt when
  // nothing was removed.
  std::optional<double> tv_distance;
};

// Throws InvalidInputError on an empty pair list.
CategoryReport AnalyzeTokenCategories(const std::vector<PromptPair>& pairs);
std::string EncodeCategoryReport(const CategoryReport& report);

}  // namespace maskpress
