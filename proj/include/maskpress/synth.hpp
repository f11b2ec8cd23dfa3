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

// Synthetic corpora with exactly known essential and redundant tokens, and
// a deterministic answerer used as a stand-in for an LLM evaluator.
//
// Each exemplar demonstrates one skill. A query about skill s is answered
// correctly iff
//   * at least one exemplar of s is present (some essential token kept),
//   * every present exemplar of s is intact (all essential tokens kept), and
//   * no distractor token attached to an exemplar of s is kept.
// Redundant tokens never influence an answer.

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "maskpress/core.hpp"
#include "maskpress/score.hpp"

namespace maskpress {

enum class RedundancyKind { kFillerPhrase, kDuplicateClause, kVerboseConnective };

const char* RedundancyKindName(RedundancyKind kind);
RedundancyKind ParseRedundancyKind(std::string_view name);

struct SynthLexicon {
  std::vector<std::string> skill_words;
  std::vector<std::string> content_words;
  std::vector<std::string> filler_words;
  std::vector<std::string> connective_words;
  std::vector<std::string> distractor_words;

  static SynthLexicon Default();
};

struct SynthCorpusSpec {
  int n_prompts = 20;
  int n_exemplars = 32;
  int essential_per_shot = 12;
  int redundant_per_shot = 2;
  int n_skills = 4;
  int queries_per_skill = 1;
  // Probability that an exemplar carries a distractor.
  double distractor_rate = 0.05;
  uint64_t seed = 0;
  std::set<RedundancyKind> redundancy_kinds = {
      RedundancyKind::kFillerPhrase, RedundancyKind::kVerboseConnective};
  SynthLexicon lexicon = SynthLexicon::Default();
  std::string delimiter = "\n\n";
  int vocab_size = WhitespaceTokenizer::kDefaultVocabSize;
};

struct ExemplarLabel {
  int skill = 0;
  std::vector<size_t> essential;
  std::vector<size_t> distractor;
};

// Token index sets over the full prompt.
struct SynthLabel {
  std::vector<size_t> essential;
  std::vector<size_t> redundant;
  std::vector<size_t> distractor;
  std::vector<ExemplarLabel> exemplars;
};

struct SynthQuery {
  int skill = 0;
};

struct SynthPrompt {
  std::string id;
  ShotPrompt prompt;
  SynthLabel label;
};

struct SynthCorpus {
  SynthCorpusSpec spec;
  std::vector<SynthPrompt> prompts;
  std::vector<SynthQuery> queries;
};

// Throws ConfigError when the spec is invalid or the lexicon cannot supply
// collision-free token ids.
SynthCorpus GenerateSynthCorpus(const SynthCorpusSpec& spec);

// `mask` is over the full prompt the label was generated for.
Score SynthScore(const SynthLabel& label, const RetentionMask& mask,
                 std::span<const SynthQuery> queries);

bool ExemplarIntact(const ExemplarLabel& exemplar, const RetentionMask& mask);

PerformanceFn MakeSynthOracle(const SynthPrompt& prompt,
                              std::vector<SynthQuery> queries);

// Label-derived ground truth: 0 on redundant and distractor tokens.
RetentionMask OracleMask(const SynthPrompt& prompt);

// corpus.json (spec + queries) and prompts.jsonl (one prompt per line).
void SaveCorpus(const SynthCorpus& corpus, const std::string& dir);
SynthCorpus LoadCorpus(const std::string& dir);

}  // namespace maskpress
