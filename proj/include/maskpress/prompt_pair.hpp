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

// PromptPair records and their JSON Lines encoding. One record per line,
// fields in fixed order: id, text, tokenizer, tokens, mask, meta.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maskpress/core.hpp"

namespace maskpress {

enum class PairStage { kFull, kFewerShot, kTaIntermediate, kTaFinal };

const char* PairStageName(PairStage stage);
PairStage ParsePairStage(std::string_view name);

struct PairMeta {
  PairStage stage = PairStage::kFull;
  std::optional<double> score;
  std::string source;

  friend bool operator==(const PairMeta&, const PairMeta&) = default;
};

struct PromptPair {
  std::string id;
  std::string text;
  std::string tokenizer;
  std::vector<TokenId> tokens;
  RetentionMask mask;
  PairMeta meta;

  friend bool operator==(const PromptPair&, const PromptPair&) = default;
};

// Builds a pair by tokenizing `text`; the mask must match the token count.
PromptPair MakePromptPair(std::string id, const TokenSeq& seq,
                          std::string tokenizer, RetentionMask mask,
                          PairMeta meta);

// Re-tokenizes the pair text and checks it matches the stored token ids.
TokenSeq PairTokenSeq(const PromptPair& pair);

// Single line, no trailing newline.
std::string EncodePromptPair(const PromptPair& pair);
PromptPair DecodePromptPair(std::string_view line);

void WritePromptPairs(const std::string& path,
                      const std::vector<PromptPair>& pairs);
std::vector<PromptPair> ReadPromptPairs(const std::string& path);

}  // namespace maskpress
