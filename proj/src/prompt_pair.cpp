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

#include "maskpress/prompt_pair.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace maskpress {

using ordered_json = nlohmann::ordered_json;

const char* PairStageName(PairStage stage) {
  switch (stage) {
    case PairStage::kFull: return "full";
    case PairStage::kFewerShot: return "fewer_shot";
    case PairStage::kTaIntermediate: return "ta_intermediate";
    case PairStage::kTaFinal: return "ta_final";
  }
  return "full";
}

PairStage ParsePairStage(std::string_view name) {
  if (name == "full") return PairStage::kFull;
  if (name == "fewer_shot") return PairStage::kFewerShot;
  if (name == "ta_intermediate") return PairStage::kTaIntermediate;
  if (name == "ta_final") return PairStage::kTaFinal;
  throw InvalidInputError("unknown pair stage: " + std::string(name));
}

PromptPair MakePromptPair(std::string id, const TokenSeq& seq,
                          std::string tokenizer, RetentionMask mask,
                          PairMeta meta) {
  if (mask.size() != seq.size()) {
    throw ShapeError("pair mask does not match token count");
  }
  return PromptPair{std::move(id), seq.source_text(), std::move(tokenizer),
                    seq.tokens(), std::move(mask), std::move(meta)};
}

TokenSeq PairTokenSeq(const PromptPair& pair) {
  auto tok = MakeTokenizer(pair.tokenizer);
  TokenSeq seq = Tokenize(pair.text, *tok);
  if (seq.tokens() != pair.tokens) {
    throw InvalidInputError("pair " + pair.id +
                            ": stored tokens do not match its text");
  }
  return seq;
}

std::string EncodePromptPair(const PromptPair& pair) {
  ordered_json j;
  j["id"] = pair.id;
  j["text"] = pair.text;
  j["tokenizer"] = pair.tokenizer;
  j["tokens"] = pair.tokens;
  j["mask"] = pair.mask.bits();
  ordered_json meta;
  meta["stage"] = PairStageName(pair.meta.stage);
  meta["score"] = pair.meta.score ? ordered_json(*pair.meta.score)
                                  : ordered_json(nullptr);
  meta["source"] = pair.meta.source;
  j["meta"] = std::move(meta);
  return j.dump();
}

PromptPair DecodePromptPair(std::string_view line) {
  try {
    const auto j = ordered_json::parse(line);
    PromptPair p;
    p.id = j.at("id").get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.tokenizer = j.at("tokenizer").get<std::string>();
    p.tokens = j.at("tokens").get<std::vector<TokenId>>();
    p.mask = RetentionMask(j.at("mask").get<std::vector<uint8_t>>());
    if (p.mask.size() != p.tokens.size()) {
      throw ShapeError("pair " + p.id + ": mask length differs from tokens");
    }
    const auto& meta = j.at("meta");
    p.meta.stage = ParsePairStage(meta.at("stage").get<std::string>());
    if (!meta.at("score").is_null()) {
      p.meta.score = meta.at("score").get<double>();
    }
    p.meta.source = meta.at("source").get<std::string>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed pair record: ") + e.what());
  }
}

void WritePromptPairs(const std::string& path,
                      const std::vector<PromptPair>& pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const PromptPair& p : pairs) out << EncodePromptPair(p) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<PromptPair> ReadPromptPairs(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("no such dataset file: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  std::vector<PromptPair> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(DecodePromptPair(line));
  }
  return out;
}

}  // namespace maskpress
