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

// Token/mask data model, tokenizers, shot segmentation and cross-tokenizer
// mask alignment.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maskpress/error.hpp"

namespace maskpress {

using TokenId = int32_t;

// Half-open character range [begin, end) into a source text.
struct Span {
  size_t begin = 0;
  size_t end = 0;

  size_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

// Half-open token index range.
struct TokenRange {
  size_t begin = 0;
  size_t end = 0;

  size_t size() const { return end - begin; }
  bool contains(size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

// A tokenized text. Spans partition source_text exactly, in order.
class TokenSeq {
 public:
  TokenSeq() = default;

  // Validates the lossless-partition invariant; throws InvalidInputError.
  TokenSeq(std::vector<TokenId> tokens, std::vector<Span> spans,
           std::string source_text);

  const std::vector<TokenId>& tokens() const { return tokens_; }
  const std::vector<Span>& spans() const { return spans_; }
  const std::string& source_text() const { return source_text_; }
  size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  std::string_view piece(size_t i) const;

  // Concatenation of all span substrings. Equals source_text().
  std::string Detokenize() const;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<TokenId> tokens_;
  std::vector<Span> spans_;
  std::string source_text_;
};

// Per-token keep (1) / remove (0) vector.
class RetentionMask {
 public:
  RetentionMask() = default;
  explicit RetentionMask(std::vector<uint8_t> bits);

  static RetentionMask Ones(size_t length);
  static RetentionMask Zeros(size_t length);

  const std::vector<uint8_t>& bits() const { return bits_; }
  size_t size() const { return bits_.size(); }
  bool retained(size_t i) const { return bits_[i] != 0; }
  void set(size_t i, bool keep) { bits_[i] = keep ? 1 : 0; }
  size_t retained_count() const;
  std::vector<size_t> RetainedPositions() const;

  // Compact "0101..." form, used for hashing and cache keys.
  std::string ToString() const;

  friend bool operator==(const RetentionMask&, const RetentionMask&) = default;

 private:
  std::vector<uint8_t> bits_;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::string name() const = 0;
  // Includes the reserved MASK id.
  virtual TokenId vocab_size() const = 0;
  TokenId mask_id() const { return vocab_size() - 1; }

  // Lossless: spans of the result partition `text`. Never emits mask_id().
  virtual TokenSeq Encode(std::string_view text) const = 0;
};

// Splits into runs of word characters (ASCII alphanumerics, '_' and any
// byte >= 0x80), single whitespace characters, and single punctuation
// characters. Ids are FNV-1a hashes of the piece folded into the vocab.
class WhitespaceTokenizer : public Tokenizer {
 public:
  static constexpr TokenId kDefaultVocabSize = 512;

  explicit WhitespaceTokenizer(TokenId vocab_size = kDefaultVocabSize);

  // "whitespace", or "whitespace:<V>" for a non-default vocabulary.
  std::string name() const override {
    return vocab_size_ == kDefaultVocabSize
               ? "whitespace"
               : "whitespace:" + std::to_string(vocab_size_);
  }
  TokenId vocab_size() const override { return vocab_size_; }
  TokenSeq Encode(std::string_view text) const override;

  TokenId IdOf(std::string_view piece) const;

 private:
  TokenId vocab_size_;
};

// One token per byte; id = byte value, MASK = 256.
class ByteTokenizer : public Tokenizer {
 public:
  std::string name() const override { return "byte"; }
  TokenId vocab_size() const override { return 257; }
  TokenSeq Encode(std::string_view text) const override;
};

// "whitespace" or "byte"; throws ConfigError otherwise.
std::unique_ptr<Tokenizer> MakeTokenizer(std::string_view name);

// Throws InvalidInputError on empty text.
TokenSeq Tokenize(std::string_view text, const Tokenizer& tokenizer);

enum class MaskMode {
  kDelete,      // drop removed tokens, re-base spans onto the kept text
  kMaskSymbol,  // keep length, removed positions carry mask_id
};

TokenSeq ApplyMask(const TokenSeq& seq, const RetentionMask& mask,
                   MaskMode mode, TokenId mask_id);

inline constexpr double kDefaultOverlapThreshold = 0.5;

// A destination token is retained iff at least `overlap_threshold` of its
// characters are covered by retained source tokens.
RetentionMask AlignMask(const TokenSeq& src_seq, const RetentionMask& src_mask,
                        const TokenSeq& dst_seq,
                        double overlap_threshold = kDefaultOverlapThreshold);

struct ShotPrompt {
  TokenSeq base;
  std::vector<TokenRange> shots;
  TokenRange query;

  size_t shot_count() const { return shots.size(); }
};

// Splits `text` on the literal `delimiter`. Every segment but the last is an
// exemplar, the last is the query; empty segments are skipped. Delimiter
// tokens belong to no range. Throws SegmentationError when no delimiter is
// found or a token straddles a segment boundary.
ShotPrompt SegmentShots(std::string_view text, std::string_view delimiter,
                        const Tokenizer& tokenizer);

// Throws SegmentationError if ranges overlap, are unordered or out of bounds.
void ValidateShotPrompt(const ShotPrompt& prompt);

}  // namespace maskpress
