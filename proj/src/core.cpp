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

#include "maskpress/core.hpp"

#include <algorithm>
#include <cctype>

namespace maskpress {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kShape: return "ShapeError";
    case ErrorCode::kAlignment: return "AlignmentError";
    case ErrorCode::kSegmentation: return "SegmentationError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kScoring: return "ScoringError";
    case ErrorCode::kRemote: return "RemoteError";
    case ErrorCode::kProtocol: return "ProtocolError";
    case ErrorCode::kResume: return "ResumeError";
    case ErrorCode::kLoss: return "LossError";
    case ErrorCode::kTrain: return "TrainError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kInterrupted: return "Interrupted";
  }
  return "Unknown";
}

TokenSeq::TokenSeq(std::vector<TokenId> tokens, std::vector<Span> spans,
                   std::string source_text)
    : tokens_(std::move(tokens)),
      spans_(std::move(spans)),
      source_text_(std::move(source_text)) {
  if (tokens_.size() != spans_.size()) {
    throw InvalidInputError("token/span count mismatch");
  }
  size_t cursor = 0;
  for (const Span& s : spans_) {
    if (s.begin != cursor || s.end <= s.begin) {
      throw InvalidInputError("spans do not partition the source text");
    }
    cursor = s.end;
  }
  if (cursor != source_text_.size()) {
    throw InvalidInputError("spans do not cover the source text");
  }
}

std::string_view TokenSeq::piece(size_t i) const {
  const Span& s = spans_.at(i);
  return std::string_view(source_text_).substr(s.begin, s.size());
}

std::string TokenSeq::Detokenize() const {
  std::string out;
  out.reserve(source_text_.size());
  for (size_t i = 0; i < size(); ++i) out.append(piece(i));
  return out;
}

RetentionMask::RetentionMask(std::vector<uint8_t> bits)
    : bits_(std::move(bits)) {
  for (uint8_t b : bits_) {
    if (b > 1) throw InvalidInputError("mask entries must be 0 or 1");
  }
}

RetentionMask RetentionMask::Ones(size_t length) {
  return RetentionMask(std::vector<uint8_t>(length, 1));
}

RetentionMask RetentionMask::Zeros(size_t length) {
  return RetentionMask(std::vector<uint8_t>(length, 0));
}

size_t RetentionMask::retained_count() const {
  return static_cast<size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::vector<size_t> RetentionMask::RetainedPositions() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

std::string RetentionMask::ToString() const {
  std::string s(bits_.size(), '0');
  for (size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) s[i] = '1';
  }
  return s;
}

namespace {

bool IsWordByte(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

uint32_t Fnv1a(std::string_view s) {
  uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

}  // namespace

WhitespaceTokenizer::WhitespaceTokenizer(TokenId vocab_size)
    : vocab_size_(vocab_size) {
  if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2");
}

TokenId WhitespaceTokenizer::IdOf(std::string_view piece) const {
  return static_cast<TokenId>(Fnv1a(piece) %
                              static_cast<uint32_t>(vocab_size_ - 1));
}

TokenSeq WhitespaceTokenizer::Encode(std::string_view text) const {
  std::vector<TokenId> ids;
  std::vector<Span> spans;
  size_t i = 0;
  while (i < text.size()) {
    size_t j = i + 1;
    if (IsWordByte(static_cast<unsigned char>(text[i]))) {
      while (j < text.size() && IsWordByte(static_cast<unsigned char>(text[j])))
        ++j;
    }
    spans.push_back({i, j});
    ids.push_back(IdOf(text.substr(i, j - i)));
    i = j;
  }
  return TokenSeq(std::move(ids), std::move(spans), std::string(text));
}

TokenSeq ByteTokenizer::Encode(std::string_view text) const {
  std::vector<TokenId> ids;
  std::vector<Span> spans;
  ids.reserve(text.size());
  spans.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    ids.push_back(static_cast<unsigned char>(text[i]));
    spans.push_back({i, i + 1});
  }
  return TokenSeq(std::move(ids), std::move(spans), std::string(text));
}

std::unique_ptr<Tokenizer> MakeTokenizer(std::string_view name) {
  if (name == "whitespace") return std::make_unique<WhitespaceTokenizer>();
  if (name.rfind("whitespace:", 0) == 0) {
    const std::string digits(name.substr(11));
    if (digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos ||
        digits.size() > 9) {
      throw ConfigError("bad tokenizer vocab size: " + std::string(name));
    }
    return std::make_unique<WhitespaceTokenizer>(std::stoi(digits));
  }
  if (name == "byte") return std::make_unique<ByteTokenizer>();
  throw ConfigError("unknown tokenizer: " + std::string(name));
}

TokenSeq Tokenize(std::string_view text, const Tokenizer& tokenizer) {
  if (text.empty()) throw InvalidInputError("cannot tokenize empty text");
  return tokenizer.Encode(text);
}

TokenSeq ApplyMask(const TokenSeq& seq, const RetentionMask& mask,
                   MaskMode mode, TokenId mask_id) {
  if (mask.size() != seq.size()) {
    throw ShapeError("mask length " + std::to_string(mask.size()) +
                     " does not match sequence length " +
                     std::to_string(seq.size()));
  }
  if (mode == MaskMode::kMaskSymbol) {
    std::vector<TokenId> ids = seq.tokens();
    for (size_t i = 0; i < ids.size(); ++i) {
      if (!mask.retained(i)) ids[i] = mask_id;
    }
    return TokenSeq(std::move(ids), seq.spans(), seq.source_text());
  }
  std::vector<TokenId> ids;
  std::vector<Span> spans;
  std::string text;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (!mask.retained(i)) continue;
    std::string_view p = seq.piece(i);
    spans.push_back({text.size(), text.size() + p.size()});
    text.append(p);
    ids.push_back(seq.tokens()[i]);
  }
  return TokenSeq(std::move(ids), std::move(spans), std::move(text));
}

RetentionMask AlignMask(const TokenSeq& src_seq, const RetentionMask& src_mask,
                        const TokenSeq& dst_seq, double overlap_threshold) {
  if (src_seq.source_text() != dst_seq.source_text()) {
    throw AlignmentError("source and destination texts differ");
  }
  if (src_mask.size() != src_seq.size()) {
    throw ShapeError("source mask does not match source sequence");
  }
  // Prefix sums of retained characters.
  const size_t n = src_seq.source_text().size();
  std::vector<size_t> kept(n + 1, 0);
  std::vector<uint8_t> char_kept(n, 0);
  for (size_t t = 0; t < src_seq.size(); ++t) {
    if (!src_mask.retained(t)) continue;
    const Span& s = src_seq.spans()[t];
    std::fill(char_kept.begin() + s.begin, char_kept.begin() + s.end, 1);
  }
  for (size_t c = 0; c < n; ++c) kept[c + 1] = kept[c] + char_kept[c];

  std::vector<uint8_t> out(dst_seq.size(), 0);
  for (size_t t = 0; t < dst_seq.size(); ++t) {
    const Span& s = dst_seq.spans()[t];
    const double covered = static_cast<double>(kept[s.end] - kept[s.begin]);
    out[t] = covered >= overlap_threshold * static_cast<double>(s.size());
  }
  return RetentionMask(std::move(out));
}

void ValidateShotPrompt(const ShotPrompt& prompt) {
  const size_t n = prompt.base.size();
  size_t cursor = 0;
  for (const TokenRange& r : prompt.shots) {
    if (r.begin < cursor || r.end <= r.begin || r.end > n) {
      throw SegmentationError("shot ranges must be ordered and disjoint");
    }
    cursor = r.end;
  }
  if (prompt.query.begin < cursor || prompt.query.end < prompt.query.begin ||
      prompt.query.end > n) {
    throw SegmentationError("query range overlaps shots or is out of bounds");
  }
}

ShotPrompt SegmentShots(std::string_view text, std::string_view delimiter,
                        const Tokenizer& tokenizer) {
  if (delimiter.empty()) throw SegmentationError("empty delimiter");
  // Alternating regions: segment, delimiter, segment, ..., segment.
  std::vector<Span> segments;
  std::vector<Span> delimiters;
  size_t start = 0;
  for (size_t pos = text.find(delimiter); pos != std::string_view::npos;
       pos = text.find(delimiter, start)) {
    segments.push_back({start, pos});
    delimiters.push_back({pos, pos + delimiter.size()});
    start = pos + delimiter.size();
  }
  if (delimiters.empty()) {
    throw SegmentationError("delimiter not found in prompt text");
  }
  segments.push_back({start, text.size()});

  ShotPrompt out;
  out.base = Tokenize(text, tokenizer);
  const auto& spans = out.base.spans();

  // Token index range covered by each segment.
  std::vector<TokenRange> seg_tokens;
  size_t t = 0;
  for (size_t s = 0; s < segments.size(); ++s) {
    TokenRange r{t, t};
    while (t < spans.size() && spans[t].end <= segments[s].end) {
      if (spans[t].begin < segments[s].begin) {
        throw SegmentationError("token straddles a delimiter boundary");
      }
      ++t;
    }
    r.end = t;
    if (t < spans.size() && spans[t].begin < segments[s].end) {
      throw SegmentationError("token straddles a delimiter boundary");
    }
    seg_tokens.push_back(r);
    if (s < delimiters.size()) {
      while (t < spans.size() && spans[t].end <= delimiters[s].end) ++t;
      if (t < spans.size() && spans[t].begin < delimiters[s].end) {
        throw SegmentationError("token straddles a delimiter boundary");
      }
    }
  }

  std::vector<TokenRange> nonempty;
  for (const TokenRange& r : seg_tokens) {
    if (r.size() > 0) nonempty.push_back(r);
  }
  if (nonempty.empty()) throw SegmentationError("prompt has no content");
  out.query = nonempty.back();
  nonempty.pop_back();
  out.shots = std::move(nonempty);
  ValidateShotPrompt(out);
  return out;
}

}  // namespace maskpress
