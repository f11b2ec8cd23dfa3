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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "maskpress/core.hpp"

using namespace maskpress;

namespace {

std::string RandomText(std::mt19937_64& rng, size_t max_len) {
  static const std::string alphabet =
      "abcdefghij XYZ0123456789.,;:!?$%&+=<>\n\t_-'\"()\xc3\xa9\xe2\x82\xac";
  const size_t n = 1 + rng() % max_len;
  std::string s;
  for (size_t i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
  return s;
}

RetentionMask RandomMask(std::mt19937_64& rng, size_t n) {
  std::vector<uint8_t> bits(n);
  for (auto& b : bits) b = rng() % 2;
  return RetentionMask(bits);
}

}  // namespace

TEST_CASE("whitespace tokenizer splits words, spaces and punctuation") {
  const WhitespaceTokenizer tok;
  const TokenSeq seq = Tokenize("a b", tok);
  REQUIRE(seq.size() == 3);
  CHECK(seq.piece(0) == "a");
  CHECK(seq.piece(1) == " ");
  CHECK(seq.piece(2) == "b");
  CHECK(seq.spans()[1] == Span{1, 2});
  const TokenSeq p = Tokenize("x1,  y!", tok);
  std::vector<std::string> pieces;
  for (size_t i = 0; i < p.size(); ++i) pieces.emplace_back(p.piece(i));
  CHECK(pieces == std::vector<std::string>{"x1", ",", " ", " ", "y", "!"});
  CHECK_THROWS_AS(Tokenize("", tok), InvalidInputError);
}

TEST_CASE("tokenizers are lossless, pure and never emit MASK") {
  std::mt19937_64 rng(1);
  const WhitespaceTokenizer ws;
  const ByteTokenizer bt;
  const WhitespaceTokenizer small(7);
  for (int i = 0; i < 100; ++i) {
    const std::string text = RandomText(rng, 60);
    for (const Tokenizer* tok : {static_cast<const Tokenizer*>(&ws),
                                 static_cast<const Tokenizer*>(&bt),
                                 static_cast<const Tokenizer*>(&small)}) {
      const TokenSeq seq = Tokenize(text, *tok);
      CHECK(seq.Detokenize() == text);
      CHECK(seq == Tokenize(text, *tok));
      for (TokenId t : seq.tokens()) {
        CHECK(t >= 0);
        CHECK(t < tok->mask_id());
      }
    }
  }
  CHECK(bt.vocab_size() == 257);
  CHECK(bt.mask_id() == 256);
  CHECK(ws.mask_id() == 511);
}

TEST_CASE("tokenizer registry") {
  CHECK(MakeTokenizer("whitespace")->vocab_size() == 512);
  CHECK(MakeTokenizer("byte")->vocab_size() == 257);
  CHECK(MakeTokenizer("whitespace:64")->vocab_size() == 64);
  CHECK(WhitespaceTokenizer(64).name() == "whitespace:64");
  CHECK_THROWS_AS(MakeTokenizer("bpe"), ConfigError);
  CHECK_THROWS_AS(MakeTokenizer("whitespace:x"), ConfigError);
}

TEST_CASE("token sequence validation") {
  CHECK_THROWS_AS(TokenSeq({1, 2}, {{0, 1}}, "ab"), InvalidInputError);
  CHECK_THROWS_AS(TokenSeq({1, 2}, {{0, 1}, {2, 2}}, "ab"), InvalidInputError);
  CHECK_THROWS_AS(TokenSeq({1}, {{0, 1}}, "ab"), InvalidInputError);
  CHECK_NOTHROW(TokenSeq({1, 2}, {{0, 1}, {1, 2}}, "ab"));
}

TEST_CASE("apply mask in both modes") {
  const WhitespaceTokenizer tok;
  const TokenSeq seq = Tokenize("a b c", tok);
  REQUIRE(seq.size() == 5);
  const RetentionMask ones = RetentionMask::Ones(5);
  CHECK(ApplyMask(seq, ones, MaskMode::kDelete, tok.mask_id()) == seq);
  CHECK(ApplyMask(seq, ones, MaskMode::kMaskSymbol, tok.mask_id()) == seq);
  const TokenSeq all_masked =
      ApplyMask(seq, RetentionMask::Zeros(5), MaskMode::kMaskSymbol, tok.mask_id());
  for (TokenId t : all_masked.tokens()) CHECK(t == tok.mask_id());

  const TokenSeq six = Tokenize("p q,r s", tok);
  REQUIRE(six.size() == 7);
  const RetentionMask m(std::vector<uint8_t>{1, 0, 1, 1, 0, 0, 1});
  const TokenSeq kept = ApplyMask(six, m, MaskMode::kDelete, tok.mask_id());
  REQUIRE(kept.size() == 4);
  CHECK(kept.source_text() == "pq,s");
  CHECK(kept.tokens() == std::vector<TokenId>{six.tokens()[0], six.tokens()[2],
                                               six.tokens()[3], six.tokens()[6]});
  CHECK(kept.Detokenize() == kept.source_text());
  CHECK_THROWS_AS(ApplyMask(six, ones, MaskMode::kDelete, 0), ShapeError);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const TokenSeq s = Tokenize(RandomText(rng, 40), tok);
    const RetentionMask r = RandomMask(rng, s.size());
    CHECK(ApplyMask(s, r, MaskMode::kDelete, 0).size() == r.retained_count());
  }
}

TEST_CASE("mask helpers") {
  const RetentionMask m(std::vector<uint8_t>{1, 0, 1});
  CHECK(m.retained_count() == 2);
  CHECK(m.RetainedPositions() == std::vector<size_t>{0, 2});
  CHECK(m.ToString() == "101");
  CHECK_THROWS_AS(RetentionMask(std::vector<uint8_t>{1, 2}), InvalidInputError);
}

TEST_CASE("align mask identity, all-ones and hand example") {
  const WhitespaceTokenizer ws;
  const ByteTokenizer bt;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    const TokenSeq s = Tokenize(RandomText(rng, 40), ws);
    const RetentionMask m = RandomMask(rng, s.size());
    CHECK(AlignMask(s, m, s) == m);
    const TokenSeq b = Tokenize(s.source_text(), bt);
    CHECK(AlignMask(s, RetentionMask::Ones(s.size()), b) == RetentionMask::Ones(b.size()));
  }
  // One retained "12345" against "123" + "45".
  const TokenSeq whole({7}, {{0, 5}}, "12345");
  const TokenSeq split({1, 2}, {{0, 3}, {3, 5}}, "12345");
  CHECK(AlignMask(whole, RetentionMask::Ones(1), split) == RetentionMask::Ones(2));
  // Coverage threshold: "1234" kept, "5" dropped, dst "123","45" -> 45 is half covered.
  const TokenSeq four_one({1, 2}, {{0, 4}, {4, 5}}, "12345");
  CHECK(AlignMask(four_one, RetentionMask(std::vector<uint8_t>{1, 0}), split) ==
        RetentionMask::Ones(2));
  const TokenSeq three_two({1, 2}, {{0, 3}, {3, 5}}, "12345");
  const TokenSeq one_four({1, 2}, {{0, 1}, {1, 5}}, "12345");
  CHECK(AlignMask(one_four, RetentionMask(std::vector<uint8_t>{1, 0}), three_two) ==
        RetentionMask::Zeros(2));
  CHECK_THROWS_AS(AlignMask(whole, RetentionMask::Ones(1), Tokenize("12346", bt)),
                  AlignmentError);
}

TEST_CASE("align round trip keeps retained characters except thin slivers") {
  const WhitespaceTokenizer ws;
  const ByteTokenizer bt;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const std::string text = RandomText(rng, 50);
    const TokenSeq a = Tokenize(text, ws);
    const TokenSeq b = Tokenize(text, bt);
    const RetentionMask ma = RandomMask(rng, a.size());
    const RetentionMask back = AlignMask(b, AlignMask(a, ma, b), a);
    // Byte tokens are single characters, so a->b->a is exact.
    CHECK(back == ma);
  }
}

TEST_CASE("segment shots") {
  const WhitespaceTokenizer tok;
  const std::string text = "q1 a1\n\nq2 a2\n\nq3 a3\n\nfinal q";
  const ShotPrompt p = SegmentShots(text, "\n\n", tok);
  REQUIRE(p.shot_count() == 3);
  auto substr = [&p](TokenRange r) {
    const auto& sp = p.base.spans();
    return p.base.source_text().substr(sp[r.begin].begin, sp[r.end - 1].end - sp[r.begin].begin);
  };
  CHECK(substr(p.shots[0]) == "q1 a1");
  CHECK(substr(p.shots[1]) == "q2 a2");
  CHECK(substr(p.shots[2]) == "q3 a3");
  CHECK(substr(p.query) == "final q");

  const ShotPrompt one = SegmentShots("only shot\n\nquery", "\n\n", tok);
  CHECK(one.shot_count() == 1);

  std::string many;
  for (int i = 0; i < 32; ++i) many += "ex " + std::to_string(i) + "\n\n";
  many += "the query";
  CHECK(SegmentShots(many, "\n\n", tok).shot_count() == 32);

  CHECK_THROWS_AS(SegmentShots("no boundary here", "\n\n", tok), SegmentationError);
  CHECK(SegmentShots("ab##cd", "#", tok).shot_count() == 1);
  CHECK_THROWS_AS(SegmentShots("ab--cd", "b-", tok), SegmentationError);

  ShotPrompt bad = p;
  bad.shots[1].begin = 0;
  CHECK_THROWS_AS(ValidateShotPrompt(bad), SegmentationError);
}
