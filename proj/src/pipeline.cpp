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

#include "maskpress/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "json.hpp"

namespace maskpress {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void FilterRule::Validate() const {
  if (!require_beats_full && !require_beats_fewer) {
    throw ConfigError("filter rule must require beating the full or the fewer-shot prompt");
  }
  if (!(margin >= 0.0)) throw ConfigError("filter margin must be >= 0");
}

bool FilterRule::Passes(double score, double full, double fewer) const {
  if (require_beats_full && !(score > full + margin)) return false;
  if (require_beats_fewer && !(score > fewer + margin)) return false;
  return true;
}

RetentionMask ComposeMasks(size_t full_len, const RetentionMask& shot_mask,
                           const RetentionMask& token_mask) {
  if (shot_mask.size() != full_len) {
    throw ShapeError("shot mask does not cover the full prompt");
  }
  if (token_mask.size() != shot_mask.retained_count()) {
    throw ShapeError("token mask length " + std::to_string(token_mask.size()) +
                     " differs from the shot mask's retained count " +
                     std::to_string(shot_mask.retained_count()));
  }
  RetentionMask out = RetentionMask::Zeros(full_len);
  size_t j = 0;
  for (size_t i = 0; i < full_len; ++i) {
    if (shot_mask.retained(i)) out.set(i, token_mask.retained(j++));
  }
  return out;
}

std::vector<PipelineInput> SynthPipelineInputs(const SynthCorpus& corpus) {
  const WhitespaceTokenizer tok(corpus.spec.vocab_size);
  std::vector<PipelineInput> out;
  for (const SynthPrompt& p : corpus.prompts) {
    out.push_back({p.id, p.prompt, tok.name(), MakeSynthOracle(p, corpus.queries)});
  }
  return out;
}

std::vector<PipelineInput> LlmPipelineInputs(const SynthCorpus& corpus,
                                             std::vector<EvalItem> eval_set,
                                             const EndpointConfig& endpoint) {
  if (eval_set.empty()) throw ConfigError("evaluation set is empty");
  const WhitespaceTokenizer tok(corpus.spec.vocab_size);
  auto shared = std::make_shared<const std::vector<EvalItem>>(std::move(eval_set));
  std::vector<PipelineInput> out;
  for (const SynthPrompt& p : corpus.prompts) {
    const TokenSeq base = p.prompt.base;
    const TokenId mask_id = tok.mask_id();
    PerformanceFn f = [base, shared, endpoint, mask_id](const RetentionMask& m) {
      const TokenSeq kept = ApplyMask(base, m, MaskMode::kDelete, mask_id);
      return LlmExactMatch(kept.source_text(), *shared, endpoint);
    };
    out.push_back({p.id, p.prompt, tok.name(), std::move(f)});
  }
  return out;
}

namespace {

uint64_t MixSeed(uint64_t seed, uint64_t index) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ShotSelection SelectShots(const PipelineInput& in, const ShotConfig& cfg,
                          uint64_t seed) {
  switch (cfg.strategy) {
    case ShotStrategy::kRandomFixedK:
      return PruneShotsFixedK(in.prompt, std::min(cfg.k, in.prompt.shot_count()), seed);
    case ShotStrategy::kRandomVariableK:
      return PruneShotsVariableK(
          in.prompt,
          std::min(cfg.mean_target, static_cast<double>(in.prompt.shot_count())),
          seed);
    case ShotStrategy::kPluggable: {
      // Keep the k exemplars most similar to the query.
      const TokenSeq& base = in.prompt.base;
      auto slice = [&base](TokenRange r) {
        std::vector<TokenId> ids(base.tokens().begin() + r.begin,
                                 base.tokens().begin() + r.end);
        std::vector<Span> spans;
        const size_t offset = base.spans()[r.begin].begin;
        for (size_t i = r.begin; i < r.end; ++i) {
          spans.push_back({base.spans()[i].begin - offset, base.spans()[i].end - offset});
        }
        return TokenSeq(std::move(ids), std::move(spans),
                        base.source_text().substr(offset, base.spans()[r.end - 1].end - offset));
      };
      std::vector<TokenSeq> pool;
      for (const TokenRange& r : in.prompt.shots) pool.push_back(slice(r));
      const size_t k = std::min(cfg.k, pool.size());
      ShotSelection sel;
      sel.strategy = ShotStrategy::kPluggable;
      sel.kept_shot_indices =
          RetrieveCandidates(slice(in.prompt.query), pool, k, JaccardSimilarity());
      std::sort(sel.kept_shot_indices.begin(), sel.kept_shot_indices.end());
      sel.k_effective = k;
      sel.seed = seed;
      return sel;
    }
  }
  throw ConfigError("unknown shot strategy");
}

struct PromptOutcome {
  std::vector<PromptPair> pairs;  // ta_final first, then intermediates
  bool improved = false;
  PromptPair full_record;
  size_t full_tokens = 0;
  size_t fewer_tokens = 0;
  size_t final_tokens = 0;
};

PromptOutcome ProcessPrompt(const PipelineInput& in, size_t index,
                            const PipelineConfig& cfg,
                            const StopRequested& stop) {
  ValidateShotPrompt(in.prompt);
  const TokenSeq& full = in.prompt.base;
  const auto tok = MakeTokenizer(in.tokenizer);
  const ShotSelection sel = SelectShots(in, cfg.shots, MixSeed(cfg.seed, index));
  auto [fewer, shot_mask] = MaterializeFewerShot(in.prompt, sel, tok->mask_id());

  PromptOutcome out;
  const double f_full = in.score(RetentionMask::Ones(full.size())).value;
  const double f_fewer = in.score(shot_mask).value;
  out.full_tokens = full.size();
  out.fewer_tokens = fewer.size();

  const RetentionMask shot_mask_copy = shot_mask;
  const size_t full_len = full.size();
  PerformanceFn f = [&in, shot_mask_copy, full_len](const RetentionMask& m) {
    return in.score(ComposeMasks(full_len, shot_mask_copy, m));
  };

  TaOptions opts;
  opts.config = cfg.ta;
  opts.stop = stop;
  if (cfg.ta.protect_query) {
    const std::vector<size_t> kept = shot_mask.RetainedPositions();
    TokenRange q{kept.size(), kept.size()};
    for (size_t j = 0; j < kept.size(); ++j) {
      if (in.prompt.query.contains(kept[j])) {
        q.begin = std::min(q.begin, j);
        q.end = j + 1;
      }
    }
    if (q.begin < q.end) opts.protected_ranges.push_back(q);
  }
  const RetentionMask init = RetentionMask::Ones(fewer.size());
  TaTrajectory traj;
  try {
    if (cfg.out_dir.empty()) {
      traj = TaPrune(fewer, init, f, opts);
    } else {
      traj = Resume((fs::path(cfg.out_dir) / "ta" / (in.id + ".jsonl")).string(),
                    fewer, init, f, opts);
    }
  } catch (const TaInterrupted& e) {
    if (e.code() == ErrorCode::kInterrupted) throw InterruptedError(e.what());
    throw Error(e.code(), "prompt " + in.id + ": " + e.what());
  }

  const RetentionMask final_mask = ComposeMasks(full_len, shot_mask, traj.OptimalMask());
  out.final_tokens = final_mask.retained_count();
  const double final_score = traj.OptimalScore();
  out.full_record = MakePromptPair(in.id, full, in.tokenizer,
                                   RetentionMask::Ones(full_len),
                                   {PairStage::kFull, f_full, in.id});
  if (!cfg.filter.Passes(final_score, f_full, f_fewer)) return out;
  out.improved = true;
  out.pairs.push_back(MakePromptPair(in.id + "/final", full, in.tokenizer,
                                     final_mask,
                                     {PairStage::kTaFinal, final_score, in.id}));
  if (cfg.harvest_stride == 0) return out;
  size_t n = 0;
  for (auto& [m, score] : HarvestIntermediates(traj, cfg.harvest_stride)) {
    RetentionMask composed = ComposeMasks(full_len, shot_mask, m);
    if (composed == final_mask) continue;
    if (!cfg.filter.Passes(score.value, f_full, f_fewer)) continue;
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "/ta%04zu", n++);
    out.pairs.push_back(MakePromptPair(in.id + suffix, full, in.tokenizer,
                                       std::move(composed),
                                       {PairStage::kTaIntermediate, score.value, in.id}));
  }
  return out;
}

void SortById(std::vector<PromptPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const PromptPair& a, const PromptPair& b) { return a.id < b.id; });
}

std::vector<std::string> Ids(const std::vector<PromptPair>& pairs) {
  std::vector<std::string> ids;
  for (const PromptPair& p : pairs) ids.push_back(p.id);
  return ids;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

ShotSelection PipelineShotSelection(const PipelineInput& input,
                                    const PipelineConfig& cfg, size_t index) {
  return SelectShots(input, cfg.shots, MixSeed(cfg.seed, index));
}

DatasetResult BuildDataset(const std::vector<PipelineInput>& inputs,
                           const PipelineConfig& cfg) {
  cfg.filter.Validate();
  cfg.ta.Validate();
  if (inputs.empty()) throw InvalidInputError("no prompts to process");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in [0, 1)");
  }
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!cfg.out_dir.empty()) fs::create_directories(fs::path(cfg.out_dir) / "ta");

  auto evaluations = std::make_shared<std::atomic<size_t>>(0);
  std::atomic<bool> abort{false};
  StopRequested stop = [&cfg, evaluations, &abort]() {
    if (abort.load()) return true;
    if (cfg.stop && cfg.stop()) return true;
    if (cfg.max_evaluations && evaluations->fetch_add(1) >= *cfg.max_evaluations) {
      return true;
    }
    return false;
  };

  std::vector<std::optional<PromptOutcome>> outcomes(inputs.size());
  std::vector<std::exception_ptr> errors(inputs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < inputs.size(); i = next.fetch_add(1)) {
      if (abort.load()) break;
      try {
        outcomes[i] = ProcessPrompt(inputs[i], i, cfg, stop);
      } catch (...) {
        errors[i] = std::current_exception();
        abort.store(true);
      }
    }
  };
  const size_t n_threads = std::min<size_t>(static_cast<size_t>(cfg.jobs), inputs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  // A real failure outranks interruptions triggered by it.
  std::exception_ptr first_interrupt;
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const InterruptedError&) {
      if (!first_interrupt) first_interrupt = e;
    } catch (...) {
      throw;
    }
  }
  if (first_interrupt) std::rethrow_exception(first_interrupt);

  DatasetResult result;
  DatasetReport& rep = result.report;
  rep.n_prompts = inputs.size();
  std::vector<std::string> improved_ids;
  double sum_full = 0, sum_fewer = 0, sum_final = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const PromptOutcome& o = *outcomes[i];
    sum_full += static_cast<double>(o.full_tokens);
    sum_fewer += static_cast<double>(o.fewer_tokens);
    sum_final += static_cast<double>(o.final_tokens);
    if (o.improved) improved_ids.push_back(inputs[i].id);
  }
  std::sort(improved_ids.begin(), improved_ids.end());
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(improved_ids.begin(), improved_ids.end(), rng);
  const size_t n_val = static_cast<size_t>(
      std::floor(cfg.validation_fraction * static_cast<double>(improved_ids.size()) + 0.5));
  std::set<std::string> validation_ids(improved_ids.begin(), improved_ids.begin() + n_val);

  size_t n_final = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    PromptOutcome& o = *outcomes[i];
    if (!o.improved) {
      result.test.push_back(std::move(o.full_record));
      continue;
    }
    auto& dst = validation_ids.count(inputs[i].id) ? result.validation : result.train;
    for (PromptPair& p : o.pairs) {
      if (p.meta.stage == PairStage::kTaFinal) ++n_final;
      else ++rep.trajectory_pairs;
      dst.push_back(std::move(p));
    }
  }
  SortById(result.train);
  SortById(result.validation);
  SortById(result.test);

  rep.improved = improved_ids.size();
  rep.not_improved = inputs.size() - improved_ids.size();
  rep.stage_counts = {{"full", inputs.size()},
                      {"fewer_shot", inputs.size()},
                      {"ta_final", n_final},
                      {"ta_intermediate", rep.trajectory_pairs}};
  const double n = static_cast<double>(inputs.size());
  rep.mean_tokens = {{"full", sum_full / n},
                     {"fewer_shot", sum_fewer / n},
                     {"ta_final", sum_final / n}};
  rep.splits = {Ids(result.train), Ids(result.validation), Ids(result.test)};

  if (!cfg.out_dir.empty()) {
    const fs::path dir(cfg.out_dir);
    WritePromptPairs((dir / "train.jsonl").string(), result.train);
    WritePromptPairs((dir / "validation.jsonl").string(), result.validation);
    WritePromptPairs((dir / "test.jsonl").string(), result.test);
    ordered_json splits;
    splits["train"] = rep.splits.train;
    splits["validation"] = rep.splits.validation;
    splits["test"] = rep.splits.test;
    WriteText(dir / "splits.json", splits.dump(2));
    WriteText(dir / "report.json", EncodeReport(rep));
  }
  return result;
}

std::string EncodeReport(const DatasetReport& report) {
  ordered_json j;
  ordered_json counts;
  for (const char* k : {"full", "fewer_shot", "ta_final", "ta_intermediate"}) {
    auto it = report.stage_counts.find(k);
    counts[k] = it == report.stage_counts.end() ? 0 : it->second;
  }
  j["stage_counts"] = counts;
  ordered_json tokens;
  for (const char* k : {"full", "fewer_shot", "ta_final"}) {
    auto it = report.mean_tokens.find(k);
    tokens[k] = it == report.mean_tokens.end() ? 0.0 : it->second;
  }
  j["mean_tokens"] = tokens;
  j["n_prompts"] = report.n_prompts;
  j["improved"] = report.improved;
  j["not_improved"] = report.not_improved;
  j["trajectory_pairs"] = report.trajectory_pairs;
  j["splits"] = {{"train", report.splits.train.size()},
                 {"validation", report.splits.validation.size()},
                 {"test", report.splits.test.size()}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------

const char* TokenCategoryName(TokenCategory c) {
  switch (c) {
    case TokenCategory::kWord: return "word";
    case TokenCategory::kNumeral: return "numeral";
    case TokenCategory::kPunctuation: return "punctuation";
    case TokenCategory::kSymbol: return "symbol";
    case TokenCategory::kWhitespace: return "whitespace";
    case TokenCategory::kOther: return "other";
  }
  return "other";
}

namespace {

constexpr std::string_view kSymbolChars = "$%&+<=>^`|~#@*/\\";

bool IsWordByte(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

}  // namespace

TokenCategory ClassifyPiece(std::string_view piece) {
  if (piece.empty()) return TokenCategory::kOther;
  auto all = [&piece](auto pred) {
    return std::all_of(piece.begin(), piece.end(),
                       [&pred](char c) { return pred(static_cast<unsigned char>(c)); });
  };
  if (all([](unsigned char c) { return std::isspace(c) != 0; })) {
    return TokenCategory::kWhitespace;
  }
  if (all([](unsigned char c) { return std::isdigit(c) || c == '.'; }) &&
      std::any_of(piece.begin(), piece.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return TokenCategory::kNumeral;
  }
  if (all(IsWordByte)) {
    // A lone continuation byte from the byte tokenizer is not a word.
    if (piece.size() == 1 && static_cast<unsigned char>(piece[0]) >= 0x80) {
      return TokenCategory::kOther;
    }
    return TokenCategory::kWord;
  }
  if (piece.size() == 1) {
    const unsigned char c = static_cast<unsigned char>(piece[0]);
    if (kSymbolChars.find(piece[0]) != std::string_view::npos) return TokenCategory::kSymbol;
    if (std::ispunct(c)) return TokenCategory::kPunctuation;
  }
  return TokenCategory::kOther;
}

CategoryReport AnalyzeTokenCategories(const std::vector<PromptPair>& pairs) {
  if (pairs.empty()) throw InvalidInputError("no pairs to analyze");
  CategoryReport rep;
  for (const PromptPair& p : pairs) {
    const TokenSeq seq = PairTokenSeq(p);
    for (size_t i = 0; i < seq.size(); ++i) {
      const auto c = static_cast<size_t>(ClassifyPiece(seq.piece(i)));
      ++rep.all[c];
      ++rep.n_tokens;
      if (!p.mask.retained(i)) {
        ++rep.removed[c];
        ++rep.n_removed;
      }
    }
  }
  if (rep.n_removed > 0) {
    double tv = 0.0;
    for (size_t c = 0; c < kTokenCategoryCount; ++c) {
      tv += std::abs(static_cast<double>(rep.all[c]) / static_cast<double>(rep.n_tokens) -
                     static_cast<double>(rep.removed[c]) / static_cast<double>(rep.n_removed));
    }
    rep.tv_distance = std::min(1.0, 0.5 * tv);
  }
  return rep;
}

std::string EncodeCategoryReport(const CategoryReport& report) {
  ordered_json j;
  ordered_json all, removed;
  for (size_t c = 0; c < kTokenCategoryCount; ++c) {
    const char* name = TokenCategoryName(static_cast<TokenCategory>(c));
    all[name] = {{"count", report.all[c]},
                 {"share", report.n_tokens ? static_cast<double>(report.all[c]) /
                                                 static_cast<double>(report.n_tokens)
                                           : 0.0}};
    removed[name] = {{"count", report.removed[c]},
                     {"share", report.n_removed
                                   ? static_cast<double>(report.removed[c]) /
                                         static_cast<double>(report.n_removed)
                                   : 0.0}};
  }
  j["n_tokens"] = report.n_tokens;
  j["n_removed"] = report.n_removed;
  j["all"] = all;
  j["removed"] = removed;
  j["tv_distance"] = report.tv_distance ? ordered_json(*report.tv_distance)
                                        : ordered_json(nullptr);
  j["category_rules"] = {
      {"whitespace", "every character is whitespace"},
      {"numeral", "digits and '.', at least one digit"},
      {"word", "letters, digits, '_' or non-ASCII bytes (a lone non-ASCII byte is other)"},
      {"symbol", "single character from $%&+<=>^`|~#@*/\\"},
      {"punctuation", "any other single ASCII punctuation character"},
      {"other", "anything else"}};
  return j.dump(2);
}

}  // namespace maskpress
