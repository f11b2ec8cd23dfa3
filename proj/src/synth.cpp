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

#include "maskpress/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <unordered_set>

#include "json.hpp"

namespace maskpress {

using json = nlohmann::ordered_json;

Score Score::FromDetail(std::vector<uint8_t> detail) {
  if (detail.empty()) throw ScoringError("score needs at least one query");
  Score s;
  s.n_queries = static_cast<int>(detail.size());
  size_t correct = 0;
  for (uint8_t d : detail) correct += d ? 1 : 0;
  s.value = static_cast<double>(correct) / static_cast<double>(detail.size());
  s.detail = std::move(detail);
  return s;
}

Score Score::FromValue(double value) {
  Score s;
  s.value = value;
  return s;
}

const char* RedundancyKindName(RedundancyKind kind) {
  switch (kind) {
    case RedundancyKind::kFillerPhrase: return "filler_phrase";
    case RedundancyKind::kDuplicateClause: return "duplicate_clause";
    case RedundancyKind::kVerboseConnective: return "verbose_connective";
  }
  return "filler_phrase";
}

RedundancyKind ParseRedundancyKind(std::string_view name) {
  if (name == "filler_phrase") return RedundancyKind::kFillerPhrase;
  if (name == "duplicate_clause") return RedundancyKind::kDuplicateClause;
  if (name == "verbose_connective") return RedundancyKind::kVerboseConnective;
  throw ConfigError("unknown redundancy kind: " + std::string(name));
}

SynthLexicon SynthLexicon::Default() {
  SynthLexicon lex;
  lex.skill_words = {"add", "sub", "mul", "max", "min", "mod", "avg", "pow"};
  lex.content_words = {
      "apples", "pears",  "coins",  "books",  "boxes",  "cats",   "dogs",
      "hours",  "miles",  "cups",   "pens",   "eggs",   "seeds",  "tiles",
      "stamps", "shells", "cards",  "bags",   "trees",  "chairs", "tom",
      "ana",    "li",     "maria",  "sam",    "has",    "buys",   "sells",
      "gives",  "keeps",  "each",   "per",    "total",  "left",   "more",
      "less",   "twice",  "half",   "then",   "so"};
  for (int n = 0; n < 100; ++n) lex.content_words.push_back(std::to_string(n));
  lex.filler_words = {"basically", "actually", "really", "just",
                      "simply",    "clearly",  "quite",  "literally"};
  lex.connective_words = {"furthermore", "moreover",  "additionally",
                          "consequently", "therefore", "nevertheless"};
  lex.distractor_words = {"not", "never", "except", "unless"};
  return lex;
}

namespace {

enum class Tag { kEssential, kRedundant, kDistractor, kNeutral };

struct Piece {
  std::string text;
  Tag tag;
};

struct ExemplarBuild {
  std::vector<Piece> pieces;
  int skill = 0;
};

// Words whose token id collides with a word of another category are
// dropped so that identity alone never conflates categories.
struct ResolvedLexicon {
  std::vector<std::string> skills, content, filler, connective, distractor;
};

ResolvedLexicon ResolveLexicon(const SynthCorpusSpec& spec,
                               const WhitespaceTokenizer& tok) {
  const SynthLexicon& lex = spec.lexicon;
  std::vector<const std::vector<std::string>*> groups = {
      &lex.skill_words, &lex.content_words, &lex.filler_words,
      &lex.connective_words, &lex.distractor_words};
  std::vector<std::vector<TokenId>> ids(groups.size());
  for (size_t g = 0; g < groups.size(); ++g) {
    for (const auto& w : *groups[g]) {
      if (tok.Encode(w).size() != 1) {
        throw ConfigError("lexicon entry is not a single token: " + w);
      }
      ids[g].push_back(tok.IdOf(w));
    }
  }
  // Reserved pieces used by the prompt skeleton.
  std::unordered_set<TokenId> reserved;
  for (const char* p : {" ", "\n", ",", ":", "solve", "the", "next", "problem"})
    reserved.insert(tok.IdOf(p));

  std::vector<std::vector<std::string>> kept(groups.size());
  for (size_t g = 0; g < groups.size(); ++g) {
    for (size_t i = 0; i < groups[g]->size(); ++i) {
      bool clash = reserved.count(ids[g][i]) > 0;
      for (size_t h = 0; h < groups.size() && !clash; ++h) {
        if (h == g) continue;
        clash = std::find(ids[h].begin(), ids[h].end(), ids[g][i]) !=
                ids[h].end();
      }
      if (!clash) kept[g].push_back((*groups[g])[i]);
    }
  }
  ResolvedLexicon r{kept[0], kept[1], kept[2], kept[3], kept[4]};
  if (static_cast<int>(r.skills.size()) < spec.n_skills) {
    throw ConfigError("vocab too small: not enough distinct skill words");
  }
  r.skills.resize(static_cast<size_t>(spec.n_skills));
  if (spec.essential_per_shot > 1 && r.content.size() < 4) {
    throw ConfigError("vocab too small: not enough distinct content words");
  }
  if (spec.redundant_per_shot > 0) {
    bool ok = false;
    for (RedundancyKind k : spec.redundancy_kinds) {
      ok |= (k == RedundancyKind::kFillerPhrase && !r.filler.empty()) ||
            (k == RedundancyKind::kVerboseConnective && !r.connective.empty());
    }
    if (!ok) {
      throw ConfigError(
          "vocab too small: no filler or connective words available");
    }
  }
  if (spec.distractor_rate > 0 && r.distractor.empty()) {
    throw ConfigError("vocab too small: no distractor words available");
  }
  return r;
}

void ValidateSpec(const SynthCorpusSpec& spec) {
  if (spec.n_prompts < 1) throw ConfigError("n_prompts must be >= 1");
  if (spec.n_exemplars < 1) throw ConfigError("n_exemplars must be >= 1");
  if (spec.essential_per_shot < 1)
    throw ConfigError("essential_per_shot must be >= 1");
  if (spec.redundant_per_shot < 0)
    throw ConfigError("redundant_per_shot must be >= 0");
  if (spec.n_skills < 1) throw ConfigError("n_skills must be >= 1");
  if (spec.queries_per_skill < 1)
    throw ConfigError("queries_per_skill must be >= 1");
  if (spec.distractor_rate < 0 || spec.distractor_rate > 1)
    throw ConfigError("distractor_rate must be in [0,1]");
  if (spec.redundant_per_shot > 0 && spec.redundancy_kinds.empty())
    throw ConfigError("redundancy_kinds must be non-empty");
  if (spec.delimiter.empty() ||
      spec.delimiter.find_first_not_of(" \n\t") != std::string::npos)
    throw ConfigError("delimiter must be non-empty whitespace");
}

template <typename T>
const T& Pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

ExemplarBuild BuildExemplar(const SynthCorpusSpec& spec,
                            const ResolvedLexicon& lex, std::mt19937_64& rng) {
  ExemplarBuild ex;
  ex.skill = std::uniform_int_distribution<int>(0, spec.n_skills - 1)(rng);

  // Essential skeleton: word, space, word, space, ...
  std::vector<Piece> core;
  for (int i = 0; i < spec.essential_per_shot; ++i) {
    if (i % 2 == 1) {
      core.push_back({" ", Tag::kEssential});
    } else if (i == 0) {
      core.push_back({lex.skills[static_cast<size_t>(ex.skill)],
                      Tag::kEssential});
    } else {
      core.push_back({Pick(lex.content, rng), Tag::kEssential});
    }
  }

  // Gap g means "insert before core[g]". Word units may only go where the
  // preceding piece is whitespace (or at the start).
  std::vector<size_t> word_gaps = {0};
  for (size_t g = 1; g <= core.size(); ++g) {
    if (core[g - 1].text == " ") word_gaps.push_back(g);
  }
  std::vector<size_t> comma_gaps;
  for (size_t g = 1; g <= core.size(); ++g) {
    if (core[g - 1].text != " ") comma_gaps.push_back(g);
  }

  std::vector<RedundancyKind> kinds(spec.redundancy_kinds.begin(),
                                    spec.redundancy_kinds.end());
  std::vector<std::vector<Piece>> inserts(core.size() + 1);
  const int units = spec.redundant_per_shot / 2;
  for (int u = 0; u < units; ++u) {
    const size_t gap = Pick(word_gaps, rng);
    RedundancyKind kind = Pick(kinds, rng);
    if (kind == RedundancyKind::kDuplicateClause && gap == 0) {
      kind = lex.filler.empty() ? RedundancyKind::kVerboseConnective
                                : RedundancyKind::kFillerPhrase;
    }
    if (kind == RedundancyKind::kFillerPhrase && lex.filler.empty())
      kind = RedundancyKind::kVerboseConnective;
    if (kind == RedundancyKind::kVerboseConnective && lex.connective.empty())
      kind = RedundancyKind::kFillerPhrase;
    std::string word;
    switch (kind) {
      case RedundancyKind::kFillerPhrase: word = Pick(lex.filler, rng); break;
      case RedundancyKind::kVerboseConnective:
        word = Pick(lex.connective, rng);
        break;
      case RedundancyKind::kDuplicateClause: word = core[gap - 2].text; break;
    }
    inserts[gap].push_back({word, Tag::kRedundant});
    inserts[gap].push_back({" ", Tag::kRedundant});
  }
  if (spec.redundant_per_shot % 2 == 1) {
    // A lone comma after a word; with no word gap the comma leads.
    const size_t gap = comma_gaps.empty() ? 0 : Pick(comma_gaps, rng);
    inserts[gap].insert(inserts[gap].begin(), Piece{",", Tag::kRedundant});
  }

  if (std::bernoulli_distribution(spec.distractor_rate)(rng)) {
    ex.pieces.push_back({Pick(lex.distractor, rng), Tag::kDistractor});
    ex.pieces.push_back({" ", Tag::kNeutral});
  }
  for (size_t g = 0; g <= core.size(); ++g) {
    for (auto& p : inserts[g]) ex.pieces.push_back(p);
    if (g < core.size()) ex.pieces.push_back(core[g]);
  }
  return ex;
}

void CheckSingleDeletions(const SynthPrompt& sp,
                          std::span<const SynthQuery> queries) {
  const size_t n = sp.prompt.base.size();
  RetentionMask full = RetentionMask::Ones(n);
  const double base = SynthScore(sp.label, full, queries).value;
  for (size_t r : sp.label.redundant) {
    full.set(r, false);
    if (SynthScore(sp.label, full, queries).value != base) {
      throw std::logic_error("redundant token changes the answer");
    }
    full.set(r, true);
  }
  for (const ExemplarLabel& ex : sp.label.exemplars) {
    for (size_t e : ex.essential) {
      full.set(e, false);
      const bool intact = ExemplarIntact(ex, full);
      full.set(e, true);
      if (intact) throw std::logic_error("essential token does not matter");
    }
  }
}

std::vector<SynthQuery> MakeQueries(const SynthCorpusSpec& spec) {
  std::vector<SynthQuery> q;
  for (int r = 0; r < spec.queries_per_skill; ++r) {
    for (int s = 0; s < spec.n_skills; ++s) q.push_back({s});
  }
  return q;
}

}  // namespace

bool ExemplarIntact(const ExemplarLabel& exemplar, const RetentionMask& mask) {
  for (size_t e : exemplar.essential) {
    if (!mask.retained(e)) return false;
  }
  return true;
}

Score SynthScore(const SynthLabel& label, const RetentionMask& mask,
                 std::span<const SynthQuery> queries) {
  if (queries.empty()) throw ScoringError("query set is empty");
  const size_t n = mask.size();
  auto check = [n](size_t i) {
    if (i >= n) {
      throw ScoringError("label index " + std::to_string(i) +
                         " outside prompt of length " + std::to_string(n));
    }
  };
  int max_skill = -1;
  for (const auto& ex : label.exemplars) max_skill = std::max(max_skill, ex.skill);
  for (const auto& q : queries) max_skill = std::max(max_skill, q.skill);

  const size_t n_skills = static_cast<size_t>(max_skill + 1);
  std::vector<uint8_t> any_present(n_skills, 0), broken(n_skills, 0);
  for (const ExemplarLabel& ex : label.exemplars) {
    const auto s = static_cast<size_t>(ex.skill);
    size_t kept = 0;
    for (size_t e : ex.essential) {
      check(e);
      kept += mask.retained(e) ? 1 : 0;
    }
    if (kept > 0) any_present[s] = 1;
    if (kept > 0 && kept < ex.essential.size()) broken[s] = 1;
    for (size_t d : ex.distractor) {
      check(d);
      if (mask.retained(d)) broken[s] = 1;
    }
  }
  std::vector<uint8_t> detail;
  detail.reserve(queries.size());
  for (const SynthQuery& q : queries) {
    if (q.skill < 0) throw ScoringError("negative query skill");
    const auto s = static_cast<size_t>(q.skill);
    detail.push_back(any_present[s] && !broken[s] ? 1 : 0);
  }
  return Score::FromDetail(std::move(detail));
}

PerformanceFn MakeSynthOracle(const SynthPrompt& prompt,
                              std::vector<SynthQuery> queries) {
  const size_t n = prompt.prompt.base.size();
  return [label = prompt.label, queries = std::move(queries),
          n](const RetentionMask& mask) {
    if (mask.size() != n) {
      throw ScoringError("mask length does not match the scored prompt");
    }
    return SynthScore(label, mask, queries);
  };
}

RetentionMask OracleMask(const SynthPrompt& prompt) {
  RetentionMask m = RetentionMask::Ones(prompt.prompt.base.size());
  for (size_t i : prompt.label.redundant) m.set(i, false);
  for (size_t i : prompt.label.distractor) m.set(i, false);
  return m;
}

SynthCorpus GenerateSynthCorpus(const SynthCorpusSpec& spec) {
  ValidateSpec(spec);
  const WhitespaceTokenizer tok(spec.vocab_size);
  const ResolvedLexicon lex = ResolveLexicon(spec, tok);

  SynthCorpus corpus;
  corpus.spec = spec;
  corpus.queries = MakeQueries(spec);
  std::mt19937_64 rng(spec.seed);

  for (int p = 0; p < spec.n_prompts; ++p) {
    std::vector<Piece> pieces;
    std::vector<std::pair<size_t, size_t>> shot_pieces;
    std::vector<int> skills;
    for (int e = 0; e < spec.n_exemplars; ++e) {
      ExemplarBuild ex = BuildExemplar(spec, lex, rng);
      shot_pieces.push_back({pieces.size(), pieces.size() + ex.pieces.size()});
      skills.push_back(ex.skill);
      for (auto& pc : ex.pieces) pieces.push_back(std::move(pc));
      for (char c : spec.delimiter)
        pieces.push_back({std::string(1, c), Tag::kNeutral});
    }
    for (const char* q : {"solve", " ", "the", " ", "next", " ", "problem", ":"})
      pieces.push_back({q, Tag::kNeutral});

    std::string text;
    for (const auto& pc : pieces) text += pc.text;

    SynthPrompt sp;
    sp.id = "p" + std::to_string(p);
    sp.prompt = SegmentShots(text, spec.delimiter, tok);
    if (sp.prompt.base.size() != pieces.size() ||
        sp.prompt.shot_count() != shot_pieces.size()) {
      throw std::logic_error("synthetic prompt does not tokenize as built");
    }
    for (size_t i = 0; i < pieces.size(); ++i) {
      if (sp.prompt.base.piece(i) != pieces[i].text)
        throw std::logic_error("synthetic piece does not tokenize as built");
    }
    for (size_t e = 0; e < shot_pieces.size(); ++e) {
      const TokenRange want{shot_pieces[e].first, shot_pieces[e].second};
      if (!(sp.prompt.shots[e] == want))
        throw std::logic_error("synthetic shot range mismatch");
      ExemplarLabel xl;
      xl.skill = skills[e];
      for (size_t i = want.begin; i < want.end; ++i) {
        switch (pieces[i].tag) {
          case Tag::kEssential:
            xl.essential.push_back(i);
            sp.label.essential.push_back(i);
            break;
          case Tag::kRedundant: sp.label.redundant.push_back(i); break;
          case Tag::kDistractor:
            xl.distractor.push_back(i);
            sp.label.distractor.push_back(i);
            break;
          case Tag::kNeutral: break;
        }
      }
      sp.label.exemplars.push_back(std::move(xl));
    }
    CheckSingleDeletions(sp, corpus.queries);
    corpus.prompts.push_back(std::move(sp));
  }
  return corpus;
}

namespace {

json SpecToJson(const SynthCorpusSpec& s) {
  json j;
  j["n_prompts"] = s.n_prompts;
  j["n_exemplars"] = s.n_exemplars;
  j["essential_per_shot"] = s.essential_per_shot;
  j["redundant_per_shot"] = s.redundant_per_shot;
  j["n_skills"] = s.n_skills;
  j["queries_per_skill"] = s.queries_per_skill;
  j["distractor_rate"] = s.distractor_rate;
  j["seed"] = s.seed;
  json kinds = json::array();
  for (auto k : s.redundancy_kinds) kinds.push_back(RedundancyKindName(k));
  j["redundancy_kinds"] = kinds;
  j["delimiter"] = s.delimiter;
  j["vocab_size"] = s.vocab_size;
  j["lexicon"] = {{"skill", s.lexicon.skill_words},
                  {"content", s.lexicon.content_words},
                  {"filler", s.lexicon.filler_words},
                  {"connective", s.lexicon.connective_words},
                  {"distractor", s.lexicon.distractor_words}};
  return j;
}

SynthCorpusSpec SpecFromJson(const json& j) {
  SynthCorpusSpec s;
  s.n_prompts = j.at("n_prompts");
  s.n_exemplars = j.at("n_exemplars");
  s.essential_per_shot = j.at("essential_per_shot");
  s.redundant_per_shot = j.at("redundant_per_shot");
  s.n_skills = j.at("n_skills");
  s.queries_per_skill = j.at("queries_per_skill");
  s.distractor_rate = j.at("distractor_rate");
  s.seed = j.at("seed");
  s.redundancy_kinds.clear();
  for (const auto& k : j.at("redundancy_kinds"))
    s.redundancy_kinds.insert(ParseRedundancyKind(k.get<std::string>()));
  s.delimiter = j.at("delimiter");
  s.vocab_size = j.at("vocab_size");
  const auto& lx = j.at("lexicon");
  s.lexicon.skill_words = lx.at("skill");
  s.lexicon.content_words = lx.at("content");
  s.lexicon.filler_words = lx.at("filler");
  s.lexicon.connective_words = lx.at("connective");
  s.lexicon.distractor_words = lx.at("distractor");
  return s;
}

json RangeToJson(const TokenRange& r) { return json::array({r.begin, r.end}); }

TokenRange RangeFromJson(const json& j) {
  return {j.at(0).get<size_t>(), j.at(1).get<size_t>()};
}

}  // namespace

void SaveCorpus(const SynthCorpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    json meta;
    meta["spec"] = SpecToJson(corpus.spec);
    json q = json::array();
    for (const auto& query : corpus.queries) q.push_back(query.skill);
    meta["queries"] = q;
    std::ofstream out(dir + "/corpus.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + dir + "/corpus.json");
    out << meta.dump(2) << '\n';
  }
  std::ofstream out(dir + "/prompts.jsonl", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + dir + "/prompts.jsonl");
  for (const SynthPrompt& sp : corpus.prompts) {
    json j;
    j["id"] = sp.id;
    j["text"] = sp.prompt.base.source_text();
    j["tokenizer"] = "whitespace";
    json shots = json::array();
    for (const auto& r : sp.prompt.shots) shots.push_back(RangeToJson(r));
    j["shots"] = shots;
    j["query"] = RangeToJson(sp.prompt.query);
    j["essential"] = sp.label.essential;
    j["redundant"] = sp.label.redundant;
    j["distractor"] = sp.label.distractor;
    json exs = json::array();
    for (const auto& ex : sp.label.exemplars) {
      exs.push_back({{"skill", ex.skill},
                     {"essential", ex.essential},
                     {"distractor", ex.distractor}});
    }
    j["exemplars"] = exs;
    out << j.dump() << '\n';
  }
}

SynthCorpus LoadCorpus(const std::string& dir) {
  const std::string meta_path = dir + "/corpus.json";
  const std::string prompts_path = dir + "/prompts.jsonl";
  if (!std::filesystem::exists(meta_path) ||
      !std::filesystem::exists(prompts_path)) {
    throw MissingArtifactError("no corpus found in " + dir);
  }
  SynthCorpus corpus;
  try {
    std::ifstream meta_in(meta_path);
    const json meta = json::parse(meta_in);
    corpus.spec = SpecFromJson(meta.at("spec"));
    for (const auto& q : meta.at("queries")) corpus.queries.push_back({q.get<int>()});

    const WhitespaceTokenizer tok(corpus.spec.vocab_size);
    std::ifstream in(prompts_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      SynthPrompt sp;
      sp.id = j.at("id");
      sp.prompt.base = Tokenize(j.at("text").get<std::string>(), tok);
      for (const auto& r : j.at("shots")) sp.prompt.shots.push_back(RangeFromJson(r));
      sp.prompt.query = RangeFromJson(j.at("query"));
      ValidateShotPrompt(sp.prompt);
      sp.label.essential = j.at("essential").get<std::vector<size_t>>();
      sp.label.redundant = j.at("redundant").get<std::vector<size_t>>();
      sp.label.distractor = j.at("distractor").get<std::vector<size_t>>();
      for (const auto& ex : j.at("exemplars")) {
        sp.label.exemplars.push_back(
            {ex.at("skill").get<int>(),
             ex.at("essential").get<std::vector<size_t>>(),
             ex.at("distractor").get<std::vector<size_t>>()});
      }
      for (size_t i : sp.label.essential) {
        if (i >= sp.prompt.base.size())
          throw InvalidInputError("label index out of range in " + sp.id);
      }
      corpus.prompts.push_back(std::move(sp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed corpus: ") + e.what());
  }
  return corpus;
}

}  // namespace maskpress
