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

// Exercises the shared library through its C interface only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "maskpress/maskpress.h"

namespace fs = std::filesystem;

namespace {

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

size_t Lines(const fs::path& p) {
  std::ifstream in(p);
  size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

fs::path Root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "mp_capi";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

// Small corpus shared by the cases below.
fs::path Corpus() {
  static const fs::path dir = [] {
    mp_synth_options o;
    mp_synth_options_init(&o);
    o.n_prompts = 12;
    o.n_exemplars = 6;
    o.essential_per_shot = 4;
    o.redundant_per_shot = 2;
    o.n_skills = 3;
    o.distractor_rate = 0.3;
    o.seed = 4;
    const fs::path d = Root() / "corpus";
    REQUIRE(mp_synth_corpus_generate(&o, d.c_str()) == MP_OK);
    return d;
  }();
  return dir;
}

mp_model_arch SmallArch() {
  mp_model_arch a;
  mp_model_arch_init(&a);
  a.d_model = 16;
  a.n_heads = 2;
  a.d_ff = 32;
  a.n_layers = 1;
  return a;
}

void CountEpoch(const mp_epoch_metrics* m, void* user) {
  auto* seen = static_cast<std::vector<int>*>(user);
  seen->push_back(m->epoch);
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(mp_version()).size() > 0);
  CHECK(std::string(mp_status_name(MP_OK)) == "ok");
  CHECK(std::string(mp_status_name(MP_MISSING_ARTIFACT)).size() > 0);
}

TEST_CASE("tokenizer handles") {
  mp_tokenizer* tok = nullptr;
  REQUIRE(mp_tokenizer_create("whitespace", &tok) == MP_OK);
  CHECK(mp_tokenizer_vocab_size(tok) == 512);
  size_t n = 0;
  int32_t ids[2];
  CHECK(mp_tokenize(tok, "one two three", ids, 2, &n) == MP_OK);
  CHECK(n == 5);
  std::vector<int32_t> all(n);
  CHECK(mp_tokenize(tok, "one two three", all.data(), all.size(), &n) == MP_OK);
  CHECK(all[0] == ids[0]);
  CHECK(all[1] == ids[1]);
  CHECK(mp_tokenize(tok, "", ids, 2, &n) == MP_INVALID_INPUT);
  mp_tokenizer_free(tok);

  mp_tokenizer* bad = nullptr;
  CHECK(mp_tokenizer_create("sentencepiece", &bad) == MP_CONFIG);
  CHECK(bad == nullptr);
  CHECK(std::string(mp_last_error()).find("sentencepiece") != std::string::npos);
  CHECK(mp_tokenizer_create(nullptr, &bad) == MP_INVALID_INPUT);
}

TEST_CASE("synthetic corpus files") {
  const fs::path d = Corpus();
  CHECK(Lines(d / "prompts.jsonl") == 12);
  CHECK(Lines(d / "label_pairs.jsonl") == 12);
  CHECK(fs::exists(d / "corpus.json"));
  mp_synth_options o;
  mp_synth_options_init(&o);
  o.vocab_size = 4;
  CHECK(mp_synth_corpus_generate(&o, (Root() / "tiny").c_str()) == MP_CONFIG);
  mp_synth_options_init(&o);
  o.redundancy_kinds = "filler_phrase,bogus";
  CHECK(mp_synth_corpus_generate(&o, (Root() / "bogus").c_str()) == MP_CONFIG);
}

TEST_CASE("dataset build and resume") {
  mp_dataset_options o;
  mp_dataset_options_init(&o);
  o.seed = 2;
  o.k = 4;
  mp_dataset_summary s{};
  const fs::path out = Root() / "data";
  REQUIRE(mp_build_dataset(Corpus().c_str(), &o, out.c_str(), &s) == MP_OK);
  CHECK(s.n_prompts == 12);
  CHECK(s.improved + s.not_improved == 12);
  CHECK(s.n_test == s.not_improved);
  CHECK(Lines(out / "test.jsonl") == s.n_test);
  CHECK(Lines(out / "train.jsonl") == s.n_train);

  const fs::path killed = Root() / "data_killed";
  o.max_evaluations = 30;
  CHECK(mp_build_dataset(Corpus().c_str(), &o, killed.c_str(), &s) == MP_INTERRUPTED);
  o.max_evaluations = 0;
  REQUIRE(mp_build_dataset(Corpus().c_str(), &o, killed.c_str(), &s) == MP_OK);
  for (const char* f : {"train.jsonl", "validation.jsonl", "test.jsonl", "report.json"}) {
    CHECK(Slurp(killed / f) == Slurp(out / f));
  }

  CHECK(mp_build_dataset((Root() / "nope").c_str(), &o, out.c_str(), &s) ==
        MP_MISSING_ARTIFACT);
  o.require_beats_full = 0;
  o.require_beats_fewer = 0;
  CHECK(mp_build_dataset(Corpus().c_str(), &o, out.c_str(), &s) == MP_CONFIG);
  mp_dataset_options_init(&o);
  o.shot_strategy = "best_k";
  CHECK(mp_build_dataset(Corpus().c_str(), &o, out.c_str(), &s) == MP_CONFIG);
  mp_dataset_options_init(&o);
  o.oracle = "llm";
  o.api_base = "http://127.0.0.1:1";
  CHECK(mp_build_dataset(Corpus().c_str(), &o, out.c_str(), &s) != MP_OK);
}

TEST_CASE("model lifecycle") {
  const mp_model_arch a = SmallArch();
  mp_model* m = nullptr;
  REQUIRE(mp_model_create(&a, 7, &m) == MP_OK);
  CHECK(mp_model_param_count(m) > 0);
  const fs::path p1 = Root() / "m1.bin", p2 = Root() / "m2.bin";
  REQUIRE(mp_model_save(m, p1.c_str()) == MP_OK);
  mp_model* back = nullptr;
  REQUIRE(mp_model_load(p1.c_str(), &back) == MP_OK);
  mp_model_arch got;
  mp_model_get_arch(back, &got);
  CHECK(got.d_model == 16);
  CHECK(got.vocab_size == 512);
  REQUIRE(mp_model_save(back, p2.c_str()) == MP_OK);
  CHECK(Slurp(p1) == Slurp(p2));
  mp_model_free(back);
  mp_model_free(m);

  mp_model* none = nullptr;
  CHECK(mp_model_load((Root() / "absent.bin").c_str(), &none) == MP_MISSING_ARTIFACT);
  std::ofstream(Root() / "junk.bin") << "not a model";
  CHECK(mp_model_load((Root() / "junk.bin").c_str(), &none) == MP_INVALID_INPUT);
  mp_model_arch bad = a;
  bad.n_heads = 3;
  CHECK(mp_model_create(&bad, 1, &none) == MP_CONFIG);
}

TEST_CASE("training, compression, grid search and analysis") {
  const mp_model_arch a = SmallArch();
  mp_model* m = nullptr;
  REQUIRE(mp_model_create(&a, 1, &m) == MP_OK);
  mp_train_options t;
  mp_train_options_init(&t);
  t.epochs = 2;
  t.lr = 3e-3;
  t.warmup_steps = 4;
  const std::string pairs = (Corpus() / "label_pairs.jsonl").string();
  const fs::path metrics = Root() / "metrics.jsonl";
  std::vector<int> seen;
  mp_train_summary s{};
  REQUIRE(mp_train(m, pairs.c_str(), pairs.c_str(), &t, metrics.c_str(), CountEpoch,
                   &seen, &s) == MP_OK);
  CHECK(seen == std::vector<int>{0, 1, 2});
  CHECK(s.optimizer_steps == 24);
  CHECK(Lines(metrics) == 24);
  CHECK(s.final_epoch.epoch == 2);
  const auto first = nlohmann::json::parse(Slurp(metrics).substr(0, Slurp(metrics).find('\n')));
  CHECK(first.contains("l_total"));

  mp_request_stop();
  CHECK(mp_stop_requested() == 1);
  CHECK(mp_train(m, pairs.c_str(), nullptr, &t, nullptr, nullptr, nullptr, nullptr) ==
        MP_INTERRUPTED);
  mp_clear_stop();
  CHECK(mp_train(m, (Root() / "none.jsonl").c_str(), nullptr, &t, nullptr, nullptr,
                 nullptr, nullptr) == MP_MISSING_ARTIFACT);
  t.lr = -1;
  CHECK(mp_train(m, pairs.c_str(), nullptr, &t, nullptr, nullptr, nullptr, nullptr) ==
        MP_CONFIG);

  mp_compress_options c;
  mp_compress_options_init(&c);
  c.tau = 2.0;
  mp_compress_result* r = nullptr;
  const char* text = "keep every token here";
  REQUIRE(mp_compress(m, text, &c, &r) == MP_OK);
  CHECK(mp_compress_result_ratio(r) == 0.0);
  CHECK(mp_compress_result_retained(r) == mp_compress_result_length(r));
  CHECK(std::string(mp_compress_result_text(r)) == text);
  for (size_t i = 0; i < mp_compress_result_length(r); ++i)
    CHECK(mp_compress_result_mask(r)[i] == 1);
  const auto j = nlohmann::json::parse(mp_compress_result_json(r));
  CHECK(j["text"] == text);
  CHECK(j["ratio"] == 0.0);
  mp_compress_result_free(r);

  mp_compress_options_init(&c);
  c.tau = 0.0;
  CHECK(mp_compress(m, text, &c, &r) == MP_OK);
  CHECK(mp_compress_result_retained(r) >= 1);
  CHECK(mp_compress_result_ratio(r) ==
        doctest::Approx(1.0 - static_cast<double>(mp_compress_result_retained(r)) /
                                  static_cast<double>(mp_compress_result_length(r))));
  mp_compress_result_free(r);
  c.top_k = 0;
  CHECK(mp_compress(m, text, &c, &r) == MP_CONFIG);

  mp_grid_options g;
  mp_grid_options_init(&g);
  g.steps = 4;
  mp_grid_summary gs{};
  const fs::path table = Root() / "grid.csv";
  REQUIRE(mp_grid_search(m, Corpus().c_str(), pairs.c_str(), &g, table.c_str(), &gs) == MP_OK);
  CHECK(gs.n_rows == 12);
  CHECK(Lines(table) == 13);
  const size_t ks[] = {3};
  g.top_k_values = ks;
  g.n_top_k = 1;
  CHECK(mp_grid_search(m, Corpus().c_str(), pairs.c_str(), &g, table.c_str(), &gs) ==
        MP_RESUME);

  double tv = -1;
  REQUIRE(mp_analyze(pairs.c_str(), (Root() / "cats.json").c_str(), &tv) == MP_OK);
  CHECK(tv >= 0.0);
  CHECK(tv <= 1.0);
  REQUIRE(mp_analyze((Root() / "data" / "test.jsonl").c_str(),
                     (Root() / "cats_full.json").c_str(), &tv) == MP_OK);
  CHECK(std::isnan(tv));
  mp_model_free(m);
}
