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

#include "maskpress/maskpress.h"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "json.hpp"
#include "maskpress/diffumodel.hpp"
#include "maskpress/pipeline.hpp"
#include "maskpress/prompt_pair.hpp"
#include "maskpress/synth.hpp"
#include "maskpress/tuner.hpp"

struct mp_tokenizer {
  std::unique_ptr<maskpress::Tokenizer> impl;
};

struct mp_model {
  maskpress::MaskModel impl;
};

struct mp_compress_result {
  std::vector<uint8_t> mask;
  std::string pruned_text;
  std::string json;
  size_t retained = 0;
  double ratio = 0.0;
  int steps = 0;
};

namespace {

namespace mp = maskpress;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

thread_local std::string g_last_error;
std::atomic<int> g_stop{0};

static_assert(std::atomic<int>::is_always_lock_free);

template <typename F>
mp_status Guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MP_OK;
  } catch (const mp::Error& e) {
    g_last_error = e.what();
    return static_cast<mp_status>(e.code());
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return MP_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MP_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MP_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MP_INTERNAL;
  }
}

void Require(const void* p, const char* what) {
  if (p == nullptr) throw mp::InvalidInputError(std::string(what) + " is null");
}

bool StopRequested() { return g_stop.load(std::memory_order_relaxed) != 0; }

std::string Str(const char* s) { return s ? std::string(s) : std::string(); }

mp::ShotStrategy ParseStrategy(const std::string& s) {
  if (s == "fixed_k") return mp::ShotStrategy::kRandomFixedK;
  if (s == "variable_k") return mp::ShotStrategy::kRandomVariableK;
  if (s == "pluggable") return mp::ShotStrategy::kPluggable;
  throw mp::ConfigError("unknown shot strategy: " + s);
}

std::vector<mp::TrainExample> ToExamples(const std::vector<mp::PromptPair>& pairs) {
  std::vector<mp::TrainExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.id, p.tokens, p.mask});
  return out;
}

mp_epoch_metrics ToC(const mp::EpochMetrics& e) {
  return {e.epoch, e.mean_loss, e.holdout.precision, e.holdout.recall,
          e.holdout.f1, e.holdout.removed_recall};
}

std::string TokenizerFor(const mp::MaskModel& model) {
  const uint32_t v = model.arch().vocab_size;
  if (v == 257) return "byte";
  return mp::WhitespaceTokenizer(static_cast<mp::TokenId>(v)).name();
}

}  // namespace

extern "C" {

const char* mp_version(void) { return "0.1.0"; }

const char* mp_last_error(void) { return g_last_error.c_str(); }

const char* mp_status_name(mp_status status) {
  if (status == MP_OK) return "ok";
  if (status == MP_INTERNAL) return "internal";
  if (status >= MP_INVALID_INPUT && status <= MP_INTERRUPTED) {
    return mp::ErrorCodeName(static_cast<mp::ErrorCode>(status));
  }
  return "unknown";
}

void mp_request_stop(void) { g_stop.store(1, std::memory_order_relaxed); }
void mp_clear_stop(void) { g_stop.store(0, std::memory_order_relaxed); }
int mp_stop_requested(void) { return StopRequested() ? 1 : 0; }

// ---- Tokenizers -----------------------------------------------------------

mp_status mp_tokenizer_create(const char* name, mp_tokenizer** out) {
  return Guard([&] {
    Require(name, "name");
    Require(out, "out");
    *out = new mp_tokenizer{mp::MakeTokenizer(name)};
  });
}

void mp_tokenizer_free(mp_tokenizer* tok) { delete tok; }

int32_t mp_tokenizer_vocab_size(const mp_tokenizer* tok) {
  return tok ? tok->impl->vocab_size() : 0;
}

mp_status mp_tokenize(const mp_tokenizer* tok, const char* text, int32_t* ids,
                      size_t capacity, size_t* n_tokens) {
  return Guard([&] {
    Require(tok, "tokenizer");
    Require(text, "text");
    Require(n_tokens, "n_tokens");
    const mp::TokenSeq seq = mp::Tokenize(text, *tok->impl);
    *n_tokens = seq.size();
    if (ids) {
      for (size_t i = 0; i < seq.size() && i < capacity; ++i) ids[i] = seq.tokens()[i];
    }
  });
}

// ---- Synthetic corpora ----------------------------------------------------

void mp_synth_options_init(mp_synth_options* opts) {
  if (!opts) return;
  const mp::SynthCorpusSpec d;
  *opts = {d.n_prompts,      d.n_exemplars, d.essential_per_shot,
           d.redundant_per_shot, d.n_skills, d.queries_per_skill,
           d.distractor_rate, d.seed,       d.vocab_size,
           nullptr};
}

mp_status mp_synth_corpus_generate(const mp_synth_options* opts,
                                   const char* out_dir) {
  return Guard([&] {
    Require(opts, "options");
    Require(out_dir, "out_dir");
    mp::SynthCorpusSpec spec;
    spec.n_prompts = opts->n_prompts;
    spec.n_exemplars = opts->n_exemplars;
    spec.essential_per_shot = opts->essential_per_shot;
    spec.redundant_per_shot = opts->redundant_per_shot;
    spec.n_skills = opts->n_skills;
    spec.queries_per_skill = opts->queries_per_skill;
    spec.distractor_rate = opts->distractor_rate;
    spec.seed = opts->seed;
    spec.vocab_size = opts->vocab_size;
    if (opts->redundancy_kinds) {
      spec.redundancy_kinds.clear();
      std::stringstream ss(opts->redundancy_kinds);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) spec.redundancy_kinds.insert(mp::ParseRedundancyKind(item));
      }
    }
    const mp::SynthCorpus corpus = mp::GenerateSynthCorpus(spec);
    fs::create_directories(out_dir);
    mp::SaveCorpus(corpus, out_dir);
    const mp::WhitespaceTokenizer tok(spec.vocab_size);
    std::vector<mp::PromptPair> pairs;
    for (const auto& p : corpus.prompts) {
      const mp::RetentionMask m = mp::OracleMask(p);
      const double score = mp::SynthScore(p.label, m, corpus.queries).value;
      pairs.push_back(mp::MakePromptPair(p.id, p.prompt.base, tok.name(), m,
                                         {mp::PairStage::kFull, score, p.id}));
    }
    mp::WritePromptPairs((fs::path(out_dir) / "label_pairs.jsonl").string(), pairs);
  });
}

// ---- Dataset construction -------------------------------------------------

void mp_dataset_options_init(mp_dataset_options* opts) {
  if (!opts) return;
  const mp::PipelineConfig pc;
  const mp::EndpointConfig ec;
  *opts = mp_dataset_options{};
  opts->shot_strategy = "fixed_k";
  opts->k = static_cast<int>(pc.shots.k);
  opts->mean_target = pc.shots.mean_target;
  opts->delta = pc.ta.delta;
  opts->max_passes = pc.ta.max_passes;
  opts->protect_query = pc.ta.protect_query ? 1 : 0;
  opts->require_beats_full = pc.filter.require_beats_full ? 1 : 0;
  opts->require_beats_fewer = pc.filter.require_beats_fewer ? 1 : 0;
  opts->margin = pc.filter.margin;
  opts->seed = pc.seed;
  opts->harvest_stride = static_cast<int>(pc.harvest_stride);
  opts->validation_fraction = pc.validation_fraction;
  opts->jobs = pc.jobs;
  opts->oracle = "synth";
  opts->api_model = "default";
  opts->max_retries = ec.max_retries;
  opts->max_in_flight = ec.max_in_flight;
}

mp_status mp_build_dataset(const char* corpus_dir, const mp_dataset_options* opts,
                           const char* out_dir, mp_dataset_summary* summary) {
  return Guard([&] {
    Require(corpus_dir, "corpus_dir");
    Require(opts, "options");
    Require(out_dir, "out_dir");
    if (opts->k < 1) throw mp::ConfigError("k must be >= 1");
    if (opts->harvest_stride < 0) throw mp::ConfigError("harvest_stride must be >= 0");
    const mp::SynthCorpus corpus = mp::LoadCorpus(corpus_dir);

    mp::PipelineConfig cfg;
    cfg.shots.strategy = ParseStrategy(Str(opts->shot_strategy));
    cfg.shots.k = static_cast<size_t>(opts->k);
    cfg.shots.mean_target = opts->mean_target;
    cfg.ta.delta = opts->delta;
    cfg.ta.max_passes = opts->max_passes;
    cfg.ta.protect_query = opts->protect_query != 0;
    cfg.filter.require_beats_full = opts->require_beats_full != 0;
    cfg.filter.require_beats_fewer = opts->require_beats_fewer != 0;
    cfg.filter.margin = opts->margin;
    cfg.seed = opts->seed;
    cfg.harvest_stride = static_cast<size_t>(opts->harvest_stride);
    cfg.validation_fraction = opts->validation_fraction;
    cfg.jobs = opts->jobs;
    cfg.out_dir = out_dir;
    cfg.stop = StopRequested;
    if (opts->max_evaluations > 0) cfg.max_evaluations = opts->max_evaluations;
    cfg.filter.Validate();

    std::vector<mp::PipelineInput> inputs;
    const std::string oracle = Str(opts->oracle).empty() ? "synth" : Str(opts->oracle);
    if (oracle == "synth") {
      inputs = mp::SynthPipelineInputs(corpus);
    } else if (oracle == "llm") {
      if (!opts->eval_set_path) throw mp::ConfigError("llm oracle needs an eval set");
      mp::EndpointConfig ep = mp::EndpointConfig::FromEnv();
      if (opts->api_base) ep.base_url = opts->api_base;
      if (opts->api_key) ep.api_key = opts->api_key;
      if (opts->api_model) ep.model = opts->api_model;
      ep.max_retries = opts->max_retries;
      ep.max_in_flight = opts->max_in_flight;
      if (ep.base_url.empty()) {
        throw mp::ConfigError("llm oracle needs an API base (MASKPRESS_API_BASE)");
      }
      inputs = mp::LlmPipelineInputs(corpus, mp::ReadEvalSet(opts->eval_set_path), ep);
    } else {
      throw mp::ConfigError("unknown oracle: " + oracle);
    }
    const mp::DatasetResult r = mp::BuildDataset(inputs, cfg);
    if (summary) {
      *summary = {r.report.n_prompts,        r.report.improved,
                  r.report.not_improved,     r.report.trajectory_pairs,
                  r.train.size(),            r.validation.size(),
                  r.test.size()};
    }
  });
}

// ---- Models ---------------------------------------------------------------

void mp_model_arch_init(mp_model_arch* arch) {
  if (!arch) return;
  const mp::ModelArch a;
  *arch = {a.n_layers, a.d_model,    a.n_heads,   a.max_seq_len,
           a.vocab_size, a.d_ff, a.rel_window};
}

mp_status mp_model_create(const mp_model_arch* arch, uint64_t seed, mp_model** out) {
  return Guard([&] {
    Require(arch, "arch");
    Require(out, "out");
    mp::ModelArch a{arch->n_layers,   arch->d_model, arch->n_heads,
                    arch->max_seq_len, arch->vocab_size, arch->d_ff,
                    arch->rel_window};
    *out = new mp_model{mp::MaskModel(a, seed)};
  });
}

mp_status mp_model_load(const char* path, mp_model** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new mp_model{mp::LoadModel(path)};
  });
}

mp_status mp_model_save(const mp_model* model, const char* path) {
  return Guard([&] {
    Require(model, "model");
    Require(path, "path");
    mp::SaveModel(model->impl, path);
  });
}

void mp_model_free(mp_model* model) { delete model; }

size_t mp_model_param_count(const mp_model* model) {
  return model ? model->impl.param_count() : 0;
}

void mp_model_get_arch(const mp_model* model, mp_model_arch* arch) {
  if (!model || !arch) return;
  const mp::ModelArch& a = model->impl.arch();
  *arch = {a.n_layers, a.d_model,    a.n_heads,   a.max_seq_len,
           a.vocab_size, a.d_ff, a.rel_window};
}

// ---- Training -------------------------------------------------------------

void mp_train_options_init(mp_train_options* opts) {
  if (!opts) return;
  const mp::TrainConfig c;
  *opts = {c.alpha, c.lambda_mask, c.lr, c.warmup_steps, c.epochs,
           c.max_seq_len, c.batch_size, c.seed};
}

mp_status mp_train(mp_model* model, const char* train_path, const char* holdout_path,
                   const mp_train_options* opts, const char* metrics_path,
                   mp_epoch_callback on_epoch, void* user,
                   mp_train_summary* summary) {
  return Guard([&] {
    Require(model, "model");
    Require(train_path, "train_path");
    Require(opts, "options");
    mp::TrainConfig cfg;
    cfg.alpha = opts->alpha;
    cfg.lambda_mask = opts->lambda_mask;
    cfg.lr = opts->lr;
    cfg.warmup_steps = opts->warmup_steps;
    cfg.epochs = opts->epochs;
    cfg.max_seq_len = opts->max_seq_len;
    cfg.batch_size = opts->batch_size;
    cfg.seed = opts->seed;
    cfg.Validate();

    std::vector<mp::TrainExample> train = ToExamples(mp::ReadPromptPairs(train_path));
    std::vector<mp::TrainExample> holdout;
    if (holdout_path) holdout = ToExamples(mp::ReadPromptPairs(holdout_path));
    const uint32_t vocab = model->impl.arch().vocab_size;
    for (const auto* set : {&train, &holdout}) {
      for (const auto& ex : *set) {
        for (mp::TokenId t : ex.tokens) {
          if (t < 0 || static_cast<uint32_t>(t) + 1 >= vocab) {
            throw mp::ShapeError("pair " + ex.id +
                                 " uses token ids outside the model vocabulary");
          }
        }
      }
    }

    std::ofstream metrics;
    if (metrics_path) {
      metrics.open(metrics_path, std::ios::binary | std::ios::trunc);
      if (!metrics) throw mp::IoError(std::string("cannot write ") + metrics_path);
    }
    mp::StepSink on_step = [&](const mp::StepMetrics& s) {
      if (metrics.is_open()) {
        ordered_json j;
        j["step"] = s.step;
        j["t"] = s.t;
        j["l_bce"] = s.l_bce;
        j["l_anti"] = s.l_anti;
        j["l_total"] = s.l_total;
        metrics << j.dump() << '\n';
      }
      if (StopRequested()) throw mp::InterruptedError("training interrupted");
    };
    mp::EpochSink epoch_sink = [&](const mp::EpochMetrics& e) {
      if (on_epoch) {
        const mp_epoch_metrics c = ToC(e);
        on_epoch(&c, user);
      }
    };
    const mp::TrainResult r = mp::Train(model->impl, train, holdout, cfg, on_step, epoch_sink);
    if (summary) {
      summary->optimizer_steps = r.optimizer_steps;
      summary->skipped = r.skipped;
      summary->baseline = ToC(r.epochs.front());
      summary->final_epoch = ToC(r.epochs.back());
    }
  });
}

// ---- Compression ----------------------------------------------------------

void mp_compress_options_init(mp_compress_options* opts) {
  if (!opts) return;
  const mp::InferenceConfig c;
  *opts = {c.steps, c.top_k, c.tau, 0, 0, nullptr};
}

mp_status mp_compress(const mp_model* model, const char* text,
                      const mp_compress_options* opts, mp_compress_result** out) {
  return Guard([&] {
    Require(model, "model");
    Require(text, "text");
    Require(opts, "options");
    Require(out, "out");
    const std::string tok_name =
        opts->tokenizer ? std::string(opts->tokenizer) : TokenizerFor(model->impl);
    const auto tok = mp::MakeTokenizer(tok_name);
    if (static_cast<uint32_t>(tok->vocab_size()) != model->impl.arch().vocab_size) {
      throw mp::ConfigError("tokenizer " + tok_name +
                            " does not match the model vocabulary");
    }
    const mp::TokenSeq seq = mp::Tokenize(text, *tok);
    mp::InferenceConfig cfg;
    cfg.steps = opts->steps;
    cfg.top_k = opts->top_k;
    cfg.tau = opts->tau;
    if (opts->per_step_cap > 0) cfg.per_step_cap = opts->per_step_cap;
    cfg.full_steps = opts->full_steps != 0;
    const mp::InferenceResult r = mp::InferMask(model->impl, seq, cfg);

    auto res = std::make_unique<mp_compress_result>();
    res->mask = r.mask.bits();
    res->retained = r.mask.retained_count();
    res->ratio = 1.0 - static_cast<double>(res->retained) / static_cast<double>(seq.size());
    res->steps = r.steps_run;
    res->pruned_text =
        mp::ApplyMask(seq, r.mask, mp::MaskMode::kDelete, tok->mask_id()).source_text();
    ordered_json j;
    j["text"] = seq.source_text();
    j["pruned_text"] = res->pruned_text;
    j["tokenizer"] = tok_name;
    j["tokens"] = seq.tokens();
    j["mask"] = res->mask;
    j["ratio"] = res->ratio;
    j["steps_run"] = res->steps;
    res->json = j.dump();
    *out = res.release();
  });
}

void mp_compress_result_free(mp_compress_result* result) { delete result; }
size_t mp_compress_result_length(const mp_compress_result* r) { return r ? r->mask.size() : 0; }
size_t mp_compress_result_retained(const mp_compress_result* r) { return r ? r->retained : 0; }
const uint8_t* mp_compress_result_mask(const mp_compress_result* r) {
  return r ? r->mask.data() : nullptr;
}
const char* mp_compress_result_text(const mp_compress_result* r) {
  return r ? r->pruned_text.c_str() : "";
}
double mp_compress_result_ratio(const mp_compress_result* r) { return r ? r->ratio : 0.0; }
int mp_compress_result_steps(const mp_compress_result* r) { return r ? r->steps : 0; }
const char* mp_compress_result_json(const mp_compress_result* r) {
  return r ? r->json.c_str() : "";
}

// ---- Grid search ----------------------------------------------------------

void mp_grid_options_init(mp_grid_options* opts) {
  if (!opts) return;
  *opts = mp_grid_options{};
  opts->steps = mp::GridSpec{}.steps;
}

mp_status mp_grid_search(const mp_model* model, const char* corpus_dir,
                         const char* pairs_path, const mp_grid_options* opts,
                         const char* table_path, mp_grid_summary* summary) {
  return Guard([&] {
    Require(model, "model");
    Require(corpus_dir, "corpus_dir");
    Require(pairs_path, "pairs_path");
    mp::GridSpec grid;
    if (opts) {
      if (opts->top_k_values) {
        grid.top_k_values.assign(opts->top_k_values, opts->top_k_values + opts->n_top_k);
      }
      if (opts->tau_values) {
        grid.tau_values.assign(opts->tau_values, opts->tau_values + opts->n_tau);
      }
      grid.steps = opts->steps;
      if (opts->per_step_cap > 0) grid.per_step_cap = opts->per_step_cap;
    }
    const mp::SynthCorpus corpus = mp::LoadCorpus(corpus_dir);
    std::map<std::string, const mp::SynthPrompt*> by_id;
    for (const auto& p : corpus.prompts) by_id[p.id] = &p;
    std::vector<mp::TunerItem> items;
    for (const mp::PromptPair& pair : mp::ReadPromptPairs(pairs_path)) {
      auto it = by_id.find(pair.meta.source);
      if (it == by_id.end()) it = by_id.find(pair.id);
      if (it == by_id.end()) {
        throw mp::InvalidInputError("pair " + pair.id + " has no prompt in the corpus");
      }
      const mp::SynthPrompt& p = *it->second;
      if (p.prompt.base.source_text() != pair.text) {
        throw mp::InvalidInputError("pair " + pair.id + " text differs from its corpus prompt");
      }
      items.push_back({pair.id, p.prompt.base, mp::MakeSynthOracle(p, corpus.queries)});
    }
    mp::GridSearchOptions gopts;
    if (table_path) gopts.table_path = table_path;
    gopts.stop = StopRequested;
    const mp::GridResult r = mp::GridSearch(model->impl, items, grid, gopts);
    if (summary) {
      const mp::GridRow& best = r.table[r.selected];
      *summary = {r.table.size(), best.top_k, best.tau, best.accuracy, best.mean_tokens};
    }
  });
}

// ---- Analysis -------------------------------------------------------------

mp_status mp_analyze(const char* pairs_path, const char* out_path, double* tv_distance) {
  return Guard([&] {
    Require(pairs_path, "pairs_path");
    const mp::CategoryReport rep =
        mp::AnalyzeTokenCategories(mp::ReadPromptPairs(pairs_path));
    if (out_path) {
      std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
      if (!out) throw mp::IoError(std::string("cannot write ") + out_path);
      out << mp::EncodeCategoryReport(rep) << '\n';
    }
    if (tv_distance) {
      *tv_distance = rep.tv_distance ? *rep.tv_distance
                                     : std::numeric_limits<double>::quiet_NaN();
    }
  });
}

}  // extern "C"
