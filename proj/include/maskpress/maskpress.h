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

#ifndef MASKPRESS_MASKPRESS_H_
#define MASKPRESS_MASKPRESS_H_

/* C interface to the maskpress library. Every function returning mp_status
 * sets a thread-local message readable through mp_last_error() on failure.
 * Handles are opaque and owned by the caller once returned. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MP_API __declspec(dllexport)
#else
#define MP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mp_status {
  MP_OK = 0,
  MP_INVALID_INPUT = 1,
  MP_SHAPE = 2,
  MP_ALIGNMENT = 3,
  MP_SEGMENTATION = 4,
  MP_CONFIG = 5,
  MP_SCORING = 6,
  MP_REMOTE = 7,
  MP_PROTOCOL = 8,
  MP_RESUME = 9,
  MP_LOSS = 10,
  MP_TRAIN = 11,
  MP_IO = 12,
  MP_MISSING_ARTIFACT = 13,
  MP_INTERRUPTED = 14,
  MP_INTERNAL = 99
} mp_status;

MP_API const char* mp_version(void);
MP_API const char* mp_last_error(void);
MP_API const char* mp_status_name(mp_status status);

/* Cooperative cancellation shared by all long-running calls. Safe to call
 * from a signal handler. */
MP_API void mp_request_stop(void);
MP_API void mp_clear_stop(void);
MP_API int mp_stop_requested(void);

/* ---- Tokenizers ------------------------------------------------------- */

typedef struct mp_tokenizer mp_tokenizer;

/* "whitespace", "whitespace:<vocab>" or "byte". */
MP_API mp_status mp_tokenizer_create(const char* name, mp_tokenizer** out);
MP_API void mp_tokenizer_free(mp_tokenizer* tok);
MP_API int32_t mp_tokenizer_vocab_size(const mp_tokenizer* tok);
/* Writes up to `capacity` ids and stores the full count in *n_tokens. */
MP_API mp_status mp_tokenize(const mp_tokenizer* tok, const char* text,
                             int32_t* ids, size_t capacity, size_t* n_tokens);

/* ---- Synthetic corpora ------------------------------------------------ */

typedef struct mp_synth_options {
  int n_prompts;
  int n_exemplars;
  int essential_per_shot;
  int redundant_per_shot;
  int n_skills;
  int queries_per_skill;
  double distractor_rate;
  uint64_t seed;
  int vocab_size;
  /* Comma-separated subset of filler_phrase,duplicate_clause,
   * verbose_connective; NULL = default. */
  const char* redundancy_kinds;
} mp_synth_options;

MP_API void mp_synth_options_init(mp_synth_options* opts);
/* Writes corpus.json, prompts.jsonl and label_pairs.jsonl (one pair per
 * prompt whose mask drops exactly the redundant and distractor tokens). */
MP_API mp_status mp_synth_corpus_generate(const mp_synth_options* opts,
                                          const char* out_dir);

/* ---- Dataset construction --------------------------------------------- */

typedef struct mp_dataset_options {
  const char* shot_strategy; /* fixed_k | variable_k | pluggable */
  int k;
  double mean_target;
  double delta;
  int max_passes;
  int protect_query;
  int require_beats_full;
  int require_beats_fewer;
  double margin;
  uint64_t seed;
  int harvest_stride;
  double validation_fraction;
  int jobs;
  const char* oracle;        /* synth | llm */
  const char* eval_set_path; /* llm only: JSONL {"question","answer"} */
  const char* api_base;      /* NULL = MASKPRESS_API_BASE */
  const char* api_key;       /* NULL = MASKPRESS_API_KEY */
  const char* api_model;
  int max_retries;
  int max_in_flight;
  /* Interrupt after this many evaluations (0 = unlimited). */
  uint64_t max_evaluations;
} mp_dataset_options;

typedef struct mp_dataset_summary {
  size_t n_prompts;
  size_t improved;
  size_t not_improved;
  size_t trajectory_pairs;
  size_t n_train;
  size_t n_validation;
  size_t n_test;
} mp_dataset_summary;

MP_API void mp_dataset_options_init(mp_dataset_options* opts);
MP_API mp_status mp_build_dataset(const char* corpus_dir,
                                  const mp_dataset_options* opts,
                                  const char* out_dir,
                                  mp_dataset_summary* summary);

/* ---- Models ----------------------------------------------------------- */

typedef struct mp_model mp_model;

typedef struct mp_model_arch {
  uint32_t n_layers;
  uint32_t d_model;
  uint32_t n_heads;
  uint32_t max_seq_len;
  uint32_t vocab_size;
  uint32_t d_ff;
  uint32_t rel_window;
} mp_model_arch;

MP_API void mp_model_arch_init(mp_model_arch* arch);
MP_API mp_status mp_model_create(const mp_model_arch* arch, uint64_t seed,
                                 mp_model** out);
MP_API mp_status mp_model_load(const char* path, mp_model** out);
MP_API mp_status mp_model_save(const mp_model* model, const char* path);
MP_API void mp_model_free(mp_model* model);
MP_API size_t mp_model_param_count(const mp_model* model);
MP_API void mp_model_get_arch(const mp_model* model, mp_model_arch* arch);

/* ---- Training --------------------------------------------------------- */

typedef struct mp_train_options {
  double alpha;
  double lambda_mask;
  double lr;
  int warmup_steps;
  int epochs;
  size_t max_seq_len;
  size_t batch_size;
  uint64_t seed;
} mp_train_options;

typedef struct mp_epoch_metrics {
  int epoch; /* 0 = before training */
  double mean_loss;
  double precision;
  double recall;
  double f1;
  double removed_recall;
} mp_epoch_metrics;

typedef void (*mp_epoch_callback)(const mp_epoch_metrics* metrics, void* user);

typedef struct mp_train_summary {
  size_t optimizer_steps;
  size_t skipped;
  mp_epoch_metrics baseline;
  mp_epoch_metrics final_epoch;
} mp_train_summary;

MP_API void mp_train_options_init(mp_train_options* opts);
/* Pairs are PromptPair JSONL. holdout_path may be NULL. When metrics_path is
 * set, one JSON line per optimizer step is written there. */
MP_API mp_status mp_train(mp_model* model, const char* train_path,
                          const char* holdout_path,
                          const mp_train_options* opts,
                          const char* metrics_path,
                          mp_epoch_callback on_epoch, void* user,
                          mp_train_summary* summary);

/* ---- Compression ------------------------------------------------------ */

typedef struct mp_compress_options {
  int steps;
  size_t top_k;
  double tau;
  size_t per_step_cap; /* 0 = no cap */
  int full_steps;
  /* NULL picks the tokenizer matching the model vocabulary. */
  const char* tokenizer;
} mp_compress_options;

typedef struct mp_compress_result mp_compress_result;

MP_API void mp_compress_options_init(mp_compress_options* opts);
MP_API mp_status mp_compress(const mp_model* model, const char* text,
                             const mp_compress_options* opts,
                             mp_compress_result** out);
MP_API void mp_compress_result_free(mp_compress_result* result);
MP_API size_t mp_compress_result_length(const mp_compress_result* result);
MP_API size_t mp_compress_result_retained(const mp_compress_result* result);
MP_API const uint8_t* mp_compress_result_mask(const mp_compress_result* result);
MP_API const char* mp_compress_result_text(const mp_compress_result* result);
MP_API double mp_compress_result_ratio(const mp_compress_result* result);
MP_API int mp_compress_result_steps(const mp_compress_result* result);
/* {"text","pruned_text","tokenizer","tokens","mask","ratio","steps_run"} */
MP_API const char* mp_compress_result_json(const mp_compress_result* result);

/* ---- Grid search ------------------------------------------------------ */

typedef struct mp_grid_options {
  const size_t* top_k_values; /* NULL = {2,3,4} */
  size_t n_top_k;
  const double* tau_values;   /* NULL = {1e-4,1e-3,1e-2,1e-1} */
  size_t n_tau;
  int steps;
  size_t per_step_cap;        /* 0 = no cap */
} mp_grid_options;

typedef struct mp_grid_summary {
  size_t n_rows;
  size_t best_top_k;
  double best_tau;
  double best_accuracy;
  double best_mean_tokens;
} mp_grid_summary;

MP_API void mp_grid_options_init(mp_grid_options* opts);
/* Scores each pair's full prompt with the synthetic oracle of the corpus
 * prompt it came from. The table is written (and resumed) at table_path. */
MP_API mp_status mp_grid_search(const mp_model* model, const char* corpus_dir,
                                const char* pairs_path,
                                const mp_grid_options* opts,
                                const char* table_path,
                                mp_grid_summary* summary);

/* ---- Analysis --------------------------------------------------------- */

/* Writes the category report JSON to out_path. *tv_distance is NaN when no
 * token was removed. */
MP_API mp_status mp_analyze(const char* pairs_path, const char* out_path,
                            double* tv_distance);

#ifdef __cplusplus
}
#endif

#endif /* MASKPRESS_MASKPRESS_H_ */
