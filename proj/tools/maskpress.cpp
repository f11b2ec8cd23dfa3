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

// maskpress command-line tool. Links only the C interface.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "maskpress/maskpress.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitRemote = 4;
constexpr int kExitInterrupted = 130;

int ExitCodeFor(mp_status s) {
  switch (s) {
    case MP_OK: return kExitOk;
    case MP_CONFIG:
    case MP_INVALID_INPUT:
    case MP_SHAPE:
    case MP_ALIGNMENT:
    case MP_SEGMENTATION:
      return kExitConfig;
    case MP_MISSING_ARTIFACT: return kExitMissing;
    case MP_REMOTE:
    case MP_PROTOCOL:
      return kExitRemote;
    case MP_INTERRUPTED: return kExitInterrupted;
    default: return kExitOther;
  }
}

int Report(mp_status s) {
  if (s != MP_OK) {
    std::fprintf(stderr, "error (%s): %s\n", mp_status_name(s), mp_last_error());
  }
  return ExitCodeFor(s);
}

extern "C" void OnSigint(int) {
  mp_request_stop();
  std::signal(SIGINT, SIG_DFL);
}

bool g_quiet = false;

void Log(const std::string& line) {
  if (!g_quiet) std::cout << line << std::endl;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SynthArgs {
  std::string out;
  std::string kinds;
  mp_synth_options opts{};
};

struct DatasetArgs {
  std::string corpus, out, strategy = "fixed_k", oracle = "synth", eval_set, api_model = "default";
  bool no_protect_query = false;
  bool beats_full = true, beats_fewer = true;
  mp_dataset_options opts{};
};

struct TrainArgs {
  std::string train, holdout, out, init, metrics;
  mp_model_arch arch{};
  mp_train_options opts{};
};

struct CompressArgs {
  std::string model, text, input, out, tokenizer;
  bool full_steps = false;
  size_t per_step_cap = 0;
  mp_compress_options opts{};
};

struct GridArgs {
  std::string model, corpus, pairs, out;
  std::vector<size_t> top_k = {2, 3, 4};
  std::vector<double> tau = {1e-4, 1e-3, 1e-2, 1e-1};
  int steps = 64;
  size_t per_step_cap = 0;
};

struct AnalyzeArgs {
  std::string pairs, out;
};

int RunSynth(SynthArgs& a) {
  a.opts.redundancy_kinds = a.kinds.empty() ? nullptr : a.kinds.c_str();
  const mp_status s = mp_synth_corpus_generate(&a.opts, a.out.c_str());
  if (s == MP_OK) Log("wrote corpus to " + a.out);
  return Report(s);
}

int RunDataset(DatasetArgs& a) {
  a.opts.shot_strategy = a.strategy.c_str();
  a.opts.oracle = a.oracle.c_str();
  a.opts.eval_set_path = a.eval_set.empty() ? nullptr : a.eval_set.c_str();
  a.opts.api_model = a.api_model.c_str();
  a.opts.protect_query = a.no_protect_query ? 0 : 1;
  a.opts.require_beats_full = a.beats_full ? 1 : 0;
  a.opts.require_beats_fewer = a.beats_fewer ? 1 : 0;
  mp_dataset_summary sum{};
  const mp_status s = mp_build_dataset(a.corpus.c_str(), &a.opts, a.out.c_str(), &sum);
  if (s == MP_OK) {
    Log("prompts: " + std::to_string(sum.n_prompts) + "  improved: " +
        std::to_string(sum.improved) + "  not improved: " +
        std::to_string(sum.not_improved) + "  trajectory pairs: " +
        std::to_string(sum.trajectory_pairs));
    Log("train: " + std::to_string(sum.n_train) + "  validation: " +
        std::to_string(sum.n_validation) + "  test: " + std::to_string(sum.n_test));
  } else if (s == MP_INTERRUPTED) {
    Log("interrupted; rerun the same command to resume");
  }
  return Report(s);
}

// `user` points to a bool: whether a holdout set was given.
void PrintEpoch(const mp_epoch_metrics* m, void* user) {
  char buf[160];
  if (*static_cast<const bool*>(user)) {
    std::snprintf(buf, sizeof buf,
                  "epoch %d  loss %.4f  holdout f1 %.4f  removed recall %.4f",
                  m->epoch, m->mean_loss, m->f1, m->removed_recall);
  } else {
    std::snprintf(buf, sizeof buf, "epoch %d  loss %.4f", m->epoch, m->mean_loss);
  }
  Log(buf);
}

int RunTrain(TrainArgs& a) {
  mp_model* model = nullptr;
  mp_status s = a.init.empty() ? mp_model_create(&a.arch, a.opts.seed, &model)
                               : mp_model_load(a.init.c_str(), &model);
  if (s != MP_OK) return Report(s);
  Log("parameters: " + std::to_string(mp_model_param_count(model)));
  mp_train_summary sum{};
  bool has_holdout = !a.holdout.empty();
  s = mp_train(model, a.train.c_str(), a.holdout.empty() ? nullptr : a.holdout.c_str(),
               &a.opts, a.metrics.empty() ? nullptr : a.metrics.c_str(), PrintEpoch,
               &has_holdout, &sum);
  if (s == MP_OK) {
    s = mp_model_save(model, a.out.c_str());
    if (s == MP_OK) {
      Log("optimizer steps: " + std::to_string(sum.optimizer_steps) + "  skipped pairs: " +
          std::to_string(sum.skipped));
      Log("wrote checkpoint " + a.out);
    }
  }
  mp_model_free(model);
  return Report(s);
}

int RunCompress(CompressArgs& a) {
  if (a.text.empty() == a.input.empty()) {
    std::fprintf(stderr, "error (config): give exactly one of --text or --input\n");
    return kExitConfig;
  }
  std::string text = a.text;
  if (!a.input.empty()) {
    std::ifstream probe(a.input);
    if (!probe) {
      std::fprintf(stderr, "error (missing_artifact): cannot read %s\n", a.input.c_str());
      return kExitMissing;
    }
    text = ReadFile(a.input);
  }
  mp_model* model = nullptr;
  mp_status s = mp_model_load(a.model.c_str(), &model);
  if (s != MP_OK) return Report(s);
  a.opts.tokenizer = a.tokenizer.empty() ? nullptr : a.tokenizer.c_str();
  a.opts.full_steps = a.full_steps ? 1 : 0;
  a.opts.per_step_cap = a.per_step_cap;
  mp_compress_result* res = nullptr;
  s = mp_compress(model, text.c_str(), &a.opts, &res);
  if (s == MP_OK) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "compression ratio: %.6f  (%zu of %zu tokens kept, %d steps)",
                  mp_compress_result_ratio(res), mp_compress_result_retained(res),
                  mp_compress_result_length(res), mp_compress_result_steps(res));
    Log(buf);
    if (!a.out.empty()) {
      std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
      out << mp_compress_result_json(res) << '\n';
      if (!out) {
        std::fprintf(stderr, "error (io): cannot write %s\n", a.out.c_str());
        s = MP_IO;
      } else {
        Log("wrote " + a.out);
      }
    }
  }
  mp_compress_result_free(res);
  mp_model_free(model);
  return Report(s);
}

int RunGrid(GridArgs& a) {
  mp_model* model = nullptr;
  mp_status s = mp_model_load(a.model.c_str(), &model);
  if (s != MP_OK) return Report(s);
  mp_grid_options g;
  mp_grid_options_init(&g);
  g.top_k_values = a.top_k.data();
  g.n_top_k = a.top_k.size();
  g.tau_values = a.tau.data();
  g.n_tau = a.tau.size();
  g.steps = a.steps;
  g.per_step_cap = a.per_step_cap;
  mp_grid_summary sum{};
  s = mp_grid_search(model, a.corpus.c_str(), a.pairs.c_str(), &g, a.out.c_str(), &sum);
  if (s == MP_OK) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "selected top_k=%zu tau=%g  accuracy %.6f  mean tokens %.6f  (%zu cells)",
                  sum.best_top_k, sum.best_tau, sum.best_accuracy, sum.best_mean_tokens,
                  sum.n_rows);
    Log(buf);
    Log("wrote " + a.out);
  }
  mp_model_free(model);
  return Report(s);
}

int RunAnalyze(AnalyzeArgs& a) {
  double tv = 0.0;
  const mp_status s = mp_analyze(a.pairs.c_str(), a.out.c_str(), &tv);
  if (s == MP_OK) {
    char buf[96];
    if (tv != tv) {
      std::snprintf(buf, sizeof buf, "total variation distance: null (nothing removed)");
    } else {
      std::snprintf(buf, sizeof buf, "total variation distance: %.6f", tv);
    }
    Log(buf);
    Log("wrote " + a.out);
  }
  return Report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maskpress: prompt compression by learned retention masks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file with one [subcommand] section; flags win");
  app.allow_config_extras(false);
  app.add_flag("-q,--quiet", g_quiet, "Suppress progress output");

  SynthArgs synth;
  mp_synth_options_init(&synth.opts);
  auto* cs = app.add_subcommand("synth-corpus", "Generate a labeled synthetic corpus");
  cs->add_option("--out", synth.out, "Output directory")->required();
  cs->add_option("--n-prompts", synth.opts.n_prompts, "")->capture_default_str();
  cs->add_option("--n-exemplars", synth.opts.n_exemplars, "")->capture_default_str();
  cs->add_option("--essential-per-shot", synth.opts.essential_per_shot, "")->capture_default_str();
  cs->add_option("--redundant-per-shot", synth.opts.redundant_per_shot, "")->capture_default_str();
  cs->add_option("--n-skills", synth.opts.n_skills, "")->capture_default_str();
  cs->add_option("--queries-per-skill", synth.opts.queries_per_skill, "")->capture_default_str();
  cs->add_option("--distractor-rate", synth.opts.distractor_rate, "")->capture_default_str();
  cs->add_option("--seed", synth.opts.seed, "")->capture_default_str();
  cs->add_option("--vocab-size", synth.opts.vocab_size, "")->capture_default_str();
  cs->add_option("--redundancy-kinds", synth.kinds,
                 "Comma list of filler_phrase,duplicate_clause,verbose_connective");

  DatasetArgs ds;
  mp_dataset_options_init(&ds.opts);
  auto* cd = app.add_subcommand("build-dataset", "Shot pruning, token pruning and filtering");
  cd->add_option("--corpus", ds.corpus, "Corpus directory")->required();
  cd->add_option("--out", ds.out, "Output directory")->required();
  cd->add_option("--strategy", ds.strategy, "fixed_k | variable_k | pluggable")
      ->check(CLI::IsMember({"fixed_k", "variable_k", "pluggable"}))->capture_default_str();
  cd->add_option("--k", ds.opts.k, "Shots kept (fixed_k, pluggable)")->capture_default_str();
  cd->add_option("--mean-target", ds.opts.mean_target, "Mean shots kept (variable_k)")
      ->capture_default_str();
  cd->add_option("--delta", ds.opts.delta, "Acceptance tolerance")->capture_default_str();
  cd->add_option("--max-passes", ds.opts.max_passes, "")->capture_default_str();
  cd->add_flag("--no-protect-query", ds.no_protect_query, "Allow pruning the query");
  cd->add_option("--require-beats-full", ds.beats_full, "")->capture_default_str();
  cd->add_option("--require-beats-fewer", ds.beats_fewer, "")->capture_default_str();
  cd->add_option("--margin", ds.opts.margin, "")->capture_default_str();
  cd->add_option("--seed", ds.opts.seed, "")->capture_default_str();
  cd->add_option("--harvest-stride", ds.opts.harvest_stride, "0 disables intermediates")
      ->capture_default_str();
  cd->add_option("--validation-fraction", ds.opts.validation_fraction, "")
      ->capture_default_str();
  cd->add_option("--jobs", ds.opts.jobs, "Prompts processed in parallel")->capture_default_str();
  cd->add_option("--oracle", ds.oracle, "synth | llm")
      ->check(CLI::IsMember({"synth", "llm"}))->capture_default_str();
  cd->add_option("--eval-set", ds.eval_set, "JSONL {question, answer} for the llm oracle");
  cd->add_option("--api-model", ds.api_model, "")->capture_default_str();
  cd->add_option("--max-retries", ds.opts.max_retries, "")->capture_default_str();
  cd->add_option("--max-in-flight", ds.opts.max_in_flight, "")->capture_default_str();
  cd->add_option("--max-evaluations", ds.opts.max_evaluations,
                 "Stop after this many evaluations (0 = no limit)")->capture_default_str();

  TrainArgs tr;
  mp_model_arch_init(&tr.arch);
  mp_train_options_init(&tr.opts);
  auto* ct = app.add_subcommand("train", "Train a retention-mask model");
  ct->add_option("--train", tr.train, "Training pairs (JSONL)")->required();
  ct->add_option("--holdout", tr.holdout, "Held-out pairs (JSONL)");
  ct->add_option("--out", tr.out, "Checkpoint to write")->required();
  ct->add_option("--init", tr.init, "Start from this checkpoint");
  ct->add_option("--metrics", tr.metrics, "Per-step metrics (JSONL)");
  ct->add_option("--layers", tr.arch.n_layers, "")->capture_default_str();
  ct->add_option("--d-model", tr.arch.d_model, "")->capture_default_str();
  ct->add_option("--heads", tr.arch.n_heads, "")->capture_default_str();
  ct->add_option("--d-ff", tr.arch.d_ff, "")->capture_default_str();
  ct->add_option("--rel-window", tr.arch.rel_window, "")->capture_default_str();
  ct->add_option("--vocab-size", tr.arch.vocab_size, "")->capture_default_str();
  ct->add_option("--model-max-len", tr.arch.max_seq_len, "")->capture_default_str();
  ct->add_option("--alpha", tr.opts.alpha, "")->capture_default_str();
  ct->add_option("--lambda-mask", tr.opts.lambda_mask, "")->capture_default_str();
  ct->add_option("--lr", tr.opts.lr, "")->capture_default_str();
  ct->add_option("--warmup-steps", tr.opts.warmup_steps, "")->capture_default_str();
  ct->add_option("--epochs", tr.opts.epochs, "")->capture_default_str();
  ct->add_option("--max-seq-len", tr.opts.max_seq_len, "Longer pairs are skipped")
      ->capture_default_str();
  ct->add_option("--batch-size", tr.opts.batch_size, "")->capture_default_str();
  ct->add_option("--seed", tr.opts.seed, "")->capture_default_str();

  CompressArgs cp;
  mp_compress_options_init(&cp.opts);
  auto* cc = app.add_subcommand("compress", "Prune a prompt with a trained model");
  cc->add_option("--model", cp.model, "Checkpoint")->required();
  cc->add_option("--text", cp.text, "Prompt text");
  cc->add_option("--input", cp.input, "File holding the prompt");
  cc->add_option("--out", cp.out, "Result JSON");
  cc->add_option("--steps", cp.opts.steps, "")->capture_default_str();
  cc->add_option("--top-k", cp.opts.top_k, "")->capture_default_str();
  cc->add_option("--tau", cp.opts.tau, "")->capture_default_str();
  cc->add_option("--per-step-cap", cp.per_step_cap, "0 = no cap")->capture_default_str();
  cc->add_flag("--full-steps", cp.full_steps, "Run every step");
  cc->add_option("--tokenizer", cp.tokenizer, "Defaults to the model's vocabulary");

  GridArgs gr;
  auto* cg = app.add_subcommand("grid-search", "Tune top_k and tau on validation pairs");
  cg->add_option("--model", gr.model, "Checkpoint")->required();
  cg->add_option("--corpus", gr.corpus, "Corpus directory")->required();
  cg->add_option("--pairs", gr.pairs, "Validation pairs (JSONL)")->required();
  cg->add_option("--out", gr.out, "Table CSV")->required();
  cg->add_option("--top-k", gr.top_k, "")->capture_default_str()->delimiter(',');
  cg->add_option("--tau", gr.tau, "")->capture_default_str()->delimiter(',');
  cg->add_option("--steps", gr.steps, "")->capture_default_str();
  cg->add_option("--per-step-cap", gr.per_step_cap, "0 = no cap")->capture_default_str();

  AnalyzeArgs an;
  auto* ca = app.add_subcommand("analyze", "Token category distribution of removed tokens");
  ca->add_option("--pairs", an.pairs, "Pairs (JSONL)")->required();
  ca->add_option("--out", an.out, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  std::signal(SIGINT, OnSigint);
  for (CLI::App* sub : app.get_subcommands()) {
    Log("resolved config:\n[" + sub->get_name() + "]\n" + sub->config_to_str(true, false));
  }

  if (cs->parsed()) return RunSynth(synth);
  if (cd->parsed()) return RunDataset(ds);
  if (ct->parsed()) return RunTrain(tr);
  if (cc->parsed()) return RunCompress(cp);
  if (cg->parsed()) return RunGrid(gr);
  if (ca->parsed()) return RunAnalyze(an);
  return kExitOther;
}
