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

// Diffusion-style retention-mask predictor.
//
// A small bidirectional transformer encoder maps a token sequence over
// vocab ∪ {MASK} to one distribution per position over the same vocabulary.
// The retention probability of position i is r_i = 1 - p(MASK at i).
// Training reveals pruned tokens with probability t and scores retention
// over every visible position; inference repeatedly re-masks visible
// positions whose MASK probability ranks in the top k and reaches tau.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "maskpress/core.hpp"

namespace maskpress {

struct ModelArch {
  uint32_t n_layers = 2;
  uint32_t d_model = 64;
  uint32_t n_heads = 4;
  uint32_t max_seq_len = 512;
  uint32_t vocab_size = WhitespaceTokenizer::kDefaultVocabSize;  // incl. MASK
  uint32_t d_ff = 128;
  // Learned attention bias per relative offset in [-rel_window, rel_window].
  uint32_t rel_window = 8;

  void Validate() const;
  friend bool operator==(const ModelArch&, const ModelArch&) = default;
};

class MaskModel {
 public:
  struct Segment {
    std::string name;
    size_t offset = 0;
    size_t size = 0;
  };

  // Deterministic random initialization; the output head starts near zero
  // so fresh predictions are close to uniform.
  MaskModel(const ModelArch& arch, uint64_t seed);

  const ModelArch& arch() const { return arch_; }
  TokenId mask_id() const { return static_cast<TokenId>(arch_.vocab_size) - 1; }
  size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(const std::string& name) const;

  std::span<double> view(const std::string& name);
  std::span<const double> view(const std::string& name) const;

  // Layout only, values zeroed. Used when loading checkpoints.
  static MaskModel Empty(const ModelArch& arch);

 private:
  struct LayoutOnly {};
  MaskModel(const ModelArch& arch, LayoutOnly);
  void Layout();

  ModelArch arch_;
  std::vector<Segment> segments_;
  std::vector<double> params_;
};

// Row-major [length x vocab] probabilities.
struct Distributions {
  size_t length = 0;
  size_t vocab = 0;
  std::vector<double> probs;

  double at(size_t pos, size_t token) const { return probs[pos * vocab + token]; }
  std::span<const double> row(size_t pos) const {
    return std::span<const double>(probs).subspan(pos * vocab, vocab);
  }
};

// Throws ShapeError when ids exceed max_seq_len or the vocabulary.
Distributions ModelForward(const MaskModel& model, std::span<const TokenId> ids);

// Checkpoint: "MPRS", u32 version, arch fields as u32, then named segments
// (u16 name length, name bytes, u64 element count, f32 data), all
// little-endian.
std::string EncodeModel(const MaskModel& model);
MaskModel DecodeModel(std::string_view bytes);
void SaveModel(const MaskModel& model, const std::string& path);
MaskModel LoadModel(const std::string& path);

// ---------------------------------------------------------------------------
// Forward (reveal) process.

struct ForwardSample {
  double t = 0.0;
  RetentionMask m_t;
  TokenSeq x_tilde;                  // m_t applied with MASK substitution
  std::vector<size_t> revealed_set;  // m == 0, m_t == 1
  std::vector<size_t> masked_set;    // m_t == 0
};

// Each pruned position is revealed independently with probability t.
ForwardSample ForwardProcess(const TokenSeq& x, const RetentionMask& m,
                             double t, std::mt19937_64& rng, TokenId mask_id);
ForwardSample ForwardProcess(const TokenSeq& x, const RetentionMask& m,
                             double t, uint64_t seed, TokenId mask_id);

// ---------------------------------------------------------------------------
// Objective.

struct LossWeights {
  double alpha = 0.8;
  double lambda_mask = 2.0;
};

struct LossBreakdown {
  double l_bce = 0.0;
  double l_anti_mask = 0.0;
  double l_total = 0.0;
  std::vector<size_t> incorrect;  // visible, r < 0.5, label 1
  size_t n_scored = 0;
};

inline constexpr double kRemoveDecisionThreshold = 0.5;

// BCE between r_i and the label over visible positions; the anti-mask term
// is lambda_mask times the mean of -log p(true token) over `incorrect`.
// `visible` is m_t, `labels` the ground-truth mask m. Throws LossError when
// no position is visible.
LossBreakdown ComputeLoss(const Distributions& dist,
                          std::span<const TokenId> true_ids,
                          const RetentionMask& visible,
                          const RetentionMask& labels,
                          const LossWeights& weights, TokenId mask_id);

// Gradient of l_total with respect to the output logits, [length x vocab].
std::vector<double> LossLogitGradient(const Distributions& dist,
                                      std::span<const TokenId> true_ids,
                                      const RetentionMask& visible,
                                      const RetentionMask& labels,
                                      const LossWeights& weights,
                                      TokenId mask_id);

struct TrainingSample {
  std::vector<TokenId> true_ids;
  RetentionMask visible;  // m_t
  RetentionMask labels;   // m
};

// Model input for a sample: true ids with MASK at invisible positions.
std::vector<TokenId> SampleInput(const TrainingSample& sample, TokenId mask_id);

// Loss and full parameter gradient for one sample.
LossBreakdown LossAndGradient(const MaskModel& model,
                              const TrainingSample& sample,
                              const LossWeights& weights,
                              std::vector<double>* grad);

struct GradCheckOptions {
  size_t n_params = 64;
  double step = 1e-4;
  uint64_t seed = 0;
  // Restrict the sampled parameters to segments with this name prefix.
  std::string segment_prefix;
};

// Max relative error between the analytic gradient of l_total and central
// finite differences over a random parameter subset. Relative error is
// |a - n| / max(|a|, |n|, 1e-8).
double GradCheck(const MaskModel& model, const TrainingSample& sample,
                 const LossWeights& weights, const GradCheckOptions& options);

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  double alpha = 0.8;
  double lambda_mask = 2.0;
  double lr = 1e-4;
  int warmup_steps = 100;
  int epochs = 20;
  size_t max_seq_len = 512;
  size_t batch_size = 1;
  uint64_t seed = 0;

  void Validate() const;
  LossWeights weights() const { return {alpha, lambda_mask}; }
};

// Linear warmup to cfg.lr over warmup_steps, then linear decay to zero at
// total_steps.
double LearningRate(const TrainConfig& cfg, size_t step, size_t total_steps);

struct TrainExample {
  std::string id;
  std::vector<TokenId> tokens;
  RetentionMask mask;
};

struct StepMetrics {
  size_t step = 0;
  double t = 0.0;
  double l_bce = 0.0;
  double l_anti = 0.0;
  double l_total = 0.0;
};

// Retained tokens are the positive class.
struct MaskMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double removed_recall = 0.0;  // share of label-0 tokens predicted 0
  size_t n_tokens = 0;
};

struct EpochMetrics {
  int epoch = 0;  // 0 is the untrained baseline
  double mean_loss = 0.0;
  MaskMetrics holdout;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  size_t optimizer_steps = 0;
  size_t skipped = 0;
};

using StepSink = std::function<void(const StepMetrics&)>;
using EpochSink = std::function<void(const EpochMetrics&)>;

class TrainError : public Error {
 public:
  TrainError(const std::string& message, MaskModel last_good)
      : Error(ErrorCode::kTrain, message), last_good_(std::move(last_good)) {}
  const MaskModel& last_good() const { return last_good_; }

 private:
  MaskModel last_good_;
};

// One optimizer update per batch_size samples (RMSProp, no momentum).
// Examples longer than max_seq_len are skipped.
TrainResult Train(MaskModel& model, std::span<const TrainExample> train,
                  std::span<const TrainExample> holdout,
                  const TrainConfig& cfg, const StepSink& on_step = {},
                  const EpochSink& on_epoch = {});

// Single pass on the unmasked prompt; a token is kept when r >= 0.5.
RetentionMask PredictRetention(const MaskModel& model,
                               std::span<const TokenId> ids);

MaskMetrics CompareMasks(std::span<const RetentionMask> predicted,
                         std::span<const RetentionMask> truth);

MaskMetrics EvaluateRetention(const MaskModel& model,
                              std::span<const TrainExample> examples);

// ---------------------------------------------------------------------------
// Inference.

struct InferenceConfig {
  int steps = 64;
  size_t top_k = 4;
  double tau = 1e-3;
  std::optional<size_t> per_step_cap;
  // Run every step even after a fixed point.
  bool full_steps = false;

  void Validate() const;
};

// Visible positions whose MASK probability has fewer than top_k strictly
// larger entries in its row and is at least tau.
std::vector<size_t> PrunableSet(const Distributions& dist,
                                const RetentionMask& visible, size_t top_k,
                                double tau, TokenId mask_id);

struct InferenceResult {
  RetentionMask mask;
  // p(MASK) per position for every step that ran.
  std::vector<std::vector<double>> mask_prob_trace;
  int steps_run = 0;
};

// Deterministic. Never prunes the last visible token.
InferenceResult InferMask(const MaskModel& model, const TokenSeq& prompt,
                          const InferenceConfig& cfg);

}  // namespace maskpress
