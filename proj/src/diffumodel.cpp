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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maskpress/diffumodel.hpp"
#include "transformer.hpp"

namespace maskpress {

// ---------------------------------------------------------------------------
// Forward process.

ForwardSample ForwardProcess(const TokenSeq& x, const RetentionMask& m,
                             double t, std::mt19937_64& rng, TokenId mask_id) {
  if (m.size() != x.size()) {
    throw ShapeError("mask length " + std::to_string(m.size()) +
                     " does not match sequence length " +
                     std::to_string(x.size()));
  }
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidInputError("t must lie in [0, 1]");
  ForwardSample s;
  s.t = t;
  std::vector<uint8_t> bits = m.bits();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) continue;
    // Draw for every pruned position so the stream length does not depend on t.
    const double u = unif(rng);
    if (u < t) {
      bits[i] = 1;
      s.revealed_set.push_back(i);
    } else {
      s.masked_set.push_back(i);
    }
  }
  s.m_t = RetentionMask(std::move(bits));
  s.x_tilde = ApplyMask(x, s.m_t, MaskMode::kMaskSymbol, mask_id);
  return s;
}

ForwardSample ForwardProcess(const TokenSeq& x, const RetentionMask& m,
                             double t, uint64_t seed, TokenId mask_id) {
  std::mt19937_64 rng(seed);
  return ForwardProcess(x, m, t, rng, mask_id);
}

// ---------------------------------------------------------------------------
// Objective.

namespace {

constexpr double kProbFloor = 1e-300;
constexpr double kComplementFloor = 1e-12;

void CheckLossShapes(const Distributions& dist, std::span<const TokenId> ids,
                     const RetentionMask& visible, const RetentionMask& labels,
                     TokenId mask_id) {
  if (ids.size() != dist.length || visible.size() != dist.length ||
      labels.size() != dist.length) {
    throw ShapeError("loss inputs disagree on sequence length");
  }
  if (mask_id < 0 || static_cast<size_t>(mask_id) >= dist.vocab) {
    throw ShapeError("mask id outside the output vocabulary");
  }
  for (size_t i = 0; i < ids.size(); ++i) {
    if (visible.retained(i) &&
        (ids[i] < 0 || static_cast<size_t>(ids[i]) >= dist.vocab)) {
      throw ShapeError("true token id outside the output vocabulary");
    }
  }
}

}  // namespace

LossBreakdown ComputeLoss(const Distributions& dist,
                          std::span<const TokenId> true_ids,
                          const RetentionMask& visible,
                          const RetentionMask& labels,
                          const LossWeights& weights, TokenId mask_id) {
  CheckLossShapes(dist, true_ids, visible, labels, mask_id);
  LossBreakdown out;
  double bce = 0.0;
  double anti = 0.0;
  const size_t M = static_cast<size_t>(mask_id);
  for (size_t i = 0; i < dist.length; ++i) {
    if (!visible.retained(i)) continue;
    ++out.n_scored;
    const double pm = dist.at(i, M);
    const double r = 1.0 - pm;
    if (labels.retained(i)) {
      bce -= std::log(std::max(r, kComplementFloor));
      if (r < kRemoveDecisionThreshold) {
        out.incorrect.push_back(i);
        anti -= std::log(
            std::max(dist.at(i, static_cast<size_t>(true_ids[i])), kProbFloor));
      }
    } else {
      bce -= std::log(std::max(pm, kProbFloor));
    }
  }
  if (out.n_scored == 0) throw LossError("no visible positions to score");
  out.l_bce = bce / static_cast<double>(out.n_scored);
  out.l_anti_mask =
      out.incorrect.empty()
          ? 0.0
          : weights.lambda_mask * anti / static_cast<double>(out.incorrect.size());
  out.l_total = weights.alpha * out.l_bce + (1.0 - weights.alpha) * out.l_anti_mask;
  return out;
}

std::vector<double> LossLogitGradient(const Distributions& dist,
                                      std::span<const TokenId> true_ids,
                                      const RetentionMask& visible,
                                      const RetentionMask& labels,
                                      const LossWeights& weights,
                                      TokenId mask_id) {
  const LossBreakdown lb =
      ComputeLoss(dist, true_ids, visible, labels, weights, mask_id);
  const size_t V = dist.vocab;
  const size_t M = static_cast<size_t>(mask_id);
  std::vector<double> grad(dist.length * V, 0.0);
  const double bce_scale = weights.alpha / static_cast<double>(lb.n_scored);
  for (size_t i = 0; i < dist.length; ++i) {
    if (!visible.retained(i)) continue;
    auto p = dist.row(i);
    double* g = grad.data() + i * V;
    const double pm = p[M];
    if (labels.retained(i)) {
      // d/dz of -log(1 - pm)
      const double c = pm / std::max(1.0 - pm, kComplementFloor);
      for (size_t j = 0; j < V; ++j) {
        g[j] += bce_scale * c * ((j == M ? 1.0 : 0.0) - p[j]);
      }
    } else {
      // d/dz of -log(pm)
      for (size_t j = 0; j < V; ++j) {
        g[j] -= bce_scale * ((j == M ? 1.0 : 0.0) - p[j]);
      }
    }
  }
  if (!lb.incorrect.empty()) {
    const double anti_scale = (1.0 - weights.alpha) * weights.lambda_mask /
                              static_cast<double>(lb.incorrect.size());
    for (size_t i : lb.incorrect) {
      auto p = dist.row(i);
      double* g = grad.data() + i * V;
      const size_t y = static_cast<size_t>(true_ids[i]);
      for (size_t j = 0; j < V; ++j) {
        g[j] -= anti_scale * ((j == y ? 1.0 : 0.0) - p[j]);
      }
    }
  }
  return grad;
}

std::vector<TokenId> SampleInput(const TrainingSample& sample, TokenId mask_id) {
  if (sample.visible.size() != sample.true_ids.size()) {
    throw ShapeError("visibility mask length does not match the sample");
  }
  std::vector<TokenId> ids = sample.true_ids;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (!sample.visible.retained(i)) ids[i] = mask_id;
  }
  return ids;
}

LossBreakdown LossAndGradient(const MaskModel& model,
                              const TrainingSample& sample,
                              const LossWeights& weights,
                              std::vector<double>* grad) {
  const std::vector<TokenId> input = SampleInput(sample, model.mask_id());
  internal::ForwardCache cache = internal::RunForward(model, input);
  LossBreakdown lb = ComputeLoss(cache.dist, sample.true_ids, sample.visible,
                                 sample.labels, weights, model.mask_id());
  if (grad) {
    grad->resize(model.param_count(), 0.0);
    const std::vector<double> dlogits =
        LossLogitGradient(cache.dist, sample.true_ids, sample.visible,
                          sample.labels, weights, model.mask_id());
    internal::RunBackward(model, cache, dlogits, *grad);
  }
  return lb;
}

double GradCheck(const MaskModel& model, const TrainingSample& sample,
                 const LossWeights& weights, const GradCheckOptions& options) {
  std::vector<double> analytic(model.param_count(), 0.0);
  LossAndGradient(model, sample, weights, &analytic);

  std::vector<size_t> pool;
  for (const auto& s : model.segments()) {
    if (s.name.rfind(options.segment_prefix, 0) != 0) continue;
    for (size_t i = 0; i < s.size; ++i) pool.push_back(s.offset + i);
  }
  if (pool.empty()) {
    throw InvalidInputError("no parameters match prefix '" +
                            options.segment_prefix + "'");
  }
  std::vector<size_t> picked;
  std::mt19937_64 rng(options.seed);
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked),
              std::min(options.n_params, pool.size()), rng);

  MaskModel probe = model;
  double worst = 0.0;
  for (size_t idx : picked) {
    const double orig = probe.params()[idx];
    probe.params()[idx] = orig + options.step;
    const double up = LossAndGradient(probe, sample, weights, nullptr).l_total;
    probe.params()[idx] = orig - options.step;
    const double down = LossAndGradient(probe, sample, weights, nullptr).l_total;
    probe.params()[idx] = orig;
    const double numeric = (up - down) / (2.0 * options.step);
    const double a = analytic[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Training.

void TrainConfig::Validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(lambda_mask >= 0.0)) throw ConfigError("lambda_mask must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be > 0");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (max_seq_len < 1) throw ConfigError("max_seq_len must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

double LearningRate(const TrainConfig& cfg, size_t step, size_t total_steps) {
  const double s = static_cast<double>(step);
  const double warm = static_cast<double>(cfg.warmup_steps);
  if (cfg.warmup_steps > 0 && s < warm) return cfg.lr * (s + 1.0) / warm;
  if (total_steps <= static_cast<size_t>(cfg.warmup_steps)) return cfg.lr;
  const double remaining = static_cast<double>(total_steps) - s;
  const double span = static_cast<double>(total_steps) - warm;
  return cfg.lr * std::max(0.0, remaining / span);
}

namespace {

constexpr double kRmsDecay = 0.99;
constexpr double kRmsEps = 1e-8;

bool AllFinite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TrainResult Train(MaskModel& model, std::span<const TrainExample> train,
                  std::span<const TrainExample> holdout,
                  const TrainConfig& cfg, const StepSink& on_step,
                  const EpochSink& on_epoch) {
  cfg.Validate();
  if (train.empty()) throw InvalidInputError("training set is empty");
  const size_t limit = std::min<size_t>(cfg.max_seq_len, model.arch().max_seq_len);
  TrainResult result;
  std::vector<const TrainExample*> usable;
  for (const TrainExample& ex : train) {
    if (ex.tokens.size() != ex.mask.size()) {
      throw ShapeError("example " + ex.id + " has mismatched mask length");
    }
    if (ex.tokens.empty() || ex.tokens.size() > limit) {
      ++result.skipped;
      continue;
    }
    usable.push_back(&ex);
  }
  if (usable.empty()) {
    throw InvalidInputError("no training example fits max_seq_len");
  }
  std::vector<TrainExample> fitting_holdout;
  for (const TrainExample& ex : holdout) {
    if (!ex.tokens.empty() && ex.tokens.size() <= limit) fitting_holdout.push_back(ex);
  }

  const size_t per_epoch = (usable.size() + cfg.batch_size - 1) / cfg.batch_size;
  const size_t total = per_epoch * static_cast<size_t>(cfg.epochs);
  const LossWeights weights = cfg.weights();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif_t(0.0, 1.0);
  std::vector<double> sq(model.param_count(), 0.0);
  std::vector<double> grad(model.param_count(), 0.0);

  EpochMetrics baseline;
  baseline.epoch = 0;
  baseline.holdout = EvaluateRetention(model, fitting_holdout);
  result.epochs.push_back(baseline);
  if (on_epoch) on_epoch(baseline);

  std::vector<size_t> order(usable.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const MaskModel last_good = model;
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (size_t b = 0; b < per_epoch; ++b) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const size_t first = b * cfg.batch_size;
      const size_t last = std::min(order.size(), first + cfg.batch_size);
      StepMetrics sm;
      sm.step = result.optimizer_steps;
      for (size_t k = first; k < last; ++k) {
        const TrainExample& ex = *usable[order[k]];
        const double t = unif_t(rng);
        TrainingSample sample;
        sample.true_ids = ex.tokens;
        sample.labels = ex.mask;
        std::vector<uint8_t> vis = ex.mask.bits();
        for (auto& bit : vis) {
          if (!bit && unif_t(rng) < t) bit = 1;
        }
        sample.visible = RetentionMask(std::move(vis));
        const LossBreakdown lb = LossAndGradient(model, sample, weights, &grad);
        if (!std::isfinite(lb.l_total)) {
          model = last_good;
          throw TrainError("loss diverged at step " + std::to_string(sm.step),
                           last_good);
        }
        sm.t += t;
        sm.l_bce += lb.l_bce;
        sm.l_anti += lb.l_anti_mask;
        sm.l_total += lb.l_total;
      }
      const double count = static_cast<double>(last - first);
      sm.t /= count;
      sm.l_bce /= count;
      sm.l_anti /= count;
      sm.l_total /= count;
      if (!AllFinite(grad)) {
        model = last_good;
        throw TrainError("non-finite gradient at step " + std::to_string(sm.step),
                         last_good);
      }
      const double lr = LearningRate(cfg, result.optimizer_steps, total);
      auto params = model.params();
      for (size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] / count;
        sq[i] = kRmsDecay * sq[i] + (1.0 - kRmsDecay) * g * g;
        params[i] -= lr * g / (std::sqrt(sq[i]) + kRmsEps);
      }
      ++result.optimizer_steps;
      loss_sum += sm.l_total;
      if (on_step) on_step(sm);
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.mean_loss = loss_sum / static_cast<double>(per_epoch);
    em.holdout = EvaluateRetention(model, fitting_holdout);
    result.epochs.push_back(em);
    if (on_epoch) on_epoch(em);
  }
  return result;
}

RetentionMask PredictRetention(const MaskModel& model,
                               std::span<const TokenId> ids) {
  const Distributions dist = ModelForward(model, ids);
  const size_t M = static_cast<size_t>(model.mask_id());
  RetentionMask out = RetentionMask::Ones(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) {
    out.set(i, 1.0 - dist.at(i, M) >= kRemoveDecisionThreshold);
  }
  return out;
}

MaskMetrics CompareMasks(std::span<const RetentionMask> predicted,
                         std::span<const RetentionMask> truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("prediction and truth counts differ");
  }
  size_t tp = 0, fp = 0, fn = 0, tn = 0;
  MaskMetrics m;
  for (size_t k = 0; k < predicted.size(); ++k) {
    if (predicted[k].size() != truth[k].size()) {
      throw ShapeError("prediction and truth lengths differ");
    }
    for (size_t i = 0; i < truth[k].size(); ++i) {
      const bool p = predicted[k].retained(i);
      const bool t = truth[k].retained(i);
      if (p && t) ++tp;
      else if (p) ++fp;
      else if (t) ++fn;
      else ++tn;
    }
    m.n_tokens += truth[k].size();
  }
  auto ratio = [](size_t a, size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = (m.precision + m.recall) > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.removed_recall = ratio(tn, tn + fp);
  return m;
}

MaskMetrics EvaluateRetention(const MaskModel& model,
                              std::span<const TrainExample> examples) {
  std::vector<RetentionMask> pred, truth;
  pred.reserve(examples.size());
  truth.reserve(examples.size());
  for (const TrainExample& ex : examples) {
    pred.push_back(PredictRetention(model, ex.tokens));
    truth.push_back(ex.mask);
  }
  return CompareMasks(pred, truth);
}

// ---------------------------------------------------------------------------
// Inference.

void InferenceConfig::Validate() const {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (!(tau >= 0.0) || std::isnan(tau)) throw ConfigError("tau must be >= 0");
  if (per_step_cap && *per_step_cap < 1) {
    throw ConfigError("per_step_cap must be >= 1");
  }
}

std::vector<size_t> PrunableSet(const Distributions& dist,
                                const RetentionMask& visible, size_t top_k,
                                double tau, TokenId mask_id) {
  if (visible.size() != dist.length) {
    throw ShapeError("visibility mask length does not match the distributions");
  }
  const size_t M = static_cast<size_t>(mask_id);
  std::vector<size_t> out;
  for (size_t i = 0; i < dist.length; ++i) {
    if (!visible.retained(i)) continue;
    auto row = dist.row(i);
    const double pm = row[M];
    if (pm < tau) continue;
    size_t larger = 0;
    for (double p : row) {
      if (p > pm && ++larger >= top_k) break;
    }
    if (larger < top_k) out.push_back(i);
  }
  return out;
}

InferenceResult InferMask(const MaskModel& model, const TokenSeq& prompt,
                          const InferenceConfig& cfg) {
  cfg.Validate();
  if (prompt.empty()) throw InvalidInputError("empty prompt");
  const TokenId mask_id = model.mask_id();
  const size_t M = static_cast<size_t>(mask_id);
  InferenceResult res;
  res.mask = RetentionMask::Ones(prompt.size());
  std::vector<TokenId> ids = prompt.tokens();
  for (int step = 0; step < cfg.steps; ++step) {
    const Distributions dist = ModelForward(model, ids);
    std::vector<double> pm(dist.length);
    for (size_t i = 0; i < dist.length; ++i) pm[i] = dist.at(i, M);
    res.mask_prob_trace.push_back(pm);
    ++res.steps_run;

    std::vector<size_t> prune =
        PrunableSet(dist, res.mask, cfg.top_k, cfg.tau, mask_id);
    // Highest p(MASK) first; ties by position.
    std::stable_sort(prune.begin(), prune.end(),
                     [&](size_t a, size_t b) { return pm[a] > pm[b]; });
    if (cfg.per_step_cap && prune.size() > *cfg.per_step_cap) {
      prune.resize(*cfg.per_step_cap);
    }
    if (!prune.empty() && prune.size() == res.mask.retained_count()) {
      prune.pop_back();  // the least confident prune stays visible
    }
    if (prune.empty()) {
      if (cfg.full_steps) continue;
      break;
    }
    for (size_t i : prune) {
      res.mask.set(i, false);
      ids[i] = mask_id;
    }
  }
  return res;
}

}  // namespace maskpress
