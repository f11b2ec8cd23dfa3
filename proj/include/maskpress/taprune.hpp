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

// Threshold-accepting token pruning.
//
// A pass scans the currently retained, unprotected positions left to right.
// Removing one token gives a candidate P. P replaces the current prompt and
// the optimum when f(P) > f_optimal; it replaces only the current prompt
// when f(P) > f_optimal * delta. After an acceptance the cursor stays put,
// so the token that slid into the removed slot is visited next. Passes
// repeat until one accepts nothing or max_passes is reached.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maskpress/core.hpp"
#include "maskpress/score.hpp"

namespace maskpress {

struct TaConfig {
  double delta = 0.95;
  int max_passes = 50;
  size_t min_tokens = 1;
  bool protect_query = true;

  void Validate() const;
};

enum class StateKind { kAcceptedImprove, kAcceptedThreshold };

const char* StateKindName(StateKind kind);

struct TaState {
  RetentionMask mask;
  Score score;
  StateKind kind = StateKind::kAcceptedImprove;
  int pass = 0;
  // f_optimal at the moment this state was accepted (before any update).
  double f_optimal_before = 0.0;
};

struct TaTrajectory {
  std::vector<TaState> states;
  // Last improving state; nullopt means the optimum is the initial prompt.
  std::optional<size_t> optimal_index;
  RetentionMask initial;
  Score baseline;
  int converged_passes = 0;
  bool converged = false;

  const RetentionMask& OptimalMask() const;
  double OptimalScore() const;
};

// Receives every accepted state as it happens; used for checkpointing.
using TaObserver = std::function<void(const TaState&)>;
// Polled before every evaluation; returning true aborts with
// InterruptedError.
using StopRequested = std::function<bool()>;

struct TaOptions {
  TaConfig config;
  // Ranges never offered as candidates (the query when protect_query).
  std::vector<TokenRange> protected_ranges;
  TaObserver observer;
  StopRequested stop;
};

// Thrown when f or a stop request interrupts a run; carries the trajectory
// accepted so far.
class TaInterrupted : public Error {
 public:
  TaInterrupted(ErrorCode code, const std::string& message,
                TaTrajectory partial)
      : Error(code, message), partial_(std::move(partial)) {}
  const TaTrajectory& partial() const { return partial_; }

 private:
  TaTrajectory partial_;
};

TaTrajectory TaPrune(const TokenSeq& prompt, const RetentionMask& init_mask,
                     const PerformanceFn& f, const TaOptions& options);

// Continues from a trajectory prefix (as restored from a checkpoint).
TaTrajectory TaContinue(const TokenSeq& prompt, TaTrajectory prefix,
                        const PerformanceFn& f, const TaOptions& options);

// Every stride-th improving state plus the optimum, in trajectory order,
// without duplicates.
std::vector<std::pair<RetentionMask, Score>> HarvestIntermediates(
    const TaTrajectory& trajectory, size_t stride);

// Hex SHA-256 over the token ids, source text and initial mask.
std::string PromptHash(const TokenSeq& prompt, const RetentionMask& init_mask);

// JSON Lines checkpoint: header {"prompt_sha256","delta","baseline"} then
// one {"mask","score","kind","pass"} line per accepted state.
class TaCheckpointWriter {
 public:
  // Truncates `path` and writes the header.
  static TaCheckpointWriter Create(const std::string& path,
                                   const std::string& prompt_sha256,
                                   double delta, double baseline);
  // Appends to an existing checkpoint.
  static TaCheckpointWriter Append(const std::string& path);

  void Write(const TaState& state);

 private:
  explicit TaCheckpointWriter(std::string path) : path_(std::move(path)) {}
  std::string path_;
};

struct TaCheckpoint {
  std::string prompt_sha256;
  double delta = 0.0;
  double baseline = 0.0;
  std::vector<TaState> states;
};

// Throws ResumeError on unreadable or inconsistent content.
TaCheckpoint ReadTaCheckpoint(const std::string& path);

// Restores the trajectory from `checkpoint_path` and continues it, appending
// new states to the same file. Starts fresh (and creates the file) when the
// file does not exist. Throws ResumeError on a hash or delta mismatch.
TaTrajectory Resume(const std::string& checkpoint_path, const TokenSeq& prompt,
                    const RetentionMask& init_mask, const PerformanceFn& f,
                    const TaOptions& options);

}  // namespace maskpress
