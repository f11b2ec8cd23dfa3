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

#include "maskpress/taprune.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "json.hpp"

namespace maskpress {

using json = nlohmann::ordered_json;

void TaConfig::Validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must be in (0,1]");
  if (max_passes < 1) throw ConfigError("max_passes must be >= 1");
  if (min_tokens < 1) throw ConfigError("min_tokens must be >= 1");
}

const char* StateKindName(StateKind kind) {
  return kind == StateKind::kAcceptedImprove ? "accepted_improve"
                                             : "accepted_threshold";
}

const RetentionMask& TaTrajectory::OptimalMask() const {
  return optimal_index ? states[*optimal_index].mask : initial;
}

double TaTrajectory::OptimalScore() const {
  return optimal_index ? states[*optimal_index].score.value : baseline.value;
}

namespace {

class Search {
 public:
  Search(const TokenSeq& prompt, TaTrajectory traj, const PerformanceFn& f,
         const TaOptions& opts)
      : prompt_(prompt), traj_(std::move(traj)), f_(f), opts_(opts) {
    protected_.assign(prompt.size(), 0);
    for (const TokenRange& r : opts.protected_ranges) {
      for (size_t i = r.begin; i < r.end && i < prompt.size(); ++i)
        protected_[i] = 1;
    }
  }

  TaTrajectory Run() {
    RetentionMask current = traj_.initial;
    double f_opt = traj_.baseline.value;
    int pass = 0;
    size_t cursor = 0;
    bool mid_pass = false;
    const RetentionMask* prev = &traj_.initial;
    for (size_t s = 0; s < traj_.states.size(); ++s) {
      const TaState& st = traj_.states[s];
      if (st.kind == StateKind::kAcceptedImprove) {
        f_opt = st.score.value;
        traj_.optimal_index = s;
      }
      for (size_t i = 0; i < st.mask.size(); ++i) {
        if (prev->retained(i) && !st.mask.retained(i)) cursor = i + 1;
      }
      prev = &st.mask;
    }
    if (!traj_.states.empty()) {
      current = traj_.states.back().mask;
      pass = traj_.states.back().pass;
      mid_pass = true;
    }
    const TaConfig& cfg = opts_.config;

    for (; pass < cfg.max_passes; ++pass) {
      bool converged = !mid_pass;
      if (!mid_pass) cursor = 0;
      mid_pass = false;
      size_t retained = current.retained_count();
      for (size_t pos = cursor; pos < current.size(); ++pos) {
        if (!current.retained(pos) || protected_[pos]) continue;
        if (retained <= cfg.min_tokens) break;
        RetentionMask candidate = current;
        candidate.set(pos, false);
        const Score score = Evaluate(candidate);
        TaState state{std::move(candidate), score, StateKind::kAcceptedImprove,
                      pass, f_opt};
        if (score.value > f_opt) {
          f_opt = score.value;
        } else if (score.value > f_opt * cfg.delta) {
          state.kind = StateKind::kAcceptedThreshold;
        } else {
          continue;
        }
        current = state.mask;
        --retained;
        converged = false;
        if (state.kind == StateKind::kAcceptedImprove)
          traj_.optimal_index = traj_.states.size();
        if (opts_.observer) opts_.observer(state);
        traj_.states.push_back(std::move(state));
      }
      traj_.converged_passes = pass + 1;
      if (converged) {
        traj_.converged = true;
        break;
      }
    }
    return std::move(traj_);
  }

 private:
  Score Evaluate(const RetentionMask& mask) {
    const std::string key = mask.ToString();
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    if (opts_.stop && opts_.stop()) {
      throw TaInterrupted(ErrorCode::kInterrupted, "pruning interrupted",
                          traj_);
    }
    Score s;
    try {
      s = f_(mask);
    } catch (const Error& e) {
      throw TaInterrupted(e.code(), e.what(), traj_);
    } catch (const std::exception& e) {
      throw TaInterrupted(ErrorCode::kScoring, e.what(), traj_);
    }
    cache_.emplace(key, s);
    return s;
  }

  const TokenSeq& prompt_;
  TaTrajectory traj_;
  const PerformanceFn& f_;
  const TaOptions& opts_;
  std::vector<uint8_t> protected_;
  std::unordered_map<std::string, Score> cache_;
};

}  // namespace

TaTrajectory TaPrune(const TokenSeq& prompt, const RetentionMask& init_mask,
                     const PerformanceFn& f, const TaOptions& options) {
  options.config.Validate();
  if (init_mask.size() != prompt.size()) {
    throw ShapeError("initial mask does not match prompt length");
  }
  TaTrajectory traj;
  traj.initial = init_mask;
  traj.baseline = f(init_mask);
  return TaContinue(prompt, std::move(traj), f, options);
}

TaTrajectory TaContinue(const TokenSeq& prompt, TaTrajectory prefix,
                        const PerformanceFn& f, const TaOptions& options) {
  options.config.Validate();
  return Search(prompt, std::move(prefix), f, options).Run();
}

std::vector<std::pair<RetentionMask, Score>> HarvestIntermediates(
    const TaTrajectory& trajectory, size_t stride) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  std::vector<size_t> picked;
  size_t improve_rank = 0;
  for (size_t i = 0; i < trajectory.states.size(); ++i) {
    if (trajectory.states[i].kind != StateKind::kAcceptedImprove) continue;
    if (improve_rank % stride == 0) picked.push_back(i);
    ++improve_rank;
  }
  if (trajectory.optimal_index &&
      (picked.empty() || picked.back() != *trajectory.optimal_index)) {
    picked.push_back(*trajectory.optimal_index);
  }
  std::vector<std::pair<RetentionMask, Score>> out;
  for (size_t i : picked) {
    out.emplace_back(trajectory.states[i].mask, trajectory.states[i].score);
  }
  return out;
}

std::string PromptHash(const TokenSeq& prompt, const RetentionMask& init_mask) {
  std::string material;
  for (TokenId t : prompt.tokens()) material += std::to_string(t) + ",";
  material += "|" + prompt.source_text() + "|" + init_mask.ToString();

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(material.data(), material.size(), digest, &len, EVP_sha256(),
             nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

TaCheckpointWriter TaCheckpointWriter::Create(const std::string& path,
                                              const std::string& prompt_sha256,
                                              double delta, double baseline) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create checkpoint " + path);
  json header;
  header["prompt_sha256"] = prompt_sha256;
  header["delta"] = delta;
  header["baseline"] = baseline;
  out << header.dump() << '\n';
  out.flush();
  return TaCheckpointWriter(path);
}

TaCheckpointWriter TaCheckpointWriter::Append(const std::string& path) {
  return TaCheckpointWriter(path);
}

void TaCheckpointWriter::Write(const TaState& state) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to checkpoint " + path_);
  json j;
  j["mask"] = state.mask.bits();
  j["score"] = state.score.value;
  j["kind"] = StateKindName(state.kind);
  j["pass"] = state.pass;
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw IoError("checkpoint write failed: " + path_);
}

TaCheckpoint ReadTaCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResumeError("cannot open checkpoint " + path);
  TaCheckpoint cp;
  std::string line;
  size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      const json j = json::parse(line);
      if (line_no++ == 0) {
        cp.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
        cp.delta = j.at("delta").get<double>();
        cp.baseline = j.at("baseline").get<double>();
        continue;
      }
      TaState st;
      st.mask = RetentionMask(j.at("mask").get<std::vector<uint8_t>>());
      st.score = Score::FromValue(j.at("score").get<double>());
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "accepted_improve") {
        st.kind = StateKind::kAcceptedImprove;
      } else if (kind == "accepted_threshold") {
        st.kind = StateKind::kAcceptedThreshold;
      } else {
        throw ResumeError("unknown state kind in " + path);
      }
      st.pass = j.at("pass").get<int>();
      cp.states.push_back(std::move(st));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ResumeError("corrupted checkpoint " + path + ": " + e.what());
  } catch (const InvalidInputError& e) {
    throw ResumeError("corrupted checkpoint " + path + ": " + e.what());
  }
  if (line_no == 0) throw ResumeError("empty checkpoint " + path);
  return cp;
}

TaTrajectory Resume(const std::string& checkpoint_path, const TokenSeq& prompt,
                    const RetentionMask& init_mask, const PerformanceFn& f,
                    const TaOptions& options) {
  options.config.Validate();
  if (init_mask.size() != prompt.size()) {
    throw ShapeError("initial mask does not match prompt length");
  }
  const std::string hash = PromptHash(prompt, init_mask);
  TaOptions opts = options;
  auto chain = [&opts](TaCheckpointWriter writer) {
    TaObserver inner = opts.observer;
    opts.observer = [writer, inner](const TaState& s) mutable {
      writer.Write(s);
      if (inner) inner(s);
    };
  };

  if (!std::filesystem::exists(checkpoint_path)) {
    TaTrajectory traj;
    traj.initial = init_mask;
    traj.baseline = f(init_mask);
    chain(TaCheckpointWriter::Create(checkpoint_path, hash, opts.config.delta,
                                     traj.baseline.value));
    return TaContinue(prompt, std::move(traj), f, opts);
  }

  TaCheckpoint cp = ReadTaCheckpoint(checkpoint_path);
  if (cp.prompt_sha256 != hash) {
    throw ResumeError("checkpoint " + checkpoint_path +
                      " belongs to a different prompt");
  }
  if (cp.delta != opts.config.delta) {
    throw ResumeError("checkpoint " + checkpoint_path +
                      " was written with a different delta");
  }
  TaTrajectory traj;
  traj.initial = init_mask;
  traj.baseline = Score::FromValue(cp.baseline);
  traj.states.reserve(cp.states.size());
  const RetentionMask* prev = &traj.initial;
  int prev_pass = 0;
  for (TaState& st : cp.states) {
    if (st.mask.size() != prompt.size() ||
        st.mask.retained_count() + 1 != prev->retained_count() ||
        st.pass < prev_pass) {
      throw ResumeError("inconsistent state sequence in " + checkpoint_path);
    }
    for (size_t i = 0; i < st.mask.size(); ++i) {
      if (st.mask.retained(i) && !prev->retained(i))
        throw ResumeError("state re-adds a token in " + checkpoint_path);
    }
    prev_pass = st.pass;
    traj.states.push_back(std::move(st));
    prev = &traj.states.back().mask;
  }
  double f_opt = traj.baseline.value;
  for (TaState& st : traj.states) {
    st.f_optimal_before = f_opt;
    if (st.kind == StateKind::kAcceptedImprove) f_opt = st.score.value;
  }
  chain(TaCheckpointWriter::Append(checkpoint_path));
  return TaContinue(prompt, std::move(traj), f, opts);
}

}  // namespace maskpress
