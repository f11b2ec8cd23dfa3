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

#include <cstdint>
#include <functional>
#include <vector>

#include "maskpress/core.hpp"

namespace maskpress {

// Fraction of evaluation queries answered correctly.
struct Score {
  double value = 0.0;
  int n_queries = 0;
  std::vector<uint8_t> detail;

  // value = mean(detail); throws ScoringError on an empty detail vector.
  static Score FromDetail(std::vector<uint8_t> detail);
  // Score restored from a persisted value only (no per-query detail).
  static Score FromValue(double value);
};

// A performance function bound to one prompt: scores a retention mask over
// that prompt's tokens.
using PerformanceFn = std::function<Score(const RetentionMask&)>;

}  // namespace maskpress
