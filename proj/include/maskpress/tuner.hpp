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

// Grid search over inference hyperparameters.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "maskpress/diffumodel.hpp"
#include "maskpress/score.hpp"

namespace maskpress {

struct GridSpec {
  std::vector<size_t> top_k_values = {2, 3, 4};
  std::vector<double> tau_values = {1e-4, 1e-3, 1e-2, 1e-1};
  int steps = 64;
  std::optional<size_t> per_step_cap;

  void Validate() const;
};

struct GridRow {
  size_t top_k = 0;
  double tau = 0.0;
  double accuracy = 0.0;
  double mean_tokens = 0.0;
};

struct TunerItem {
  std::string id;
  TokenSeq prompt;
  PerformanceFn score;  // over masks of `prompt`
};

struct GridResult {
  std::vector<GridRow> table;  // grid order: top_k outer, tau inner
  size_t selected = 0;
  InferenceConfig best;
};

// Index of the best row: highest accuracy, then fewer tokens, then smaller
// k, then larger tau. Values compare after rounding to 6 decimals, the
// precision of the CSV table.
size_t SelectBestRow(const std::vector<GridRow>& rows);

std::string EncodeGridCsv(const std::vector<GridRow>& rows);
std::vector<GridRow> ParseGridCsv(const std::string& text);

struct GridSearchOptions {
  // Rewritten after every cell; rows already present for the same grid are
  // reused instead of recomputed.
  std::string table_path;
  std::function<bool()> stop;
};

// Throws InterruptedError on a stop request; oracle errors propagate. In
// both cases the finished cells remain in table_path.
GridResult GridSearch(const MaskModel& model, const std::vector<TunerItem>& items,
                      const GridSpec& grid, const GridSearchOptions& options = {});

}  // namespace maskpress
