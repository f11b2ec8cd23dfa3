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

#include "maskpress/tuner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace maskpress {

namespace fs = std::filesystem;

void GridSpec::Validate() const {
  if (top_k_values.empty() || tau_values.empty()) {
    throw ConfigError("grid needs at least one top_k and one tau value");
  }
  for (size_t k : top_k_values) {
    InferenceConfig c;
    c.steps = steps;
    c.top_k = k;
    c.per_step_cap = per_step_cap;
    for (double t : tau_values) {
      c.tau = t;
      c.Validate();
    }
  }
}

namespace {

double Round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string Fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

constexpr const char* kCsvHeader = "top_k,tau,accuracy,mean_tokens";

}  // namespace

size_t SelectBestRow(const std::vector<GridRow>& rows) {
  if (rows.empty()) throw InvalidInputError("empty grid table");
  size_t best = 0;
  for (size_t i = 1; i < rows.size(); ++i) {
    const GridRow& a = rows[i];
    const GridRow& b = rows[best];
    const double acc_a = Round6(a.accuracy), acc_b = Round6(b.accuracy);
    const double tok_a = Round6(a.mean_tokens), tok_b = Round6(b.mean_tokens);
    bool better;
    if (acc_a != acc_b) better = acc_a > acc_b;
    else if (tok_a != tok_b) better = tok_a < tok_b;
    else if (a.top_k != b.top_k) better = a.top_k < b.top_k;
    else better = Round6(a.tau) > Round6(b.tau);
    if (better) best = i;
  }
  return best;
}

std::string EncodeGridCsv(const std::vector<GridRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const GridRow& r : rows) {
    out += std::to_string(r.top_k) + "," + Fixed6(r.tau) + "," +
           Fixed6(r.accuracy) + "," + Fixed6(r.mean_tokens) + "\n";
  }
  return out;
}

std::vector<GridRow> ParseGridCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw InvalidInputError("grid table lacks the expected header");
  }
  std::vector<GridRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    GridRow r;
    char tail = 0;
    unsigned long k = 0;
    if (std::sscanf(line.c_str(), "%lu,%lf,%lf,%lf%c", &k, &r.tau, &r.accuracy,
                    &r.mean_tokens, &tail) != 4) {
      throw InvalidInputError("malformed grid row: " + line);
    }
    r.top_k = k;
    rows.push_back(r);
  }
  return rows;
}

namespace {

void WriteTable(const std::string& path, const std::vector<GridRow>& rows) {
  if (path.empty()) return;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << EncodeGridCsv(rows);
    if (!out) throw IoError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

std::vector<GridRow> ReadExisting(const std::string& path) {
  if (path.empty() || !fs::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return ParseGridCsv(ss.str());
  } catch (const InvalidInputError& e) {
    throw ResumeError("cannot resume grid table " + path + ": " + e.what());
  }
}

}  // namespace

GridResult GridSearch(const MaskModel& model, const std::vector<TunerItem>& items,
                      const GridSpec& grid, const GridSearchOptions& options) {
  grid.Validate();
  if (items.empty()) throw InvalidInputError("validation set is empty");

  std::vector<GridRow> cells;
  for (size_t k : grid.top_k_values) {
    for (double tau : grid.tau_values) cells.push_back({k, tau, 0.0, 0.0});
  }
  const std::vector<GridRow> existing = ReadExisting(options.table_path);
  if (existing.size() > cells.size()) {
    throw ResumeError("grid table " + options.table_path + " has more rows than the grid");
  }
  std::vector<GridRow> done;
  for (size_t i = 0; i < existing.size(); ++i) {
    if (existing[i].top_k != cells[i].top_k ||
        Fixed6(existing[i].tau) != Fixed6(cells[i].tau)) {
      throw ResumeError("grid table " + options.table_path +
                        " was produced for a different grid");
    }
    GridRow r = cells[i];
    r.accuracy = existing[i].accuracy;
    r.mean_tokens = existing[i].mean_tokens;
    done.push_back(r);
  }

  for (size_t i = done.size(); i < cells.size(); ++i) {
    InferenceConfig cfg;
    cfg.steps = grid.steps;
    cfg.top_k = cells[i].top_k;
    cfg.tau = cells[i].tau;
    cfg.per_step_cap = grid.per_step_cap;
    double acc = 0.0, tokens = 0.0;
    for (const TunerItem& item : items) {
      if (options.stop && options.stop()) {
        throw InterruptedError("grid search interrupted");
      }
      const InferenceResult r = InferMask(model, item.prompt, cfg);
      acc += item.score(r.mask).value;
      tokens += static_cast<double>(r.mask.retained_count());
    }
    GridRow row = cells[i];
    row.accuracy = acc / static_cast<double>(items.size());
    row.mean_tokens = tokens / static_cast<double>(items.size());
    done.push_back(row);
    WriteTable(options.table_path, done);
  }
  WriteTable(options.table_path, done);

  GridResult result;
  result.table = done;
  result.selected = SelectBestRow(done);
  result.best.steps = grid.steps;
  result.best.top_k = done[result.selected].top_k;
  result.best.tau = done[result.selected].tau;
  result.best.per_step_cap = grid.per_step_cap;
  return result;
}

}  // namespace maskpress
