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

// Forward/backward passes of the encoder, shared by training and checks.

#include <span>
#include <vector>

#include "maskpress/diffumodel.hpp"

namespace maskpress::internal {

struct LayerNormCache {
  std::vector<double> xhat;  // [n x d]
  std::vector<double> rstd;  // [n]
};

struct LayerCache {
  std::vector<double> x_in;  // [n x d]
  LayerNormCache ln1;
  std::vector<double> a;     // ln1 output
  std::vector<double> q, k, v;
  std::vector<double> att;   // [H x n x n]
  std::vector<double> o;     // concatenated heads
  std::vector<double> h_mid;
  LayerNormCache ln2;
  std::vector<double> c;     // ln2 output
  std::vector<double> u;     // [n x F] pre-activation
  std::vector<double> g;     // gelu(u)
};

struct ForwardCache {
  size_t n = 0;
  std::vector<TokenId> ids;
  std::vector<LayerCache> layers;
  std::vector<double> x_final;  // residual stream before final norm
  LayerNormCache lnf;
  std::vector<double> hf;
  std::vector<double> logits;   // [n x V]
  Distributions dist;
};

ForwardCache RunForward(const MaskModel& model, std::span<const TokenId> ids);

// Accumulates dL/dparams into `grad` (same layout as model.params()).
void RunBackward(const MaskModel& model, const ForwardCache& cache,
                 std::span<const double> dlogits, std::span<double> grad);

}  // namespace maskpress::internal
