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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "maskpress/diffumodel.hpp"
#include "transformer.hpp"

namespace maskpress {

void ModelArch::Validate() const {
  if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
  if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0)
    throw ConfigError("d_model must be a positive multiple of n_heads");
  if (max_seq_len < 1) throw ConfigError("max_seq_len must be >= 1");
  if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (d_ff < 1) throw ConfigError("d_ff must be >= 1");
}

namespace {

std::string LayerName(uint32_t l, const char* rest) {
  return "layers." + std::to_string(l) + "." + rest;
}

}  // namespace

MaskModel::MaskModel(const ModelArch& arch, LayoutOnly) : arch_(arch) {
  arch_.Validate();
  Layout();
}

MaskModel MaskModel::Empty(const ModelArch& arch) { return MaskModel(arch, LayoutOnly{}); }

void MaskModel::Layout() {
  const size_t d = arch_.d_model, V = arch_.vocab_size, F = arch_.d_ff;
  const size_t rel = 2 * size_t{arch_.rel_window} + 1;
  size_t offset = 0;
  auto add = [&](std::string name, size_t size) {
    segments_.push_back({std::move(name), offset, size});
    offset += size;
  };
  add("embed.token", V * d);
  add("embed.pos", size_t{arch_.max_seq_len} * d);
  for (uint32_t l = 0; l < arch_.n_layers; ++l) {
    add(LayerName(l, "ln1.gain"), d);
    add(LayerName(l, "ln1.bias"), d);
    add(LayerName(l, "attn.wq"), d * d);
    add(LayerName(l, "attn.bq"), d);
    add(LayerName(l, "attn.wk"), d * d);
    add(LayerName(l, "attn.bk"), d);
    add(LayerName(l, "attn.wv"), d * d);
    add(LayerName(l, "attn.bv"), d);
    add(LayerName(l, "attn.wo"), d * d);
    add(LayerName(l, "attn.bo"), d);
    add(LayerName(l, "attn.rel_bias"), size_t{arch_.n_heads} * rel);
    add(LayerName(l, "ln2.gain"), d);
    add(LayerName(l, "ln2.bias"), d);
    add(LayerName(l, "ffn.w1"), d * F);
    add(LayerName(l, "ffn.b1"), F);
    add(LayerName(l, "ffn.w2"), F * d);
    add(LayerName(l, "ffn.b2"), d);
  }
  add("final_ln.gain", d);
  add("final_ln.bias", d);
  add("head.w", d * V);
  add("head.b", V);
  params_.assign(offset, 0.0);
}

MaskModel::MaskModel(const ModelArch& arch, uint64_t seed)
    : MaskModel(arch, LayoutOnly{}) {
  std::mt19937_64 rng(seed);
  const double d = arch_.d_model;
  const double residual_scale = 1.0 / std::sqrt(2.0 * arch_.n_layers);
  for (const Segment& s : segments_) {
    double stddev = 0.0;
    double fill = 0.0;
    const std::string& n = s.name;
    auto ends_with = [&n](const char* suffix) {
      const size_t len = std::strlen(suffix);
      return n.size() >= len && n.compare(n.size() - len, len, suffix) == 0;
    };
    if (n == "embed.token") {
      stddev = 0.1;
    } else if (n == "embed.pos") {
      stddev = 0.02;
    } else if (n == "head.w") {
      stddev = 0.02;
    } else if (ends_with(".gain")) {
      fill = 1.0;
    } else if (ends_with("attn.wo")) {
      stddev = residual_scale / std::sqrt(d);
    } else if (ends_with("ffn.w2")) {
      stddev = residual_scale / std::sqrt(static_cast<double>(arch_.d_ff));
    } else if (ends_with("attn.wq") || ends_with("attn.wk") ||
               ends_with("attn.wv") || ends_with("ffn.w1")) {
      stddev = 1.0 / std::sqrt(d);
    }
    auto out = std::span<double>(params_).subspan(s.offset, s.size);
    if (stddev > 0) {
      std::normal_distribution<double> normal(0.0, stddev);
      for (double& p : out) p = normal(rng);
    } else {
      std::fill(out.begin(), out.end(), fill);
    }
    if (ends_with("attn.rel_bias")) {
      // Locality prior: head h decays with distance at slope 2^-h.
      const long R = arch_.rel_window;
      for (uint32_t h = 0; h < arch_.n_heads; ++h) {
        const double slope = std::ldexp(1.0, -static_cast<int>(h));
        for (long o = -R; o <= R; ++o) {
          out[h * (2 * R + 1) + static_cast<size_t>(o + R)] = -slope * std::abs(o);
        }
      }
    }
  }
}

const MaskModel::Segment& MaskModel::segment(const std::string& name) const {
  for (const Segment& s : segments_) {
    if (s.name == name) return s;
  }
  throw InvalidInputError("no parameter segment named " + name);
}

std::span<double> MaskModel::view(const std::string& name) {
  const Segment& s = segment(name);
  return std::span<double>(params_).subspan(s.offset, s.size);
}

std::span<const double> MaskModel::view(const std::string& name) const {
  const Segment& s = segment(name);
  return std::span<const double>(params_).subspan(s.offset, s.size);
}

namespace internal {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

// y[n x out] = x[n x in] * W[in x out] + b
void Linear(const double* x, size_t n, size_t in, const double* w,
            const double* b, size_t out, double* y) {
  for (size_t i = 0; i < n; ++i) {
    double* yr = y + i * out;
    std::copy(b, b + out, yr);
    const double* xr = x + i * in;
    for (size_t p = 0; p < in; ++p) {
      const double xv = xr[p];
      const double* wr = w + p * out;
      for (size_t j = 0; j < out; ++j) yr[j] += xv * wr[j];
    }
  }
}

// Accumulates dW, db and (optionally) dx for y = xW + b.
void LinearBackward(const double* x, const double* dy, size_t n, size_t in,
                    size_t out, const double* w, double* dw, double* db,
                    double* dx) {
  for (size_t i = 0; i < n; ++i) {
    const double* dyr = dy + i * out;
    for (size_t j = 0; j < out; ++j) db[j] += dyr[j];
    const double* xr = x + i * in;
    for (size_t p = 0; p < in; ++p) {
      const double* wr = w + p * out;
      double* dwr = dw + p * out;
      const double xv = xr[p];
      double acc = 0.0;
      for (size_t j = 0; j < out; ++j) {
        dwr[j] += xv * dyr[j];
        acc += dyr[j] * wr[j];
      }
      if (dx) dx[i * in + p] += acc;
    }
  }
}

void LayerNormForward(const double* x, size_t n, size_t d, const double* gain,
                      const double* bias, LayerNormCache& cache, double* y) {
  cache.xhat.assign(n * d, 0.0);
  cache.rstd.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double* xr = x + i * d;
    double mean = 0.0;
    for (size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.rstd[i] = rstd;
    for (size_t j = 0; j < d; ++j) {
      const double xh = (xr[j] - mean) * rstd;
      cache.xhat[i * d + j] = xh;
      y[i * d + j] = xh * gain[j] + bias[j];
    }
  }
}

// Accumulates into dx.
void LayerNormBackward(const LayerNormCache& cache, const double* dy, size_t n,
                       size_t d, const double* gain, double* dgain,
                       double* dbias, double* dx) {
  std::vector<double> dxhat(d);
  for (size_t i = 0; i < n; ++i) {
    const double* xh = cache.xhat.data() + i * d;
    const double* dyr = dy + i * d;
    double m1 = 0.0, m2 = 0.0;
    for (size_t j = 0; j < d; ++j) {
      dgain[j] += dyr[j] * xh[j];
      dbias[j] += dyr[j];
      dxhat[j] = dyr[j] * gain[j];
      m1 += dxhat[j];
      m2 += dxhat[j] * xh[j];
    }
    m1 /= static_cast<double>(d);
    m2 /= static_cast<double>(d);
    for (size_t j = 0; j < d; ++j) {
      dx[i * d + j] += cache.rstd[i] * (dxhat[j] - m1 - xh[j] * m2);
    }
  }
}

double Gelu(double u) {
  return 0.5 * u * (1.0 + std::tanh(kGeluC * (u + kGeluA * u * u * u)));
}

double GeluGrad(double u) {
  const double t = std::tanh(kGeluC * (u + kGeluA * u * u * u));
  return 0.5 * (1.0 + t) +
         0.5 * u * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * u * u);
}

size_t RelIndex(size_t i, size_t j, size_t window) {
  const long diff = static_cast<long>(j) - static_cast<long>(i);
  const long w = static_cast<long>(window);
  return static_cast<size_t>(std::clamp(diff, -w, w) + w);
}

struct Views {
  const MaskModel& m;
  const double* operator()(const std::string& name) const {
    return m.view(name).data();
  }
};

}  // namespace

ForwardCache RunForward(const MaskModel& model, std::span<const TokenId> ids) {
  const ModelArch& a = model.arch();
  const size_t n = ids.size();
  if (n == 0) throw ShapeError("empty model input");
  if (n > a.max_seq_len) {
    throw ShapeError("input length " + std::to_string(n) +
                     " exceeds max_seq_len " + std::to_string(a.max_seq_len));
  }
  const size_t d = a.d_model, H = a.n_heads, dh = d / H, F = a.d_ff,
               V = a.vocab_size, R = a.rel_window;
  Views p{model};
  ForwardCache c;
  c.n = n;
  c.ids.assign(ids.begin(), ids.end());

  std::vector<double> x(n * d);
  const double* emb = p("embed.token");
  const double* pos = p("embed.pos");
  for (size_t i = 0; i < n; ++i) {
    if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= V) {
      throw ShapeError("token id " + std::to_string(ids[i]) +
                       " outside the model vocabulary");
    }
    for (size_t j = 0; j < d; ++j) {
      x[i * d + j] = emb[static_cast<size_t>(ids[i]) * d + j] + pos[i * d + j];
    }
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.layers.resize(a.n_layers);
  for (uint32_t l = 0; l < a.n_layers; ++l) {
    LayerCache& L = c.layers[l];
    L.x_in = x;
    L.a.assign(n * d, 0.0);
    LayerNormForward(x.data(), n, d, p(LayerName(l, "ln1.gain")),
                     p(LayerName(l, "ln1.bias")), L.ln1, L.a.data());
    L.q.assign(n * d, 0.0);
    L.k.assign(n * d, 0.0);
    L.v.assign(n * d, 0.0);
    Linear(L.a.data(), n, d, p(LayerName(l, "attn.wq")),
           p(LayerName(l, "attn.bq")), d, L.q.data());
    Linear(L.a.data(), n, d, p(LayerName(l, "attn.wk")),
           p(LayerName(l, "attn.bk")), d, L.k.data());
    Linear(L.a.data(), n, d, p(LayerName(l, "attn.wv")),
           p(LayerName(l, "attn.bv")), d, L.v.data());
    const double* rel = p(LayerName(l, "attn.rel_bias"));

    L.att.assign(H * n * n, 0.0);
    L.o.assign(n * d, 0.0);
    for (size_t h = 0; h < H; ++h) {
      const size_t off = h * dh;
      for (size_t i = 0; i < n; ++i) {
        double* row = L.att.data() + (h * n + i) * n;
        double mx = -1e300;
        for (size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (size_t e = 0; e < dh; ++e)
            s += L.q[i * d + off + e] * L.k[j * d + off + e];
          s = s * scale + rel[h * (2 * R + 1) + RelIndex(i, j, R)];
          row[j] = s;
          mx = std::max(mx, s);
        }
        double sum = 0.0;
        for (size_t j = 0; j < n; ++j) {
          row[j] = std::exp(row[j] - mx);
          sum += row[j];
        }
        for (size_t j = 0; j < n; ++j) {
          row[j] /= sum;
          for (size_t e = 0; e < dh; ++e)
            L.o[i * d + off + e] += row[j] * L.v[j * d + off + e];
        }
      }
    }
    std::vector<double> proj(n * d);
    Linear(L.o.data(), n, d, p(LayerName(l, "attn.wo")),
           p(LayerName(l, "attn.bo")), d, proj.data());
    L.h_mid.resize(n * d);
    for (size_t i = 0; i < n * d; ++i) L.h_mid[i] = x[i] + proj[i];

    L.c.assign(n * d, 0.0);
    LayerNormForward(L.h_mid.data(), n, d, p(LayerName(l, "ln2.gain")),
                     p(LayerName(l, "ln2.bias")), L.ln2, L.c.data());
    L.u.assign(n * F, 0.0);
    Linear(L.c.data(), n, d, p(LayerName(l, "ffn.w1")),
           p(LayerName(l, "ffn.b1")), F, L.u.data());
    L.g.resize(n * F);
    for (size_t i = 0; i < n * F; ++i) L.g[i] = Gelu(L.u[i]);
    std::vector<double> ff(n * d);
    Linear(L.g.data(), n, F, p(LayerName(l, "ffn.w2")),
           p(LayerName(l, "ffn.b2")), d, ff.data());
    for (size_t i = 0; i < n * d; ++i) x[i] = L.h_mid[i] + ff[i];
  }

  c.x_final = x;
  c.hf.assign(n * d, 0.0);
  LayerNormForward(x.data(), n, d, p("final_ln.gain"), p("final_ln.bias"),
                   c.lnf, c.hf.data());
  c.logits.assign(n * V, 0.0);
  Linear(c.hf.data(), n, d, p("head.w"), p("head.b"), V, c.logits.data());

  c.dist.length = n;
  c.dist.vocab = V;
  c.dist.probs.resize(n * V);
  for (size_t i = 0; i < n; ++i) {
    const double* z = c.logits.data() + i * V;
    double* pr = c.dist.probs.data() + i * V;
    const double mx = *std::max_element(z, z + V);
    double sum = 0.0;
    for (size_t j = 0; j < V; ++j) {
      pr[j] = std::exp(z[j] - mx);
      sum += pr[j];
    }
    for (size_t j = 0; j < V; ++j) pr[j] /= sum;
  }
  return c;
}

void RunBackward(const MaskModel& model, const ForwardCache& c,
                 std::span<const double> dlogits, std::span<double> grad) {
  const ModelArch& a = model.arch();
  const size_t n = c.n, d = a.d_model, H = a.n_heads, dh = d / H, F = a.d_ff,
               V = a.vocab_size, R = a.rel_window;
  Views p{model};
  auto g = [&](const std::string& name) {
    return grad.data() + model.segment(name).offset;
  };

  std::vector<double> dhf(n * d, 0.0);
  LinearBackward(c.hf.data(), dlogits.data(), n, d, V, p("head.w"), g("head.w"),
                 g("head.b"), dhf.data());
  std::vector<double> dx(n * d, 0.0);
  LayerNormBackward(c.lnf, dhf.data(), n, d, p("final_ln.gain"),
                    g("final_ln.gain"), g("final_ln.bias"), dx.data());

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (uint32_t li = a.n_layers; li-- > 0;) {
    const LayerCache& L = c.layers[li];
    // Feed-forward branch.
    std::vector<double> dgel(n * F, 0.0);
    LinearBackward(L.g.data(), dx.data(), n, F, d, p(LayerName(li, "ffn.w2")),
                   g(LayerName(li, "ffn.w2")), g(LayerName(li, "ffn.b2")),
                   dgel.data());
    for (size_t i = 0; i < n * F; ++i) dgel[i] *= GeluGrad(L.u[i]);
    std::vector<double> dc(n * d, 0.0);
    LinearBackward(L.c.data(), dgel.data(), n, d, F, p(LayerName(li, "ffn.w1")),
                   g(LayerName(li, "ffn.w1")), g(LayerName(li, "ffn.b1")),
                   dc.data());
    std::vector<double> dh_mid = dx;
    LayerNormBackward(L.ln2, dc.data(), n, d, p(LayerName(li, "ln2.gain")),
                      g(LayerName(li, "ln2.gain")), g(LayerName(li, "ln2.bias")),
                      dh_mid.data());

    // Attention branch.
    std::vector<double> d_o(n * d, 0.0);
    LinearBackward(L.o.data(), dh_mid.data(), n, d, d,
                   p(LayerName(li, "attn.wo")), g(LayerName(li, "attn.wo")),
                   g(LayerName(li, "attn.bo")), d_o.data());
    std::vector<double> dq(n * d, 0.0), dk(n * d, 0.0), dv(n * d, 0.0);
    double* drel = g(LayerName(li, "attn.rel_bias"));
    std::vector<double> datt(n), ds(n);
    for (size_t h = 0; h < H; ++h) {
      const size_t off = h * dh;
      for (size_t i = 0; i < n; ++i) {
        const double* row = L.att.data() + (h * n + i) * n;
        double dot = 0.0;
        for (size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (size_t e = 0; e < dh; ++e) {
            acc += d_o[i * d + off + e] * L.v[j * d + off + e];
            dv[j * d + off + e] += row[j] * d_o[i * d + off + e];
          }
          datt[j] = acc;
          dot += row[j] * acc;
        }
        for (size_t j = 0; j < n; ++j) {
          ds[j] = row[j] * (datt[j] - dot);
          drel[h * (2 * R + 1) + RelIndex(i, j, R)] += ds[j];
          const double s = ds[j] * scale;
          for (size_t e = 0; e < dh; ++e) {
            dq[i * d + off + e] += s * L.k[j * d + off + e];
            dk[j * d + off + e] += s * L.q[i * d + off + e];
          }
        }
      }
    }
    std::vector<double> da(n * d, 0.0);
    LinearBackward(L.a.data(), dq.data(), n, d, d, p(LayerName(li, "attn.wq")),
                   g(LayerName(li, "attn.wq")), g(LayerName(li, "attn.bq")),
                   da.data());
    LinearBackward(L.a.data(), dk.data(), n, d, d, p(LayerName(li, "attn.wk")),
                   g(LayerName(li, "attn.wk")), g(LayerName(li, "attn.bk")),
                   da.data());
    LinearBackward(L.a.data(), dv.data(), n, d, d, p(LayerName(li, "attn.wv")),
                   g(LayerName(li, "attn.wv")), g(LayerName(li, "attn.bv")),
                   da.data());
    dx = dh_mid;
    LayerNormBackward(L.ln1, da.data(), n, d, p(LayerName(li, "ln1.gain")),
                      g(LayerName(li, "ln1.gain")), g(LayerName(li, "ln1.bias")),
                      dx.data());
  }

  double* demb = g("embed.token");
  double* dpos = g("embed.pos");
  for (size_t i = 0; i < n; ++i) {
    const size_t t = static_cast<size_t>(c.ids[i]);
    for (size_t j = 0; j < d; ++j) {
      demb[t * d + j] += dx[i * d + j];
      dpos[i * d + j] += dx[i * d + j];
    }
  }
}

}  // namespace internal

Distributions ModelForward(const MaskModel& model, std::span<const TokenId> ids) {
  return internal::RunForward(model, ids).dist;
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

constexpr char kMagic[4] = {'M', 'P', 'R', 'S'};
constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void PutLe(std::string& out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T GetLe(std::string_view bytes, size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) {
    throw InvalidInputError("truncated model checkpoint");
  }
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[pos + i]))
         << (8 * i);
  }
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace

std::string EncodeModel(const MaskModel& model) {
  std::string out(kMagic, 4);
  const ModelArch& a = model.arch();
  PutLe<uint32_t>(out, kCheckpointVersion);
  for (uint32_t f : {a.n_layers, a.d_model, a.n_heads, a.max_seq_len,
                     a.vocab_size, a.d_ff, a.rel_window}) {
    PutLe<uint32_t>(out, f);
  }
  for (const auto& s : model.segments()) {
    PutLe<uint16_t>(out, static_cast<uint16_t>(s.name.size()));
    out += s.name;
    PutLe<uint64_t>(out, s.size);
    for (double v : model.view(s.name)) {
      const float f = static_cast<float>(v);
      uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      PutLe<uint32_t>(out, bits);
    }
  }
  return out;
}

MaskModel DecodeModel(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw InvalidInputError("not a model checkpoint (bad magic)");
  }
  size_t pos = 4;
  const auto version = GetLe<uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw InvalidInputError("unsupported checkpoint version " +
                            std::to_string(version));
  }
  ModelArch a;
  a.n_layers = GetLe<uint32_t>(bytes, pos);
  a.d_model = GetLe<uint32_t>(bytes, pos);
  a.n_heads = GetLe<uint32_t>(bytes, pos);
  a.max_seq_len = GetLe<uint32_t>(bytes, pos);
  a.vocab_size = GetLe<uint32_t>(bytes, pos);
  a.d_ff = GetLe<uint32_t>(bytes, pos);
  a.rel_window = GetLe<uint32_t>(bytes, pos);
  MaskModel model = MaskModel::Empty(a);
  size_t seen = 0;
  while (pos < bytes.size()) {
    const auto len = GetLe<uint16_t>(bytes, pos);
    if (pos + len > bytes.size()) throw InvalidInputError("truncated segment name");
    const std::string name(bytes.substr(pos, len));
    pos += len;
    const auto count = GetLe<uint64_t>(bytes, pos);
    auto dst = model.view(name);
    if (dst.size() != count) {
      throw InvalidInputError("segment " + name + " has the wrong size");
    }
    for (double& v : dst) {
      const uint32_t bits = GetLe<uint32_t>(bytes, pos);
      float f;
      std::memcpy(&f, &bits, sizeof f);
      v = f;
    }
    ++seen;
  }
  if (seen != model.segments().size()) {
    throw InvalidInputError("checkpoint is missing parameter segments");
  }
  return model;
}

void SaveModel(const MaskModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  const std::string bytes = EncodeModel(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

MaskModel LoadModel(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("no such checkpoint: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return DecodeModel(ss.str());
}

}  // namespace maskpress
