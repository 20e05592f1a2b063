// Copyright 2026 The jasskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "jasskit/minimodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "jasskit/error.hpp"
#include "jasskit/evalmetrics.hpp"
#include "jasskit/rng.hpp"

namespace jasskit {

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  hash_ = 0xcbf29ce484222325ULL;
  auto feed = [&](unsigned char c) {
    hash_ ^= c;
    hash_ *= 0x100000001b3ULL;
  };
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw ModelError("duplicate vocabulary token " + tokens_[i]);
    }
    for (unsigned char c : tokens_[i]) feed(c);
    feed(0);
  }
}

int Vocab::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? -1 : it->second;
}

int Vocab::id(std::string_view token) const {
  int i = find(token);
  if (i >= 0) return i;
  i = find(kUnkToken);
  if (i < 0) throw ModelError("token " + std::string(token) + " not in vocabulary and no <unk>");
  return i;
}

Vocab build_vocab(const SpecialTokens& specials, std::span<const TaggedPair> pairs) {
  std::vector<std::string> rest;
  for (const auto& p : pairs) {
    for (const auto& t : p.pair.enc_input) rest.push_back(t);
    for (const auto& t : p.pair.dec_target) rest.push_back(t);
  }
  std::sort(rest.begin(), rest.end());
  rest.erase(std::unique(rest.begin(), rest.end()), rest.end());
  std::vector<std::string> tokens = specials.list();
  for (auto& t : rest) {
    if (!specials.is_special(t)) tokens.push_back(std::move(t));
  }
  return Vocab(std::move(tokens));
}

namespace {

constexpr std::size_t kBlocks = static_cast<std::size_t>(ParamBlock::kOutputBias) + 1;

std::size_t idx(ParamBlock b) { return static_cast<std::size_t>(b); }

void check_dims(const ModelDims& d, std::size_t vocab) {
  if (vocab == 0 || d.embed == 0 || d.hidden == 0 || d.attn == 0 || d.dec_window == 0 ||
      d.max_len == 0) {
    throw ModelError("model dimensions must be positive");
  }
}

}  // namespace

TinyModel::TinyModel(ModelDims dims, Vocab vocab, std::uint64_t seed)
    : dims_(dims), vocab_(std::move(vocab)) {
  check_dims(dims_, vocab_.size());
  layout();
  const std::size_t V = vocab_.size(), d = dims_.embed, H = dims_.hidden;
  const std::size_t fan_in[kBlocks] = {
      d, d, d, (2 * dims_.enc_window + 1) * d, (2 * dims_.enc_window + 1) * d,
      dims_.dec_window * d, dims_.dec_window * d, H, H, 2 * H, 2 * H, H, H};
  (void)V;
  Rng rng(seed);
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in[b]));
    for (std::size_t i = offsets_[b]; i < offsets_[b + 1]; ++i) {
      params_[i] = (2.0 * rng.uniform() - 1.0) * scale;
    }
  }
}

TinyModel::TinyModel(ModelDims dims, Vocab vocab, std::vector<double> params)
    : dims_(dims), vocab_(std::move(vocab)) {
  check_dims(dims_, vocab_.size());
  layout();
  if (params.size() != params_.size()) {
    throw ModelError("expected " + std::to_string(params_.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  params_ = std::move(params);
}

void TinyModel::layout() {
  const std::size_t V = vocab_.size(), d = dims_.embed, H = dims_.hidden, A = dims_.attn;
  const std::size_t L = dims_.max_len;
  const std::size_t sizes[kBlocks] = {V * d,
                                      L * d,
                                      L * d,
                                      H * (2 * dims_.enc_window + 1) * d,
                                      H,
                                      H * dims_.dec_window * d,
                                      H,
                                      A * H,
                                      A * H,
                                      H * 2 * H,
                                      H,
                                      V * H,
                                      V};
  offsets_.assign(kBlocks + 1, 0);
  for (std::size_t b = 0; b < kBlocks; ++b) offsets_[b + 1] = offsets_[b] + sizes[b];
  params_.assign(offsets_.back(), 0.0);
}

std::span<double> TinyModel::block(ParamBlock b) {
  return std::span<double>(params_).subspan(offsets_[idx(b)], offsets_[idx(b) + 1] - offsets_[idx(b)]);
}

std::span<const double> TinyModel::block(ParamBlock b) const {
  return std::span<const double>(params_).subspan(offsets_[idx(b)],
                                                  offsets_[idx(b) + 1] - offsets_[idx(b)]);
}

std::size_t TinyModel::block_offset(ParamBlock b) const { return offsets_[idx(b)]; }

namespace minimodel {
namespace {

// y[r] += sum_c W[r, c] x[c]
void gemv(const double* W, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    y[r] += acc;
  }
}

// x[c] += sum_r W[r, c] y[r]
void gemv_t(const double* W, std::size_t rows, std::size_t cols, const double* y, double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) x[c] += w[c] * yr;
  }
}

// G[r, c] += y[r] x[c]
void outer(double* G, std::size_t rows, std::size_t cols, const double* y, const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    double* g = G + r * cols;
    for (std::size_t c = 0; c < cols; ++c) g[c] += yr * x[c];
  }
}

void softmax_inplace(double* z, std::size_t n) {
  const double mx = *std::max_element(z, z + n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += (z[i] = std::exp(z[i] - mx));
  for (std::size_t i = 0; i < n; ++i) z[i] /= sum;
}

struct Shapes {
  std::size_t V, d, H, A, we, wd, L, enc_in, dec_in;
  explicit Shapes(const TinyModel& m)
      : V(m.vocab().size()),
        d(m.dims().embed),
        H(m.dims().hidden),
        A(m.dims().attn),
        we(m.dims().enc_window),
        wd(m.dims().dec_window),
        L(m.dims().max_len),
        enc_in((2 * we + 1) * d),
        dec_in(wd * d) {}
};

// Activations of one forward pass, kept for the backward pass.
struct Cache {
  std::size_t n_enc = 0, n_dec = 0;
  std::vector<double> u, h, k;         // encoder: inputs, states, keys
  std::vector<double> v, s, q;         // decoder: inputs, states, queries
  std::vector<double> alpha, c, g, p;  // attention weights, contexts, mix, probabilities
};

void check_ids(const TinyModel& m, std::span<const int> ids, const char* what) {
  if (ids.size() > m.dims().max_len) {
    throw ModelError(std::string(what) + " length " + std::to_string(ids.size()) +
                     " exceeds model max_len " + std::to_string(m.dims().max_len));
  }
  for (int t : ids) {
    if (t < 0 || static_cast<std::size_t>(t) >= m.vocab().size()) {
      throw ModelError(std::string(what) + " id " + std::to_string(t) + " out of range");
    }
  }
}

void run_forward(const TinyModel& m, std::span<const int> enc, std::span<const int> dec, Cache& c) {
  check_ids(m, enc, "encoder input");
  check_ids(m, dec, "decoder input");
  if (enc.empty() || dec.empty()) throw ModelError("empty encoder or decoder input");
  const Shapes sh(m);
  const double* E = m.block(ParamBlock::kTokenEmbedding).data();
  const double* Pe = m.block(ParamBlock::kEncoderPosition).data();
  const double* Pd = m.block(ParamBlock::kDecoderPosition).data();
  const double* We = m.block(ParamBlock::kEncoderWeight).data();
  const double* be = m.block(ParamBlock::kEncoderBias).data();
  const double* Wd = m.block(ParamBlock::kDecoderWeight).data();
  const double* bd = m.block(ParamBlock::kDecoderBias).data();
  const double* Wq = m.block(ParamBlock::kQuery).data();
  const double* Wk = m.block(ParamBlock::kKey).data();
  const double* Wm = m.block(ParamBlock::kMixWeight).data();
  const double* bm = m.block(ParamBlock::kMixBias).data();
  const double* U = m.block(ParamBlock::kOutputWeight).data();
  const double* bu = m.block(ParamBlock::kOutputBias).data();

  const std::size_t ne = enc.size(), nd = dec.size();
  c.n_enc = ne;
  c.n_dec = nd;
  c.u.assign(ne * sh.enc_in, 0.0);
  c.h.assign(ne * sh.H, 0.0);
  c.k.assign(ne * sh.A, 0.0);
  c.v.assign(nd * sh.dec_in, 0.0);
  c.s.assign(nd * sh.H, 0.0);
  c.q.assign(nd * sh.A, 0.0);
  c.alpha.assign(nd * ne, 0.0);
  c.c.assign(nd * sh.H, 0.0);
  c.g.assign(nd * sh.H, 0.0);
  c.p.assign(nd * sh.V, 0.0);

  for (std::size_t i = 0; i < ne; ++i) {
    double* u = &c.u[i * sh.enc_in];
    for (std::size_t o = 0; o <= 2 * sh.we; ++o) {
      const auto j = static_cast<std::ptrdiff_t>(i + o) - static_cast<std::ptrdiff_t>(sh.we);
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(ne)) continue;
      const double* e = E + static_cast<std::size_t>(enc[j]) * sh.d;
      const double* pe = Pe + static_cast<std::size_t>(j) * sh.d;
      for (std::size_t x = 0; x < sh.d; ++x) u[o * sh.d + x] = e[x] + pe[x];
    }
    double* h = &c.h[i * sh.H];
    std::copy(be, be + sh.H, h);
    gemv(We, sh.H, sh.enc_in, u, h);
    for (std::size_t x = 0; x < sh.H; ++x) h[x] = std::tanh(h[x]);
    gemv(Wk, sh.A, sh.H, h, &c.k[i * sh.A]);
  }

  const double inv_sqrt_a = 1.0 / std::sqrt(static_cast<double>(sh.A));
  std::vector<double> sc(2 * sh.H);
  for (std::size_t t = 0; t < nd; ++t) {
    double* v = &c.v[t * sh.dec_in];
    for (std::size_t o = 0; o < sh.wd; ++o) {
      if (o > t) break;
      const std::size_t j = t - o;
      const double* e = E + static_cast<std::size_t>(dec[j]) * sh.d;
      const double* pd = Pd + j * sh.d;
      for (std::size_t x = 0; x < sh.d; ++x) v[o * sh.d + x] = e[x] + pd[x];
    }
    double* s = &c.s[t * sh.H];
    std::copy(bd, bd + sh.H, s);
    gemv(Wd, sh.H, sh.dec_in, v, s);
    for (std::size_t x = 0; x < sh.H; ++x) s[x] = std::tanh(s[x]);
    double* q = &c.q[t * sh.A];
    gemv(Wq, sh.A, sh.H, s, q);

    double* a = &c.alpha[t * ne];
    for (std::size_t i = 0; i < ne; ++i) {
      const double* k = &c.k[i * sh.A];
      double dot = 0.0;
      for (std::size_t x = 0; x < sh.A; ++x) dot += q[x] * k[x];
      a[i] = dot * inv_sqrt_a;
    }
    softmax_inplace(a, ne);
    double* ctx = &c.c[t * sh.H];
    for (std::size_t i = 0; i < ne; ++i) {
      const double* h = &c.h[i * sh.H];
      for (std::size_t x = 0; x < sh.H; ++x) ctx[x] += a[i] * h[x];
    }

    std::copy(s, s + sh.H, sc.begin());
    std::copy(ctx, ctx + sh.H, sc.begin() + static_cast<std::ptrdiff_t>(sh.H));
    double* g = &c.g[t * sh.H];
    std::copy(bm, bm + sh.H, g);
    gemv(Wm, sh.H, 2 * sh.H, sc.data(), g);
    for (std::size_t x = 0; x < sh.H; ++x) g[x] = std::tanh(g[x]);

    double* p = &c.p[t * sh.V];
    std::copy(bu, bu + sh.V, p);
    gemv(U, sh.V, sh.H, g, p);
    softmax_inplace(p, sh.V);
  }
}

void check_example(const TinyModel& m, const Example& ex) {
  if (ex.loss.empty()) throw ModelError("example has no loss positions");
  if (ex.dec_in.size() != ex.target.size()) throw ModelError("decoder input and target lengths differ");
  check_ids(m, ex.target, "target");
  for (auto t : ex.loss) {
    if (t >= ex.target.size()) throw ModelError("loss position out of range");
  }
}

double loss_from_cache(const Cache& c, const Example& ex, std::size_t V) {
  double loss = 0.0;
  for (auto t : ex.loss) {
    loss -= std::log(c.p[t * V + static_cast<std::size_t>(ex.target[t])]);
  }
  return loss;
}

}  // namespace

Example make_example(const TaggedPair& p, const Vocab& vocab) {
  Example ex;
  for (const auto& t : p.pair.enc_input) ex.enc.push_back(vocab.id(t));
  ex.dec_in.push_back(vocab.id(kBosToken));
  for (const auto& t : p.pair.dec_target) ex.target.push_back(vocab.id(t));
  ex.dec_in.insert(ex.dec_in.end(), ex.target.begin(), ex.target.end() - (ex.target.empty() ? 0 : 1));
  ex.loss = p.pair.loss_positions;
  return ex;
}

Example make_translation_example(const ParallelPair& p, const Vocab& vocab,
                                 const SpecialTokens& specials) {
  Example ex;
  ex.enc.push_back(vocab.id(specials.lang_token(p.src.lang)));
  for (const auto& t : p.src.tokens) ex.enc.push_back(vocab.id(t));
  for (const auto& t : p.tgt.tokens) ex.target.push_back(vocab.id(t));
  ex.target.push_back(vocab.id(kEosToken));
  ex.dec_in.push_back(vocab.id(kBosToken));
  ex.dec_in.insert(ex.dec_in.end(), ex.target.begin(), ex.target.end() - 1);
  ex.loss.resize(ex.target.size());
  std::iota(ex.loss.begin(), ex.loss.end(), std::size_t{0});
  return ex;
}

std::vector<std::vector<double>> forward(const TinyModel& m, std::span<const int> enc,
                                         std::span<const int> dec_in) {
  Cache c;
  run_forward(m, enc, dec_in, c);
  const std::size_t V = m.vocab().size();
  std::vector<std::vector<double>> out(c.n_dec);
  for (std::size_t t = 0; t < c.n_dec; ++t) {
    out[t].assign(c.p.begin() + static_cast<std::ptrdiff_t>(t * V),
                  c.p.begin() + static_cast<std::ptrdiff_t>((t + 1) * V));
  }
  return out;
}

double masked_nll(const TinyModel& m, const Example& ex) {
  check_example(m, ex);
  Cache c;
  run_forward(m, ex.enc, ex.dec_in, c);
  return loss_from_cache(c, ex, m.vocab().size());
}

double masked_nll(const TinyModel& m, const TaggedPair& p) {
  return masked_nll(m, make_example(p, m.vocab()));
}

double masked_nll_grad(const TinyModel& m, const Example& ex, std::span<double> grad) {
  check_example(m, ex);
  if (grad.size() != m.param_count()) throw ModelError("gradient buffer has the wrong size");
  Cache c;
  run_forward(m, ex.enc, ex.dec_in, c);
  const Shapes sh(m);
  const std::size_t ne = c.n_enc, nd = c.n_dec;

  auto P = [&](ParamBlock b) { return m.block(b).data(); };
  auto G = [&](ParamBlock b) { return grad.data() + m.block_offset(b); };

  std::vector<double> dlogits(sh.V), dg(sh.H), dpre(sh.H), dsc(2 * sh.H), sc(2 * sh.H);
  std::vector<double> ds(nd * sh.H, 0.0), dctx(nd * sh.H, 0.0), dh(ne * sh.H, 0.0);

  // Output softmax and mixing layer. Positions outside the loss set get no
  // gradient at all.
  std::vector<char> supervised(nd, 0);
  for (auto t : ex.loss) supervised[t] = 1;
  for (std::size_t t = 0; t < nd; ++t) {
    if (!supervised[t]) continue;
    const double* p = &c.p[t * sh.V];
    for (std::size_t x = 0; x < sh.V; ++x) dlogits[x] = p[x];
    dlogits[static_cast<std::size_t>(ex.target[t])] -= 1.0;
    const double* g = &c.g[t * sh.H];
    outer(G(ParamBlock::kOutputWeight), sh.V, sh.H, dlogits.data(), g);
    double* gbu = G(ParamBlock::kOutputBias);
    for (std::size_t x = 0; x < sh.V; ++x) gbu[x] += dlogits[x];
    std::fill(dg.begin(), dg.end(), 0.0);
    gemv_t(P(ParamBlock::kOutputWeight), sh.V, sh.H, dlogits.data(), dg.data());

    for (std::size_t x = 0; x < sh.H; ++x) dpre[x] = dg[x] * (1.0 - g[x] * g[x]);
    std::copy(&c.s[t * sh.H], &c.s[t * sh.H] + sh.H, sc.begin());
    std::copy(&c.c[t * sh.H], &c.c[t * sh.H] + sh.H, sc.begin() + static_cast<std::ptrdiff_t>(sh.H));
    outer(G(ParamBlock::kMixWeight), sh.H, 2 * sh.H, dpre.data(), sc.data());
    double* gbm = G(ParamBlock::kMixBias);
    for (std::size_t x = 0; x < sh.H; ++x) gbm[x] += dpre[x];
    std::fill(dsc.begin(), dsc.end(), 0.0);
    gemv_t(P(ParamBlock::kMixWeight), sh.H, 2 * sh.H, dpre.data(), dsc.data());
    for (std::size_t x = 0; x < sh.H; ++x) {
      ds[t * sh.H + x] += dsc[x];
      dctx[t * sh.H + x] += dsc[sh.H + x];
    }
  }

  // Attention.
  const double inv_sqrt_a = 1.0 / std::sqrt(static_cast<double>(sh.A));
  std::vector<double> dalpha(ne), dq(sh.A), dk(ne * sh.A, 0.0);
  for (std::size_t t = 0; t < nd; ++t) {
    if (!supervised[t]) continue;
    const double* a = &c.alpha[t * ne];
    const double* dc = &dctx[t * sh.H];
    double weighted = 0.0;
    for (std::size_t i = 0; i < ne; ++i) {
      const double* h = &c.h[i * sh.H];
      double dot = 0.0;
      for (std::size_t x = 0; x < sh.H; ++x) {
        dot += dc[x] * h[x];
        dh[i * sh.H + x] += a[i] * dc[x];
      }
      dalpha[i] = dot;
      weighted += a[i] * dot;
    }
    std::fill(dq.begin(), dq.end(), 0.0);
    const double* q = &c.q[t * sh.A];
    for (std::size_t i = 0; i < ne; ++i) {
      const double dscore = a[i] * (dalpha[i] - weighted) * inv_sqrt_a;
      const double* k = &c.k[i * sh.A];
      for (std::size_t x = 0; x < sh.A; ++x) {
        dq[x] += dscore * k[x];
        dk[i * sh.A + x] += dscore * q[x];
      }
    }
    outer(G(ParamBlock::kQuery), sh.A, sh.H, dq.data(), &c.s[t * sh.H]);
    gemv_t(P(ParamBlock::kQuery), sh.A, sh.H, dq.data(), &ds[t * sh.H]);
  }

  // Decoder layer.
  std::vector<double> dv(sh.dec_in);
  double* gE = G(ParamBlock::kTokenEmbedding);
  double* gPd = G(ParamBlock::kDecoderPosition);
  for (std::size_t t = 0; t < nd; ++t) {
    if (!supervised[t]) continue;
    const double* s = &c.s[t * sh.H];
    for (std::size_t x = 0; x < sh.H; ++x) dpre[x] = ds[t * sh.H + x] * (1.0 - s[x] * s[x]);
    outer(G(ParamBlock::kDecoderWeight), sh.H, sh.dec_in, dpre.data(), &c.v[t * sh.dec_in]);
    double* gbd = G(ParamBlock::kDecoderBias);
    for (std::size_t x = 0; x < sh.H; ++x) gbd[x] += dpre[x];
    std::fill(dv.begin(), dv.end(), 0.0);
    gemv_t(P(ParamBlock::kDecoderWeight), sh.H, sh.dec_in, dpre.data(), dv.data());
    for (std::size_t o = 0; o < sh.wd && o <= t; ++o) {
      const std::size_t j = t - o;
      double* ge = gE + static_cast<std::size_t>(ex.dec_in[j]) * sh.d;
      double* gp = gPd + j * sh.d;
      for (std::size_t x = 0; x < sh.d; ++x) {
        ge[x] += dv[o * sh.d + x];
        gp[x] += dv[o * sh.d + x];
      }
    }
  }

  // Keys and encoder layer.
  double* gPe = G(ParamBlock::kEncoderPosition);
  std::vector<double> du(sh.enc_in);
  for (std::size_t i = 0; i < ne; ++i) {
    const double* h = &c.h[i * sh.H];
    outer(G(ParamBlock::kKey), sh.A, sh.H, &dk[i * sh.A], h);
    gemv_t(P(ParamBlock::kKey), sh.A, sh.H, &dk[i * sh.A], &dh[i * sh.H]);
    for (std::size_t x = 0; x < sh.H; ++x) dpre[x] = dh[i * sh.H + x] * (1.0 - h[x] * h[x]);
    outer(G(ParamBlock::kEncoderWeight), sh.H, sh.enc_in, dpre.data(), &c.u[i * sh.enc_in]);
    double* gbe = G(ParamBlock::kEncoderBias);
    for (std::size_t x = 0; x < sh.H; ++x) gbe[x] += dpre[x];
    std::fill(du.begin(), du.end(), 0.0);
    gemv_t(P(ParamBlock::kEncoderWeight), sh.H, sh.enc_in, dpre.data(), du.data());
    for (std::size_t o = 0; o <= 2 * sh.we; ++o) {
      const auto j = static_cast<std::ptrdiff_t>(i + o) - static_cast<std::ptrdiff_t>(sh.we);
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(ne)) continue;
      double* ge = gE + static_cast<std::size_t>(ex.enc[static_cast<std::size_t>(j)]) * sh.d;
      double* gp = gPe + static_cast<std::size_t>(j) * sh.d;
      for (std::size_t x = 0; x < sh.d; ++x) {
        ge[x] += du[o * sh.d + x];
        gp[x] += du[o * sh.d + x];
      }
    }
  }
  return loss_from_cache(c, ex, sh.V);
}

double unigram_accuracy(const TinyModel& m, std::span<const Example> data) {
  std::size_t correct = 0, total = 0;
  const std::size_t V = m.vocab().size();
  Cache c;
  for (const auto& ex : data) {
    run_forward(m, ex.enc, ex.dec_in, c);
    for (auto t : ex.loss) {
      const double* p = &c.p[t * V];
      const auto best = static_cast<int>(std::max_element(p, p + V) - p);
      correct += best == ex.target[t];
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double mean_loss(const TinyModel& m, std::span<const Example> data) {
  double loss = 0.0;
  std::size_t tokens = 0;
  Cache c;
  for (const auto& ex : data) {
    check_example(m, ex);
    run_forward(m, ex.enc, ex.dec_in, c);
    loss += loss_from_cache(c, ex, m.vocab().size());
    tokens += ex.loss.size();
  }
  return tokens == 0 ? 0.0 : loss / static_cast<double>(tokens);
}

std::vector<int> greedy_decode(const TinyModel& m, std::span<const int> enc, std::size_t max_len) {
  const int bos = m.vocab().id(kBosToken);
  const int eos = m.vocab().find(kEosToken);
  max_len = std::min(max_len, m.dims().max_len);
  std::vector<int> dec{bos};
  std::vector<int> out;
  Cache c;
  const std::size_t V = m.vocab().size();
  while (out.size() < max_len) {
    run_forward(m, enc, dec, c);
    const double* p = &c.p[(dec.size() - 1) * V];
    const int best = static_cast<int>(std::max_element(p, p + V) - p);
    if (best == eos) break;
    out.push_back(best);
    dec.push_back(best);
  }
  return out;
}

namespace {

double dev_bleu(const TinyModel& m, std::span<const Example> dev) {
  EvalCorpus corpus;
  const int eos = m.vocab().find(kEosToken);
  for (const auto& ex : dev) {
    TokenSeq hyp, ref;
    for (int t : greedy_decode(m, ex.enc, ex.target.size() + 8)) hyp.push_back(m.vocab().token(t));
    for (int t : ex.target) {
      if (t != eos) ref.push_back(m.vocab().token(t));
    }
    corpus.hypotheses.push_back(std::move(hyp));
    corpus.references.push_back(std::move(ref));
  }
  return evalmetrics::bleu(corpus, 4, Smoothing::kAddOne);
}

}  // namespace

TrainResult train(TinyModel m, std::span<const Example> data, const TrainConfig& cfg,
                  std::span<const Example> dev) {
  if (data.empty()) throw ModelError("no training examples");
  if (cfg.batch_size == 0 || cfg.checkpoint_every == 0 || cfg.patience == 0) {
    throw ConfigError("batch size, checkpoint interval and patience must be positive");
  }
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  for (const auto& ex : data) check_example(m, ex);
  std::span<const Example> dev_set = dev.empty() ? data : dev;

  const bool lower_is_better = cfg.metric == DevMetric::kLoss;
  auto evaluate = [&](CheckpointRecord& rec) {
    rec.dev_loss = mean_loss(m, dev_set);
    switch (cfg.metric) {
      case DevMetric::kAccuracy: rec.dev_metric = unigram_accuracy(m, dev_set); break;
      case DevMetric::kLoss: rec.dev_metric = rec.dev_loss; break;
      case DevMetric::kBleu: rec.dev_metric = dev_bleu(m, dev_set); break;
    }
  };
  auto better = [&](double a, double b) { return lower_is_better ? a < b : a > b; };

  TrainResult result;
  result.model = m;
  if (cfg.max_steps == 0) return result;

  CheckpointRecord first;
  evaluate(first);
  first.train_loss = first.dev_loss;
  result.log.push_back(first);
  double best_metric = first.dev_metric;
  if (cfg.target_dev_loss && first.dev_loss <= *cfg.target_dev_loss) {
    result.reached_target_at = 0;
    return result;
  }

  Rng rng(derive_seed(cfg.seed, 0x545241494eULL));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  std::size_t cursor = 0;

  std::vector<double> grad(m.param_count());
  double interval_loss = 0.0;
  std::size_t interval_tokens = 0;
  std::size_t stale = 0;
  auto theta = m.params();

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double batch_loss = 0.0;
    std::size_t batch_tokens = 0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order.begin(), order.end());
        cursor = 0;
      }
      const Example& ex = data[order[cursor++]];
      batch_loss += masked_nll_grad(m, ex, grad);
      batch_tokens += ex.loss.size();
    }
    if (!std::isfinite(batch_loss)) {
      throw ModelError("training diverged at step " + std::to_string(step) +
                       " (loss " + std::to_string(batch_loss) + ")");
    }
    const double scale = cfg.learning_rate / static_cast<double>(batch_tokens);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= scale * grad[i];
    interval_loss += batch_loss;
    interval_tokens += batch_tokens;
    result.steps = step;

    if (step % cfg.checkpoint_every == 0 || step == cfg.max_steps) {
      CheckpointRecord rec;
      rec.step = step;
      rec.train_loss = interval_loss / static_cast<double>(interval_tokens);
      interval_loss = 0.0;
      interval_tokens = 0;
      evaluate(rec);
      result.log.push_back(rec);
      if (better(rec.dev_metric, best_metric)) {
        best_metric = rec.dev_metric;
        result.model = m;
        result.best_step = step;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        result.early_stopped = true;
        break;
      }
      if (cfg.target_dev_loss && rec.dev_loss <= *cfg.target_dev_loss) {
        result.reached_target_at = step;
        break;
      }
    }
  }
  return result;
}

TrainResult finetune(TinyModel m, std::span<const ParallelPair> train_pairs,
                     std::span<const ParallelPair> dev_pairs, const Vocab& vocab,
                     const SpecialTokens& specials, const TrainConfig& cfg) {
  if (vocab.hash() != m.vocab().hash()) {
    throw ModelError("fine-tuning vocabulary does not match the model vocabulary");
  }
  if (cfg.max_steps == 0) {
    TrainResult r;
    r.model = std::move(m);
    return r;
  }
  std::vector<Example> data, dev;
  for (const auto& p : train_pairs) data.push_back(make_translation_example(p, vocab, specials));
  for (const auto& p : dev_pairs) dev.push_back(make_translation_example(p, vocab, specials));
  return train(std::move(m), data, cfg, dev);
}

namespace {
constexpr std::string_view kCheckpointMagic = "jasskit-tinymodel";
}

void save_checkpoint(const TinyModel& m, std::ostream& out, const std::string& meta) {
  const auto& d = m.dims();
  out << kCheckpointMagic << " 1\n";
  out << "meta " << meta << '\n';
  out << "dims " << d.embed << ' ' << d.hidden << ' ' << d.attn << ' ' << d.enc_window << ' '
      << d.dec_window << ' ' << d.max_len << '\n';
  out << "vocab_hash " << std::hex << m.vocab().hash() << std::dec << '\n';
  out << "vocab " << m.vocab().size() << '\n';
  for (const auto& t : m.vocab().tokens()) out << t << '\n';
  out << "params " << m.param_count() << '\n';
  char buf[64];
  for (double v : m.params()) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, end - buf);
    out << '\n';
  }
}

TinyModel load_checkpoint(std::istream& in) {
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != kCheckpointMagic || version != 1) {
    throw ModelError("not a version 1 jasskit model checkpoint");
  }
  std::string line;
  std::getline(in, line);
  if (!(in >> word) || word != "meta") throw ModelError("checkpoint: missing meta line");
  std::getline(in, line);
  ModelDims d;
  if (!(in >> word) || word != "dims" ||
      !(in >> d.embed >> d.hidden >> d.attn >> d.enc_window >> d.dec_window >> d.max_len)) {
    throw ModelError("checkpoint: malformed dims line");
  }
  std::uint64_t hash = 0;
  if (!(in >> word) || word != "vocab_hash" || !(in >> std::hex >> hash >> std::dec)) {
    throw ModelError("checkpoint: malformed vocab_hash line");
  }
  std::size_t n = 0;
  if (!(in >> word) || word != "vocab" || !(in >> n)) throw ModelError("checkpoint: malformed vocab line");
  std::getline(in, line);
  std::vector<std::string> tokens(n);
  for (auto& t : tokens) {
    if (!std::getline(in, t)) throw ModelError("checkpoint: truncated vocabulary");
  }
  Vocab vocab(std::move(tokens));
  if (vocab.hash() != hash) throw ModelError("checkpoint: vocabulary hash mismatch");
  std::size_t count = 0;
  if (!(in >> word) || word != "params" || !(in >> count)) {
    throw ModelError("checkpoint: malformed params line");
  }
  std::getline(in, line);
  std::vector<double> params(count);
  for (auto& v : params) {
    if (!std::getline(in, line)) throw ModelError("checkpoint: truncated parameters");
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size()) {
      throw ModelError("checkpoint: malformed parameter value " + line);
    }
  }
  return TinyModel(d, std::move(vocab), std::move(params));
}

void save_checkpoint(const TinyModel& m, const std::string& path, const std::string& meta) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  save_checkpoint(m, out, meta);
}

TinyModel load_checkpoint_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_checkpoint(in);
}

void write_log_csv(std::span<const CheckpointRecord> log, std::ostream& out) {
  out << "step,train_loss,dev_metric,dev_loss\n";
  char buf[64];
  auto put = [&](double v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, end - buf);
  };
  for (const auto& r : log) {
    out << r.step << ',';
    put(r.train_loss);
    out << ',';
    put(r.dev_metric);
    out << ',';
    put(r.dev_loss);
    out << '\n';
  }
}

}  // namespace minimodel
}  // namespace jasskit
