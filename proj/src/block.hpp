// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "params.hpp"
#include "tensor.hpp"

namespace vsrlm {

// Pre-norm transformer block shared by the visual frontend (bidirectional)
// and the decoder LM (causal, optionally with low-rank adapters on the
// query/value projections). Forward fills a cache with everything backward
// needs; backward returns the gradient with respect to the block input and
// offers parameter gradients to the GradMap.

template <class S>
struct LnCache {
  Mat<S> xhat;     // normalized input
  Vec<S> inv_std;  // per-row 1/sqrt(var + eps)
};

template <class S>
struct BlockCache {
  Mat<S> x;  // block input
  LnCache<S> ln1;
  Mat<S> a;  // ln1 output
  Mat<S> q, k, v;
  std::vector<Mat<S>> probs;  // per-head attention rows
  Mat<S> concat;              // attention output before the out projection
  Mat<S> x1;                  // after the attention residual
  LnCache<S> ln2;
  Mat<S> b;   // ln2 output
  Mat<S> h1;  // pre-activation
  Mat<S> g;   // activation output
  Mat<S> wq_eff, wv_eff;  // effective projections when adapters are active
};

constexpr double kLayerNormEps = 1e-5;

template <class S>
Mat<S> layer_norm_forward(const Mat<S>& x, const Mat<S>& gamma, const Mat<S>& beta,
                          LnCache<S>* cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Mat<S> y(n, d);
  if (cache) {
    cache->xhat.resize(n, d);
    cache->inv_std.resize(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    S mean = x.row(i).mean();
    S var = (x.row(i).array() - mean).square().mean();
    S inv = S(1) / std::sqrt(var + S(kLayerNormEps));
    auto xhat = ((x.row(i).array() - mean) * inv).matrix();
    y.row(i) = xhat.cwiseProduct(gamma.row(0)) + beta.row(0);
    if (cache) {
      cache->xhat.row(i) = xhat;
      cache->inv_std(i) = inv;
    }
  }
  return y;
}

// Returns dL/dx and accumulates gamma/beta gradients.
template <class S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const LnCache<S>& cache, const Mat<S>& gamma,
                           const std::string& prefix, GradMap<S>& grads) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  grads.add(prefix + ".g", (dy.cwiseProduct(cache.xhat)).colwise().sum());
  grads.add(prefix + ".b", dy.colwise().sum());

  Mat<S> dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto dxhat = dy.row(i).cwiseProduct(gamma.row(0));
    S m1 = dxhat.mean();
    S m2 = dxhat.cwiseProduct(cache.xhat.row(i)).mean();
    dx.row(i) =
        cache.inv_std(i) * (dxhat.array() - m1 - cache.xhat.row(i).array() * m2).matrix();
  }
  return dx;
}

// Effective projection with an optional low-rank update W + scale * A * B.
template <class S>
Mat<S> effective_weight(const ParamStore<S>& params, const std::string& base_name,
                        const std::string& adapter_prefix, S adapter_scale) {
  const Mat<S>& w = params.at(base_name);
  if (adapter_prefix.empty()) return w;
  return w + adapter_scale * (params.at(adapter_prefix + ".a") * params.at(adapter_prefix + ".b"));
}

struct BlockSpec {
  std::string prefix;           // parameter prefix, e.g. "lm.layer00"
  int n_heads = 1;
  bool causal = false;
  std::string adapter_q;        // adapter prefix or empty
  std::string adapter_v;
  double adapter_scale = 0.0;   // alpha / rank
};

template <class S>
Mat<S> block_forward(const Mat<S>& x, const ParamStore<S>& params, const BlockSpec& spec,
                     BlockCache<S>* cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  const int heads = spec.n_heads;
  const Eigen::Index dh = d / heads;
  const std::string& p = spec.prefix;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  const S ascale = static_cast<S>(spec.adapter_scale);

  BlockCache<S> local;
  BlockCache<S>& c = cache ? *cache : local;
  c.x = x;

  c.a = layer_norm_forward<S>(x, params.at(p + ".ln1.g"), params.at(p + ".ln1.b"), &c.ln1);
  c.wq_eff = effective_weight<S>(params, p + ".attn.wq", spec.adapter_q, ascale);
  c.wv_eff = effective_weight<S>(params, p + ".attn.wv", spec.adapter_v, ascale);
  c.q = c.a * c.wq_eff;
  c.q.rowwise() += params.at(p + ".attn.bq").row(0);
  c.k = c.a * params.at(p + ".attn.wk");
  c.k.rowwise() += params.at(p + ".attn.bk").row(0);
  c.v = c.a * c.wv_eff;
  c.v.rowwise() += params.at(p + ".attn.bv").row(0);

  c.probs.assign(heads, Mat<S>());
  c.concat.resize(n, d);
  for (int h = 0; h < heads; ++h) {
    auto qh = c.q.middleCols(h * dh, dh);
    auto kh = c.k.middleCols(h * dh, dh);
    auto vh = c.v.middleCols(h * dh, dh);
    Mat<S> scores = (qh * kh.transpose()) * scale;
    if (spec.causal) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
          scores(i, j) = -std::numeric_limits<S>::infinity();
        }
      }
    }
    softmax_rows_inplace(scores);
    c.probs[h] = scores;
    c.concat.middleCols(h * dh, dh) = c.probs[h] * vh;
  }

  Mat<S> attn_out = c.concat * params.at(p + ".attn.wo");
  attn_out.rowwise() += params.at(p + ".attn.bo").row(0);
  c.x1 = x + attn_out;

  c.b = layer_norm_forward<S>(c.x1, params.at(p + ".ln2.g"), params.at(p + ".ln2.b"), &c.ln2);
  c.h1 = c.b * params.at(p + ".ff.w1");
  c.h1.rowwise() += params.at(p + ".ff.b1").row(0);
  c.g = c.h1.unaryExpr([](S t) { return static_cast<S>(gelu(static_cast<double>(t))); });
  Mat<S> f = c.g * params.at(p + ".ff.w2");
  f.rowwise() += params.at(p + ".ff.b2").row(0);
  return c.x1 + f;
}

template <class S>
Mat<S> block_backward(const Mat<S>& dy, const BlockCache<S>& c, const ParamStore<S>& params,
                      const BlockSpec& spec, GradMap<S>& grads) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  const int heads = spec.n_heads;
  const Eigen::Index dh = d / heads;
  const std::string& p = spec.prefix;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  const S ascale = static_cast<S>(spec.adapter_scale);

  // y = x1 + ffn(ln2(x1))
  const Mat<S>& df = dy;
  grads.add(p + ".ff.w2", c.g.transpose() * df);
  grads.add(p + ".ff.b2", df.colwise().sum());
  Mat<S> dg = df * params.at(p + ".ff.w2").transpose();
  Mat<S> dh1 = dg.cwiseProduct(c.h1.unaryExpr(
      [](S t) { return static_cast<S>(gelu_grad(static_cast<double>(t))); }));
  grads.add(p + ".ff.w1", c.b.transpose() * dh1);
  grads.add(p + ".ff.b1", dh1.colwise().sum());
  Mat<S> db = dh1 * params.at(p + ".ff.w1").transpose();
  Mat<S> dx1 = dy + layer_norm_backward<S>(db, c.ln2, params.at(p + ".ln2.g"), p + ".ln2", grads);

  // x1 = x + attn(ln1(x))
  const Mat<S>& dattn = dx1;
  grads.add(p + ".attn.wo", c.concat.transpose() * dattn);
  grads.add(p + ".attn.bo", dattn.colwise().sum());
  Mat<S> dconcat = dattn * params.at(p + ".attn.wo").transpose();

  Mat<S> dq(n, d), dk(n, d), dv(n, d);
  for (int h = 0; h < heads; ++h) {
    auto doh = dconcat.middleCols(h * dh, dh);
    auto vh = c.v.middleCols(h * dh, dh);
    auto qh = c.q.middleCols(h * dh, dh);
    auto kh = c.k.middleCols(h * dh, dh);
    const Mat<S>& probs = c.probs[h];

    Mat<S> dprobs = doh * vh.transpose();
    dv.middleCols(h * dh, dh) = probs.transpose() * doh;

    // softmax backward; masked entries carry zero probability.
    Mat<S> dscores(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      S dot = dprobs.row(i).cwiseProduct(probs.row(i)).sum();
      dscores.row(i) = probs.row(i).cwiseProduct(dprobs.row(i).array() - dot);
    }
    dq.middleCols(h * dh, dh) = (dscores * kh) * scale;
    dk.middleCols(h * dh, dh) = (dscores.transpose() * qh) * scale;
  }

  bool need_wq = grads.accepts(p + ".attn.wq") ||
                 (!spec.adapter_q.empty() && grads.accepts(spec.adapter_q + ".a"));
  bool need_wv = grads.accepts(p + ".attn.wv") ||
                 (!spec.adapter_v.empty() && grads.accepts(spec.adapter_v + ".a"));
  if (need_wq) {
    Mat<S> dwq = c.a.transpose() * dq;
    grads.add(p + ".attn.wq", dwq);
    if (!spec.adapter_q.empty()) {
      grads.add(spec.adapter_q + ".a", ascale * (dwq * params.at(spec.adapter_q + ".b").transpose()));
      grads.add(spec.adapter_q + ".b", ascale * (params.at(spec.adapter_q + ".a").transpose() * dwq));
    }
  }
  if (need_wv) {
    Mat<S> dwv = c.a.transpose() * dv;
    grads.add(p + ".attn.wv", dwv);
    if (!spec.adapter_v.empty()) {
      grads.add(spec.adapter_v + ".a", ascale * (dwv * params.at(spec.adapter_v + ".b").transpose()));
      grads.add(spec.adapter_v + ".b", ascale * (params.at(spec.adapter_v + ".a").transpose() * dwv));
    }
  }
  grads.add(p + ".attn.wk", c.a.transpose() * dk);
  grads.add(p + ".attn.bq", dq.colwise().sum());
  grads.add(p + ".attn.bk", dk.colwise().sum());
  grads.add(p + ".attn.bv", dv.colwise().sum());

  Mat<S> da = dq * c.wq_eff.transpose() + dk * params.at(p + ".attn.wk").transpose() +
              dv * c.wv_eff.transpose();
  return dx1 + layer_norm_backward<S>(da, c.ln1, params.at(p + ".ln1.g"), p + ".ln1", grads);
}

// Incremental attention state for one block: cached key/value rows.
template <class S>
struct BlockState {
  Mat<S> k, v;  // length x d
};

// Processes one new row given the cached keys/values of all previous rows.
// Appends this row's key/value to the state.
template <class S>
RowVec<S> block_step(const RowVec<S>& x, const ParamStore<S>& params, const BlockSpec& spec,
                     BlockState<S>& state) {
  const Eigen::Index d = x.cols();
  const int heads = spec.n_heads;
  const Eigen::Index dh = d / heads;
  const std::string& p = spec.prefix;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  const S ascale = static_cast<S>(spec.adapter_scale);

  Mat<S> xm = x;
  LnCache<S> ln;
  Mat<S> a = layer_norm_forward<S>(xm, params.at(p + ".ln1.g"), params.at(p + ".ln1.b"), &ln);

  Mat<S> wq = effective_weight<S>(params, p + ".attn.wq", spec.adapter_q, ascale);
  Mat<S> wv = effective_weight<S>(params, p + ".attn.wv", spec.adapter_v, ascale);
  RowVec<S> q = (a * wq).row(0) + params.at(p + ".attn.bq").row(0);
  RowVec<S> k = (a * params.at(p + ".attn.wk")).row(0) + params.at(p + ".attn.bk").row(0);
  RowVec<S> v = (a * wv).row(0) + params.at(p + ".attn.bv").row(0);

  Eigen::Index len = state.k.rows();
  state.k.conservativeResize(len + 1, d);
  state.v.conservativeResize(len + 1, d);
  state.k.row(len) = k;
  state.v.row(len) = v;

  RowVec<S> concat(d);
  for (int h = 0; h < heads; ++h) {
    auto kh = state.k.middleCols(h * dh, dh);
    auto vh = state.v.middleCols(h * dh, dh);
    RowVec<S> scores = (q.middleCols(h * dh, dh) * kh.transpose()) * scale;
    S mx = scores.maxCoeff();
    RowVec<S> probs = (scores.array() - mx).exp();
    probs /= probs.sum();
    concat.middleCols(h * dh, dh) = probs * vh;
  }
  RowVec<S> attn_out = concat * params.at(p + ".attn.wo") + params.at(p + ".attn.bo").row(0);
  RowVec<S> x1 = x + attn_out;

  Mat<S> x1m = x1;
  Mat<S> b = layer_norm_forward<S>(x1m, params.at(p + ".ln2.g"), params.at(p + ".ln2.b"), &ln);
  RowVec<S> h1 = (b * params.at(p + ".ff.w1")).row(0) + params.at(p + ".ff.b1").row(0);
  RowVec<S> g = h1.unaryExpr([](S t) { return static_cast<S>(gelu(static_cast<double>(t))); });
  RowVec<S> f = g * params.at(p + ".ff.w2") + params.at(p + ".ff.b2").row(0);
  return x1 + f;
}

// Adds the parameters of one block (zero-initialized; callers run init).
template <class S>
void add_block_params(ParamStore<S>& params, const std::string& prefix, int d, int d_ff) {
  params.add(prefix + ".ln1.g", 1, d);
  params.add(prefix + ".ln1.b", 1, d);
  params.add(prefix + ".attn.wq", d, d);
  params.add(prefix + ".attn.bq", 1, d);
  params.add(prefix + ".attn.wk", d, d);
  params.add(prefix + ".attn.bk", 1, d);
  params.add(prefix + ".attn.wv", d, d);
  params.add(prefix + ".attn.bv", 1, d);
  params.add(prefix + ".attn.wo", d, d);
  params.add(prefix + ".attn.bo", 1, d);
  params.add(prefix + ".ln2.g", 1, d);
  params.add(prefix + ".ln2.b", 1, d);
  params.add(prefix + ".ff.w1", d, d_ff);
  params.add(prefix + ".ff.b1", 1, d_ff);
  params.add(prefix + ".ff.w2", d_ff, d);
  params.add(prefix + ".ff.b2", 1, d);
}

// Gaussian weights, zero biases, unit layer-norm gains.
template <class S>
void init_block_params(ParamStore<S>& params, const std::string& prefix, uint64_t seed) {
  const char* weights[] = {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo", ".ff.w1", ".ff.w2"};
  for (const char* w : weights) params.init_gaussian(prefix + w, 0.02, seed);
  params.fill(prefix + ".ln1.g", S(1));
  params.fill(prefix + ".ln2.g", S(1));
}

}  // namespace vsrlm
