// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "block.hpp"
#include "params.hpp"
#include "tensor.hpp"

namespace vsrlm {

struct LMConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 128;
  int vocab_size = 0;
  int max_seq = 512;
  char preset = 'S';
};

// The three size presets for the scaling test. Parameter counts are strictly
// increasing S < M < L.
inline LMConfig build_preset(char size, int vocab_size) {
  LMConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.preset = size;
  switch (size) {
    case 'S': cfg.d_model = 64; cfg.n_layers = 2; cfg.n_heads = 4; break;
    case 'M': cfg.d_model = 128; cfg.n_layers = 4; cfg.n_heads = 8; break;
    case 'L': cfg.d_model = 256; cfg.n_layers = 6; cfg.n_heads = 8; break;
    default: throw std::invalid_argument(std::string("unknown preset: ") + size);
  }
  cfg.d_ff = 2 * cfg.d_model;
  if (vocab_size < 1) throw std::invalid_argument("build_preset: vocab_size must be >= 1");
  return cfg;
}

struct AdapterConfig {
  bool enabled = true;
  int rank = 4;
  double alpha = 8.0;

  double scale() const { return alpha / rank; }
  void validate(int d_model) const {
    if (!enabled) return;
    if (rank < 1 || rank >= d_model) {
      throw std::invalid_argument("adapter rank must satisfy 1 <= r < d_model");
    }
  }
};

inline std::string layer_prefix(const std::string& base, int layer) {
  char buf[8];
  snprintf(buf, sizeof(buf), "%02d", layer);
  return base + ".layer" + buf;
}

template <class S>
void add_lm_params(ParamStore<S>& params, const LMConfig& cfg) {
  params.add("lm.embed", cfg.vocab_size, cfg.d_model);
  for (int l = 0; l < cfg.n_layers; ++l) {
    add_block_params(params, layer_prefix("lm", l), cfg.d_model, cfg.d_ff);
  }
  params.add("lm.final_ln.g", 1, cfg.d_model);
  params.add("lm.final_ln.b", 1, cfg.d_model);
  params.add("lm.head.w", cfg.d_model, cfg.vocab_size);
  params.add("lm.head.b", 1, cfg.vocab_size);
}

template <class S>
void init_lm_params(ParamStore<S>& params, const LMConfig& cfg, uint64_t seed) {
  params.init_gaussian("lm.embed", 0.02, seed);
  for (int l = 0; l < cfg.n_layers; ++l) init_block_params(params, layer_prefix("lm", l), seed);
  params.fill("lm.final_ln.g", S(1));
  params.init_gaussian("lm.head.w", 0.02, seed);
}

// Adapters target the attention query/value projections. B starts at zero so
// a fresh adapter leaves the base model bit-identical.
template <class S>
void add_adapter_params(ParamStore<S>& params, const LMConfig& cfg, const AdapterConfig& acfg,
                        uint64_t seed) {
  acfg.validate(cfg.d_model);
  if (!acfg.enabled) return;
  for (int l = 0; l < cfg.n_layers; ++l) {
    for (const char* slot : {"q", "v"}) {
      std::string prefix = layer_prefix("adapter", l) + "." + slot;
      params.add(prefix + ".a", cfg.d_model, acfg.rank);
      params.add(prefix + ".b", acfg.rank, cfg.d_model);
      params.init_gaussian(prefix + ".a", 0.02, seed);
    }
  }
}

// Parameter count by walking the shapes the config implies.
inline size_t lm_param_count(const LMConfig& cfg) {
  size_t d = cfg.d_model, f = cfg.d_ff, v = cfg.vocab_size;
  size_t per_block = 2 * d           // ln1
                     + 4 * (d * d + d)  // q k v o projections with biases
                     + 2 * d            // ln2
                     + (d * f + f) + (f * d + d);
  return v * d + cfg.n_layers * per_block + 2 * d + (d * v + v);
}

template <class S>
BlockSpec lm_block_spec(const LMConfig& cfg, const AdapterConfig& acfg, int layer,
                        bool use_adapters) {
  BlockSpec spec;
  spec.prefix = layer_prefix("lm", layer);
  spec.n_heads = cfg.n_heads;
  spec.causal = true;
  if (use_adapters && acfg.enabled) {
    spec.adapter_q = layer_prefix("adapter", layer) + ".q";
    spec.adapter_v = layer_prefix("adapter", layer) + ".v";
    spec.adapter_scale = acfg.scale();
  }
  return spec;
}

template <class S>
struct LMCache {
  std::vector<BlockCache<S>> blocks;
  LnCache<S> ln_f;
  Mat<S> hidden;  // after the final layer norm
};

// Runs the blocks and the final layer norm over already-embedded rows.
template <class S>
Mat<S> lm_apply(const Mat<S>& rows, const ParamStore<S>& params, const LMConfig& cfg,
                const AdapterConfig& acfg, bool use_adapters, LMCache<S>* cache) {
  if (rows.rows() > cfg.max_seq) {
    throw std::invalid_argument("lm: input length " + std::to_string(rows.rows()) +
                                " exceeds max_sequence_length " + std::to_string(cfg.max_seq));
  }
  if (rows.cols() != cfg.d_model) throw std::invalid_argument("lm: input width mismatch");
  if (cache) cache->blocks.resize(cfg.n_layers);
  Mat<S> x = rows;
  for (int l = 0; l < cfg.n_layers; ++l) {
    BlockSpec spec = lm_block_spec<S>(cfg, acfg, l, use_adapters);
    x = block_forward<S>(x, params, spec, cache ? &cache->blocks[l] : nullptr);
  }
  Mat<S> hidden = layer_norm_forward<S>(x, params.at("lm.final_ln.g"), params.at("lm.final_ln.b"),
                                        cache ? &cache->ln_f : nullptr);
  if (cache) cache->hidden = hidden;
  return hidden;
}

template <class S>
Mat<S> lm_head(const Mat<S>& hidden, const ParamStore<S>& params) {
  Mat<S> logits = hidden * params.at("lm.head.w");
  logits.rowwise() += params.at("lm.head.b").row(0);
  return logits;
}

// Full causal forward over embedded rows: logits for every position.
template <class S>
Mat<S> lm_forward(const Mat<S>& rows, const ParamStore<S>& params, const LMConfig& cfg,
                  const AdapterConfig& acfg = {}, bool use_adapters = false,
                  LMCache<S>* cache = nullptr) {
  return lm_head<S>(lm_apply<S>(rows, params, cfg, acfg, use_adapters, cache), params);
}

// Backward from a gradient on the post-final-norm hidden rows. Returns the
// gradient with respect to the input rows.
template <class S>
Mat<S> lm_backward_from_hidden(const Mat<S>& dhidden, const LMCache<S>& cache,
                               const ParamStore<S>& params, const LMConfig& cfg,
                               const AdapterConfig& acfg, bool use_adapters, GradMap<S>& grads) {
  Mat<S> dx =
      layer_norm_backward<S>(dhidden, cache.ln_f, params.at("lm.final_ln.g"), "lm.final_ln", grads);
  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    BlockSpec spec = lm_block_spec<S>(cfg, acfg, l, use_adapters);
    dx = block_backward<S>(dx, cache.blocks[l], params, spec, grads);
  }
  return dx;
}

// Incremental decoding state: per-layer cached keys/values.
template <class S>
struct LMState {
  std::vector<BlockState<S>> blocks;
  int length = 0;
  Eigen::VectorXd last_logits;  // next-token logits, double for scoring
};

template <class S>
LMState<S> lm_prefill(const Mat<S>& rows, const ParamStore<S>& params, const LMConfig& cfg,
                      const AdapterConfig& acfg, bool use_adapters) {
  LMCache<S> cache;
  Mat<S> hidden = lm_apply<S>(rows, params, cfg, acfg, use_adapters, &cache);
  LMState<S> state;
  state.blocks.resize(cfg.n_layers);
  for (int l = 0; l < cfg.n_layers; ++l) {
    state.blocks[l].k = cache.blocks[l].k;
    state.blocks[l].v = cache.blocks[l].v;
  }
  state.length = static_cast<int>(rows.rows());
  Mat<S> last = lm_head<S>(hidden.bottomRows(1), params);
  state.last_logits = last.row(0).transpose().template cast<double>();
  return state;
}

// Appends one embedded row; the state is modified in place.
template <class S>
void lm_step(LMState<S>& state, const RowVec<S>& row, const ParamStore<S>& params,
             const LMConfig& cfg, const AdapterConfig& acfg, bool use_adapters) {
  if (state.length + 1 > cfg.max_seq) {
    throw std::invalid_argument("lm: decode exceeded max_sequence_length");
  }
  RowVec<S> x = row;
  for (int l = 0; l < cfg.n_layers; ++l) {
    BlockSpec spec = lm_block_spec<S>(cfg, acfg, l, use_adapters);
    x = block_step<S>(x, params, spec, state.blocks[l]);
  }
  Mat<S> xm = x;
  LnCache<S> ln;
  Mat<S> hidden =
      layer_norm_forward<S>(xm, params.at("lm.final_ln.g"), params.at("lm.final_ln.b"), &ln);
  Mat<S> logits = lm_head<S>(hidden, params);
  state.last_logits = logits.row(0).transpose().template cast<double>();
  state.length += 1;
}

}  // namespace vsrlm
