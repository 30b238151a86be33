// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace vsrlm {

// Named parameter matrices. Iteration order is the lexicographic name order,
// which keeps initialization, updates and serialization deterministic.
template <class S>
class ParamStore {
 public:
  Mat<S>& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    auto [it, inserted] = params_.emplace(name, Mat<S>::Zero(rows, cols));
    if (!inserted) throw std::invalid_argument("duplicate parameter: " + name);
    return it->second;
  }

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  Mat<S>& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }
  const Mat<S>& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }

  const std::map<std::string, Mat<S>>& entries() const { return params_; }
  std::map<std::string, Mat<S>>& entries() { return params_; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [k, _] : params_) out.push_back(k);
    return out;
  }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& [_, m] : params_) n += static_cast<size_t>(m.size());
    return n;
  }

  // Gaussian init with per-parameter derived streams: independent of the
  // order parameters were added in.
  void init_gaussian(const std::string& name, double std_dev, uint64_t seed) {
    Mat<S>& m = at(name);
    Rng rng(mix_seed(seed, fnv_name(name)));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        m(r, c) = static_cast<S>(std_dev * rng.normal());
      }
    }
  }

  void fill(const std::string& name, S value) { at(name).setConstant(value); }

  template <class T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    for (const auto& [k, m] : params_) {
      out.add(k, m.rows(), m.cols()) = m.template cast<T>();
    }
    return out;
  }

 private:
  static uint64_t fnv_name(const std::string& name) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::map<std::string, Mat<S>> params_;
};

// Gradient accumulator restricted to a set of name prefixes. Names outside
// the trainable set are ignored, so backward passes can offer every gradient
// without the caller paying for frozen ones.
template <class S>
class GradMap {
 public:
  GradMap() = default;
  explicit GradMap(std::vector<std::string> prefixes) : prefixes_(std::move(prefixes)) {}

  bool accepts(const std::string& name) const {
    if (prefixes_.empty()) return true;
    for (const auto& p : prefixes_) {
      if (name.size() >= p.size() && name.compare(0, p.size(), p) == 0) return true;
    }
    return false;
  }

  template <class Expr>
  void add(const std::string& name, const Expr& value) {
    if (!accepts(name)) return;
    auto it = grads_.find(name);
    if (it == grads_.end()) {
      grads_.emplace(name, value);
    } else {
      it->second += value;
    }
  }

  void add_scaled(const GradMap<S>& other, S scale) {
    for (const auto& [k, v] : other.grads_) add(k, (v * scale).eval());
  }

  const std::map<std::string, Mat<S>>& entries() const { return grads_; }
  bool empty() const { return grads_.empty(); }
  void clear() { grads_.clear(); }
  const std::vector<std::string>& prefixes() const { return prefixes_; }

 private:
  std::vector<std::string> prefixes_;
  std::map<std::string, Mat<S>> grads_;
};

// Checkpoint archive: flat map of parameter name -> shape + raw
// little-endian 32-bit floats, row-major.
template <class S>
void checkpoint_save(const std::string& path, const ParamStore<S>& store);
std::map<std::string, Eigen::MatrixXf> checkpoint_load(const std::string& path);

template <class S>
void checkpoint_apply(ParamStore<S>& store, const std::map<std::string, Eigen::MatrixXf>& data) {
  for (const auto& [name, m] : data) {
    Mat<S>& dst = store.at(name);
    if (dst.rows() != m.rows() || dst.cols() != m.cols()) {
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    }
    dst = m.cast<S>();
  }
}

extern template void checkpoint_save<float>(const std::string&, const ParamStore<float>&);
extern template void checkpoint_save<double>(const std::string&, const ParamStore<double>&);

}  // namespace vsrlm
