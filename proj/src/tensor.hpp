// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <cmath>

namespace vsrlm {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

// Numerically stable row-wise softmax in place.
template <class S>
void softmax_rows_inplace(Mat<S>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    S mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    S sum = m.row(i).sum();
    m.row(i) /= sum;
  }
}

// log softmax of one logit row, computed in double regardless of the model
// scalar so scores and losses accumulate at full precision.
template <class Derived>
Eigen::VectorXd log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  Eigen::VectorXd x = logits.template cast<double>();
  double mx = x.maxCoeff();
  double lse = std::log((x.array() - mx).exp().sum()) + mx;
  return x.array() - lse;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

inline double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Fixed sinusoidal positional encoding for a segment-local index.
template <class S>
Vec<S> positional_encoding(int local_index, int d_model) {
  Vec<S> pe(d_model);
  for (int j = 0; j < d_model; j += 2) {
    double freq = std::pow(10000.0, -static_cast<double>(j) / d_model);
    double angle = local_index * freq;
    pe(j) = static_cast<S>(std::sin(angle));
    if (j + 1 < d_model) pe(j + 1) = static_cast<S>(std::cos(angle));
  }
  return pe;
}

}  // namespace vsrlm
