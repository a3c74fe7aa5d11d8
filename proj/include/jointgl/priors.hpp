/*
 * Copyright 2026 The jointgl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Structural priors from attention footprints.
//
// A node's footprint is its row of a p x N_p attention matrix. Nodes whose
// footprints overlap get a cosine prior close to 1, and the prior is turned
// into per-entry penalty multipliers through a centered sigmoid whose slope k
// sets how strongly the prior is trusted. k = 0 gives a flat 0.5 everywhere.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "jointgl/core.hpp"

namespace jointgl {

enum class Modality { source, target };

struct AttentionStack {
  std::vector<Matrix> matrices;  // each p x N_p, rows sum to one
  int class_id = 1;
  Modality modality = Modality::source;

  Index p() const { return matrices.empty() ? 0 : matrices.front().rows(); }
  Index n_patches() const { return matrices.empty() ? 0 : matrices.front().cols(); }
};

struct PriorMatrix {
  Matrix w;  // p x p cosine similarities
  int class_id = 1;
};

struct AdaptiveWeightMatrix {
  Matrix w_tilde;  // p x p, entries in (0, 1)
  double k = 0.0;
};

/// Checks shape agreement and row-stochasticity (within row_tol).
inline void validate(const AttentionStack& stack, double row_tol = 1e-6) {
  detail::require(!stack.matrices.empty(), ErrorCode::invalid_argument, "attention stack is empty");
  const Index p = stack.p();
  const Index np = stack.n_patches();
  for (std::size_t s = 0; s < stack.matrices.size(); ++s) {
    const Matrix& a = stack.matrices[s];
    detail::require(a.rows() == p && a.cols() == np, ErrorCode::dimension_mismatch,
                    "attention matrix " + std::to_string(s) + " has shape " +
                        std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ", expected " +
                        std::to_string(p) + "x" + std::to_string(np));
    detail::require(a.allFinite(), ErrorCode::non_finite,
                    "attention matrix " + std::to_string(s) + " has non-finite entries");
    detail::require((a.array() >= 0.0).all(), ErrorCode::invalid_argument,
                    "attention matrix " + std::to_string(s) + " has negative entries");
    for (Index i = 0; i < p; ++i) {
      const double row_sum = a.row(i).sum();
      detail::require(std::abs(row_sum - 1.0) <= row_tol, ErrorCode::invalid_argument,
                      "attention matrix " + std::to_string(s) + " row " + std::to_string(i) +
                          " sums to " + std::to_string(row_sum));
    }
  }
}

/// Element-wise mean over the stack.
inline Matrix aggregate_attention(const AttentionStack& stack) {
  detail::require(!stack.matrices.empty(), ErrorCode::invalid_argument,
                  "aggregate_attention: empty stack");
  const Index p = stack.p();
  const Index np = stack.n_patches();
  Matrix acc = Matrix::Zero(p, np);
  for (const Matrix& a : stack.matrices) {
    detail::require(a.rows() == p && a.cols() == np, ErrorCode::dimension_mismatch,
                    "aggregate_attention: matrices disagree in shape");
    acc += a;
  }
  return acc / static_cast<double>(stack.matrices.size());
}

/// Row l2-normalization followed by the Gram matrix of the normalized rows.
inline PriorMatrix attention_prior(const Matrix& aggregated, int class_id = 1) {
  Matrix normed = aggregated;
  for (Index i = 0; i < normed.rows(); ++i) {
    const double norm = normed.row(i).norm();
    detail::require(norm > 0.0, ErrorCode::invalid_argument,
                    "attention_prior: row " + std::to_string(i) + " has zero norm");
    normed.row(i) /= norm;
  }
  PriorMatrix prior;
  prior.class_id = class_id;
  prior.w = normed * normed.transpose();
  symmetrize(prior.w);
  prior.w.diagonal().setOnes();
  return prior;
}

inline PriorMatrix attention_prior(const AttentionStack& stack) {
  return attention_prior(aggregate_attention(stack), stack.class_id);
}

/// w_ij = 1 - sigmoid(k (W_ij - 0.5)), applied to every entry.
inline double adaptive_weight(double prior_entry, double k) {
  return 1.0 - 1.0 / (1.0 + std::exp(-k * (prior_entry - 0.5)));
}

inline AdaptiveWeightMatrix adaptive_weights(const PriorMatrix& prior, double k) {
  detail::require(k >= 0.0 && std::isfinite(k), ErrorCode::invalid_argument,
                  "adaptive_weights: k must be finite and nonnegative");
  AdaptiveWeightMatrix out;
  out.k = k;
  out.w_tilde = prior.w.unaryExpr([k](double v) { return adaptive_weight(v, k); });
  return out;
}

/// Flat multipliers, identical to adaptive_weights(prior, 0) for any prior.
inline AdaptiveWeightMatrix uniform_weights(Index p, double value = 0.5) {
  return AdaptiveWeightMatrix{Matrix::Constant(p, p, value), 0.0};
}

/// W = 0.5 everywhere, diagonal included, so every k maps it to uniform 0.5
/// weights. Not a cosine prior (its diagonal is not 1); used as the
/// uninformative control in model-selection experiments.
inline PriorMatrix constant_prior(Index p, int class_id = 1) {
  PriorMatrix prior;
  prior.class_id = class_id;
  prior.w = Matrix::Constant(p, p, 0.5);
  return prior;
}

}  // namespace jointgl
