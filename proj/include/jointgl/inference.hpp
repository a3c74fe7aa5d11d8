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

// Downstream use of fitted precision matrices: Gaussian generative
// classification and sign-partitioned message passing over node features.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "jointgl/admm.hpp"
#include "jointgl/core.hpp"
#include "jointgl/gaussianize.hpp"

namespace jointgl {

struct ClassifierScores {
  Vector scores;
  std::size_t predicted = 0;  // zero-based class index
};

struct ClassifierOptions {
  /// Adds log(n_c / N) to each score. Off by default (uniform class prior).
  bool class_prior = false;
};

/// Index of the maximum; ties go to the smallest index.
inline std::size_t argmax_first(const Vector& v) {
  std::size_t best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(static_cast<Index>(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

/// Precomputes Cholesky factors and log-determinants of every theta_hat so a
/// batch of samples is scored without refactorizing.
class GaussianClassifier {
 public:
  explicit GaussianClassifier(const JointModel& model, ClassifierOptions opts = {})
      : opts_(opts) {
    detail::require(model.num_classes() >= 1, ErrorCode::invalid_argument,
                    "classify: model has no classes");
    double n_total = 0.0;
    for (Index n : model.n_c) n_total += static_cast<double>(n);
    for (std::size_t c = 0; c < model.num_classes(); ++c) {
      Class cls;
      cls.theta = model.theta_hat[c];
      cls.mu = c < model.mu_hat.size() ? model.mu_hat[c] : Vector::Zero(cls.theta.rows());
      cls.half_logdet = 0.5 * logdet_spd(cls.theta);
      if (opts_.class_prior && n_total > 0.0 && c < model.n_c.size()) {
        cls.log_prior = std::log(static_cast<double>(model.n_c[c]) / n_total);
      }
      classes_.push_back(std::move(cls));
    }
    p_ = model.theta_hat.front().rows();
  }

  ClassifierScores operator()(const Vector& z_tilde) const {
    detail::require(z_tilde.size() == p_, ErrorCode::dimension_mismatch,
                    "classify: sample has " + std::to_string(z_tilde.size()) +
                        " entries, model expects " + std::to_string(p_));
    ClassifierScores out;
    out.scores.resize(static_cast<Index>(classes_.size()));
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const Vector d = z_tilde - classes_[c].mu;
      out.scores(static_cast<Index>(c)) =
          classes_[c].half_logdet - 0.5 * d.dot(classes_[c].theta * d) + classes_[c].log_prior;
    }
    out.predicted = argmax_first(out.scores);
    return out;
  }

  Index p() const { return p_; }

 private:
  struct Class {
    Matrix theta;
    Vector mu;
    double half_logdet = 0.0;
    double log_prior = 0.0;
  };
  std::vector<Class> classes_;
  ClassifierOptions opts_;
  Index p_ = 0;
};

/// s(c | z) = 1/2 logdet Theta_c - 1/2 (z - mu_c)^T Theta_c (z - mu_c).
inline ClassifierScores classify(const Vector& z_tilde, const JointModel& model,
                                 ClassifierOptions opts = {}) {
  return GaussianClassifier(model, opts)(z_tilde);
}

// ---------------------------------------------------------------------------

/// Exact GELU, x * Phi(x).
inline double gelu(double x) { return x * normal_cdf(x); }

struct NodeFeatures {
  Matrix features;  // p x d
};

struct MessagePassingWeights {
  Matrix w_pos;  // d x d'
  Matrix w_neg;  // d x d'
  double epsilon = 1e-8;
  /// Off-diagonal entries with |theta_ij| <= edge_tol belong to neither branch.
  double edge_tol = 0.0;

  static MessagePassingWeights identity(Index d) {
    return {Matrix::Identity(d, d), Matrix::Identity(d, d)};
  }
};

/// Row-normalized positive and negative neighbour weights of theta.
/// alpha_pos(i, j) = |theta_ij| / (sum_{k: theta_ik > 0} |theta_ik| + eps) for
/// theta_ij > 0 and 0 otherwise; alpha_neg likewise for theta_ij < 0.
/// The diagonal never belongs to either set.
struct SignedAdjacency {
  Matrix alpha_pos;
  Matrix alpha_neg;
};

inline SignedAdjacency signed_adjacency(const Matrix& theta, double epsilon, double edge_tol = 0.0) {
  const Index p = theta.rows();
  SignedAdjacency adj{Matrix::Zero(p, p), Matrix::Zero(p, p)};
  for (Index i = 0; i < p; ++i) {
    double pos_sum = 0.0;
    double neg_sum = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (j == i || std::abs(theta(i, j)) <= edge_tol) continue;
      if (theta(i, j) > 0.0) pos_sum += theta(i, j);
      else if (theta(i, j) < 0.0) neg_sum -= theta(i, j);
    }
    for (Index j = 0; j < p; ++j) {
      if (j == i || std::abs(theta(i, j)) <= edge_tol) continue;
      if (theta(i, j) > 0.0) adj.alpha_pos(i, j) = theta(i, j) / (pos_sum + epsilon);
      else if (theta(i, j) < 0.0) adj.alpha_neg(i, j) = -theta(i, j) / (neg_sum + epsilon);
    }
  }
  return adj;
}

/// H = GELU(A+ Z W_pos + A- Z W_neg), one output row per node.
inline Matrix signed_message_passing(const Matrix& theta, const NodeFeatures& nodes,
                                     const MessagePassingWeights& weights) {
  const Index p = theta.rows();
  detail::require(theta.cols() == p, ErrorCode::dimension_mismatch,
                  "message passing: theta must be square");
  detail::require(nodes.features.rows() == p, ErrorCode::dimension_mismatch,
                  "message passing: node features have " + std::to_string(nodes.features.rows()) +
                      " rows, theta has " + std::to_string(p));
  detail::require(nodes.features.allFinite(), ErrorCode::non_finite,
                  "message passing: non-finite node features");
  const Index d = nodes.features.cols();
  detail::require(weights.w_pos.rows() == d && weights.w_neg.rows() == d &&
                      weights.w_pos.cols() == weights.w_neg.cols(),
                  ErrorCode::dimension_mismatch, "message passing: weight shapes disagree");
  detail::require(weights.epsilon > 0.0, ErrorCode::invalid_argument,
                  "message passing: epsilon must be positive");

  const SignedAdjacency adj = signed_adjacency(theta, weights.epsilon, weights.edge_tol);
  Matrix pre = adj.alpha_pos * (nodes.features * weights.w_pos) +
               adj.alpha_neg * (nodes.features * weights.w_neg);
  return pre.unaryExpr([](double x) { return gelu(x); });
}

/// -theta_ij / sqrt(theta_ii theta_jj), unit diagonal.
inline Matrix partial_correlation(const Matrix& theta) {
  const Index p = theta.rows();
  detail::require(theta.cols() == p, ErrorCode::dimension_mismatch,
                  "partial_correlation: theta must be square");
  for (Index i = 0; i < p; ++i) {
    detail::require(theta(i, i) > 0.0, ErrorCode::invalid_argument,
                    "partial_correlation: diagonal entry " + std::to_string(i) + " is not positive");
  }
  Matrix rho(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      rho(i, j) = i == j ? 1.0 : -theta(i, j) / std::sqrt(theta(i, i) * theta(j, j));
    }
  }
  symmetrize(rho);
  return rho;
}

/// Average Gaussian negative log-likelihood per sample implied by a second
/// moment matrix: 1/2 [tr(Sigma Theta) - logdet Theta + p log(2 pi)].
inline double average_nll(const Matrix& sigma_hat, const Matrix& theta) {
  const auto p = static_cast<double>(theta.rows());
  return 0.5 * ((sigma_hat.cwiseProduct(theta)).sum() - logdet_spd(theta) +
                p * std::log(2.0 * std::numbers::pi));
}

}  // namespace jointgl
