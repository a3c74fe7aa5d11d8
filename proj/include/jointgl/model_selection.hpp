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

// Prior-sharpness selection by the extended BIC.

#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "jointgl/admm.hpp"
#include "jointgl/core.hpp"
#include "jointgl/gaussianize.hpp"
#include "jointgl/priors.hpp"

namespace jointgl {

/// Distinct upper-triangle edges of T + S_c, summed over classes.
inline std::size_t total_edges(const JointModel& model, double edge_tol) {
  std::size_t edges = 0;
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    edges += count_edges(model.theta_sum(c), edge_tol);
  }
  return edges;
}

/// sum_c n_c [tr(Sigma_c Theta_c) - logdet Theta_c] + |E| log N + 4 gamma |E| log p
///
/// Theta_c is the positive definite estimate (theta_hat); |E| counts the
/// support of T + S_c; N is the pooled sample count.
inline double ebic_score(const JointModel& model, const std::vector<ClassCovariance>& covs,
                         double gamma_ebic, double edge_tol = 1e-6) {
  detail::require(covs.size() == model.num_classes(), ErrorCode::dimension_mismatch,
                  "ebic_score: one covariance per class required");
  double fit = 0.0;
  double n_total = 0.0;
  for (std::size_t c = 0; c < covs.size(); ++c) {
    const Matrix& theta = model.theta_hat[c];
    const double n_c = static_cast<double>(covs[c].n_c);
    fit += n_c * ((covs[c].sigma_hat.cwiseProduct(theta)).sum() - logdet_spd(theta));
    n_total += n_c;
  }
  const auto edges = static_cast<double>(total_edges(model, edge_tol));
  const auto p = static_cast<double>(model.p());
  return fit + edges * std::log(n_total) + 4.0 * gamma_ebic * edges * std::log(p);
}

struct SelectionContext {
  std::vector<ClassCovariance> covs;
  std::vector<PriorMatrix> priors;  // one per class
  SolverConfig solver;
  double gamma_ebic = 0.5;
  double edge_tol = 1e-6;
  int threads = 1;
};

struct KScore {
  double k = 0.0;
  double ebic = 0.0;
  std::size_t edges = 0;
  bool converged = false;
  bool skipped = false;
};

struct KSelection {
  double k_star = 0.0;
  std::vector<AdaptiveWeightMatrix> weights;
  JointModel model;
  std::vector<KScore> scores;
  std::vector<std::string> warnings;
};

/// Fits the joint model once per candidate k (cold start each time) and keeps
/// the eBIC minimizer. Ties go to the smallest k. Candidates whose fit fails
/// or does not converge are skipped with a warning.
inline KSelection select_k(std::vector<double> candidates, const SelectionContext& ctx) {
  detail::require(!candidates.empty(), ErrorCode::invalid_argument, "select_k: no candidates");
  for (double k : candidates) {
    detail::require(k >= 0.0 && std::isfinite(k), ErrorCode::invalid_argument,
                    "select_k: candidates must be finite and nonnegative");
  }
  detail::require(ctx.priors.size() == ctx.covs.size(), ErrorCode::dimension_mismatch,
                  "select_k: one prior per class required");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  struct Attempt {
    std::vector<AdaptiveWeightMatrix> weights;
    std::optional<JointModel> model;
    std::string error;
  };
  auto run = [&ctx](double k) {
    Attempt a;
    for (const auto& prior : ctx.priors) a.weights.push_back(adaptive_weights(prior, k));
    try {
      a.model = fit_joint(ctx.covs, a.weights, ctx.solver);
    } catch (const Error& e) {
      a.error = e.what();
    }
    return a;
  };

  std::vector<Attempt> attempts(candidates.size());
  const std::size_t threads = static_cast<std::size_t>(std::max(1, ctx.threads));
  for (std::size_t begin = 0; begin < candidates.size(); begin += threads) {
    const std::size_t end = std::min(candidates.size(), begin + threads);
    if (end - begin == 1) {
      attempts[begin] = run(candidates[begin]);
      continue;
    }
    std::vector<std::future<Attempt>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, run, candidates[i]));
    }
    for (std::size_t i = begin; i < end; ++i) attempts[i] = batch[i - begin].get();
  }

  KSelection out;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    KScore score;
    score.k = candidates[i];
    Attempt& a = attempts[i];
    if (!a.model) {
      score.skipped = true;
      out.warnings.push_back("k=" + std::to_string(candidates[i]) + " skipped: " + a.error);
      out.scores.push_back(score);
      continue;
    }
    score.converged = a.model->converged;
    score.edges = total_edges(*a.model, ctx.edge_tol);
    score.ebic = ebic_score(*a.model, ctx.covs, ctx.gamma_ebic, ctx.edge_tol);
    if (!score.converged) {
      score.skipped = true;
      out.warnings.push_back("k=" + std::to_string(candidates[i]) +
                             " skipped: fit did not converge");
    } else if (!best || score.ebic < out.scores[*best].ebic) {
      best = i;
    }
    out.scores.push_back(score);
  }
  if (!best) {
    throw Error(ErrorCode::not_converged, "select_k: no candidate k produced a converged fit");
  }
  out.k_star = candidates[*best];
  out.weights = std::move(attempts[*best].weights);
  out.model = std::move(*attempts[*best].model);
  return out;
}

}  // namespace jointgl
