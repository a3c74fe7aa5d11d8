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

// Synthetic common/specific precision structures with known ground truth,
// and edge-recovery scoring against them.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "jointgl/admm.hpp"
#include "jointgl/core.hpp"
#include "jointgl/gaussianize.hpp"
#include "jointgl/glasso_reference.hpp"
#include "jointgl/inference.hpp"
#include "jointgl/model_selection.hpp"
#include "jointgl/priors.hpp"
#include "jointgl/random.hpp"

namespace jointgl {

struct ScenarioParams {
  Index p = 30;
  Index num_classes = 4;
  Index n_per_class = 200;
  double common_ratio = 0.4;
  double edge_density = 0.1;
  std::uint64_t seed = 7;
  double magnitude_lo = 0.2;
  double magnitude_hi = 0.6;
  double min_eigenvalue = 0.1;
};

struct SyntheticScenario {
  ScenarioParams params;
  Matrix theta_com_true;
  std::vector<Matrix> s_true;
  std::vector<Matrix> theta_true;
  std::vector<ObservationMatrix> samples;
  std::string generator = Rng::kAlgorithm;

  Index p() const { return params.p; }
  std::size_t num_classes() const { return theta_true.size(); }
};

namespace detail {

// Stream ids used inside a scenario seed. Keeping them fixed is what makes
// regeneration bit-identical.
inline constexpr std::uint64_t kStructureStream = 0;
inline constexpr std::uint64_t kTrainStreamBase = 100;
inline constexpr std::uint64_t kHeldOutStreamBase = 1000;
inline constexpr std::uint64_t kPriorStreamBase = 2000;

inline std::vector<std::pair<Index, Index>> upper_pairs(Index p) {
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

}  // namespace detail

/// n draws from N(0, Theta^{-1}) using the Cholesky factor of the covariance.
inline Matrix sample_gaussian(const Matrix& theta, Index n, Rng& rng) {
  const Index p = theta.rows();
  Matrix sigma = theta.inverse();
  symmetrize(sigma);
  Eigen::LLT<Matrix> llt(sigma);
  detail::require(llt.info() == Eigen::Success, ErrorCode::not_positive_definite,
                  "sample_gaussian: covariance is not positive definite");
  const Matrix l = llt.matrixL();
  Matrix eps(p, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) eps(j, i) = rng.normal();
  }
  return (l * eps).transpose();
}

/// Draws the supports, magnitudes and samples of one scenario.
///
/// With E = round(edge_density * p(p-1)/2) edges in total, round(ratio * E)
/// go to the common layer and the rest are split as evenly as possible over
/// the classes as specific edges. All layers are pairwise disjoint, so the
/// ground-truth common ratio is exactly common / E.
inline SyntheticScenario generate_scenario(const ScenarioParams& params) {
  const Index p = params.p;
  const Index num_classes = params.num_classes;
  detail::require(p >= 2, ErrorCode::infeasible, "generate_scenario: p must be at least 2");
  detail::require(num_classes >= 1, ErrorCode::infeasible, "generate_scenario: need at least one class");
  detail::require(params.n_per_class >= 2, ErrorCode::infeasible,
                  "generate_scenario: need at least 2 samples per class");
  detail::require(params.common_ratio >= 0.0 && params.common_ratio <= 1.0, ErrorCode::infeasible,
                  "generate_scenario: common_ratio must be in [0, 1]");
  detail::require(params.edge_density >= 0.0 && params.edge_density <= 1.0, ErrorCode::infeasible,
                  "generate_scenario: edge_density must be in [0, 1]");
  detail::require(params.magnitude_lo > 0.0 && params.magnitude_hi >= params.magnitude_lo,
                  ErrorCode::infeasible, "generate_scenario: invalid edge magnitude range");
  detail::require(params.min_eigenvalue > 0.0, ErrorCode::infeasible,
                  "generate_scenario: min_eigenvalue must be positive");

  auto pairs = detail::upper_pairs(p);
  const auto max_edges = static_cast<Index>(pairs.size());
  const auto total = static_cast<Index>(std::llround(params.edge_density * static_cast<double>(max_edges)));
  const auto n_common = static_cast<Index>(std::llround(params.common_ratio * static_cast<double>(total)));
  const Index n_specific = total - n_common;
  detail::require(total <= max_edges, ErrorCode::infeasible,
                  "generate_scenario: more edges requested than node pairs");

  Rng rng(params.seed, detail::kStructureStream);
  for (Index i = max_edges - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(pairs[static_cast<std::size_t>(i)], pairs[static_cast<std::size_t>(j)]);
  }
  auto draw_value = [&]() {
    const double m = rng.uniform(params.magnitude_lo, params.magnitude_hi);
    return rng.coin() ? m : -m;
  };

  SyntheticScenario sc;
  sc.params = params;
  sc.theta_com_true = Matrix::Zero(p, p);
  std::size_t next = 0;
  for (Index e = 0; e < n_common; ++e, ++next) {
    const auto [i, j] = pairs[next];
    const double v = draw_value();
    sc.theta_com_true(i, j) = v;
    sc.theta_com_true(j, i) = v;
  }
  for (Index c = 0; c < num_classes; ++c) {
    Matrix s = Matrix::Zero(p, p);
    const Index count = n_specific / num_classes + (c < n_specific % num_classes ? 1 : 0);
    for (Index e = 0; e < count; ++e, ++next) {
      const auto [i, j] = pairs[next];
      const double v = draw_value();
      s(i, j) = v;
      s(j, i) = v;
    }
    sc.s_true.push_back(std::move(s));
  }

  // Shared diagonal lift: smallest value keeping every class at or above
  // min_eigenvalue, floored at 1.
  double lift = 1.0;
  for (Index c = 0; c < num_classes; ++c) {
    const Matrix off = sc.theta_com_true + sc.s_true[static_cast<std::size_t>(c)];
    lift = std::max(lift, params.min_eigenvalue - min_eigenvalue(off));
  }
  sc.theta_com_true.diagonal().setConstant(lift);
  for (Index c = 0; c < num_classes; ++c) {
    sc.theta_true.push_back(sc.theta_com_true + sc.s_true[static_cast<std::size_t>(c)]);
  }

  for (Index c = 0; c < num_classes; ++c) {
    Rng sample_rng(params.seed, detail::kTrainStreamBase + static_cast<std::uint64_t>(c));
    ObservationMatrix obs;
    obs.class_id = static_cast<int>(c + 1);
    obs.data = sample_gaussian(sc.theta_true[static_cast<std::size_t>(c)], params.n_per_class, sample_rng);
    sc.samples.push_back(std::move(obs));
  }
  return sc;
}

/// Fresh samples from the scenario's held-out streams (independent of the
/// training draws, reproducible from the seed).
inline std::vector<ObservationMatrix> heldout_samples(const SyntheticScenario& sc, Index n) {
  std::vector<ObservationMatrix> out;
  for (std::size_t c = 0; c < sc.num_classes(); ++c) {
    Rng rng(sc.params.seed, detail::kHeldOutStreamBase + c);
    ObservationMatrix obs;
    obs.class_id = static_cast<int>(c + 1);
    obs.data = sample_gaussian(sc.theta_true[c], n, rng);
    out.push_back(std::move(obs));
  }
  return out;
}

/// Pooled nonparanormal transform followed by per-class second moments.
inline std::vector<ClassCovariance> gaussianized_covariances(
    const std::vector<ObservationMatrix>& raw) {
  std::vector<ClassCovariance> covs;
  for (const auto& obs : nonparanormal_transform_pooled(raw)) covs.push_back(class_covariance(obs));
  return covs;
}

/// Independent per-class reference solutions packaged as a model with an
/// empty common layer, so they can be scored like joint fits.
inline JointModel fit_independent(const std::vector<ClassCovariance>& covs, double lambda) {
  JointModel m;
  const Index p = covs.front().p();
  m.theta_com = Matrix::Zero(p, p);
  m.converged = true;
  for (const auto& cov : covs) {
    GlassoResult r = reference_glasso(cov.sigma_hat, lambda);
    m.s.push_back(r.theta);
    m.theta_hat.push_back(r.theta);
    m.mu_hat.push_back(cov.mu_hat);
    m.n_c.push_back(cov.n_c);
    m.iterations = std::max(m.iterations, r.sweeps);
  }
  return m;
}

// ---------------------------------------------------------------------------

struct LayerScore {
  std::string layer;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  /// Empty estimate scores precision 1; empty truth scores recall 1.
  double precision() const {
    const std::size_t est = true_positive + false_positive;
    return est == 0 ? 1.0 : static_cast<double>(true_positive) / static_cast<double>(est);
  }
  double recall() const {
    const std::size_t truth = true_positive + false_negative;
    return truth == 0 ? 1.0 : static_cast<double>(true_positive) / static_cast<double>(truth);
  }
  /// 2TP / (2TP + FP + FN); 1 when both truth and estimate are empty.
  double f1() const {
    const std::size_t denom = 2 * true_positive + false_positive + false_negative;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(true_positive) / static_cast<double>(denom);
  }

  LayerScore& operator+=(const LayerScore& o) {
    true_positive += o.true_positive;
    false_positive += o.false_positive;
    false_negative += o.false_negative;
    return *this;
  }
};

inline LayerScore compare_support(std::string layer, const Matrix& estimate, const Matrix& truth,
                                  double edge_tol) {
  LayerScore s;
  s.layer = std::move(layer);
  const auto est = edge_support(estimate, edge_tol);
  const auto tru = edge_support(truth, 0.0);
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (est[i] && tru[i]) ++s.true_positive;
    else if (est[i]) ++s.false_positive;
    else if (tru[i]) ++s.false_negative;
  }
  return s;
}

struct RecoveryReport {
  std::string method;
  LayerScore common;
  std::vector<LayerScore> specific;
  LayerScore combined;  // T + S_c against Theta_c, summed over classes
  double csr_estimated = 0.0;
  double csr_true = 0.0;
  double csr_target = 0.0;
  std::vector<double> nll_train;
  std::vector<double> nll_heldout;
  /// Mean over classes of held-out minus training average NLL. A stand-in for
  /// a generalization gap; not an accuracy gap.
  double nll_gap = 0.0;
  bool has_k_star = false;
  double k_star = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct RecoveryOptions {
  double edge_tol = 1e-6;
  bool gaussianize = true;
};

inline RecoveryReport score_recovery(const SyntheticScenario& sc, const JointModel& model,
                                     const RecoveryOptions& opts = {}, std::string method = "joint") {
  detail::require(model.p() == sc.p() && model.num_classes() == sc.num_classes(),
                  ErrorCode::dimension_mismatch, "score_recovery: model does not match scenario");
  RecoveryReport r;
  r.method = std::move(method);
  r.converged = model.converged;
  r.iterations = model.iterations;
  r.common = compare_support("common", model.theta_com, sc.theta_com_true, opts.edge_tol);
  r.combined.layer = "combined";
  for (std::size_t c = 0; c < sc.num_classes(); ++c) {
    r.specific.push_back(compare_support("specific:" + std::to_string(c + 1), model.s[c],
                                         sc.s_true[c], opts.edge_tol));
    r.combined += compare_support("combined", model.theta_sum(c), sc.theta_true[c], opts.edge_tol);
  }
  r.csr_estimated = common_specific_ratio(model, opts.edge_tol).value;
  JointModel truth;
  truth.theta_com = sc.theta_com_true;
  truth.s = sc.s_true;
  r.csr_true = common_specific_ratio(truth, 0.0).value;
  r.csr_target = sc.params.common_ratio;

  // Held-out draws go through the rank map fitted on the training draws.
  std::vector<ClassCovariance> train;
  std::vector<ClassCovariance> heldout;
  const auto fresh = heldout_samples(sc, sc.params.n_per_class);
  if (opts.gaussianize) {
    train = gaussianized_covariances(sc.samples);
    const NonparanormalReference ref(sc.samples);
    for (const auto& obs : fresh) heldout.push_back(class_covariance(ref.transform(obs)));
  } else {
    auto raw = [](ObservationMatrix obs) {
      obs.transformed = true;
      return class_covariance(obs);
    };
    for (const auto& obs : sc.samples) train.push_back(raw(obs));
    for (const auto& obs : fresh) heldout.push_back(raw(obs));
  }
  double gap = 0.0;
  for (std::size_t c = 0; c < sc.num_classes(); ++c) {
    r.nll_train.push_back(average_nll(train[c].sigma_hat, model.theta_hat[c]));
    r.nll_heldout.push_back(average_nll(heldout[c].sigma_hat, model.theta_hat[c]));
    gap += r.nll_heldout.back() - r.nll_train.back();
  }
  r.nll_gap = gap / static_cast<double>(sc.num_classes());
  return r;
}

// ---------------------------------------------------------------------------

enum class PriorKind { oracle, noise, constant };

inline std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::oracle: return "oracle";
    case PriorKind::noise: return "noise";
    case PriorKind::constant: return "constant";
  }
  return "unknown";
}

/// Attention footprints that overlap exactly on each true specific edge of
/// the class: node i attends to a private patch (weight `own`) and to one
/// patch per incident specific edge (weight 1), rows then normalized to sum
/// to one.
inline AttentionStack oracle_attention(const SyntheticScenario& sc, std::size_t c, double own = 0.3) {
  const Index p = sc.p();
  const Matrix& s = sc.s_true[c];
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      if (s(i, j) != 0.0) edges.emplace_back(i, j);
    }
  }
  Matrix a = Matrix::Zero(p, p + static_cast<Index>(edges.size()));
  for (Index i = 0; i < p; ++i) a(i, i) = own;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    a(edges[e].first, p + static_cast<Index>(e)) = 1.0;
    a(edges[e].second, p + static_cast<Index>(e)) = 1.0;
  }
  for (Index i = 0; i < p; ++i) a.row(i) /= a.row(i).sum();
  AttentionStack stack;
  stack.class_id = static_cast<int>(c + 1);
  stack.matrices.push_back(std::move(a));
  return stack;
}

/// Symmetric matrix with off-diagonal entries uniform on [0, 1], unit diagonal.
inline PriorMatrix noise_prior(Index p, Rng& rng, int class_id = 1) {
  PriorMatrix prior;
  prior.class_id = class_id;
  prior.w = Matrix::Identity(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      const double v = rng.uniform();
      prior.w(i, j) = v;
      prior.w(j, i) = v;
    }
  }
  return prior;
}

inline std::vector<PriorMatrix> build_priors(const SyntheticScenario& sc, PriorKind kind,
                                             std::uint64_t stream_seed) {
  std::vector<PriorMatrix> priors;
  for (std::size_t c = 0; c < sc.num_classes(); ++c) {
    const int id = static_cast<int>(c + 1);
    switch (kind) {
      case PriorKind::oracle:
        priors.push_back(attention_prior(oracle_attention(sc, c)));
        break;
      case PriorKind::noise: {
        Rng rng(stream_seed, detail::kPriorStreamBase + c);
        priors.push_back(noise_prior(sc.p(), rng, id));
        break;
      }
      case PriorKind::constant:
        priors.push_back(constant_prior(sc.p(), id));
        break;
    }
  }
  return priors;
}

struct PriorTrial {
  std::uint64_t seed = 0;
  double k_star = 0.0;
  double f1_selected = 0.0;
  double f1_k0 = 0.0;
};

struct PriorRejectionStats {
  PriorKind kind = PriorKind::noise;
  std::vector<PriorTrial> trials;
  double zero_fraction = 0.0;
  double mean_k = 0.0;
  double median_k = 0.0;
  double median_f1_selected = 0.0;
  double median_f1_k0 = 0.0;
};

inline double median(std::vector<double> v) {
  detail::require(!v.empty(), ErrorCode::invalid_argument, "median of empty sequence");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Seed of trial t derived from a base scenario seed.
inline std::uint64_t trial_seed(std::uint64_t base, std::size_t trial) {
  return Rng::splitmix64(base + 0x9e3779b97f4a7c15ULL * (trial + 1));
}

/// For each trial: regenerate the scenario under a derived seed, build the
/// requested prior, run eBIC selection over k_candidates and record k*, the
/// combined F1 at k* and the combined F1 of the k = 0 fit.
inline PriorRejectionStats prior_rejection_trial(const ScenarioParams& base, std::size_t trials,
                                                 const std::vector<double>& k_candidates,
                                                 PriorKind kind, const SolverConfig& solver,
                                                 double gamma_ebic = 0.5, double edge_tol = 1e-6,
                                                 int threads = 1) {
  detail::require(trials >= 1, ErrorCode::invalid_argument, "prior_rejection_trial: trials must be >= 1");
  PriorRejectionStats stats;
  stats.kind = kind;
  std::vector<double> ks, f1_sel, f1_zero;
  for (std::size_t t = 0; t < trials; ++t) {
    ScenarioParams params = base;
    params.seed = trial_seed(base.seed, t);
    const SyntheticScenario sc = generate_scenario(params);
    SelectionContext ctx;
    ctx.covs = gaussianized_covariances(sc.samples);
    ctx.priors = build_priors(sc, kind, params.seed);
    ctx.solver = solver;
    ctx.gamma_ebic = gamma_ebic;
    ctx.edge_tol = edge_tol;
    ctx.threads = threads;
    const KSelection sel = select_k(k_candidates, ctx);
    const JointModel k0 = fit_joint(ctx.covs, uniform_weights(sc.p()), solver);

    RecoveryOptions ro;
    ro.edge_tol = edge_tol;
    PriorTrial trial;
    trial.seed = params.seed;
    trial.k_star = sel.k_star;
    trial.f1_selected = score_recovery(sc, sel.model, ro).combined.f1();
    trial.f1_k0 = score_recovery(sc, k0, ro).combined.f1();
    stats.trials.push_back(trial);
    ks.push_back(trial.k_star);
    f1_sel.push_back(trial.f1_selected);
    f1_zero.push_back(trial.f1_k0);
  }
  stats.zero_fraction = static_cast<double>(std::count(ks.begin(), ks.end(), 0.0)) /
                        static_cast<double>(ks.size());
  stats.mean_k = std::accumulate(ks.begin(), ks.end(), 0.0) / static_cast<double>(ks.size());
  stats.median_k = median(ks);
  stats.median_f1_selected = median(f1_sel);
  stats.median_f1_k0 = median(f1_zero);
  return stats;
}

}  // namespace jointgl
