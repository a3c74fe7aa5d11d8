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

// Joint common/specific sparse precision estimation by ADMM.
//
// For classes c = 1..C with second-moment matrices Sigma_c the solver minimizes
//
//   a * sum_c [ tr(Sigma_c (T + S_c)) - logdet(T + S_c) ]
//     + rho |T|_1 + gamma_s sum_c |W_c o S_c|_1
//
// over a shared matrix T and class-specific matrices S_c, with a = 1/C by
// default (LossScaling::class_mean) or a = 1 (LossScaling::sum). Splitting
// with Z_c = T + S_c and duals U_c gives one eigendecomposition per class per
// iteration (Z step) and element-wise soft-thresholding for T and S_c.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "jointgl/core.hpp"
#include "jointgl/gaussianize.hpp"
#include "jointgl/priors.hpp"

namespace jointgl {

/// How the per-class Gaussian losses are combined before the penalties are
/// added. class_mean divides the summed loss by C, which keeps rho and
/// gamma_s on the same scale whatever the number of classes; sum is the
/// plain sum. Internally class_mean is run as sum with rho and gamma_s
/// multiplied by C, so both share one set of update operators.
enum class LossScaling { class_mean, sum };

inline std::string_view to_string(LossScaling s) {
  return s == LossScaling::sum ? "sum" : "class_mean";
}

inline LossScaling loss_scaling_from_string(std::string_view s) {
  if (s == "class_mean") return LossScaling::class_mean;
  if (s == "sum") return LossScaling::sum;
  throw Error(ErrorCode::invalid_argument,
              "unknown loss scaling '" + std::string(s) + "' (expected class_mean or sum)");
}

struct SolverConfig {
  double rho = 0.1;
  double gamma_s = 0.1;
  double mu = 1.0;
  int max_iters = 200;
  double primal_tol = 1e-4;
  double dual_tol = 1e-4;
  bool penalize_diagonal = false;
  LossScaling loss_scaling = LossScaling::class_mean;

  /// The equivalent configuration under sum scaling for C classes.
  SolverConfig summed(std::size_t num_classes) const {
    SolverConfig out = *this;
    if (loss_scaling == LossScaling::class_mean) {
      out.rho *= static_cast<double>(num_classes);
      out.gamma_s *= static_cast<double>(num_classes);
      out.loss_scaling = LossScaling::sum;
    }
    return out;
  }

  void validate() const {
    detail::require(rho > 0.0 && gamma_s > 0.0 && mu > 0.0, ErrorCode::invalid_argument,
                    "solver: rho, gamma_s and mu must be positive");
    detail::require(primal_tol > 0.0 && dual_tol > 0.0, ErrorCode::invalid_argument,
                    "solver: tolerances must be positive");
    detail::require(max_iters > 0, ErrorCode::invalid_argument, "solver: max_iters must be positive");
  }
};

struct ADMMState {
  Matrix theta_com;
  std::vector<Matrix> s;
  std::vector<Matrix> z;
  std::vector<Matrix> u;
  int iteration = 0;
  std::vector<double> primal_history;
  std::vector<double> dual_history;

  Index p() const { return theta_com.rows(); }
  std::size_t num_classes() const { return z.size(); }
};

struct JointModel {
  Matrix theta_com;
  std::vector<Matrix> s;
  std::vector<Matrix> theta_hat;  // Z_c at termination, always positive definite
  std::vector<Vector> mu_hat;
  std::vector<Index> n_c;
  bool converged = false;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<double> primal_history;
  std::vector<double> dual_history;
  std::vector<double> objective_history;
  std::vector<double> min_eigenvalue_history;  // smallest eigenvalue over all Z_c
  SolverConfig config;
  double k = 0.0;
  std::vector<std::string> warnings;

  Index p() const { return theta_com.rows(); }
  std::size_t num_classes() const { return theta_hat.size(); }
  /// T + S_c, the decomposed estimate (may be indefinite before convergence).
  Matrix theta_sum(std::size_t c) const { return theta_com + s[c]; }
};

inline double soft_threshold(double x, double tau) {
  const double m = std::abs(x) - tau;
  if (m <= 0.0) return 0.0;
  return x > 0.0 ? m : -m;
}

/// argmin_{Z > 0} tr(Sigma Z) - logdet Z + (mu/2) |Z - G|_F^2.
/// If min_eigenvalue is non-null it receives the smallest eigenvalue of Z.
inline Matrix z_update(const Matrix& g, const Matrix& sigma_hat, double mu,
                       double* min_eigenvalue = nullptr) {
  detail::require(mu > 0.0, ErrorCode::invalid_argument, "z_update: mu must be positive");
  detail::require(g.rows() == sigma_hat.rows() && g.cols() == sigma_hat.cols() &&
                      g.rows() == g.cols(),
                  ErrorCode::dimension_mismatch, "z_update: shape mismatch");
  Matrix a = g - sigma_hat / mu;
  symmetrize(a);
  detail::require(a.allFinite(), ErrorCode::non_finite, "z_update: non-finite input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  detail::require(es.info() == Eigen::Success, ErrorCode::non_finite,
                  "z_update: eigendecomposition failed");
  const double four_over_mu = 4.0 / mu;
  Vector lam = es.eigenvalues().unaryExpr(
      [four_over_mu](double l) { return 0.5 * (l + std::sqrt(l * l + four_over_mu)); });
  if (min_eigenvalue != nullptr) *min_eigenvalue = lam.minCoeff();
  Matrix z = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  symmetrize(z);
  return z;
}

/// Soft-threshold of the class average of Z_c - S_c + U_c/mu at rho/(C mu),
/// with rho in sum form.
inline Matrix theta_com_update(const ADMMState& state, const SolverConfig& solver) {
  const SolverConfig config = solver.summed(state.num_classes());
  const auto num_classes = static_cast<double>(state.num_classes());
  const Index p = state.p();
  Matrix avg = Matrix::Zero(p, p);
  for (std::size_t c = 0; c < state.num_classes(); ++c) {
    avg += state.z[c] - state.s[c] + state.u[c] / config.mu;
  }
  avg /= num_classes;
  const double tau = config.rho / (num_classes * config.mu);
  Matrix out(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      out(i, j) = (i == j && !config.penalize_diagonal) ? avg(i, j) : soft_threshold(avg(i, j), tau);
    }
  }
  symmetrize(out);
  return out;
}

/// Per-class soft-threshold of Z_c - T + U_c/mu at gamma_s * W_c(i,j) / mu,
/// with gamma_s in sum form.
inline std::vector<Matrix> s_update(const ADMMState& state,
                                    const std::vector<AdaptiveWeightMatrix>& weights,
                                    const SolverConfig& solver) {
  const SolverConfig config = solver.summed(state.num_classes());
  detail::require(weights.size() == state.num_classes(), ErrorCode::dimension_mismatch,
                  "s_update: need one weight matrix per class");
  const Index p = state.p();
  std::vector<Matrix> out;
  out.reserve(state.num_classes());
  for (std::size_t c = 0; c < state.num_classes(); ++c) {
    const Matrix& w = weights[c].w_tilde;
    detail::require(w.rows() == p && w.cols() == p, ErrorCode::dimension_mismatch,
                    "s_update: weight matrix dimension does not match p");
    const Matrix v = state.z[c] - state.theta_com + state.u[c] / config.mu;
    Matrix sc(p, p);
    for (Index j = 0; j < p; ++j) {
      for (Index i = 0; i < p; ++i) {
        sc(i, j) = (i == j && !config.penalize_diagonal)
                       ? v(i, j)
                       : soft_threshold(v(i, j), config.gamma_s * w(i, j) / config.mu);
      }
    }
    symmetrize(sc);
    out.push_back(std::move(sc));
  }
  return out;
}

/// U_c + mu (Z_c - T - S_c).
inline std::vector<Matrix> dual_update(const ADMMState& state, double mu) {
  std::vector<Matrix> out;
  out.reserve(state.num_classes());
  for (std::size_t c = 0; c < state.num_classes(); ++c) {
    Matrix uc = state.u[c] + mu * (state.z[c] - state.theta_com - state.s[c]);
    symmetrize(uc);
    out.push_back(std::move(uc));
  }
  return out;
}

/// T = diag(pooled Sigma)^{-1}, S_c = 0, Z_c = T, U_c = 0.
inline ADMMState initial_state(const std::vector<ClassCovariance>& covs) {
  const Index p = covs.front().p();
  Vector pooled = Vector::Zero(p);
  double total = 0.0;
  for (const auto& cov : covs) {
    const double w = static_cast<double>(std::max<Index>(cov.n_c, 1));
    pooled += w * cov.sigma_hat.diagonal();
    total += w;
  }
  pooled /= total;
  ADMMState state;
  state.theta_com = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) state.theta_com(i, i) = pooled(i) > 0.0 ? 1.0 / pooled(i) : 1.0;
  for (std::size_t c = 0; c < covs.size(); ++c) {
    state.s.push_back(Matrix::Zero(p, p));
    state.z.push_back(state.theta_com);
    state.u.push_back(Matrix::Zero(p, p));
  }
  return state;
}

namespace detail {

inline double l1_norm(const Matrix& a, bool include_diagonal) {
  double acc = a.cwiseAbs().sum();
  if (!include_diagonal) acc -= a.diagonal().cwiseAbs().sum();
  return acc;
}

inline double weighted_l1_norm(const Matrix& a, const Matrix& w, bool include_diagonal) {
  double acc = a.cwiseAbs().cwiseProduct(w).sum();
  if (!include_diagonal) acc -= a.diagonal().cwiseAbs().cwiseProduct(w.diagonal()).sum();
  return acc;
}

}  // namespace detail

/// Joint objective with the smooth part evaluated at the given PD matrices
/// (normally Z_c) and the penalties at (T, S_c). Always reported in sum
/// form, so under class_mean scaling it is C times the class-mean objective.
inline double joint_objective(const std::vector<ClassCovariance>& covs,
                              const std::vector<Matrix>& precisions, const Matrix& theta_com,
                              const std::vector<Matrix>& s,
                              const std::vector<AdaptiveWeightMatrix>& weights,
                              const SolverConfig& solver) {
  const SolverConfig config = solver.summed(covs.size());
  double value = 0.0;
  for (std::size_t c = 0; c < covs.size(); ++c) {
    value += (covs[c].sigma_hat.cwiseProduct(precisions[c])).sum() - logdet_spd(precisions[c]);
    value += config.gamma_s *
             detail::weighted_l1_norm(s[c], weights[c].w_tilde, config.penalize_diagonal);
  }
  value += config.rho * detail::l1_norm(theta_com, config.penalize_diagonal);
  return value;
}

using IterationObserver = std::function<void(const ADMMState&)>;

/// Runs Z -> T -> S -> U sweeps until both residuals drop below tolerance or
/// max_iters is reached. Non-convergence is reported through
/// JointModel::converged; a non-finite iterate throws with the iteration index.
inline JointModel fit_joint(const std::vector<ClassCovariance>& covs,
                            const std::vector<AdaptiveWeightMatrix>& weights,
                            const SolverConfig& config, const IterationObserver& observer = {}) {
  config.validate();
  detail::require(!covs.empty(), ErrorCode::invalid_argument, "fit_joint: no classes");
  const Index p = covs.front().p();
  for (const auto& cov : covs) {
    detail::require(cov.p() == p && cov.sigma_hat.cols() == p, ErrorCode::dimension_mismatch,
                    "fit_joint: covariances disagree on p");
    detail::require(cov.sigma_hat.allFinite(), ErrorCode::non_finite,
                    "fit_joint: covariance has non-finite entries");
  }
  detail::require(weights.size() == covs.size(), ErrorCode::dimension_mismatch,
                  "fit_joint: need one weight matrix per class");

  const std::size_t num_classes = covs.size();
  const SolverConfig cfg = config.summed(num_classes);
  ADMMState state = initial_state(covs);
  JointModel model;
  model.config = config;
  model.k = weights.front().k;

  // T and S_c are updated one after the other, so they can trade mass while
  // T + S_c stands still. The dual residual therefore also watches S_c.
  std::vector<Matrix> previous_sum(num_classes);
  std::vector<Matrix> previous_s = state.s;
  for (std::size_t c = 0; c < num_classes; ++c) previous_sum[c] = state.theta_com + state.s[c];

  double primal = 0.0;
  double dual = 0.0;
  for (int it = 1; it <= config.max_iters; ++it) {
    double min_eig = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < num_classes; ++c) {
      const Matrix g = state.theta_com + state.s[c] - state.u[c] / config.mu;
      double lam_min = 0.0;
      state.z[c] = z_update(g, covs[c].sigma_hat, config.mu, &lam_min);
      min_eig = std::min(min_eig, lam_min);
    }
    state.theta_com = theta_com_update(state, cfg);
    state.s = s_update(state, weights, cfg);
    state.u = dual_update(state, config.mu);
    state.iteration = it;

    primal = 0.0;
    dual = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      Matrix sum = state.theta_com + state.s[c];
      primal = std::max(primal, (state.z[c] - sum).norm());
      dual = std::max({dual, config.mu * (sum - previous_sum[c]).norm(),
                       config.mu * (state.s[c] - previous_s[c]).norm()});
      previous_sum[c] = std::move(sum);
      previous_s[c] = state.s[c];
    }
    if (!std::isfinite(primal) || !std::isfinite(dual) || !state.theta_com.allFinite()) {
      throw Error(ErrorCode::non_finite,
                  "fit_joint: non-finite iterate at iteration " + std::to_string(it));
    }
    state.primal_history.push_back(primal);
    state.dual_history.push_back(dual);
    model.min_eigenvalue_history.push_back(min_eig);
    model.objective_history.push_back(
        joint_objective(covs, state.z, state.theta_com, state.s, weights, cfg));
    if (observer) observer(state);

    if (primal < config.primal_tol && dual < config.dual_tol) {
      model.converged = true;
      break;
    }
  }

  model.theta_com = state.theta_com;
  model.s = state.s;
  model.theta_hat = state.z;
  model.iterations = state.iteration;
  model.primal_residual = primal;
  model.dual_residual = dual;
  model.primal_history = std::move(state.primal_history);
  model.dual_history = std::move(state.dual_history);
  for (const auto& cov : covs) {
    model.mu_hat.push_back(cov.mu_hat.size() == p ? cov.mu_hat : Vector::Zero(p));
    model.n_c.push_back(cov.n_c);
  }
  if (!model.converged) {
    model.warnings.push_back("ADMM did not converge in " + std::to_string(config.max_iters) +
                             " iterations (primal " + std::to_string(primal) + ", dual " +
                             std::to_string(dual) + ")");
  }
  return model;
}

/// Weights shared by every class.
inline JointModel fit_joint(const std::vector<ClassCovariance>& covs,
                            const AdaptiveWeightMatrix& weights, const SolverConfig& config,
                            const IterationObserver& observer = {}) {
  return fit_joint(covs, std::vector<AdaptiveWeightMatrix>(covs.size(), weights), config,
                   observer);
}

struct CommonRatio {
  double value = 0.0;
  std::size_t common_edges = 0;
  std::size_t specific_edges = 0;  // summed over classes

  bool empty() const { return common_edges + specific_edges == 0; }
};

/// Share of estimated edges carried by the common matrix. Defined as 0 when
/// no layer has an edge (check empty()).
inline CommonRatio common_specific_ratio(const JointModel& model, double edge_tol = 1e-6) {
  CommonRatio r;
  r.common_edges = count_edges(model.theta_com, edge_tol);
  for (const Matrix& sc : model.s) r.specific_edges += count_edges(sc, edge_tol);
  const std::size_t total = r.common_edges + r.specific_edges;
  r.value = total == 0 ? 0.0 : static_cast<double>(r.common_edges) / static_cast<double>(total);
  return r;
}

}  // namespace jointgl
