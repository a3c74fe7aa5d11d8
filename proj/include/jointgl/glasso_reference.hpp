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

// Single-class graphical lasso by block coordinate descent on the covariance
// (Friedman, Hastie & Tibshirani 2008), penalizing off-diagonal entries only:
//
//   min_{Theta > 0} tr(S Theta) - logdet Theta + lambda sum_{i != j} |theta_ij|
//
// It shares no code with the ADMM path and serves as the reference solution
// and as the "independent per-class" baseline in recovery benchmarks.

#pragma once

#include <cmath>
#include <string>

#include "jointgl/core.hpp"

namespace jointgl {

struct GlassoResult {
  Matrix theta;
  Matrix w;  // covariance estimate, the dual variable
  int sweeps = 0;
  double duality_gap = 0.0;
};

struct GlassoOptions {
  double gap_tol = 1e-6;
  int max_sweeps = 10000;
  int max_inner = 10000;
  double inner_tol = 1e-12;
};

inline GlassoResult reference_glasso(const Matrix& sigma_hat, double lambda,
                                     const GlassoOptions& opts = {}) {
  const Index p = sigma_hat.rows();
  detail::require(p >= 1 && sigma_hat.cols() == p, ErrorCode::dimension_mismatch,
                  "reference_glasso: covariance must be square");
  detail::require(lambda > 0.0, ErrorCode::invalid_argument, "reference_glasso: lambda must be positive");
  detail::require(sigma_hat.allFinite(), ErrorCode::non_finite, "reference_glasso: non-finite covariance");
  for (Index i = 0; i < p; ++i) {
    detail::require(sigma_hat(i, i) > 0.0, ErrorCode::invalid_argument,
                    "reference_glasso: covariance diagonal must be positive");
  }

  GlassoResult res;
  Matrix& w = res.w;
  w = symmetrized(sigma_hat);
  if (p == 1) {
    res.theta = Matrix::Constant(1, 1, 1.0 / w(0, 0));
    return res;
  }

  // beta.col(j) holds the lasso coefficients of column j over the other p-1 nodes.
  Matrix beta = Matrix::Zero(p - 1, p);
  Matrix w11(p - 1, p - 1);
  Vector s12(p - 1);

  auto others = [p](Index j, Index k) { return k < j ? k : k + 1; };

  auto assemble_theta = [&]() {
    Matrix theta = Matrix::Zero(p, p);
    for (Index j = 0; j < p; ++j) {
      double dot = 0.0;
      for (Index k = 0; k < p - 1; ++k) dot += w(others(j, k), j) * beta(k, j);
      const double tjj = 1.0 / (w(j, j) - dot);
      theta(j, j) = tjj;
      for (Index k = 0; k < p - 1; ++k) theta(others(j, k), j) = -beta(k, j) * tjj;
    }
    symmetrize(theta);
    return theta;
  };

  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    const Matrix w_start = w;
    for (Index j = 0; j < p; ++j) {
      for (Index a = 0; a < p - 1; ++a) {
        s12(a) = sigma_hat(others(j, a), j);
        for (Index b = 0; b < p - 1; ++b) w11(a, b) = w(others(j, a), others(j, b));
      }
      auto bj = beta.col(j);
      for (int inner = 0; inner < opts.max_inner; ++inner) {
        double max_delta = 0.0;
        for (Index k = 0; k < p - 1; ++k) {
          const double r = s12(k) - w11.row(k).dot(bj) + w11(k, k) * bj(k);
          double updated = 0.0;
          if (r > lambda) updated = (r - lambda) / w11(k, k);
          else if (r < -lambda) updated = (r + lambda) / w11(k, k);
          max_delta = std::max(max_delta, std::abs(updated - bj(k)));
          bj(k) = updated;
        }
        if (max_delta < opts.inner_tol) break;
      }
      const Vector w12 = w11 * bj;
      for (Index a = 0; a < p - 1; ++a) {
        w(others(j, a), j) = w12(a);
        w(j, others(j, a)) = w12(a);
      }
    }

    res.theta = assemble_theta();
    // W stays dual feasible (W_ii = S_ii, |W_ij - S_ij| <= lambda), so the
    // primal objective at W^{-1} minus the dual objective logdet W + p is a
    // true duality gap: tr(S W^{-1}) + lambda |W^{-1}|_off - p.
    Eigen::LLT<Matrix> llt(w);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::not_positive_definite,
                  "reference_glasso: covariance iterate lost positive definiteness");
    }
    const Matrix w_inv = llt.solve(Matrix::Identity(p, p));
    const double off = w_inv.cwiseAbs().sum() - w_inv.diagonal().cwiseAbs().sum();
    res.duality_gap = (sigma_hat.cwiseProduct(w_inv)).sum() + lambda * off - static_cast<double>(p);
    res.sweeps = sweep;
    // theta is assembled from the column coefficients, which only agree with
    // each other once W has stopped moving over a full sweep.
    const double w_change = (w - w_start).cwiseAbs().maxCoeff();
    if (std::abs(res.duality_gap) < opts.gap_tol && w_change < opts.gap_tol) return res;
  }
  throw Error(ErrorCode::not_converged,
              "reference_glasso: duality gap " + std::to_string(res.duality_gap) +
                  " above tolerance after " + std::to_string(opts.max_sweeps) + " sweeps");
}

}  // namespace jointgl
