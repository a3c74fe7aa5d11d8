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

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace jointgl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Machine-readable failure categories. The CLI prints the name of the code
/// on a single line so that scripts can branch on it.
enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  non_finite,
  not_positive_definite,
  csv_parse,
  json_parse,
  io,
  not_converged,
  infeasible,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::not_positive_definite: return "not_positive_definite";
    case ErrorCode::csv_parse: return "csv_parse";
    case ErrorCode::json_parse: return "json_parse";
    case ErrorCode::io: return "io";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::infeasible: return "infeasible";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& msg) {
  if (!condition) throw Error(code, msg);
}

}  // namespace detail

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// In-place (A + A^T) / 2.
inline void symmetrize(Matrix& a) {
  const Index p = a.rows();
  for (Index j = 0; j < p; ++j) {
    for (Index i = j + 1; i < p; ++i) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  }
}

inline Matrix symmetrized(Matrix a) {
  symmetrize(a);
  return a;
}

/// log det of a symmetric positive definite matrix via Cholesky.
/// Throws not_positive_definite if the factorization fails.
inline double logdet_spd(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::not_positive_definite,
                "matrix is not positive definite (Cholesky failed)");
  }
  const auto& l = llt.matrixL();
  double acc = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    const double d = l(i, i);
    if (!(d > 0.0)) {
      throw Error(ErrorCode::not_positive_definite,
                  "matrix is not positive definite (zero pivot)");
    }
    acc += std::log(d);
  }
  return 2.0 * acc;
}

inline double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Number of upper-triangle off-diagonal entries with |a_ij| > tol.
inline std::size_t count_edges(const Matrix& a, double tol) {
  std::size_t n = 0;
  for (Index j = 1; j < a.cols(); ++j) {
    for (Index i = 0; i < j; ++i) {
      if (std::abs(a(i, j)) > tol) ++n;
    }
  }
  return n;
}

/// Upper-triangle support mask (row-major over i < j) at the given tolerance.
inline std::vector<bool> edge_support(const Matrix& a, double tol) {
  const Index p = a.rows();
  std::vector<bool> mask;
  mask.reserve(static_cast<std::size_t>(p * (p - 1) / 2));
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) mask.push_back(std::abs(a(i, j)) > tol);
  }
  return mask;
}

}  // namespace jointgl
