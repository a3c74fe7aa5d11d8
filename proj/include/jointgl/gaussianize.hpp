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

// Rank-based Gaussianization (nonparanormal transform) of node observations
// and class-conditional second moments.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "jointgl/core.hpp"

namespace jointgl {

/// n x p observations of one class. Rows are samples, columns are nodes.
struct ObservationMatrix {
  Matrix data;
  int class_id = 1;
  bool transformed = false;
  /// Columns that were constant when transformed (mapped to all zeros).
  std::vector<Index> degenerate_columns;

  Index n() const { return data.rows(); }
  Index p() const { return data.cols(); }
};

struct ClassCovariance {
  Matrix sigma_hat;
  Index n_c = 0;
  Vector mu_hat;

  Index p() const { return sigma_hat.rows(); }
};

/// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * (1.0 / std::numbers::sqrt2));
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi * (1.0 / std::numbers::sqrt2));
}

namespace detail {

// Acklam's rational approximation for the lower half (p <= 0.5),
// relative error about 1.15e-9 before refinement.
inline double quantile_initial_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Standard normal quantile, Phi^{-1}(p), for p in (0, 1).
///
/// Rational initializer plus one Halley step against erfc-based Phi. Upper
/// half is computed as -Phi^{-1}(1 - p), which is exact in binary floating
/// point for p >= 0.5 and keeps the tail residual well conditioned.
inline double normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, ErrorCode::invalid_argument,
                  "normal_quantile: p must lie in (0, 1), got " + std::to_string(p));
  if (p == 0.5) return 0.0;
  const bool upper = p > 0.5;
  const double lo = upper ? 1.0 - p : p;
  double x = detail::quantile_initial_lower(lo);
  const double e = normal_cdf(x) - lo;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return upper ? -x : x;
}

/// (midrank - 0.5) / n for each entry. Ties share their average rank.
inline Vector rank_ecdf(std::span<const double> column) {
  const auto n = static_cast<Index>(column.size());
  detail::require(n >= 1, ErrorCode::invalid_argument, "rank_ecdf: empty column");
  for (Index i = 0; i < n; ++i) {
    detail::require(std::isfinite(column[static_cast<std::size_t>(i)]), ErrorCode::non_finite,
                    "rank_ecdf: non-finite value at position " + std::to_string(i));
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return column[static_cast<std::size_t>(a)] < column[static_cast<std::size_t>(b)];
  });

  Vector out(n);
  const double dn = static_cast<double>(n);
  Index start = 0;
  while (start < n) {
    Index stop = start + 1;
    const double v = column[static_cast<std::size_t>(order[static_cast<std::size_t>(start)])];
    while (stop < n && column[static_cast<std::size_t>(order[static_cast<std::size_t>(stop)])] == v) ++stop;
    // ranks start+1 .. stop, averaged
    const double midrank = 0.5 * static_cast<double>(start + 1 + stop);
    const double f = (midrank - 0.5) / dn;
    for (Index k = start; k < stop; ++k) out(order[static_cast<std::size_t>(k)]) = f;
    start = stop;
  }
  return out;
}

inline Vector rank_ecdf(const Vector& column) {
  return rank_ecdf(std::span<const double>(column.data(), static_cast<std::size_t>(column.size())));
}

inline void validate(const ObservationMatrix& obs) {
  detail::require(obs.n() >= 2, ErrorCode::invalid_argument,
                  "observation matrix needs at least 2 samples, got " + std::to_string(obs.n()));
  detail::require(obs.p() >= 1, ErrorCode::invalid_argument, "observation matrix has no columns");
  detail::require(obs.data.allFinite(), ErrorCode::non_finite,
                  "observation matrix contains non-finite entries");
}

/// Column-wise Phi^{-1}(rank_ecdf(.)). Row and column order are preserved.
/// Constant columns map to zeros and are listed in degenerate_columns.
inline ObservationMatrix nonparanormal_transform(const ObservationMatrix& obs) {
  detail::require(!obs.transformed, ErrorCode::invalid_argument,
                  "nonparanormal_transform: input is already transformed");
  validate(obs);
  ObservationMatrix out;
  out.class_id = obs.class_id;
  out.transformed = true;
  out.data.resize(obs.n(), obs.p());
  for (Index j = 0; j < obs.p(); ++j) {
    const Vector col = obs.data.col(j);
    const Vector f = rank_ecdf(col);
    for (Index i = 0; i < obs.n(); ++i) out.data(i, j) = normal_quantile(f(i));
    if ((col.array() == col(0)).all()) out.degenerate_columns.push_back(j);
  }
  return out;
}

/// Transforms several classes with one shared rank map fitted on the stacked
/// rows, then splits the result back per class. Class means of the output are
/// then informative, which the generative classifier relies on.
inline std::vector<ObservationMatrix> nonparanormal_transform_pooled(
    const std::vector<ObservationMatrix>& classes) {
  detail::require(!classes.empty(), ErrorCode::invalid_argument,
                  "nonparanormal_transform_pooled: no classes");
  const Index p = classes.front().p();
  Index total = 0;
  for (const auto& c : classes) {
    detail::require(c.p() == p, ErrorCode::dimension_mismatch,
                    "nonparanormal_transform_pooled: classes disagree on column count");
    detail::require(!c.transformed, ErrorCode::invalid_argument,
                    "nonparanormal_transform_pooled: input is already transformed");
    total += c.n();
  }
  ObservationMatrix stacked;
  stacked.data.resize(total, p);
  Index row = 0;
  for (const auto& c : classes) {
    stacked.data.middleRows(row, c.n()) = c.data;
    row += c.n();
  }
  const ObservationMatrix t = nonparanormal_transform(stacked);

  std::vector<ObservationMatrix> out;
  out.reserve(classes.size());
  row = 0;
  for (const auto& c : classes) {
    ObservationMatrix o;
    o.class_id = c.class_id;
    o.transformed = true;
    o.data = t.data.middleRows(row, c.n());
    o.degenerate_columns = t.degenerate_columns;
    row += c.n();
    out.push_back(std::move(o));
  }
  return out;
}

/// The pooled rank map kept for transforming samples that were not part of
/// the fit. A training value maps exactly as in the fit; a new value x gets
/// (#{t < x} + 0.5 #{t == x}) / n, clamped to [0.5/n, 1 - 0.5/n].
class NonparanormalReference {
 public:
  NonparanormalReference() = default;

  explicit NonparanormalReference(const std::vector<ObservationMatrix>& classes) {
    detail::require(!classes.empty(), ErrorCode::invalid_argument,
                    "NonparanormalReference: no classes");
    const Index p = classes.front().p();
    columns_.assign(static_cast<std::size_t>(p), {});
    for (const auto& c : classes) {
      validate(c);
      detail::require(c.p() == p, ErrorCode::dimension_mismatch,
                      "NonparanormalReference: classes disagree on column count");
      for (Index j = 0; j < p; ++j) {
        auto& col = columns_[static_cast<std::size_t>(j)];
        for (Index i = 0; i < c.n(); ++i) col.push_back(c.data(i, j));
      }
    }
    for (auto& col : columns_) std::sort(col.begin(), col.end());
  }

  /// From previously sorted columns, e.g. a saved reference.
  static NonparanormalReference from_sorted_columns(std::vector<std::vector<double>> columns) {
    for (const auto& col : columns) {
      detail::require(!col.empty(), ErrorCode::invalid_argument,
                      "NonparanormalReference: empty column");
      detail::require(std::is_sorted(col.begin(), col.end()), ErrorCode::invalid_argument,
                      "NonparanormalReference: columns must be sorted ascending");
    }
    NonparanormalReference ref;
    ref.columns_ = std::move(columns);
    return ref;
  }

  Index p() const { return static_cast<Index>(columns_.size()); }
  const std::vector<std::vector<double>>& columns() const { return columns_; }

  double transform(Index j, double x) const {
    const auto& col = columns_[static_cast<std::size_t>(j)];
    if (col.front() == col.back()) return 0.0;
    const auto lo = std::lower_bound(col.begin(), col.end(), x);
    const auto hi = std::upper_bound(lo, col.end(), x);
    const double n = static_cast<double>(col.size());
    const double f = (static_cast<double>(lo - col.begin()) + 0.5 * static_cast<double>(hi - lo)) / n;
    return normal_quantile(std::clamp(f, 0.5 / n, 1.0 - 0.5 / n));
  }

  ObservationMatrix transform(const ObservationMatrix& obs) const {
    detail::require(!obs.transformed, ErrorCode::invalid_argument,
                    "NonparanormalReference: input is already transformed");
    detail::require(obs.p() == p(), ErrorCode::dimension_mismatch,
                    "NonparanormalReference: sample has " + std::to_string(obs.p()) +
                        " columns, reference has " + std::to_string(p()));
    detail::require(obs.data.allFinite(), ErrorCode::non_finite,
                    "NonparanormalReference: non-finite entries");
    ObservationMatrix out;
    out.class_id = obs.class_id;
    out.transformed = true;
    out.data.resize(obs.n(), obs.p());
    for (Index j = 0; j < obs.p(); ++j) {
      for (Index i = 0; i < obs.n(); ++i) out.data(i, j) = transform(j, obs.data(i, j));
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> columns_;  // sorted pooled training values
};

/// sigma_hat = (1/n) sum_n z_n z_n^T taken about zero, plus the column mean.
inline ClassCovariance class_covariance(const ObservationMatrix& obs) {
  detail::require(obs.transformed, ErrorCode::invalid_argument,
                  "class_covariance: observations must be transformed first");
  detail::require(obs.n() >= 1 && obs.data.allFinite(), ErrorCode::invalid_argument,
                  "class_covariance: need finite observations");
  ClassCovariance cov;
  cov.n_c = obs.n();
  cov.sigma_hat = (obs.data.transpose() * obs.data) / static_cast<double>(obs.n());
  symmetrize(cov.sigma_hat);
  cov.mu_hat = obs.data.colwise().mean().transpose();
  return cov;
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk normality diagnostic (Royston 1995, algorithm AS R94).

struct ShapiroWilk {
  double w = 0.0;
  double p_value = 0.0;
};

namespace detail {

inline double poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
  return r;
}

}  // namespace detail

/// Valid for 3 <= n <= 5000.
inline ShapiroWilk shapiro_wilk(std::span<const double> sample) {
  static constexpr double g[] = {-2.273, 0.459};
  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};

  const std::size_t n = sample.size();
  detail::require(n >= 3 && n <= 5000, ErrorCode::invalid_argument,
                  "shapiro_wilk: sample size must be in [3, 5000]");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  detail::require(range > 1e-19, ErrorCode::invalid_argument, "shapiro_wilk: constant sample");

  // Antisymmetric coefficient vector a (ascending order: a[0] < 0 < a[n-1]).
  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;
  std::vector<double> a(n, 0.0);
  if (n == 3) {
    a[0] = -std::numbers::sqrt2 / 2.0;
    a[2] = std::numbers::sqrt2 / 2.0;
  } else {
    std::vector<double> m(half);  // m[i] = upper quantile for the i-th largest
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = -normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = detail::poly(c1, rsn) + m[0] / ssumm2;
    std::vector<double> coef(half);
    std::size_t first = 1;
    double fac = 0.0;
    if (n > 5) {
      first = 2;
      const double a2 = m[1] / ssumm2 + detail::poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      coef[1] = a2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    coef[0] = a1;
    for (std::size_t i = first; i < half; ++i) coef[i] = m[i] / fac;
    for (std::size_t i = 0; i < half; ++i) {
      a[n - 1 - i] = coef[i];
      a[i] = -coef[i];
    }
  }

  // W as squared correlation between the ordered sample and a.
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / an;
  double sax = 0.0, ssx = 0.0, ssa = 0.0;
  const double am = std::accumulate(a.begin(), a.end(), 0.0) / an;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = (x[i] - xm) / range;
    const double da = a[i] - am;
    sax += da * dx;
    ssx += dx * dx;
    ssa += da * da;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  ShapiroWilk out;
  out.w = 1.0 - w1;

  if (n == 3) {
    constexpr double pi6 = 6.0 / std::numbers::pi;
    constexpr double stqr = std::numbers::pi / 3.0;
    out.p_value = std::max(0.0, pi6 * (std::asin(std::sqrt(out.w)) - stqr));
    return out;
  }
  double y = std::log(w1);
  const double xx = std::log(an);
  double mean = 0.0, sd = 1.0;
  if (n <= 11) {
    const double gamma = detail::poly(g, an);
    if (y >= gamma) {
      out.p_value = 1e-99;
      return out;
    }
    y = -std::log(gamma - y);
    mean = detail::poly(c3, an);
    sd = std::exp(detail::poly(c4, an));
  } else {
    mean = detail::poly(c5, xx);
    sd = std::exp(detail::poly(c6, xx));
  }
  out.p_value = normal_cdf(-(y - mean) / sd);
  return out;
}

/// Fraction of columns whose Shapiro-Wilk p-value exceeds alpha.
inline double normality_pass_rate(const Matrix& data, double alpha = 0.05) {
  if (data.cols() == 0) return 0.0;
  Index pass = 0;
  for (Index j = 0; j < data.cols(); ++j) {
    const Vector col = data.col(j);
    if ((col.array() == col(0)).all()) continue;
    const auto sw = shapiro_wilk(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
    if (sw.p_value > alpha) ++pass;
  }
  return static_cast<double>(pass) / static_cast<double>(data.cols());
}

}  // namespace jointgl
