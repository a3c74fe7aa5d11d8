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

#include <cmath>

#include <catch_amalgamated.hpp>

#include "jointgl/model_selection.hpp"
#include "jointgl/random.hpp"
#include "jointgl/synthgen.hpp"

using namespace jointgl;
using Catch::Approx;

namespace {

double det3(const Matrix& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

JointModel hand_model() {
  JointModel m;
  m.theta_com = Matrix(3, 3);
  m.theta_com << 2.0, -0.4, 0.0, -0.4, 1.5, 0.0, 0.0, 0.0, 1.0;
  Matrix s1 = Matrix::Zero(3, 3);
  s1(1, 2) = s1(2, 1) = 0.3;
  m.s = {Matrix::Zero(3, 3), s1};
  m.theta_hat = {m.theta_sum(0), m.theta_sum(1)};
  m.n_c = {40, 60};
  return m;
}

}  // namespace

TEST_CASE("ebic_score matches a cofactor-expansion recomputation", "[selection][oracle]") {
  const JointModel m = hand_model();
  Matrix s0(3, 3), s1(3, 3);
  s0 << 1.0, 0.2, 0.1, 0.2, 0.9, -0.1, 0.1, -0.1, 1.2;
  s1 << 0.8, 0.0, 0.3, 0.0, 1.1, 0.25, 0.3, 0.25, 1.0;
  const std::vector<ClassCovariance> covs = {{s0, 40, Vector::Zero(3)}, {s1, 60, Vector::Zero(3)}};

  double expected = 0.0;
  const Matrix* sig[] = {&s0, &s1};
  for (int c = 0; c < 2; ++c) {
    double trace = 0.0;
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) trace += (*sig[c])(i, j) * m.theta_hat[c](j, i);
    expected += m.n_c[c] * (trace - std::log(det3(m.theta_hat[c])));
  }
  // class 0 has edge (0,1); class 1 has (0,1) and (1,2)
  const double edges = 3.0;
  expected += edges * std::log(100.0) + 4.0 * 0.5 * edges * std::log(3.0);
  CHECK(total_edges(m, 1e-6) == 3);
  CHECK(ebic_score(m, covs, 0.5) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("ebic_score special cases", "[selection]") {
  JointModel m;
  m.theta_com = Matrix::Identity(4, 4);
  m.s = {Matrix::Zero(4, 4), Matrix::Zero(4, 4)};
  m.theta_hat = {Matrix::Identity(4, 4), Matrix::Identity(4, 4)};
  m.n_c = {10, 30};
  const std::vector<ClassCovariance> covs = {{Matrix::Identity(4, 4), 10, Vector::Zero(4)},
                                             {Matrix::Identity(4, 4), 30, Vector::Zero(4)}};
  // identity fit, no edges: sum n_c p
  CHECK(ebic_score(m, covs, 0.5) == Approx(40.0 * 4.0));

  const JointModel h = hand_model();
  const std::vector<ClassCovariance> hc = {{Matrix::Identity(3, 3), 40, Vector::Zero(3)},
                                           {Matrix::Identity(3, 3), 60, Vector::Zero(3)}};
  // gamma = 0 is the plain BIC; gamma adds 4 |E| log p per unit
  const double bic = ebic_score(h, hc, 0.0);
  CHECK(ebic_score(h, hc, 1.0) - bic == Approx(4.0 * 3.0 * std::log(3.0)));

  CHECK_THROWS_AS(ebic_score(h, {hc[0]}, 0.5), Error);
}

namespace {

SelectionContext small_context(std::uint64_t seed, PriorKind kind) {
  ScenarioParams sp;
  sp.p = 10;
  sp.num_classes = 2;
  sp.n_per_class = 300;
  sp.seed = seed;
  const SyntheticScenario sc = generate_scenario(sp);
  SelectionContext ctx;
  ctx.covs = gaussianized_covariances(sc.samples);
  ctx.priors = build_priors(sc, kind, seed);
  return ctx;
}

}  // namespace

TEST_CASE("select_k: constant priors tie at every k and pick 0", "[selection]") {
  SelectionContext ctx = small_context(50, PriorKind::constant);
  const KSelection sel = select_k({10.0, 0.0, 5.0, 5.0}, ctx);
  CHECK(sel.k_star == 0.0);
  REQUIRE(sel.scores.size() == 3);  // sorted and deduplicated
  CHECK(sel.scores[0].k == 0.0);
  CHECK(sel.scores[2].k == 10.0);
  for (const auto& s : sel.scores) CHECK(s.ebic == sel.scores[0].ebic);
  CHECK(sel.weights.front().w_tilde == uniform_weights(10).w_tilde);
}

TEST_CASE("select_k with only k = 0 returns the uniform-weight fit", "[selection]") {
  SelectionContext ctx = small_context(51, PriorKind::oracle);
  const KSelection sel = select_k({0.0}, ctx);
  const JointModel direct = fit_joint(ctx.covs, uniform_weights(10), ctx.solver);
  CHECK(sel.k_star == 0.0);
  CHECK(sel.model.theta_com == direct.theta_com);
}

TEST_CASE("select_k is identical across thread counts", "[selection]") {
  SelectionContext ctx = small_context(52, PriorKind::oracle);
  const std::vector<double> ks = {0, 5, 10, 20};
  ctx.threads = 1;
  const KSelection one = select_k(ks, ctx);
  ctx.threads = 4;
  const KSelection four = select_k(ks, ctx);
  CHECK(one.k_star == four.k_star);
  for (std::size_t i = 0; i < ks.size(); ++i) CHECK(one.scores[i].ebic == four.scores[i].ebic);
  CHECK(one.model.theta_com == four.model.theta_com);
}

TEST_CASE("select_k reports failures", "[selection][errors]") {
  SelectionContext ctx = small_context(53, PriorKind::oracle);
  CHECK_THROWS_AS(select_k({}, ctx), Error);
  CHECK_THROWS_AS(select_k({-1.0}, ctx), Error);

  SelectionContext short_run = ctx;
  short_run.solver.max_iters = 1;
  try {
    select_k({0.0, 5.0}, short_run);
    FAIL("expected no converged candidate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_converged);
  }

  SelectionContext mismatched = ctx;
  mismatched.priors.pop_back();
  CHECK_THROWS_AS(select_k({0.0}, mismatched), Error);
}
