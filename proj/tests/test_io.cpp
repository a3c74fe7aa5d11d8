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
#include <filesystem>
#include <functional>
#include <limits>

#include <catch_amalgamated.hpp>

#include "jointgl/io.hpp"
#include "jointgl/random.hpp"

using namespace jointgl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("jointgl_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

JointModel small_model() {
  Rng rng(70, 0);
  SolverConfig cfg;
  std::vector<ClassCovariance> covs;
  for (int c = 0; c < 2; ++c) {
    Matrix a(4, 4);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    Matrix s = a * a.transpose() / 4.0 + 0.5 * Matrix::Identity(4, 4);
    symmetrize(s);
    Vector mu(4);
    for (Index i = 0; i < 4; ++i) mu(i) = rng.normal();
    covs.push_back(ClassCovariance{s, 50 + c, mu});
  }
  return fit_joint(covs, uniform_weights(4), cfg);
}

}  // namespace

TEST_CASE("CSV round-trips doubles exactly", "[io]") {
  Rng rng(71, 0);
  Matrix m(5, 3);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * std::pow(10.0, rng.below(20) - 10.0);
  m(0, 0) = std::numeric_limits<double>::denorm_min();
  m(1, 1) = -0.0;
  m(2, 2) = 0.1;
  CHECK(io::parse_csv(io::to_csv(m)) == m);
  CHECK(io::format_double(0.1) == "0.10000000000000001");

  const fs::path dir = scratch_dir("csv");
  io::write_csv(dir / "m.csv", m);
  CHECK(io::read_csv(dir / "m.csv") == m);
  CHECK_FALSE(fs::exists(dir / "m.csv.tmp"));
}

TEST_CASE("CSV parsing accepts headers and blank lines", "[io]") {
  const Matrix m = io::parse_csv("a,b\n1, 2\n\n 3 ,4e-1\n", true);
  REQUIRE(m.rows() == 2);
  CHECK(m(1, 1) == 0.4);
  CHECK(m(1, 0) == 3.0);
}

TEST_CASE("CSV errors carry line and column", "[io][errors]") {
  try {
    io::parse_csv("1,2\n3,x\n", false, "obs.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::csv_parse);
    CHECK(std::string(e.what()).find("obs.csv: line 2, column 2") != std::string::npos);
  }
  try {
    io::parse_csv("1,2\n3,4,5\n", false, "obs.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::csv_parse);
    CHECK(std::string(e.what()).find("line 2 has 3 columns, expected 2") != std::string::npos);
  }
  CHECK(code_of([] { io::parse_csv("1,nan\n"); }) == ErrorCode::csv_parse);
  CHECK(code_of([] { io::parse_csv("1,,2\n"); }) == ErrorCode::csv_parse);
  CHECK(code_of([] { io::read_csv("/nonexistent/jointgl.csv"); }) == ErrorCode::io);
}

TEST_CASE("model JSON round-trips exactly", "[io]") {
  const JointModel m = small_model();
  const std::string text = io::dump(io::to_json(m));
  const JointModel back = io::model_from_json(io::parse_json(text, "model"));
  CHECK(back.theta_com == m.theta_com);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(back.s[c] == m.s[c]);
    CHECK(back.theta_hat[c] == m.theta_hat[c]);
    CHECK(back.mu_hat[c] == m.mu_hat[c]);
    CHECK(back.n_c[c] == m.n_c[c]);
  }
  CHECK(back.config.rho == m.config.rho);
  CHECK(back.config.loss_scaling == m.config.loss_scaling);
  CHECK(back.converged == m.converged);
  CHECK(io::dump(io::to_json(back)) == text);
}

TEST_CASE("model JSON shape errors", "[io][errors]") {
  io::json j = io::to_json(small_model());
  j["theta_hat"].erase(1);
  CHECK(code_of([&] { io::model_from_json(j); }) == ErrorCode::dimension_mismatch);
  CHECK(code_of([] { io::parse_json("{", "broken.json"); }) == ErrorCode::json_parse);
  io::json missing = io::to_json(small_model());
  missing.erase("theta_com");
  CHECK_THROWS_AS(io::model_from_json(missing), Error);
}

TEST_CASE("reference and covariance JSON round-trip", "[io]") {
  Rng rng(72, 0);
  ObservationMatrix a;
  a.data = Matrix(20, 3);
  for (Index i = 0; i < a.data.size(); ++i) a.data.data()[i] = rng.normal();
  const NonparanormalReference ref({a});
  const NonparanormalReference back = io::reference_from_json(io::to_json(ref));
  CHECK(back.transform(a).data == ref.transform(a).data);

  const ClassCovariance cov = class_covariance(ref.transform(a));
  const ClassCovariance cb = io::covariance_from_json(io::to_json(cov));
  CHECK(cb.sigma_hat == cov.sigma_hat);
  CHECK(cb.mu_hat == cov.mu_hat);
  CHECK(cb.n_c == cov.n_c);
}

TEST_CASE("attention stacks load from JSON or a CSV directory", "[io]") {
  Matrix a(2, 3), b(2, 3);
  a << 0.2, 0.3, 0.5, 1.0, 0.0, 0.0;
  b << 0.5, 0.5, 0.0, 0.1, 0.1, 0.8;
  const fs::path dir = scratch_dir("attn");
  io::write_csv(dir / "b.csv", b);
  io::write_csv(dir / "a.csv", a);
  const AttentionStack from_dir = io::read_attention(dir);
  REQUIRE(from_dir.matrices.size() == 2);
  CHECK(from_dir.matrices[0] == a);
  CHECK(from_dir.matrices[1] == b);

  io::write_file_atomic(dir.parent_path() / "jointgl_test_io_attn.json", io::dump(io::to_json(from_dir)));
  const AttentionStack from_json = io::read_attention(dir.parent_path() / "jointgl_test_io_attn.json");
  CHECK(from_json.matrices[1] == b);

  io::json bad = io::to_json(from_dir);
  bad["p"] = 5;
  CHECK(code_of([&] { io::attention_from_json(bad); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("edge export labels signs and layers", "[io]") {
  JointModel m;
  m.theta_com = Matrix::Identity(3, 3);
  m.theta_com(0, 1) = m.theta_com(1, 0) = 0.4;
  Matrix s = Matrix::Zero(3, 3);
  s(1, 2) = s(2, 1) = -0.25;
  m.s = {s};
  m.theta_hat = {m.theta_sum(0)};

  const auto all = io::collect_edges(m, "all", 1e-6);
  REQUIRE(all.size() == 2);
  const io::json j = io::edges_to_json(all);
  CHECK(j[0]["sign"] == "+");
  CHECK(j[0]["relation"] == "mutually_exclusive");
  CHECK(j[0]["layer"] == "common");
  CHECK(j[1]["sign"] == "-");
  CHECK(j[1]["relation"] == "synergistic");
  CHECK(j[1]["layer"] == "specific:1");
  for (const auto& e : j) {
    if (e["value"].get<double>() < 0.0) CHECK(e["relation"] == "synergistic");
  }

  CHECK(io::collect_edges(m, "combined:1", 1e-6).size() == 2);
  CHECK(io::collect_edges(m, "specific", 1e-6).size() == 1);
  CHECK(io::collect_edges(m, "common", 0.5).empty());

  const std::string xml = io::edges_to_graphml(io::collect_edges(m, "combined", 1e-6), 3);
  CHECK(xml.find("<node id=\"n2\"/>") != std::string::npos);
  CHECK(xml.find("<edge source=\"n1\" target=\"n2\">") != std::string::npos);
  CHECK(xml.find("<data key=\"sign\">-</data>") != std::string::npos);

  for (const char* bad : {"specific:0", "specific:2", "combined:x", "nodes", ""}) {
    CHECK(code_of([&] { io::collect_edges(m, bad, 1e-6); }) == ErrorCode::invalid_argument);
  }
}

TEST_CASE("scenario JSON regenerates and detects tampering", "[io]") {
  ScenarioParams sp;
  sp.p = 8;
  sp.num_classes = 2;
  sp.seed = 31;
  const SyntheticScenario sc = generate_scenario(sp);
  io::json j = io::to_json(sc);
  const SyntheticScenario back = io::scenario_from_json(j);
  CHECK(back.samples[1].data == sc.samples[1].data);

  io::json tampered = j;
  tampered["theta_com_true"][0][1] = 0.123;
  CHECK(code_of([&] { io::scenario_from_json(tampered); }) == ErrorCode::invalid_argument);
  io::json other = j;
  other["generator"] = "mt19937";
  CHECK(code_of([&] { io::scenario_from_json(other); }) == ErrorCode::invalid_argument);
}

TEST_CASE("solver config JSON", "[io]") {
  SolverConfig c;
  c.rho = 0.3;
  c.loss_scaling = LossScaling::sum;
  c.penalize_diagonal = true;
  const SolverConfig back = io::solver_config_from_json(io::to_json(c));
  CHECK(back.rho == 0.3);
  CHECK(back.loss_scaling == LossScaling::sum);
  CHECK(back.penalize_diagonal);
  io::json bad = io::to_json(c);
  bad["loss_scaling"] = "median";
  CHECK_THROWS_AS(io::solver_config_from_json(bad), Error);
}
