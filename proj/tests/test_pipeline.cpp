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

#include <filesystem>
#include <map>

#include <catch_amalgamated.hpp>

#include "jointgl/pipeline.hpp"

using namespace jointgl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("jointgl_test_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig small_config(const fs::path& out) {
  PipelineConfig cfg;
  cfg.output_dir = out.string();
  cfg.seed = 17;
  cfg.scenario.p = 8;
  cfg.scenario.num_classes = 2;
  cfg.scenario.n_per_class = 150;
  cfg.scenario.edge_density = 0.25;
  cfg.k_candidates = {0, 5, 10};
  return cfg;
}

// Every regular file under dir, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return files;
}

}  // namespace

TEST_CASE("synth, fit and eval write the documented files", "[pipeline]") {
  const fs::path dir = scratch_dir("files");
  PipelineConfig cfg = small_config(dir / "synth");
  const SyntheticScenario sc = run_synth(cfg);
  CHECK(fs::exists(dir / "synth" / "scenario.json"));
  CHECK(io::read_csv(dir / "synth" / "class_2.csv") == sc.samples[1].data);

  PipelineConfig fit = small_config(dir / "fit");
  fit.inputs = {(dir / "synth" / "class_1.csv").string(), (dir / "synth" / "class_2.csv").string()};
  const FitResult r = run_fit(fit);
  for (const char* f : {"model.json", "selection.json", "convergence.csv", "reference.json"}) {
    CHECK(fs::exists(dir / "fit" / f));
  }
  CHECK_FALSE(r.selection.has_value());
  // without priors the fit equals the uniform-weight fit on the same moments
  const JointModel direct = fit_joint(gaussianized_covariances(sc.samples), uniform_weights(8), fit.solver);
  CHECK(r.model.theta_com == direct.theta_com);
  const JointModel loaded = io::read_model(dir / "fit" / "model.json");
  CHECK(loaded.theta_hat[1] == r.model.theta_hat[1]);

  const auto reports = run_synth_eval(sc, small_config(dir / "eval"));
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].method == "independent");
  CHECK(reports[1].method == "joint");
  CHECK(reports[2].method == "joint_oracle_prior");
  CHECK(fs::exists(dir / "eval" / "report.json"));
  CHECK(fs::exists(dir / "eval" / "report.csv"));
}

TEST_CASE("fit with attention priors selects k", "[pipeline]") {
  const fs::path dir = scratch_dir("prior");
  PipelineConfig cfg = small_config(dir);
  const SyntheticScenario sc = run_synth(cfg);
  std::vector<AttentionStack> stacks;
  for (std::size_t c = 0; c < 2; ++c) stacks.push_back(oracle_attention(sc, c));
  const FitResult r = fit_pipeline(sc.samples, stacks, cfg);
  REQUIRE(r.selection.has_value());
  CHECK(r.selection->scores.size() == 3);
  CHECK(r.model.theta_com == r.selection->model.theta_com);

  stacks.pop_back();
  CHECK_THROWS_AS(fit_pipeline(sc.samples, stacks, cfg), Error);
}

TEST_CASE("seeded pipeline runs are byte-identical", "[pipeline][determinism]") {
  const fs::path dir = scratch_dir("determinism");
  for (const char* run : {"a", "b"}) {
    PipelineConfig cfg = small_config(dir / run / "synth");
    const SyntheticScenario sc = run_synth(cfg);
    PipelineConfig fit = small_config(dir / run / "fit");
    fit.inputs = {(dir / run / "synth" / "class_1.csv").string(), (dir / run / "synth" / "class_2.csv").string()};
    run_fit(fit);
    PipelineConfig eval = small_config(dir / run / "eval");
    eval.threads = run[0] == 'a' ? 1 : 3;
    run_synth_eval(sc, eval);
  }
  const auto a = snapshot(dir / "a");
  const auto b = snapshot(dir / "b");
  CHECK(a.size() == 9);
  CHECK(a == b);
}

TEST_CASE("pipeline config validation and JSON", "[pipeline][errors]") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.k_candidates = {5, 10};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.k_candidates = {0, -1};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = PipelineConfig{};
  cfg.inputs = {"/nonexistent/class_1.csv"};
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_NOTHROW(cfg.validate(false));

  PipelineConfig base;
  base.solver.rho = 0.25;
  base.k_candidates = {0, 3};
  PipelineConfig copy;
  apply_json(copy, to_json(base));
  CHECK(to_json(copy) == to_json(base));
  CHECK_THROWS_AS(apply_json(copy, io::json{{"seed", "seven"}}), Error);
}
