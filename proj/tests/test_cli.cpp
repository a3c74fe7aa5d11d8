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

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include <catch_amalgamated.hpp>

#include "jointgl/pipeline.hpp"

using namespace jointgl;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI with stderr discarded and returns its exit code and stdout.
Run cli(const std::string& args) {
  const std::string cmd = std::string(JOINTGL_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("jointgl_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return files;
}

const char* kSynth = "synth --p 8 --classes 2 --n 150 --density 0.25 --seed 17";
const char* kSelection = "--k-candidates 0,5,10";

// Runs every subcommand once, writing into dir.
void full_chain(const fs::path& dir) {
  REQUIRE(cli(std::string(kSynth) + " --output-dir " + q(dir / "synth")).status == 0);
  const std::string c1 = q(dir / "synth" / "class_1.csv");
  const std::string c2 = q(dir / "synth" / "class_2.csv");

  // oracle attention stacks from the scenario, written the way a user would
  const SyntheticScenario sc = io::scenario_from_json(io::parse_json(io::read_file(dir / "synth" / "scenario.json"), "s"));
  for (std::size_t c = 0; c < 2; ++c) {
    io::write_file_atomic(dir / ("attention_" + std::to_string(c + 1) + ".json"),
                          io::dump(io::to_json(oracle_attention(sc, c))));
  }
  const std::string a1 = q(dir / "attention_1.json");
  const std::string a2 = q(dir / "attention_2.json");

  CHECK(cli("gaussianize --input " + c1 + " " + c2 + " --output-dir " + q(dir / "g")).status == 0);
  CHECK(cli("covariance --input " + q(dir / "g" / "transformed_1.csv") + " " + q(dir / "g" / "transformed_2.csv") +
            " --output-dir " + q(dir / "cov")).status == 0);
  CHECK(cli("prior --attention " + a1 + " --output " + q(dir / "prior_1.csv") + " --k 10 --weights-output " +
            q(dir / "weights_1.csv")).status == 0);
  CHECK(cli("select-k --covariance " + q(dir / "cov" / "covariance_1.json") + " " +
            q(dir / "cov" / "covariance_2.json") + " --attention " + a1 + " " + a2 + " " + kSelection +
            " --output-dir " + q(dir / "sel")).status == 0);
  CHECK(cli("fit --input " + c1 + " " + c2 + " --attention " + a1 + " " + a2 + " " + kSelection +
            " --output-dir " + q(dir / "fit")).status == 0);
  CHECK(cli("classify --model " + q(dir / "fit" / "model.json") + " --samples " + q(dir / "g" / "transformed_1.csv") +
            " --output " + q(dir / "classify.jsonl")).status == 0);

  io::write_csv(dir / "features.csv", Matrix::Constant(8, 2, 0.5));
  CHECK(cli("message-pass --model " + q(dir / "fit" / "model.json") + " --class 2 --features " +
            q(dir / "features.csv") + " --output " + q(dir / "messages.csv")).status == 0);
  CHECK(cli("eval --scenario " + q(dir / "synth" / "scenario.json") + " " + kSelection + " --output-dir " +
            q(dir / "eval")).status == 0);
  CHECK(cli("export-graph --model " + q(dir / "fit" / "model.json") + " --layer all --output " +
            q(dir / "edges.json")).status == 0);
  CHECK(cli("export-graph --model " + q(dir / "fit" / "model.json") + " --format graphml --output " +
            q(dir / "edges.graphml")).status == 0);
}

}  // namespace

TEST_CASE("every subcommand runs and reruns are byte-identical", "[cli][determinism]") {
  const fs::path dir = scratch_dir("chain");
  full_chain(dir / "a");
  full_chain(dir / "b");
  const auto a = snapshot(dir / "a");
  const auto b = snapshot(dir / "b");
  CHECK(a.size() >= 25);
  CHECK(a == b);

  const std::string lines = a.at("classify.jsonl");
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 150);
  CHECK(lines.rfind("{\"predicted\":", 0) == 0);
  CHECK(io::read_csv(dir / "a" / "messages.csv").rows() == 8);
}

TEST_CASE("CLI fit matches the library pipeline", "[cli]") {
  const fs::path dir = scratch_dir("library");
  REQUIRE(cli(std::string(kSynth) + " --output-dir " + q(dir / "synth")).status == 0);
  PipelineConfig cfg;
  cfg.inputs = {(dir / "synth" / "class_1.csv").string(), (dir / "synth" / "class_2.csv").string()};
  cfg.output_dir = (dir / "lib").string();
  cfg.solver.rho = 0.07;
  run_fit(cfg);
  REQUIRE(cli("fit --input " + q(cfg.inputs[0]) + " " + q(cfg.inputs[1]) + " --rho 0.07 --output-dir " +
              q(dir / "cli")).status == 0);
  CHECK(snapshot(dir / "lib") == snapshot(dir / "cli"));
}

TEST_CASE("config file values yield to flags", "[cli]") {
  const fs::path dir = scratch_dir("config");
  io::write_file_atomic(dir / "config.json",
                        io::dump(io::json{{"seed", 5}, {"scenario", {{"p", 6}, {"C", 2}, {"n_c", 40}}}}));
  REQUIRE(cli("--config " + q(dir / "config.json") + " synth --output-dir " + q(dir / "one")).status == 0);
  REQUIRE(cli("--config " + q(dir / "config.json") + " synth --p 7 --output-dir " + q(dir / "two")).status == 0);
  const auto one = io::parse_json(io::read_file(dir / "one" / "scenario.json"), "one");
  const auto two = io::parse_json(io::read_file(dir / "two" / "scenario.json"), "two");
  CHECK(one["params"]["p"] == 6);
  CHECK(one["params"]["seed"] == 5);
  CHECK(two["params"]["p"] == 7);
  CHECK(two["params"]["C"] == 2);
}

TEST_CASE("errors print a code and exit nonzero", "[cli][errors]") {
  const fs::path dir = scratch_dir("errors");
  io::write_file_atomic(dir / "bad.csv", "1,2\n3,oops\n");
  Run r = cli("fit --input " + q(dir / "bad.csv") + " --output-dir " + q(dir / "out"));
  CHECK(r.status == 1);
  CHECK(r.out == "error=csv_parse\n");

  REQUIRE(cli(std::string(kSynth) + " --output-dir " + q(dir / "synth")).status == 0);
  const std::string c1 = q(dir / "synth" / "class_1.csv");
  const std::string c2 = q(dir / "synth" / "class_2.csv");
  REQUIRE(cli("fit --input " + c1 + " " + c2 + " --output-dir " + q(dir / "fit")).status == 0);

  r = cli("export-graph --model " + q(dir / "fit" / "model.json") + " --layer nodes");
  CHECK(r.status == 1);
  CHECK(r.out == "error=invalid_argument\n");

  r = cli("fit --input " + c1 + " " + c2 + " --max-iters 2 --output-dir " + q(dir / "short"));
  CHECK(r.status == 2);
  CHECK(fs::exists(dir / "short" / "model.json"));

  CHECK(cli("fit --input " + q(dir / "missing.csv")).status == 1);
  CHECK(cli("classify --model " + q(dir / "fit" / "model.json")).status != 0);
  CHECK(cli("no-such-command").status != 0);
  CHECK(cli("fit --input " + c1 + " --loss-scaling median").status == 1);
}
