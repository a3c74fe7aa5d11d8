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

// End-to-end runs shared by the command-line tool and in-process callers, so
// both produce the same numbers from the same inputs.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jointgl/admm.hpp"
#include "jointgl/io.hpp"
#include "jointgl/model_selection.hpp"
#include "jointgl/priors.hpp"
#include "jointgl/synthgen.hpp"

namespace jointgl {

struct PipelineConfig {
  std::vector<std::string> inputs;     // one observation CSV per class
  std::vector<std::string> attention;  // optional, one stack per class
  std::string output_dir = ".";
  bool has_header = false;
  SolverConfig solver;
  std::vector<double> k_candidates = default_k_candidates();
  double gamma_ebic = 0.5;
  double edge_tol = 1e-6;
  std::uint64_t seed = 7;
  int threads = 1;
  std::string log_level = "info";
  ScenarioParams scenario;

  static std::vector<double> default_k_candidates() {
    std::vector<double> ks;
    for (int k = 0; k <= 50; ++k) ks.push_back(k);
    return ks;
  }

  void validate(bool check_inputs = true) const {
    solver.validate();
    detail::require(!k_candidates.empty(), ErrorCode::invalid_argument, "k_candidates is empty");
    detail::require(std::find(k_candidates.begin(), k_candidates.end(), 0.0) != k_candidates.end(),
                    ErrorCode::invalid_argument, "k_candidates must contain 0");
    for (double k : k_candidates) {
      detail::require(k >= 0.0 && std::isfinite(k), ErrorCode::invalid_argument,
                      "k_candidates must be finite and nonnegative");
    }
    detail::require(gamma_ebic >= 0.0, ErrorCode::invalid_argument, "gamma_ebic must be >= 0");
    detail::require(edge_tol >= 0.0, ErrorCode::invalid_argument, "edge_tol must be >= 0");
    detail::require(threads >= 1, ErrorCode::invalid_argument, "threads must be >= 1");
    if (!check_inputs) return;
    for (const auto& path : inputs) {
      detail::require(std::filesystem::exists(path), ErrorCode::io, "input not found: " + path);
    }
    for (const auto& path : attention) {
      detail::require(std::filesystem::exists(path), ErrorCode::io, "attention input not found: " + path);
    }
  }
};

inline void apply_json(PipelineConfig& cfg, const io::json& j) {
  io::guarded("config", [&] {
    if (j.contains("inputs")) cfg.inputs = j.at("inputs").get<std::vector<std::string>>();
    if (j.contains("attention")) cfg.attention = j.at("attention").get<std::vector<std::string>>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("has_header")) cfg.has_header = j.at("has_header").get<bool>();
    if (j.contains("solver")) cfg.solver = io::solver_config_from_json(j.at("solver"), cfg.solver);
    if (j.contains("k_candidates")) cfg.k_candidates = j.at("k_candidates").get<std::vector<double>>();
    if (j.contains("gamma_ebic")) cfg.gamma_ebic = j.at("gamma_ebic").get<double>();
    if (j.contains("edge_tol")) cfg.edge_tol = j.at("edge_tol").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("log_level")) cfg.log_level = j.at("log_level").get<std::string>();
    if (j.contains("scenario")) cfg.scenario = io::scenario_params_from_json(j.at("scenario"), cfg.scenario);
    return 0;
  });
}

inline io::json to_json(const PipelineConfig& cfg) {
  return io::json{{"inputs", cfg.inputs},
                  {"attention", cfg.attention},
                  {"output_dir", cfg.output_dir},
                  {"has_header", cfg.has_header},
                  {"solver", io::to_json(cfg.solver)},
                  {"k_candidates", cfg.k_candidates},
                  {"gamma_ebic", cfg.gamma_ebic},
                  {"edge_tol", cfg.edge_tol},
                  {"seed", cfg.seed},
                  {"threads", cfg.threads},
                  {"log_level", cfg.log_level},
                  {"scenario", io::to_json(cfg.scenario)}};
}

// ---------------------------------------------------------------------------
// fit

struct FitResult {
  NonparanormalReference reference;
  std::vector<ClassCovariance> covs;
  std::optional<KSelection> selection;  // set when attention priors were given
  JointModel model;
};

/// Pooled transform, class moments, optional eBIC selection over k, fit.
/// Without priors the fit uses uniform weights 0.5, which is exactly the k = 0
/// member of every prior's family, and records k* = 0.
inline FitResult fit_pipeline(const std::vector<ObservationMatrix>& raw,
                              const std::vector<AttentionStack>& attention, const PipelineConfig& cfg) {
  detail::require(raw.size() >= 1, ErrorCode::invalid_argument, "fit: no classes");
  detail::require(attention.empty() || attention.size() == raw.size(), ErrorCode::dimension_mismatch,
                  "fit: need one attention stack per class");
  FitResult out;
  out.reference = NonparanormalReference(raw);
  out.covs = gaussianized_covariances(raw);
  if (attention.empty()) {
    out.model = fit_joint(out.covs, uniform_weights(out.covs.front().p()), cfg.solver);
    return out;
  }
  SelectionContext ctx;
  ctx.covs = out.covs;
  for (const auto& stack : attention) ctx.priors.push_back(attention_prior(stack));
  ctx.solver = cfg.solver;
  ctx.gamma_ebic = cfg.gamma_ebic;
  ctx.edge_tol = cfg.edge_tol;
  ctx.threads = cfg.threads;
  out.selection = select_k(cfg.k_candidates, ctx);
  out.model = out.selection->model;
  return out;
}

inline std::vector<ObservationMatrix> read_observations(const PipelineConfig& cfg) {
  std::vector<ObservationMatrix> raw;
  for (std::size_t c = 0; c < cfg.inputs.size(); ++c) {
    ObservationMatrix obs;
    obs.class_id = static_cast<int>(c + 1);
    obs.data = io::read_csv(cfg.inputs[c], cfg.has_header);
    raw.push_back(std::move(obs));
  }
  return raw;
}

inline std::vector<AttentionStack> read_attention(const PipelineConfig& cfg) {
  std::vector<AttentionStack> stacks;
  for (std::size_t c = 0; c < cfg.attention.size(); ++c) {
    AttentionStack s = io::read_attention(cfg.attention[c], cfg.has_header);
    s.class_id = static_cast<int>(c + 1);
    stacks.push_back(std::move(s));
  }
  return stacks;
}

inline io::json selection_report(const FitResult& r) {
  if (r.selection) return io::to_json(*r.selection);
  return io::json{{"k_star", 0.0}, {"scores", io::json::array()}, {"warnings", {"no prior supplied; k fixed at 0"}}};
}

inline std::string convergence_log(const JointModel& m) {
  std::string out = "iteration,primal,dual,objective,min_eigenvalue\n";
  for (std::size_t i = 0; i < m.primal_history.size(); ++i) {
    out += std::to_string(i + 1) + ',' + io::format_double(m.primal_history[i]) + ',' +
           io::format_double(m.dual_history[i]) + ',' +
           io::format_double(i < m.objective_history.size() ? m.objective_history[i] : 0.0) + ',' +
           io::format_double(i < m.min_eigenvalue_history.size() ? m.min_eigenvalue_history[i] : 0.0) + '\n';
  }
  return out;
}

/// Writes model.json, selection.json, convergence.csv and reference.json
/// into cfg.output_dir.
inline FitResult run_fit(const PipelineConfig& cfg) {
  cfg.validate();
  detail::require(!cfg.inputs.empty(), ErrorCode::invalid_argument, "fit: no input CSVs given");
  FitResult r = fit_pipeline(read_observations(cfg), read_attention(cfg), cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "model.json", io::dump(io::to_json(r.model)));
  io::write_file_atomic(dir / "selection.json", io::dump(selection_report(r)));
  io::write_file_atomic(dir / "convergence.csv", convergence_log(r.model));
  io::write_file_atomic(dir / "reference.json", io::dump(io::to_json(r.reference)));
  return r;
}

// ---------------------------------------------------------------------------
// synth / eval

/// Writes scenario.json and one training CSV per class (class_<c>.csv).
inline SyntheticScenario run_synth(const PipelineConfig& cfg) {
  ScenarioParams params = cfg.scenario;
  params.seed = cfg.seed;
  SyntheticScenario sc = generate_scenario(params);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "scenario.json", io::dump(io::to_json(sc)));
  for (std::size_t c = 0; c < sc.num_classes(); ++c) {
    io::write_csv(dir / ("class_" + std::to_string(c + 1) + ".csv"), sc.samples[c].data);
  }
  return sc;
}

/// Independent per-class reference solutions (lambda = rho), the joint model
/// without a prior, and the joint model with the oracle prior and eBIC
/// selection, all scored against the scenario's ground truth.
inline std::vector<RecoveryReport> synth_eval(const SyntheticScenario& sc, const PipelineConfig& cfg) {
  RecoveryOptions ro;
  ro.edge_tol = cfg.edge_tol;
  const auto covs = gaussianized_covariances(sc.samples);
  std::vector<RecoveryReport> reports;

  reports.push_back(score_recovery(sc, fit_independent(covs, cfg.solver.rho), ro, "independent"));
  reports.push_back(score_recovery(sc, fit_joint(covs, uniform_weights(sc.p()), cfg.solver), ro, "joint"));
  reports.back().has_k_star = true;

  SelectionContext ctx;
  ctx.covs = covs;
  ctx.priors = build_priors(sc, PriorKind::oracle, sc.params.seed);
  ctx.solver = cfg.solver;
  ctx.gamma_ebic = cfg.gamma_ebic;
  ctx.edge_tol = cfg.edge_tol;
  ctx.threads = cfg.threads;
  const KSelection sel = select_k(cfg.k_candidates, ctx);
  RecoveryReport prior = score_recovery(sc, sel.model, ro, "joint_oracle_prior");
  prior.has_k_star = true;
  prior.k_star = sel.k_star;
  reports.push_back(std::move(prior));
  return reports;
}

inline io::json reports_to_json(const SyntheticScenario& sc, const std::vector<RecoveryReport>& reports) {
  io::json arr = io::json::array();
  for (const auto& r : reports) arr.push_back(io::to_json(r));
  return io::json{{"scenario", io::to_json(sc.params)}, {"generator", sc.generator}, {"reports", std::move(arr)}};
}

inline std::string reports_to_csv(const std::vector<RecoveryReport>& reports) {
  std::string out = io::report_csv_header();
  for (const auto& r : reports) out += io::report_csv_row(r);
  return out;
}

/// Writes report.json and report.csv into cfg.output_dir.
inline std::vector<RecoveryReport> run_synth_eval(const SyntheticScenario& sc, const PipelineConfig& cfg) {
  cfg.validate(false);
  auto reports = synth_eval(sc, cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "report.json", io::dump(reports_to_json(sc, reports)));
  io::write_file_atomic(dir / "report.csv", reports_to_csv(reports));
  return reports;
}

}  // namespace jointgl
