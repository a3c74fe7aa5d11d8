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

// jointgl command-line tool. Exit status: 0 success, 2 a fit did not
// converge, 1 any error. Errors print one "error=<code>" line on stdout and
// the diagnostic on stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "jointgl/jointgl.hpp"

namespace fs = std::filesystem;
using namespace jointgl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

/// Flag values that override the config file only when given.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> log_level;

  std::optional<double> rho, gamma_s, mu, primal_tol, dual_tol, edge_tol, gamma_ebic;
  std::optional<int> max_iters;
  std::optional<std::string> loss_scaling;
  bool penalize_diagonal = false;
  std::optional<std::string> k_candidates;

  std::vector<std::string> inputs;
  std::vector<std::string> attention;
  std::optional<std::string> output_dir;
  bool has_header = false;

  std::optional<Index> p, classes, n;
  std::optional<double> common_ratio, density;
};

std::vector<double> parse_k_list(const std::string& text) {
  std::vector<double> ks;
  std::string item;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      double v = 0.0;
      if (!io::detail::parse_double(item, v)) {
        throw Error(ErrorCode::invalid_argument, "bad k candidate '" + item + "'");
      }
      ks.push_back(v);
      item.clear();
    } else {
      item += text[i];
    }
  }
  return ks;
}

PipelineConfig resolve(const Overrides& o) {
  PipelineConfig cfg;
  if (o.config) apply_json(cfg, io::parse_json(io::read_file(*o.config), *o.config));
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.log_level) cfg.log_level = *o.log_level;
  if (o.rho) cfg.solver.rho = *o.rho;
  if (o.gamma_s) cfg.solver.gamma_s = *o.gamma_s;
  if (o.mu) cfg.solver.mu = *o.mu;
  if (o.max_iters) cfg.solver.max_iters = *o.max_iters;
  if (o.primal_tol) cfg.solver.primal_tol = *o.primal_tol;
  if (o.dual_tol) cfg.solver.dual_tol = *o.dual_tol;
  if (o.penalize_diagonal) cfg.solver.penalize_diagonal = true;
  if (o.loss_scaling) cfg.solver.loss_scaling = loss_scaling_from_string(*o.loss_scaling);
  if (o.edge_tol) cfg.edge_tol = *o.edge_tol;
  if (o.gamma_ebic) cfg.gamma_ebic = *o.gamma_ebic;
  if (o.k_candidates) cfg.k_candidates = parse_k_list(*o.k_candidates);
  if (!o.inputs.empty()) cfg.inputs = o.inputs;
  if (!o.attention.empty()) cfg.attention = o.attention;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.has_header) cfg.has_header = true;
  if (o.p) cfg.scenario.p = *o.p;
  if (o.classes) cfg.scenario.num_classes = *o.classes;
  if (o.n) cfg.scenario.n_per_class = *o.n;
  if (o.common_ratio) cfg.scenario.common_ratio = *o.common_ratio;
  if (o.density) cfg.scenario.edge_density = *o.density;
  return cfg;
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::stderr_color_mt("jointgl");
  logger->set_pattern("[%l] %v");
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") {
    throw Error(ErrorCode::invalid_argument, "unknown log level '" + level + "'");
  }
  logger->set_level(lvl);
  spdlog::set_default_logger(logger);
}

void add_solver_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--rho", o.rho, "Common-layer penalty");
  cmd->add_option("--gamma-s", o.gamma_s, "Specific-layer penalty");
  cmd->add_option("--mu", o.mu, "ADMM penalty parameter");
  cmd->add_option("--max-iters", o.max_iters, "Maximum ADMM iterations");
  cmd->add_option("--primal-tol", o.primal_tol, "Primal residual tolerance");
  cmd->add_option("--dual-tol", o.dual_tol, "Dual residual tolerance");
  cmd->add_flag("--penalize-diagonal", o.penalize_diagonal, "Also penalize diagonal entries");
  cmd->add_option("--loss-scaling", o.loss_scaling, "class_mean (default) or sum");
  cmd->add_option("--edge-tol", o.edge_tol, "Entries with |value| <= tol are not edges");
}

void add_selection_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--k-candidates", o.k_candidates, "Comma-separated k values (default 0..50)");
  cmd->add_option("--gamma-ebic", o.gamma_ebic, "eBIC gamma");
}

void add_scenario_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--p", o.p, "Number of nodes");
  cmd->add_option("--classes", o.classes, "Number of classes");
  cmd->add_option("--n", o.n, "Samples per class");
  cmd->add_option("--common-ratio", o.common_ratio, "Target share of common edges");
  cmd->add_option("--density", o.density, "Edge density of each class graph");
}

std::string class_file(const fs::path& dir, const std::string& stem, std::size_t c, const char* ext) {
  return (dir / (stem + "_" + std::to_string(c + 1) + ext)).string();
}

int exit_for(const JointModel& m) {
  if (!m.converged) {
    for (const auto& w : m.warnings) spdlog::warn("{}", w);
    return kExitNotConverged;
  }
  return kExitOk;
}

JointModel load_model(const std::string& path) { return io::read_model(path); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jointgl: joint common/specific graphical models with attention priors"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Overrides o;
  app.add_option("--config", o.config, "JSON config file; flags override its fields")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--threads", o.threads, "Worker threads for k selection");
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off");

  // gaussianize
  std::string reference_in;
  std::string output_file;
  auto* gauss = app.add_subcommand("gaussianize", "Pooled nonparanormal transform of per-class CSVs");
  gauss->add_option("--input", o.inputs, "Observation CSV, one per class")->required();
  gauss->add_option("--output-dir", o.output_dir, "Directory for transformed CSVs and reference.json");
  gauss->add_option("--reference", reference_in, "Transform with a saved reference instead of fitting one");
  gauss->add_flag("--header", o.has_header, "Input CSVs have a header line");

  // covariance
  auto* covc = app.add_subcommand("covariance", "Class second moments of transformed CSVs");
  covc->add_option("--input", o.inputs, "Transformed CSV, one per class")->required();
  covc->add_option("--output-dir", o.output_dir, "Directory for covariance_<c>.json");
  covc->add_flag("--header", o.has_header, "Input CSVs have a header line");

  // prior
  std::optional<double> prior_k;
  std::string weights_out;
  auto* prior = app.add_subcommand("prior", "Cosine prior from an attention stack");
  prior->add_option("--attention", o.attention, "Attention JSON or directory of CSVs")->required()->expected(1);
  prior->add_option("--output", output_file, "Prior CSV")->required();
  prior->add_option("--k", prior_k, "Also write adaptive weights for this k");
  prior->add_option("--weights-output", weights_out, "Adaptive weight CSV (with --k)");
  prior->add_flag("--header", o.has_header, "Attention CSVs have a header line");

  // select-k
  std::vector<std::string> cov_inputs;
  auto* sel = app.add_subcommand("select-k", "eBIC selection of the prior sharpness k");
  sel->add_option("--covariance", cov_inputs, "Covariance JSON, one per class")->required();
  sel->add_option("--attention", o.attention, "Attention stack, one per class")->required();
  sel->add_option("--output-dir", o.output_dir, "Directory for selection.json and model.json");
  sel->add_flag("--header", o.has_header, "Attention CSVs have a header line");
  add_solver_flags(sel, o);
  add_selection_flags(sel, o);

  // fit
  auto* fit = app.add_subcommand("fit", "Transform, select k and fit the joint model");
  fit->add_option("--input", o.inputs, "Observation CSV, one per class");
  fit->add_option("--attention", o.attention, "Attention stack, one per class (optional)");
  fit->add_option("--output-dir", o.output_dir, "Directory for model.json and reports");
  fit->add_flag("--header", o.has_header, "Input CSVs have a header line");
  add_solver_flags(fit, o);
  add_selection_flags(fit, o);

  // classify
  std::string model_path;
  std::string samples_path;
  bool class_prior = false;
  auto* cls = app.add_subcommand("classify", "Gaussian class scores for transformed samples (JSONL)");
  cls->add_option("--model", model_path, "Model JSON")->required();
  cls->add_option("--samples", samples_path, "Transformed sample CSV")->required();
  cls->add_option("--output", output_file, "JSONL output (default stdout)");
  cls->add_flag("--class-prior", class_prior, "Add log(n_c / N) to each score");
  cls->add_flag("--header", o.has_header, "Sample CSV has a header line");

  // message-pass
  std::size_t mp_class = 1;
  std::string mp_layer = "combined";
  std::string features_path, w_pos_path, w_neg_path;
  double mp_eps = 1e-8;
  auto* mp = app.add_subcommand("message-pass", "Sign-partitioned message passing over one class graph");
  mp->add_option("--model", model_path, "Model JSON")->required();
  mp->add_option("--class", mp_class, "1-based class index")->check(CLI::PositiveNumber);
  mp->add_option("--layer", mp_layer, "combined (theta_hat), sum (T + S_c), common or specific");
  mp->add_option("--features", features_path, "Node feature CSV, p rows")->required();
  mp->add_option("--w-pos", w_pos_path, "Positive-branch weight CSV (default identity)");
  mp->add_option("--w-neg", w_neg_path, "Negative-branch weight CSV (default identity)");
  mp->add_option("--epsilon", mp_eps, "Normalization guard");
  mp->add_option("--output", output_file, "Output CSV")->required();
  mp->add_flag("--header", o.has_header, "CSVs have a header line");
  mp->add_option("--edge-tol", o.edge_tol, "Entries with |value| <= tol are not edges");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario and its training CSVs");
  synth->add_option("--output-dir", o.output_dir, "Directory for scenario.json and class CSVs");
  add_scenario_flags(synth, o);

  // eval
  std::string scenario_path;
  auto* eval = app.add_subcommand("eval", "Score fits against a scenario's ground truth");
  eval->add_option("--scenario", scenario_path, "Scenario JSON from synth")->required();
  eval->add_option("--model", model_path, "Score this model instead of running the method comparison");
  eval->add_option("--output-dir", o.output_dir, "Directory for report.json and report.csv");
  add_solver_flags(eval, o);
  add_selection_flags(eval, o);

  // export-graph
  std::string layer_sel = "all";
  std::string format = "json";
  auto* exp = app.add_subcommand("export-graph", "Edge list with sign labels");
  exp->add_option("--model", model_path, "Model JSON")->required();
  exp->add_option("--layer", layer_sel, "all, common, specific, specific:<c>, combined or combined:<c>");
  exp->add_option("--format", format, "json or graphml")->check(CLI::IsMember({"json", "graphml"}));
  exp->add_option("--output", output_file, "Output file (default stdout)");
  exp->add_option("--edge-tol", o.edge_tol, "Entries with |value| <= tol are not edges");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cout << "error=" << to_string(ErrorCode::invalid_argument) << std::endl;
    std::cerr << e.what() << std::endl;
    return kExitError;
  }

  try {
    PipelineConfig cfg = resolve(o);
    setup_logging(cfg.log_level);
    const fs::path out_dir(cfg.output_dir);

    auto emit = [&](const std::string& text) {
      if (output_file.empty()) {
        std::cout << text;
      } else {
        io::write_file_atomic(output_file, text);
      }
    };

    if (*gauss) {
      cfg.validate();
      const auto raw = read_observations(cfg);
      fs::create_directories(out_dir);
      if (!reference_in.empty()) {
        const auto ref = io::reference_from_json(io::parse_json(io::read_file(reference_in), reference_in),
                                                 reference_in);
        for (std::size_t c = 0; c < raw.size(); ++c) {
          io::write_csv(class_file(out_dir, "transformed", c, ".csv"), ref.transform(raw[c]).data);
        }
      } else {
        const auto transformed = nonparanormal_transform_pooled(raw);
        for (std::size_t c = 0; c < raw.size(); ++c) {
          io::write_csv(class_file(out_dir, "transformed", c, ".csv"), transformed[c].data);
          for (Index j : transformed[c].degenerate_columns) spdlog::warn("column {} is constant", j);
        }
        io::write_file_atomic(out_dir / "reference.json", io::dump(io::to_json(NonparanormalReference(raw))));
      }
      spdlog::info("transformed {} classes", raw.size());
      return kExitOk;
    }

    if (*covc) {
      cfg.validate();
      fs::create_directories(out_dir);
      for (std::size_t c = 0; c < cfg.inputs.size(); ++c) {
        ObservationMatrix obs;
        obs.class_id = static_cast<int>(c + 1);
        obs.transformed = true;
        obs.data = io::read_csv(cfg.inputs[c], cfg.has_header);
        io::write_file_atomic(class_file(out_dir, "covariance", c, ".json"),
                              io::dump(io::to_json(class_covariance(obs))));
      }
      return kExitOk;
    }

    if (*prior) {
      cfg.validate();
      const AttentionStack stack = io::read_attention(cfg.attention.front(), cfg.has_header);
      const PriorMatrix pm = attention_prior(stack);
      io::write_csv(output_file, pm.w);
      if (prior_k) {
        detail::require(!weights_out.empty(), ErrorCode::invalid_argument, "--k needs --weights-output");
        io::write_csv(weights_out, adaptive_weights(pm, *prior_k).w_tilde);
      }
      return kExitOk;
    }

    if (*sel) {
      cfg.validate();
      SelectionContext ctx;
      for (const auto& path : cov_inputs) {
        ctx.covs.push_back(io::covariance_from_json(io::parse_json(io::read_file(path), path), path));
      }
      for (const auto& stack : read_attention(cfg)) ctx.priors.push_back(attention_prior(stack));
      ctx.solver = cfg.solver;
      ctx.gamma_ebic = cfg.gamma_ebic;
      ctx.edge_tol = cfg.edge_tol;
      ctx.threads = cfg.threads;
      const KSelection result = select_k(cfg.k_candidates, ctx);
      for (const auto& w : result.warnings) spdlog::warn("{}", w);
      fs::create_directories(out_dir);
      io::write_file_atomic(out_dir / "selection.json", io::dump(io::to_json(result)));
      io::write_file_atomic(out_dir / "model.json", io::dump(io::to_json(result.model)));
      spdlog::info("k* = {}", result.k_star);
      return exit_for(result.model);
    }

    if (*fit) {
      const FitResult r = run_fit(cfg);
      if (r.selection) {
        for (const auto& w : r.selection->warnings) spdlog::warn("{}", w);
      }
      spdlog::info("fit: {} iterations, converged={}, k*={}", r.model.iterations, r.model.converged, r.model.k);
      return exit_for(r.model);
    }

    if (*cls) {
      const JointModel model = load_model(model_path);
      const Matrix samples = io::read_csv(samples_path, cfg.has_header);
      ClassifierOptions opts;
      opts.class_prior = class_prior;
      const GaussianClassifier classifier(model, opts);
      std::string out;
      for (Index i = 0; i < samples.rows(); ++i) {
        const ClassifierScores s = classifier(samples.row(i).transpose());
        io::json line{{"sample", i}, {"scores", io::to_json(s.scores)}, {"predicted", s.predicted + 1}};
        out += line.dump() + "\n";
      }
      emit(out);
      return kExitOk;
    }

    if (*mp) {
      const JointModel model = load_model(model_path);
      detail::require(mp_class <= model.num_classes(), ErrorCode::invalid_argument,
                      "--class out of range: model has " + std::to_string(model.num_classes()) + " classes");
      const std::size_t c = mp_class - 1;
      Matrix theta;
      if (mp_layer == "combined") theta = model.theta_hat[c];
      else if (mp_layer == "sum") theta = model.theta_sum(c);
      else if (mp_layer == "common") theta = model.theta_com;
      else if (mp_layer == "specific") theta = model.s[c];
      else throw Error(ErrorCode::invalid_argument, "unknown layer '" + mp_layer + "'");
      NodeFeatures nodes{io::read_csv(features_path, cfg.has_header)};
      const Index d = nodes.features.cols();
      MessagePassingWeights w = MessagePassingWeights::identity(d);
      if (!w_pos_path.empty()) w.w_pos = io::read_csv(w_pos_path, cfg.has_header);
      if (!w_neg_path.empty()) w.w_neg = io::read_csv(w_neg_path, cfg.has_header);
      w.epsilon = mp_eps;
      if (o.edge_tol) w.edge_tol = *o.edge_tol;
      io::write_csv(output_file, signed_message_passing(theta, nodes, w));
      return kExitOk;
    }

    if (*synth) {
      const SyntheticScenario sc = run_synth(cfg);
      spdlog::info("scenario seed {} written to {}", sc.params.seed, cfg.output_dir);
      return kExitOk;
    }

    if (*eval) {
      const SyntheticScenario sc =
          io::scenario_from_json(io::parse_json(io::read_file(scenario_path), scenario_path), scenario_path);
      fs::create_directories(out_dir);
      if (!model_path.empty()) {
        RecoveryOptions ro;
        ro.edge_tol = cfg.edge_tol;
        const JointModel model = load_model(model_path);
        RecoveryReport r = score_recovery(sc, model, ro, "model");
        r.has_k_star = true;
        r.k_star = model.k;
        io::write_file_atomic(out_dir / "report.json", io::dump(reports_to_json(sc, {r})));
        io::write_file_atomic(out_dir / "report.csv", reports_to_csv({r}));
        return kExitOk;
      }
      const auto reports = run_synth_eval(sc, cfg);
      bool converged = true;
      for (const auto& r : reports) {
        spdlog::info("{}: combined F1 {:.3f}, CSR {:.3f}", r.method, r.combined.f1(), r.csr_estimated);
        if (r.method != "independent") converged = converged && r.converged;
      }
      return converged ? kExitOk : kExitNotConverged;
    }

    if (*exp) {
      const JointModel model = load_model(model_path);
      const auto edges = io::collect_edges(model, layer_sel, cfg.edge_tol);
      emit(format == "graphml" ? io::edges_to_graphml(edges, model.p())
                               : io::dump(io::edges_to_json(edges)));
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cout << "error=" << to_string(e.code()) << std::endl;
    std::cerr << e.what() << std::endl;
    return kExitError;
  } catch (const std::exception& e) {
    std::cout << "error=" << to_string(ErrorCode::io) << std::endl;
    std::cerr << e.what() << std::endl;
    return kExitError;
  }
  return kExitError;
}
