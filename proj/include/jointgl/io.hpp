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

// File formats: CSV matrices and the JSON documents exchanged by the CLI.
// Field names are documented in docs/formats.md.

#pragma once

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jointgl/admm.hpp"
#include "jointgl/core.hpp"
#include "jointgl/gaussianize.hpp"
#include "jointgl/model_selection.hpp"
#include "jointgl/priors.hpp"
#include "jointgl/synthgen.hpp"

namespace jointgl::io {

using json = nlohmann::json;

/// Shortest-round-trip is not required here; 17 significant digits always
/// reproduce the double exactly.
inline std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary file and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot rename " + tmp.string() + " to " + path.string());
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses a numeric CSV document. With has_header the first non-empty line
/// is skipped. Ragged rows and non-numeric fields are reported with their
/// 1-based line and column.
inline Matrix parse_csv(const std::string& text, bool has_header = false,
                        const std::string& source = "<csv>") {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::size_t col = 0;
    std::string_view rest(line);
    while (true) {
      ++col;
      const auto comma = rest.find(',');
      const std::string_view field = rest.substr(0, comma);
      double v = 0.0;
      if (!detail::parse_double(field, v)) {
        throw Error(ErrorCode::csv_parse, source + ": line " + std::to_string(line_no) + ", column " +
                                              std::to_string(col) + ": not a number: '" +
                                              std::string(detail::trim(field)) + "'");
      }
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::csv_parse, source + ": line " + std::to_string(line_no) +
                                              ", column " + std::to_string(col) + ": non-finite value");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw Error(ErrorCode::csv_parse, source + ": line " + std::to_string(line_no) + " has " +
                                            std::to_string(row.size()) + " columns, expected " +
                                            std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

inline Matrix read_csv(const std::filesystem::path& path, bool has_header = false) {
  return parse_csv(read_file(path), has_header, path.string());
}

inline std::string to_csv(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path, const Matrix& m) {
  write_file_atomic(path, to_csv(m));
}

// ---------------------------------------------------------------------------
// JSON helpers. Doubles go through nlohmann's shortest round-trip printer.

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::json_parse, what + ": expected an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(ErrorCode::json_parse, what + ": row " + std::to_string(i) + " is ragged");
    }
    for (Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw Error(ErrorCode::json_parse, what + ": non-numeric entry");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::json_parse, what + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::json_parse, what + ": non-numeric entry");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::json_parse, source + ": " + e.what());
  }
}

template <typename F>
auto guarded(const std::string& source, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::json_parse, source + ": " + e.what());
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// ClassCovariance

inline json to_json(const ClassCovariance& cov) {
  return json{{"p", cov.p()},
              {"n_c", cov.n_c},
              {"sigma_hat", to_json(cov.sigma_hat)},
              {"mu_hat", to_json(cov.mu_hat)}};
}

inline ClassCovariance covariance_from_json(const json& j, const std::string& source = "covariance") {
  return guarded(source, [&] {
    ClassCovariance cov;
    cov.n_c = j.at("n_c").get<Index>();
    cov.sigma_hat = matrix_from_json(j.at("sigma_hat"), source + ".sigma_hat");
    cov.mu_hat = vector_from_json(j.at("mu_hat"), source + ".mu_hat");
    if (j.contains("p") && j.at("p").get<Index>() != cov.sigma_hat.rows()) {
      throw Error(ErrorCode::dimension_mismatch, source + ": p disagrees with sigma_hat");
    }
    return cov;
  });
}

// ---------------------------------------------------------------------------
// NonparanormalReference

inline json to_json(const NonparanormalReference& ref) {
  return json{{"p", ref.p()}, {"columns", ref.columns()}};
}

inline NonparanormalReference reference_from_json(const json& j, const std::string& source = "reference") {
  return guarded(source, [&] {
    auto cols = j.at("columns").get<std::vector<std::vector<double>>>();
    if (j.contains("p") && j.at("p").get<std::size_t>() != cols.size()) {
      throw Error(ErrorCode::dimension_mismatch, source + ": p disagrees with columns");
    }
    return NonparanormalReference::from_sorted_columns(std::move(cols));
  });
}

// ---------------------------------------------------------------------------
// AttentionStack

inline json to_json(const AttentionStack& stack) {
  json mats = json::array();
  for (const auto& m : stack.matrices) mats.push_back(to_json(m));
  return json{{"p", stack.p()}, {"n_patches", stack.n_patches()}, {"matrices", std::move(mats)}};
}

inline AttentionStack attention_from_json(const json& j, const std::string& source = "attention") {
  return guarded(source, [&] {
    AttentionStack stack;
    const json& mats = j.at("matrices");
    for (std::size_t s = 0; s < mats.size(); ++s) {
      stack.matrices.push_back(matrix_from_json(mats[s], source + ".matrices[" + std::to_string(s) + "]"));
    }
    if (j.contains("p") && j.at("p").get<Index>() != stack.p()) {
      throw Error(ErrorCode::dimension_mismatch, source + ": p disagrees with matrices");
    }
    if (j.contains("n_patches") && j.at("n_patches").get<Index>() != stack.n_patches()) {
      throw Error(ErrorCode::dimension_mismatch, source + ": n_patches disagrees with matrices");
    }
    return stack;
  });
}

/// A JSON document, or a directory of CSV matrices read in lexicographic
/// filename order.
inline AttentionStack read_attention(const std::filesystem::path& path, bool has_header = false) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    AttentionStack stack;
    for (const auto& f : files) stack.matrices.push_back(read_csv(f, has_header));
    return stack;
  }
  return attention_from_json(parse_json(read_file(path), path.string()), path.string());
}

// ---------------------------------------------------------------------------
// SolverConfig / JointModel

inline json to_json(const SolverConfig& c) {
  return json{{"rho", c.rho},
              {"gamma_s", c.gamma_s},
              {"mu", c.mu},
              {"max_iters", c.max_iters},
              {"primal_tol", c.primal_tol},
              {"dual_tol", c.dual_tol},
              {"penalize_diagonal", c.penalize_diagonal},
              {"loss_scaling", std::string(to_string(c.loss_scaling))}};
}

inline SolverConfig solver_config_from_json(const json& j, SolverConfig c = {}) {
  if (j.contains("rho")) c.rho = j.at("rho").get<double>();
  if (j.contains("gamma_s")) c.gamma_s = j.at("gamma_s").get<double>();
  if (j.contains("mu")) c.mu = j.at("mu").get<double>();
  if (j.contains("max_iters")) c.max_iters = j.at("max_iters").get<int>();
  if (j.contains("primal_tol")) c.primal_tol = j.at("primal_tol").get<double>();
  if (j.contains("dual_tol")) c.dual_tol = j.at("dual_tol").get<double>();
  if (j.contains("penalize_diagonal")) c.penalize_diagonal = j.at("penalize_diagonal").get<bool>();
  if (j.contains("loss_scaling")) c.loss_scaling = loss_scaling_from_string(j.at("loss_scaling").get<std::string>());
  return c;
}

inline json to_json(const JointModel& m) {
  json s = json::array();
  json theta_hat = json::array();
  json mu_hat = json::array();
  for (const auto& x : m.s) s.push_back(to_json(x));
  for (const auto& x : m.theta_hat) theta_hat.push_back(to_json(x));
  for (const auto& x : m.mu_hat) mu_hat.push_back(to_json(x));
  return json{{"p", m.p()},
              {"C", m.num_classes()},
              {"theta_com", to_json(m.theta_com)},
              {"s", std::move(s)},
              {"theta_hat", std::move(theta_hat)},
              {"mu_hat", std::move(mu_hat)},
              {"n_c", m.n_c},
              {"k", m.k},
              {"converged", m.converged},
              {"iterations", m.iterations},
              {"residuals",
               {{"primal", m.primal_residual},
                {"dual", m.dual_residual},
                {"primal_history", m.primal_history},
                {"dual_history", m.dual_history}}},
              {"objective_history", m.objective_history},
              {"config", to_json(m.config)}};
}

inline JointModel model_from_json(const json& j, const std::string& source = "model") {
  return guarded(source, [&] {
    JointModel m;
    m.theta_com = matrix_from_json(j.at("theta_com"), source + ".theta_com");
    for (const auto& x : j.at("s")) m.s.push_back(matrix_from_json(x, source + ".s"));
    for (const auto& x : j.at("theta_hat")) m.theta_hat.push_back(matrix_from_json(x, source + ".theta_hat"));
    for (const auto& x : j.at("mu_hat")) m.mu_hat.push_back(vector_from_json(x, source + ".mu_hat"));
    if (j.contains("n_c")) m.n_c = j.at("n_c").get<std::vector<Index>>();
    m.k = j.value("k", 0.0);
    m.converged = j.value("converged", false);
    m.iterations = j.value("iterations", 0);
    if (j.contains("residuals")) {
      const json& r = j.at("residuals");
      m.primal_residual = r.value("primal", 0.0);
      m.dual_residual = r.value("dual", 0.0);
      if (r.contains("primal_history")) m.primal_history = r.at("primal_history").get<std::vector<double>>();
      if (r.contains("dual_history")) m.dual_history = r.at("dual_history").get<std::vector<double>>();
    }
    if (j.contains("objective_history")) m.objective_history = j.at("objective_history").get<std::vector<double>>();
    if (j.contains("config")) m.config = solver_config_from_json(j.at("config"));

    const Index p = m.theta_com.rows();
    const std::size_t c = m.theta_hat.size();
    if (m.theta_com.cols() != p || m.s.size() != c || m.mu_hat.size() != c || c == 0) {
      throw Error(ErrorCode::dimension_mismatch, source + ": inconsistent class counts or shapes");
    }
    for (std::size_t i = 0; i < c; ++i) {
      if (m.s[i].rows() != p || m.s[i].cols() != p || m.theta_hat[i].rows() != p ||
          m.theta_hat[i].cols() != p || m.mu_hat[i].size() != p) {
        throw Error(ErrorCode::dimension_mismatch, source + ": class " + std::to_string(i + 1) +
                                                       " does not match p = " + std::to_string(p));
      }
    }
    if (j.contains("p") && j.at("p").get<Index>() != p) {
      throw Error(ErrorCode::dimension_mismatch, source + ": p disagrees with theta_com");
    }
    if (j.contains("C") && j.at("C").get<std::size_t>() != c) {
      throw Error(ErrorCode::dimension_mismatch, source + ": C disagrees with theta_hat");
    }
    return m;
  });
}

inline JointModel read_model(const std::filesystem::path& path) {
  return model_from_json(parse_json(read_file(path), path.string()), path.string());
}

// ---------------------------------------------------------------------------
// Selection report

inline json to_json(const KSelection& sel) {
  json scores = json::array();
  for (const auto& s : sel.scores) {
    json entry{{"k", s.k}, {"edges", s.edges}, {"converged", s.converged}, {"skipped", s.skipped}};
    entry["ebic"] = s.skipped && !s.converged && s.ebic == 0.0 ? json(nullptr) : json(s.ebic);
    scores.push_back(std::move(entry));
  }
  return json{{"k_star", sel.k_star}, {"scores", std::move(scores)}, {"warnings", sel.warnings}};
}

// ---------------------------------------------------------------------------
// Graph export

enum class EdgeLayer { common, specific, combined };

struct Edge {
  Index i = 0;
  Index j = 0;
  double value = 0.0;
  std::string layer;
};

/// "+" marks theta_ij > 0 (mutually exclusive, negative partial correlation),
/// "-" marks theta_ij < 0 (synergistic, positive partial correlation).
inline const char* sign_label(double v) { return v > 0.0 ? "+" : "-"; }
inline const char* relation_label(double v) { return v > 0.0 ? "mutually_exclusive" : "synergistic"; }

inline void append_edges(std::vector<Edge>& out, const Matrix& m, const std::string& layer, double tol) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = i + 1; j < m.cols(); ++j) {
      if (std::abs(m(i, j)) > tol) out.push_back(Edge{i, j, m(i, j), layer});
    }
  }
}

/// Selector grammar: "all", "common", "specific" (every class),
/// "specific:<c>", "combined" (every class) or "combined:<c>"; c is 1-based.
inline std::vector<Edge> collect_edges(const JointModel& m, const std::string& selector, double tol) {
  std::vector<Edge> edges;
  auto class_index = [&](const std::string& rest) {
    std::size_t c = 0;
    const auto* end = rest.data() + rest.size();
    auto [ptr, ec] = std::from_chars(rest.data(), end, c);
    if (ec != std::errc() || ptr != end || c < 1 || c > m.num_classes()) {
      throw Error(ErrorCode::invalid_argument, "unknown layer selector '" + selector + "'");
    }
    return c;
  };
  if (selector == "all" || selector == "common") append_edges(edges, m.theta_com, "common", tol);
  if (selector == "all" || selector == "specific") {
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      append_edges(edges, m.s[c], "specific:" + std::to_string(c + 1), tol);
    }
  } else if (selector.rfind("specific:", 0) == 0) {
    const std::size_t c = class_index(selector.substr(9));
    append_edges(edges, m.s[c - 1], selector, tol);
  } else if (selector == "combined") {
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      append_edges(edges, m.theta_sum(c), "combined:" + std::to_string(c + 1), tol);
    }
  } else if (selector.rfind("combined:", 0) == 0) {
    const std::size_t c = class_index(selector.substr(9));
    append_edges(edges, m.theta_sum(c - 1), selector, tol);
  } else if (selector != "all" && selector != "common") {
    throw Error(ErrorCode::invalid_argument, "unknown layer selector '" + selector + "'");
  }
  return edges;
}

inline json edges_to_json(const std::vector<Edge>& edges) {
  json arr = json::array();
  for (const auto& e : edges) {
    arr.push_back(json{{"i", e.i},
                       {"j", e.j},
                       {"value", e.value},
                       {"sign", sign_label(e.value)},
                       {"relation", relation_label(e.value)},
                       {"layer", e.layer}});
  }
  return arr;
}

inline std::string edges_to_graphml(const std::vector<Edge>& edges, Index p) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      "  <key id=\"value\" for=\"edge\" attr.name=\"value\" attr.type=\"double\"/>\n"
      "  <key id=\"sign\" for=\"edge\" attr.name=\"sign\" attr.type=\"string\"/>\n"
      "  <key id=\"relation\" for=\"edge\" attr.name=\"relation\" attr.type=\"string\"/>\n"
      "  <key id=\"layer\" for=\"edge\" attr.name=\"layer\" attr.type=\"string\"/>\n"
      "  <graph id=\"G\" edgedefault=\"undirected\">\n";
  for (Index i = 0; i < p; ++i) out += "    <node id=\"n" + std::to_string(i) + "\"/>\n";
  for (const auto& e : edges) {
    out += "    <edge source=\"n" + std::to_string(e.i) + "\" target=\"n" + std::to_string(e.j) + "\">\n";
    out += "      <data key=\"value\">" + format_double(e.value) + "</data>\n";
    out += std::string("      <data key=\"sign\">") + sign_label(e.value) + "</data>\n";
    out += std::string("      <data key=\"relation\">") + relation_label(e.value) + "</data>\n";
    out += "      <data key=\"layer\">" + e.layer + "</data>\n";
    out += "    </edge>\n";
  }
  out += "  </graph>\n</graphml>\n";
  return out;
}

// ---------------------------------------------------------------------------
// Scenario and recovery report

inline json to_json(const ScenarioParams& p) {
  return json{{"p", p.p},
              {"C", p.num_classes},
              {"n_c", p.n_per_class},
              {"common_ratio", p.common_ratio},
              {"edge_density", p.edge_density},
              {"seed", p.seed},
              {"magnitude_lo", p.magnitude_lo},
              {"magnitude_hi", p.magnitude_hi},
              {"min_eigenvalue", p.min_eigenvalue}};
}

inline ScenarioParams scenario_params_from_json(const json& j, ScenarioParams p = {}) {
  if (j.contains("p")) p.p = j.at("p").get<Index>();
  if (j.contains("C")) p.num_classes = j.at("C").get<Index>();
  if (j.contains("n_c")) p.n_per_class = j.at("n_c").get<Index>();
  if (j.contains("common_ratio")) p.common_ratio = j.at("common_ratio").get<double>();
  if (j.contains("edge_density")) p.edge_density = j.at("edge_density").get<double>();
  if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("magnitude_lo")) p.magnitude_lo = j.at("magnitude_lo").get<double>();
  if (j.contains("magnitude_hi")) p.magnitude_hi = j.at("magnitude_hi").get<double>();
  if (j.contains("min_eigenvalue")) p.min_eigenvalue = j.at("min_eigenvalue").get<double>();
  return p;
}

inline json to_json(const SyntheticScenario& sc) {
  json s = json::array();
  json theta = json::array();
  for (const auto& x : sc.s_true) s.push_back(to_json(x));
  for (const auto& x : sc.theta_true) theta.push_back(to_json(x));
  return json{{"generator", sc.generator},
              {"params", to_json(sc.params)},
              {"theta_com_true", to_json(sc.theta_com_true)},
              {"s_true", std::move(s)},
              {"theta_true", std::move(theta)}};
}

/// Regenerates from the recorded parameters and checks that the stored
/// matrices match, so a scenario file cannot drift from its seed.
inline SyntheticScenario scenario_from_json(const json& j, const std::string& source = "scenario") {
  return guarded(source, [&] {
    const std::string generator = j.value("generator", std::string(Rng::kAlgorithm));
    if (generator != Rng::kAlgorithm) {
      throw Error(ErrorCode::invalid_argument, source + ": unsupported generator '" + generator + "'");
    }
    SyntheticScenario sc = generate_scenario(scenario_params_from_json(j.at("params")));
    if (j.contains("theta_com_true")) {
      const Matrix stored = matrix_from_json(j.at("theta_com_true"), source + ".theta_com_true");
      if (stored != sc.theta_com_true) {
        throw Error(ErrorCode::invalid_argument, source + ": stored ground truth does not match its seed");
      }
    }
    return sc;
  });
}

inline json to_json(const LayerScore& s) {
  return json{{"layer", s.layer},
              {"tp", s.true_positive},
              {"fp", s.false_positive},
              {"fn", s.false_negative},
              {"precision", s.precision()},
              {"recall", s.recall()},
              {"f1", s.f1()}};
}

inline json to_json(const RecoveryReport& r) {
  json spec = json::array();
  for (const auto& s : r.specific) spec.push_back(to_json(s));
  json out{{"method", r.method},
           {"common", to_json(r.common)},
           {"specific", std::move(spec)},
           {"combined", to_json(r.combined)},
           {"csr", {{"estimated", r.csr_estimated}, {"true", r.csr_true}, {"target", r.csr_target}}},
           {"heldout_nll",
            {{"train", r.nll_train},
             {"heldout", r.nll_heldout},
             {"gap", r.nll_gap},
             {"note", "held-out minus training average Gaussian NLL; stand-in for a generalization gap"}}},
           {"converged", r.converged},
           {"iterations", r.iterations}};
  out["k_star"] = r.has_k_star ? json(r.k_star) : json(nullptr);
  return out;
}

inline std::string report_csv_header() {
  return "method,common_f1,specific_f1_mean,combined_precision,combined_recall,combined_f1,"
         "csr_estimated,csr_true,nll_gap,k_star,converged,iterations\n";
}

inline std::string report_csv_row(const RecoveryReport& r) {
  double spec = 0.0;
  for (const auto& s : r.specific) spec += s.f1();
  if (!r.specific.empty()) spec /= static_cast<double>(r.specific.size());
  std::string row = r.method;
  for (double v : {r.common.f1(), spec, r.combined.precision(), r.combined.recall(), r.combined.f1(),
                   r.csr_estimated, r.csr_true, r.nll_gap}) {
    row += ',' + format_double(v);
  }
  row += ',' + (r.has_k_star ? format_double(r.k_star) : std::string());
  row += std::string(",") + (r.converged ? "true" : "false") + ',' + std::to_string(r.iterations) + '\n';
  return row;
}

}  // namespace jointgl::io
