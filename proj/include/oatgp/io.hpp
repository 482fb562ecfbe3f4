/*
 * Copyright 2026 The oatgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oatgp/dataset.hpp"
#include "oatgp/kernel.hpp"
#include "oatgp/oat.hpp"

namespace oatgp {

using json = nlohmann::json;

namespace io {

/// 17 significant digits: doubles survive a write/read round trip exactly.
inline std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

inline std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

/// Dataset CSV: header x1..xd, y, then optionally a (Poisson exposure).
inline void write_dataset_csv(const std::string &path, const Dataset &data) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  for (int j = 0; j < data.dim(); ++j) f << "x" << (j + 1) << ",";
  f << "y";
  if (data.offsets.size() > 0) f << ",a";
  f << "\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.dim(); ++j) f << format_double(data.X(i, j)) << ",";
    f << format_double(data.y(i));
    if (data.offsets.size() > 0) f << "," << format_double(data.offsets(i));
    f << "\n";
  }
}

inline Dataset read_dataset_csv(const std::string &path, Likelihood lik) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty dataset file: " + path);
  const std::vector<std::string> header = split_csv_line(line);

  int y_col = -1, a_col = -1;
  std::vector<int> x_cols;
  for (int j = 0; j < static_cast<int>(header.size()); ++j) {
    if (header[j] == "y") y_col = j;
    else if (header[j] == "a") a_col = j;
    else if (header[j].size() >= 2 && header[j][0] == 'x') x_cols.push_back(j);
  }
  if (y_col < 0 || x_cols.empty())
    throw IoError("dataset header must contain x1..xd and y: " + path);

  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IoError("ragged CSV row in " + path);
    std::vector<double> row(cells.size());
    for (size_t j = 0; j < cells.size(); ++j) {
      try {
        row[j] = std::stod(cells[j]);
      } catch (const std::exception &) {
        throw IoError("non-numeric cell '" + cells[j] + "' in " + path);
      }
    }
    rows.push_back(std::move(row));
  }

  Dataset data;
  data.likelihood = lik;
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(x_cols.size());
  data.X.resize(n, d);
  data.y.resize(n);
  if (a_col >= 0 && lik == Likelihood::poisson) data.offsets.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) data.X(i, j) = rows[i][x_cols[j]];
    data.y(i) = rows[i][y_col];
    if (a_col >= 0 && lik == Likelihood::poisson) data.offsets(i) = rows[i][a_col];
  }
  data.validate();
  return data;
}

/// Inputs-only CSV (for predict): header x1..xd, optionally a.
inline void read_inputs_csv(const std::string &path, MatrixXd *X, VectorXd *offsets) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open inputs: " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty inputs file: " + path);
  const std::vector<std::string> header = split_csv_line(line);
  std::vector<int> x_cols;
  int a_col = -1;
  for (int j = 0; j < static_cast<int>(header.size()); ++j) {
    if (header[j] == "a") a_col = j;
    else if (header[j].size() >= 2 && header[j][0] == 'x') x_cols.push_back(j);
  }
  if (x_cols.empty()) throw IoError("inputs header must contain x1..xd: " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    std::vector<double> row(cells.size());
    for (size_t j = 0; j < cells.size(); ++j) row[j] = std::stod(cells[j]);
    rows.push_back(std::move(row));
  }
  X->resize(static_cast<int>(rows.size()), static_cast<int>(x_cols.size()));
  if (a_col >= 0) offsets->resize(static_cast<int>(rows.size()));
  for (int i = 0; i < X->rows(); ++i) {
    for (int j = 0; j < X->cols(); ++j) (*X)(i, j) = rows[i][x_cols[j]];
    if (a_col >= 0) (*offsets)(i) = rows[i][a_col];
  }
}

inline void write_matrix_csv(const std::string &path, const MatrixXd &M,
                             const std::vector<std::string> &col_names) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  for (size_t j = 0; j < col_names.size(); ++j)
    f << col_names[j] << (j + 1 < col_names.size() ? "," : "");
  f << "\n";
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j)
      f << format_double(M(i, j)) << (j + 1 < M.cols() ? "," : "");
    f << "\n";
  }
}

inline json matrix_to_json(const MatrixXd &M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline MatrixXd matrix_from_json(const json &j, int cols_hint = -1) {
  if (j.empty()) return MatrixXd(0, std::max(cols_hint, 0));
  MatrixXd M(static_cast<int>(j.size()), static_cast<int>(j[0].size()));
  for (int i = 0; i < M.rows(); ++i)
    for (int c = 0; c < M.cols(); ++c) M(i, c) = j[i][c].get<double>();
  return M;
}

inline json vector_to_json(const VectorXd &v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline VectorXd vector_from_json(const json &j) {
  VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

/// Fitted-model artifact. The training data is embedded so prediction is
/// self-contained and replayable.
struct Artifact {
  std::string model_name;
  std::string model_kind;
  Dataset train;
  MatrixXd knots;
  MatrixXd initial_knots;
  KernelParams params;
  double mean_value = 0.0;
  std::vector<double> trace;
  std::vector<int> proposal_evals;
  long ga_steps = 0;
  std::string termination;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

inline void save_artifact(const std::string &path, const Artifact &a) {
  json j;
  j["format"] = "oatgp-artifact-v1";
  j["model_name"] = a.model_name;
  j["model_kind"] = a.model_kind;
  j["likelihood"] = to_string(a.train.likelihood);
  j["train"]["X"] = matrix_to_json(a.train.X);
  j["train"]["y"] = vector_to_json(a.train.y);
  if (a.train.offsets.size() > 0) j["train"]["a"] = vector_to_json(a.train.offsets);
  j["knots"] = matrix_to_json(a.knots);
  j["initial_knots"] = matrix_to_json(a.initial_knots);
  j["kernel"]["signal_variance"] = a.params.signal_variance;
  j["kernel"]["lengthscales"] = vector_to_json(a.params.lengthscales);
  j["kernel"]["noise_variance"] = a.params.noise_variance;
  j["kernel"]["noise_lower_bound"] = a.params.noise_lower_bound;
  j["kernel"]["jitter"] = a.params.jitter;
  j["mean_value"] = a.mean_value;
  j["trace"] = a.trace;
  j["proposal_evals"] = a.proposal_evals;
  j["ga_steps"] = a.ga_steps;
  j["termination"] = a.termination;
  j["seed"] = a.seed;
  j["config_hash"] = a.config_hash;

  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
}

inline Artifact load_artifact(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open artifact: " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception &e) {
    throw IoError("invalid artifact JSON: " + std::string(e.what()));
  }
  Artifact a;
  a.model_name = j.value("model_name", "");
  a.model_kind = j.value("model_kind", "");
  a.train.likelihood = likelihood_from_string(j.at("likelihood").get<std::string>());
  a.train.X = matrix_from_json(j.at("train").at("X"));
  a.train.y = vector_from_json(j.at("train").at("y"));
  if (j.at("train").contains("a")) a.train.offsets = vector_from_json(j["train"]["a"]);
  a.knots = matrix_from_json(j.at("knots"), static_cast<int>(a.train.X.cols()));
  a.initial_knots =
      matrix_from_json(j.at("initial_knots"), static_cast<int>(a.train.X.cols()));
  a.params.signal_variance = j.at("kernel").at("signal_variance").get<double>();
  a.params.lengthscales = vector_from_json(j.at("kernel").at("lengthscales"));
  a.params.noise_variance = j.at("kernel").at("noise_variance").get<double>();
  a.params.noise_lower_bound = j.at("kernel").at("noise_lower_bound").get<double>();
  a.params.jitter = j.at("kernel").at("jitter").get<double>();
  a.mean_value = j.at("mean_value").get<double>();
  a.trace = j.at("trace").get<std::vector<double>>();
  a.proposal_evals = j.value("proposal_evals", std::vector<int>{});
  a.ga_steps = j.value("ga_steps", 0L);
  a.termination = j.value("termination", "");
  a.seed = j.value("seed", std::uint64_t{0});
  a.config_hash = j.value("config_hash", std::uint64_t{0});
  a.train.validate();
  return a;
}

/// key = value configuration file; '#' starts a comment.
inline std::map<std::string, std::string> read_config_file(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

} // namespace io
} // namespace oatgp
