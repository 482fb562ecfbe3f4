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

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oatgp/experiment.hpp"

namespace oatgp {

namespace detail {

inline std::vector<std::string> split_list(const std::string &s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  auto trim = [](std::string v) {
    const auto a = v.find_first_not_of(" \t");
    const auto b = v.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
  };
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline VectorXd parse_vector(const std::string &s) {
  const std::vector<std::string> parts = split_list(s);
  VectorXd v(static_cast<int>(parts.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = std::stod(parts[i]);
  return v;
}

} // namespace detail

/// Builds the experiment configuration from a key=value map (the config
/// file) merged with override entries (command-line flags, which win).
/// The config hash covers the merged, canonicalized key set, so identical
/// effective configurations hash identically regardless of source.
inline ExperimentConfig parse_experiment_config(
    std::map<std::string, std::string> kv,
    const std::map<std::string, std::string> &overrides = {}) {
  for (const auto &[k, v] : overrides) kv[k] = v;

  std::string canon;
  for (const auto &[k, v] : kv) canon += k + "=" + v + "\n";

  ExperimentConfig cfg;
  cfg.config_hash = fnv1a64(canon);

  auto get = [&](const std::string &key, const std::string &fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };
  auto has = [&](const std::string &key) { return kv.count(key) > 0; };

  cfg.dataset_path = get("dataset", "");
  cfg.likelihood = likelihood_from_string(get("likelihood", "gaussian"));
  cfg.latent_path = get("latent", "");
  cfg.split_fraction = std::stod(get("split_fraction", "0.2"));
  cfg.seed = static_cast<std::uint64_t>(std::stoull(get("seed", "0")));
  cfg.out_dir = get("out", "out");

  if (has("synth")) {
    SynthSpec sp;
    sp.kind = synth_kind_from_string(kv.at("synth"));
    sp.n = std::stoi(get("synth_n", "200"));
    const int d = sp.dim();
    sp.lower_bounds = VectorXd::Zero(d);
    sp.upper_bounds = VectorXd::Constant(d, 10.0);
    if (has("synth_bounds")) {
      const VectorXd b = detail::parse_vector(kv.at("synth_bounds"));
      if (b.size() != 2 * d) throw InputError("synth_bounds needs lo,hi per dimension");
      for (int j = 0; j < d; ++j) {
        sp.lower_bounds(j) = b(2 * j);
        sp.upper_bounds(j) = b(2 * j + 1);
      }
    }
    sp.signal_variance = std::stod(get("synth_signal_variance", "1.0"));
    sp.lengthscales = has("synth_lengthscales")
                          ? detail::parse_vector(kv.at("synth_lengthscales"))
                          : VectorXd::Constant(d, 1.0);
    sp.noise_variance = std::stod(get("synth_noise_variance", "0.1"));
    cfg.synth = sp;
    switch (sp.kind) {
    case SynthKind::gaussian_1d: cfg.likelihood = Likelihood::gaussian; break;
    case SynthKind::poisson_lgcp_1d: cfg.likelihood = Likelihood::poisson; break;
    case SynthKind::banana_like_2d: cfg.likelihood = Likelihood::bernoulli; break;
    }
  }

  const std::string mean_str = get("mean_value", "0");
  if (mean_str == "auto") {
    cfg.mean_auto = true;
  } else {
    cfg.mean_value = std::stod(mean_str);
  }
  if (has("init_signal_variance"))
    cfg.init_signal_variance = std::stod(kv.at("init_signal_variance"));
  if (has("init_lengthscales"))
    cfg.init_lengthscales = detail::parse_vector(kv.at("init_lengthscales"));
  if (has("init_noise_variance"))
    cfg.init_noise_variance = std::stod(kv.at("init_noise_variance"));
  cfg.noise_lower_bound = std::stod(get("noise_lower_bound", "1e-6"));
  if (has("jitter")) cfg.jitter = std::stod(kv.at("jitter"));
  cfg.conv.objective_tol = std::stod(get("objective_tol", "1e-4"));
  cfg.conv.grad_tol = std::stod(get("grad_tol", "1e-6"));
  cfg.conv.max_iters = std::stol(get("max_iters", "1000"));

  // models = full, bo:oat_bo, rs25:oat_rs, ... entry syntax [name:]kind.
  // Per-model keys <name>.key override the globals.
  const std::vector<std::string> entries = detail::split_list(get("models", "oat_bo"));
  for (const std::string &entry : entries) {
    ModelSpec spec;
    const auto colon = entry.find(':');
    if (colon == std::string::npos) {
      spec.name = entry;
      spec.kind = entry;
    } else {
      spec.name = entry.substr(0, colon);
      spec.kind = entry.substr(colon + 1);
    }
    auto model_get = [&](const std::string &key, const std::string &fallback) {
      auto it = kv.find(spec.name + "." + key);
      if (it != kv.end()) return it->second;
      return get(key, fallback);
    };
    spec.oat.k_init = std::stoi(model_get("kinit", "5"));
    spec.oat.k_max = std::stoi(model_get("kmax", "30"));
    spec.oat.t_min = std::stoi(model_get("tmin", "10"));
    spec.oat.t_max = std::stoi(model_get("tmax", model_get("kmax", "30")));
    spec.oat.improvement_threshold = std::stod(model_get("threshold", "0.01"));
    spec.oat.init = init_strategy_from_string(model_get("init", "kmeans"));
    spec.oat.meta.noise_variance = std::stod(model_get("meta_noise", "0"));
    spec.k = std::stoi(model_get("k", "20"));
    spec.knots_file = model_get("knots_file", "");
    if (spec.kind != "full" && spec.kind != "oat_bo" && spec.kind != "oat_rs" &&
        spec.kind != "simultaneous" && spec.kind != "fixed_knots")
      throw InputError("unknown model kind: " + spec.kind);
    cfg.models.push_back(std::move(spec));
  }

  cfg.validate();
  return cfg;
}

} // namespace oatgp
