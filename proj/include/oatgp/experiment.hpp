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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oatgp/io.hpp"
#include "oatgp/metrics.hpp"
#include "oatgp/oat.hpp"
#include "oatgp/synth.hpp"

namespace oatgp {

struct ModelSpec {
  std::string name;
  std::string kind; // full | oat_bo | oat_rs | simultaneous | fixed_knots
  OatConfig oat;    // oat_* settings (k_init, k_max, t_min, t_max, threshold, init)
  int k = 20;       // knot count for simultaneous / fixed grid
  std::string knots_file; // explicit knots for fixed_knots
};

struct ExperimentConfig {
  std::string dataset_path;
  std::optional<SynthSpec> synth;
  std::string latent_path; // optional true-latent CSV (x..., f)
  Likelihood likelihood = Likelihood::gaussian;
  double split_fraction = 0.2; // test fraction; 0 evaluates at the training points
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::vector<ModelSpec> models;

  // shared fit settings; negative numeric values mean "derive from data"
  double mean_value = 0.0;
  bool mean_auto = false;
  double init_signal_variance = -1.0;
  VectorXd init_lengthscales; // empty -> span/4 per dimension
  double init_noise_variance = -1.0;
  double noise_lower_bound = 1e-6;
  double jitter = -1.0; // negative -> 1e-8 * signal variance
  ConvergenceSpec conv;

  std::uint64_t config_hash = 0;

  void validate() const {
    if (dataset_path.empty() && !synth)
      throw InputError("experiment: need a dataset path or a synth spec");
    if (models.empty()) throw InputError("experiment: need at least one model");
    if (split_fraction < 0.0 || split_fraction >= 1.0)
      throw InputError("experiment: split_fraction must be in [0, 1)");
  }
};

namespace detail {

inline KernelParams derive_init_params(const ExperimentConfig &cfg, const Dataset &data) {
  KernelParams p;
  const double yvar =
      data.n() > 1
          ? (data.y.array() - data.y.mean()).square().sum() / (data.n() - 1)
          : 1.0;
  p.signal_variance = cfg.init_signal_variance > 0.0
                          ? cfg.init_signal_variance
                          : (data.likelihood == Likelihood::gaussian
                                 ? std::max(yvar, 1e-4)
                                 : 1.0);
  if (cfg.init_lengthscales.size() == static_cast<int>(data.dim())) {
    p.lengthscales = cfg.init_lengthscales;
  } else {
    const VectorXd span =
        (data.X.colwise().maxCoeff() - data.X.colwise().minCoeff()).transpose();
    p.lengthscales = (span / 4.0).cwiseMax(1e-3);
  }
  p.noise_lower_bound = cfg.noise_lower_bound;
  p.noise_variance = cfg.init_noise_variance > 0.0
                         ? cfg.init_noise_variance
                         : std::max(0.1 * yvar, cfg.noise_lower_bound + 1e-8);
  p.jitter = cfg.jitter >= 0.0 ? cfg.jitter : 1e-8 * p.signal_variance;
  p.validate();
  return p;
}

inline double derive_mean(const ExperimentConfig &cfg, const Dataset &data) {
  if (!cfg.mean_auto) return cfg.mean_value;
  return data.likelihood == Likelihood::gaussian ? data.y.mean() : 0.0;
}

} // namespace detail

/// Fits one model spec on the given data.
inline FitResult run_fit(const Dataset &data, const ModelSpec &spec,
                         const ExperimentConfig &cfg) {
  const KernelParams init = detail::derive_init_params(cfg, data);
  const MeanFunction mean{detail::derive_mean(cfg, data)};
  const std::uint64_t model_seed = stream_seed(cfg.seed, "model/" + spec.name);

  if (spec.kind == "full") return full_gp_fit(data, cfg.conv, init, mean);
  if (spec.kind == "oat_bo" || spec.kind == "oat_rs") {
    OatConfig oc = spec.oat;
    oc.seed = model_seed;
    return oat_fit(data,
                   spec.kind == "oat_bo" ? ProposalKind::bo : ProposalKind::rs, oc,
                   cfg.conv, init, mean);
  }
  if (spec.kind == "simultaneous")
    return simultaneous_fit(data, spec.k, spec.oat.init, cfg.conv, init, mean,
                            model_seed, spec.oat.explicit_knots);
  if (spec.kind == "fixed_knots") {
    MatrixXd knots;
    if (!spec.knots_file.empty()) {
      VectorXd unused;
      io::read_inputs_csv(spec.knots_file, &knots, &unused);
    } else {
      knots = init_knots(data.X, InitStrategy::uniform_grid, spec.k, model_seed);
    }
    return fixed_knots_fit(data, knots, cfg.conv, init, mean);
  }
  throw InputError("unknown model kind: " + spec.kind);
}

/// Latent predictive of a fitted model at new inputs.
inline GaussianPredictive predict_fit(const Dataset &data, const ModelSpec &spec,
                                      const ExperimentConfig &cfg, const FitResult &fit,
                                      const Eigen::Ref<const MatrixXd> &Xnew) {
  const MeanFunction mean{fit.mean.value};
  if (spec.kind == "full") return full_predict(data, fit.params, mean, Xnew);
  return sparse_predict(data, fit.knots, fit.params, mean, Xnew);
}

/// Train/test split with indices drawn from a named stream of the root seed;
/// both halves keep ascending row order.
inline void split_dataset(const Dataset &data, double test_fraction, std::uint64_t seed,
                          Dataset *train, Dataset *test, std::vector<int> *train_idx,
                          std::vector<int> *test_idx) {
  const int n = data.n();
  if (test_fraction == 0.0) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    *train = data;
    *test = data;
    *train_idx = all;
    *test_idx = all;
    return;
  }
  const int n_test = std::max(1, static_cast<int>(std::lround(test_fraction * n)));
  if (n_test >= n) throw InputError("split: test fraction leaves no training data");
  Rng rng(seed);
  const std::vector<int> perm = rng.sample_without_replacement(n, n);
  test_idx->assign(perm.begin(), perm.begin() + n_test);
  train_idx->assign(perm.begin() + n_test, perm.end());
  std::sort(train_idx->begin(), train_idx->end());
  std::sort(test_idx->begin(), test_idx->end());
  *train = data.rows(*train_idx);
  *test = data.rows(*test_idx);
}

struct ModelRunRecord {
  ModelSpec spec;
  bool ok = false;
  std::string error;
  FitResult fit;
  MetricReport metrics;
  double wall_time_s = 0.0;
  double ga_time_s = 0.0;
};

struct ExperimentResult {
  Dataset full_data;
  VectorXd latent; // empty if unknown
  std::vector<int> train_idx, test_idx;
  std::vector<ModelRunRecord> records;
};

/// Runs every configured model on the same split, computes metrics against
/// the test set and the fitted full GP, and writes results, artifacts and
/// plot data under cfg.out_dir.
inline ExperimentResult run_experiment(const ExperimentConfig &cfg,
                                       bool write_outputs = true) {
  cfg.validate();
  namespace fs = std::filesystem;

  ExperimentResult result;
  if (cfg.synth) {
    SynthSpec spec = *cfg.synth;
    spec.seed = stream_seed(cfg.seed, "synth");
    const SynthResult s = generate(spec);
    result.full_data = s.data;
    result.latent = s.latent;
  } else {
    result.full_data = io::read_dataset_csv(cfg.dataset_path, cfg.likelihood);
    if (!cfg.latent_path.empty()) {
      MatrixXd latent_mat;
      VectorXd unused;
      io::read_inputs_csv(cfg.latent_path, &latent_mat, &unused);
      if (latent_mat.rows() == result.full_data.n())
        result.latent = latent_mat.col(latent_mat.cols() - 1);
    }
  }

  Dataset train, test;
  split_dataset(result.full_data, cfg.split_fraction,
                stream_seed(cfg.seed, "split"), &train, &test, &result.train_idx,
                &result.test_idx);

  // Reference full GP for AUKL; reuse the configured full model if present.
  const ModelSpec *full_spec = nullptr;
  for (const auto &m : cfg.models)
    if (m.kind == "full") {
      full_spec = &m;
      break;
    }
  ModelSpec ref_spec;
  ref_spec.name = full_spec ? full_spec->name : "__full_reference";
  ref_spec.kind = "full";
  FitResult ref_fit = run_fit(train, ref_spec, cfg);
  const GaussianPredictive ref_pred = predict_fit(train, ref_spec, cfg, ref_fit, test.X);

  if (write_outputs) fs::create_directories(cfg.out_dir);

  for (const ModelSpec &spec : cfg.models) {
    ModelRunRecord rec;
    rec.spec = spec;
    try {
      const detail::Stopwatch sw;
      if (full_spec == &spec) {
        rec.fit = ref_fit; // avoid refitting the shared reference
      } else {
        rec.fit = run_fit(train, spec, cfg);
      }
      rec.wall_time_s = sw.seconds();
      rec.ga_time_s = rec.fit.ga_time_s;
      if (rec.fit.termination == Termination::error && !rec.fit.error_message.empty())
        rec.error = rec.fit.error_message;

      const GaussianPredictive pred = predict_fit(train, spec, cfg, rec.fit, test.X);
      rec.metrics.n_test = test.n();
      if (train.likelihood == Likelihood::gaussian)
        rec.metrics.srmse = srmse(pred.mean, test.y);
      rec.metrics.mnlp =
          mnlp(pred, test.y, train.likelihood, MnlpMode::integrate, test.offsets);
      rec.metrics.mnlp_plugin =
          mnlp(pred, test.y, train.likelihood, MnlpMode::plugin, test.offsets);
      rec.metrics.aukl = (full_spec == &spec) ? 0.0 : aukl(ref_pred, pred);
      if (result.latent.size() == result.full_data.n()) {
        const GaussianPredictive all_pred =
            predict_fit(train, spec, cfg, rec.fit, result.full_data.X);
        rec.metrics.rmse = rmse_latent(all_pred.mean, result.latent);
      }
      rec.ok = true;

      if (write_outputs) {
        const std::string base = cfg.out_dir + "/" + spec.name;
        io::Artifact art;
        art.model_name = spec.name;
        art.model_kind = spec.kind;
        art.train = train;
        art.knots = rec.fit.knots;
        art.initial_knots = rec.fit.initial_knots;
        art.params = rec.fit.params;
        art.mean_value = rec.fit.mean.value;
        art.trace = rec.fit.trace;
        art.proposal_evals = rec.fit.proposal_evals;
        art.ga_steps = rec.fit.ga_steps;
        art.termination = to_string(rec.fit.termination);
        art.seed = cfg.seed;
        art.config_hash = cfg.config_hash;
        io::save_artifact(base + ".artifact.json", art);

        const PredictiveBands bands =
            link_bands(pred, train.likelihood, test.offsets);
        MatrixXd out(test.n(), test.dim() + 4);
        out.leftCols(test.dim()) = test.X;
        out.col(test.dim()) = bands.mean;
        out.col(test.dim() + 1) = pred.var_latent.cwiseSqrt();
        out.col(test.dim() + 2) = bands.lower;
        out.col(test.dim() + 3) = bands.upper;
        std::vector<std::string> cols;
        for (int j = 0; j < test.dim(); ++j) cols.push_back("x" + std::to_string(j + 1));
        cols.insert(cols.end(), {"mean", "latent_sd", "lower95", "upper95"});
        io::write_matrix_csv(base + ".predictions.csv", out, cols);

        std::vector<std::string> kcols;
        for (int j = 0; j < test.dim(); ++j) kcols.push_back("x" + std::to_string(j + 1));
        io::write_matrix_csv(base + ".knots_initial.csv", rec.fit.initial_knots, kcols);
        io::write_matrix_csv(base + ".knots_final.csv", rec.fit.knots, kcols);
      }
    } catch (const Error &e) {
      rec.ok = false;
      rec.error = e.what();
    }
    result.records.push_back(std::move(rec));
  }

  if (write_outputs) {
    json results;
    results["format"] = "oatgp-results-v1";
    results["config_hash"] = cfg.config_hash;
    results["seed"] = cfg.seed;
    results["split"] = {{"fraction", cfg.split_fraction},
                        {"seed", stream_seed(cfg.seed, "split")},
                        {"n_train", static_cast<int>(result.train_idx.size())},
                        {"n_test", static_cast<int>(result.test_idx.size())}};
    json models = json::array();
    json timings = json::array();
    for (const auto &rec : result.records) {
      json m;
      m["name"] = rec.spec.name;
      m["kind"] = rec.spec.kind;
      m["ok"] = rec.ok;
      if (!rec.error.empty()) m["error"] = rec.error;
      if (rec.ok) {
        m["k"] = static_cast<int>(rec.fit.knots.rows());
        m["k_init"] = static_cast<int>(rec.fit.initial_knots.rows());
        if (rec.spec.kind == "oat_bo" || rec.spec.kind == "oat_rs") {
          m["t_min"] = rec.spec.oat.t_min;
          m["t_max"] = rec.spec.oat.t_max;
          m["threshold"] = rec.spec.oat.improvement_threshold;
        }
        m["termination"] = to_string(rec.fit.termination);
        m["trace"] = rec.fit.trace;
        m["ga_steps"] = rec.fit.ga_steps;
        m["proposal_evals"] = rec.fit.proposal_evals;
        json met;
        met["n_test"] = rec.metrics.n_test;
        if (rec.metrics.srmse) met["srmse"] = *rec.metrics.srmse;
        if (rec.metrics.mnlp) met["mnlp"] = *rec.metrics.mnlp;
        if (rec.metrics.mnlp_plugin) met["mnlp_plugin"] = *rec.metrics.mnlp_plugin;
        if (rec.metrics.aukl) met["aukl"] = *rec.metrics.aukl;
        if (rec.metrics.rmse) met["rmse"] = *rec.metrics.rmse;
        m["metrics"] = met;
      }
      models.push_back(m);

      json t;
      t["name"] = rec.spec.name;
      t["wall_time_s"] = rec.wall_time_s;
      t["ga_time_s"] = rec.ga_time_s;
      timings.push_back(t);
    }
    results["models"] = models;

    std::ofstream rf(cfg.out_dir + "/results.json");
    if (!rf) throw IoError("cannot write results file");
    rf << results.dump(2) << "\n";

    // Wall times live in a separate file so results.json is replayable
    // byte for byte.
    json tj;
    tj["models"] = timings;
    std::ofstream tf(cfg.out_dir + "/timings.json");
    tf << tj.dump(2) << "\n";
  }
  return result;
}

} // namespace oatgp
