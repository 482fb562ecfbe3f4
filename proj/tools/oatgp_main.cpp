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

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "oatgp/oatgp.hpp"

namespace {

using namespace oatgp;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> model;
  std::optional<int> kmax;
  std::optional<int> tmin;
  std::optional<int> tmax;
  std::optional<double> threshold;

  void attach(CLI::App *cmd) {
    cmd->add_option("--config", config_path, "configuration file (key = value lines)");
    cmd->add_option("--seed", seed, "root seed; flags win over the config file");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--model", model, "restrict to one model entry by name");
    cmd->add_option("--kmax", kmax, "knot budget");
    cmd->add_option("--tmin", tmin, "minimum log-marginal evaluations per proposal");
    cmd->add_option("--tmax", tmax, "maximum log-marginal evaluations per proposal");
    cmd->add_option("--threshold", threshold, "log-marginal improvement threshold");
  }

  ExperimentConfig load() const {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) kv = io::read_config_file(config_path);
    std::map<std::string, std::string> overrides;
    if (seed) overrides["seed"] = std::to_string(*seed);
    if (out) overrides["out"] = *out;
    if (kmax) overrides["kmax"] = std::to_string(*kmax);
    if (tmin) overrides["tmin"] = std::to_string(*tmin);
    if (tmax) overrides["tmax"] = std::to_string(*tmax);
    if (threshold) overrides["threshold"] = std::to_string(*threshold);
    ExperimentConfig cfg = parse_experiment_config(kv, overrides);
    if (model) {
      std::vector<ModelSpec> kept;
      for (auto &m : cfg.models)
        if (m.name == *model) kept.push_back(m);
      if (kept.empty()) throw InputError("no model entry named " + *model);
      cfg.models = kept;
    }
    return cfg;
  }
};

int cmd_fit(const CommonFlags &flags) {
  ExperimentConfig cfg = flags.load();
  const ModelSpec &spec = cfg.models.front();
  Dataset data = cfg.synth ? [&] {
    SynthSpec sp = *cfg.synth;
    sp.seed = stream_seed(cfg.seed, "synth");
    return generate(sp).data;
  }()
                           : io::read_dataset_csv(cfg.dataset_path, cfg.likelihood);

  const FitResult fit = run_fit(data, spec, cfg);

  std::filesystem::create_directories(cfg.out_dir);
  io::Artifact art;
  art.model_name = spec.name;
  art.model_kind = spec.kind;
  art.train = data;
  art.knots = fit.knots;
  art.initial_knots = fit.initial_knots;
  art.params = fit.params;
  art.mean_value = fit.mean.value;
  art.trace = fit.trace;
  art.proposal_evals = fit.proposal_evals;
  art.ga_steps = fit.ga_steps;
  art.termination = to_string(fit.termination);
  art.seed = cfg.seed;
  art.config_hash = cfg.config_hash;
  const std::string path = cfg.out_dir + "/" + spec.name + ".artifact.json";
  io::save_artifact(path, art);

  std::cout << "model " << spec.name << " (" << spec.kind << "): K="
            << fit.knots.rows() << " log-marginal=" << fit.final_log_marginal()
            << " termination=" << to_string(fit.termination) << "\n"
            << "artifact: " << path << "\n";
  return 0;
}

int cmd_predict(const std::string &artifact_path, const std::string &inputs_path,
                const std::string &out_path) {
  const io::Artifact art = io::load_artifact(artifact_path);
  MatrixXd Xnew;
  VectorXd offsets_new;
  io::read_inputs_csv(inputs_path, &Xnew, &offsets_new);
  if (Xnew.cols() != art.train.X.cols())
    throw InputError("predict: input dimension does not match the artifact");

  const MeanFunction mean{art.mean_value};
  GaussianPredictive pred;
  if (art.model_kind == "full") {
    pred = full_predict(art.train, art.params, mean, Xnew);
  } else {
    pred = sparse_predict(art.train, art.knots, art.params, mean, Xnew);
  }
  if (art.train.likelihood == Likelihood::poisson && offsets_new.size() == 0) {
    // default new-point exposure: the training offset scale
    offsets_new = VectorXd::Constant(Xnew.rows(), art.train.offsets.mean());
  }
  const PredictiveBands bands = link_bands(pred, art.train.likelihood, offsets_new);

  MatrixXd out(Xnew.rows(), Xnew.cols() + 4);
  out.leftCols(Xnew.cols()) = Xnew;
  out.col(Xnew.cols()) = bands.mean;
  out.col(Xnew.cols() + 1) = pred.var_latent.cwiseSqrt();
  out.col(Xnew.cols() + 2) = bands.lower;
  out.col(Xnew.cols() + 3) = bands.upper;
  std::vector<std::string> cols;
  for (int j = 0; j < Xnew.cols(); ++j) cols.push_back("x" + std::to_string(j + 1));
  cols.insert(cols.end(), {"mean", "latent_sd", "lower95", "upper95"});
  io::write_matrix_csv(out_path, out, cols);
  std::cout << "wrote " << out.rows() << " predictions to " << out_path << "\n";
  return 0;
}

int cmd_experiment(const CommonFlags &flags) {
  const ExperimentConfig cfg = flags.load();
  const ExperimentResult res = run_experiment(cfg);
  for (const auto &rec : res.records) {
    std::cout << rec.spec.name << " (" << rec.spec.kind << "): ";
    if (!rec.ok) {
      std::cout << "FAILED: " << rec.error << "\n";
      continue;
    }
    std::cout << "K=" << rec.fit.knots.rows();
    if (rec.metrics.srmse) std::cout << " srmse=" << *rec.metrics.srmse;
    if (rec.metrics.mnlp) std::cout << " mnlp=" << *rec.metrics.mnlp;
    if (rec.metrics.aukl) std::cout << " aukl=" << *rec.metrics.aukl;
    if (rec.metrics.rmse) std::cout << " rmse=" << *rec.metrics.rmse;
    std::cout << " time=" << rec.wall_time_s << "s\n";
  }
  std::cout << "results: " << cfg.out_dir << "/results.json\n";
  return 0;
}

int cmd_synth(const CommonFlags &flags) {
  const ExperimentConfig cfg = flags.load();
  if (!cfg.synth) throw InputError("synth: config must set a synth kind");
  SynthSpec sp = *cfg.synth;
  sp.seed = stream_seed(cfg.seed, "synth");
  const SynthResult s = generate(sp);

  std::filesystem::create_directories(cfg.out_dir);
  io::write_dataset_csv(cfg.out_dir + "/data.csv", s.data);
  MatrixXd latent(s.data.n(), s.data.dim() + 1);
  latent.leftCols(s.data.dim()) = s.data.X;
  latent.col(s.data.dim()) = s.latent;
  std::vector<std::string> cols;
  for (int j = 0; j < s.data.dim(); ++j) cols.push_back("x" + std::to_string(j + 1));
  cols.push_back("f");
  io::write_matrix_csv(cfg.out_dir + "/latent.csv", latent, cols);
  std::cout << "wrote " << s.data.n() << " rows to " << cfg.out_dir << "/data.csv"
            << " (latent in latent.csv)\n";
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Sparse Gaussian processes with one-at-a-time knot selection"};
  app.require_subcommand(1);

  CommonFlags fit_flags, exp_flags, synth_flags;
  std::string artifact_path, inputs_path, predictions_path = "predictions.csv";

  CLI::App *fit = app.add_subcommand("fit", "fit one model and persist the artifact");
  fit_flags.attach(fit);

  CLI::App *predict =
      app.add_subcommand("predict", "predict from an artifact at new inputs");
  predict->add_option("artifact", artifact_path, "artifact JSON from fit")->required();
  predict->add_option("inputs", inputs_path, "CSV with x1..xd columns")->required();
  predict->add_option("--out", predictions_path, "output CSV path");

  CLI::App *experiment =
      app.add_subcommand("experiment", "run every configured model on one split");
  exp_flags.attach(experiment);

  CLI::App *synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_flags.attach(synth);

  try {
    app.parse(argc, argv);
    if (fit->parsed()) return cmd_fit(fit_flags);
    if (predict->parsed()) return cmd_predict(artifact_path, inputs_path, predictions_path);
    if (experiment->parsed()) return cmd_experiment(exp_flags);
    if (synth->parsed()) return cmd_synth(synth_flags);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const oatgp::InputError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const oatgp::NumericalError &e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const oatgp::IoError &e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
