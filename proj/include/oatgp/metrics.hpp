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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "oatgp/fic.hpp"
#include "oatgp/likelihoods.hpp"

namespace oatgp {

/// Gauss-Hermite nodes and weights for integrating against e^{-t^2}
/// (Golub-Welsch on the Jacobi matrix).
struct GaussHermite {
  VectorXd nodes;
  VectorXd weights;

  explicit GaussHermite(int n = 20) {
    MatrixXd J = MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      const double b = std::sqrt(i / 2.0);
      J(i, i - 1) = b;
      J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(J);
    nodes = es.eigenvalues();
    weights.resize(n);
    const double sqrt_pi = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
      const double v = es.eigenvectors()(0, i);
      weights(i) = sqrt_pi * v * v;
    }
  }
};

/// lower-median convention: sorted[(n-1)/2]
inline double lower_median(std::vector<double> v) {
  if (v.empty()) throw InputError("median of empty set");
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

enum class MnlpMode {
  integrate, // marginalize the latent with 20-point Gauss-Hermite
  plugin     // evaluate the likelihood at the latent posterior mean
};

/// -log p(y | latent Gaussian N(mu, var)) for one test point.
inline double neg_log_prob(double y, double mu, double var, Likelihood lik,
                           double tau2, double offset, MnlpMode mode,
                           const GaussHermite &gh) {
  switch (lik) {
  case Likelihood::gaussian: {
    const double v = var + tau2;
    const double d = y - mu;
    return 0.5 * (d * d / v + std::log(2.0 * M_PI * v));
  }
  case Likelihood::bernoulli:
  case Likelihood::poisson: {
    const LikelihoodModel m(lik, VectorXd::Constant(1, offset), 0.0);
    if (mode == MnlpMode::plugin || var <= 0.0)
      return -m.log_density_at(0, y, mu);
    // log sum_j w_j/sqrt(pi) p(y | mu + sqrt(2 var) t_j), log-sum-exp form
    const double s = std::sqrt(2.0 * var);
    double max_term = -std::numeric_limits<double>::infinity();
    VectorXd terms(gh.nodes.size());
    for (int j = 0; j < gh.nodes.size(); ++j) {
      terms(j) = m.log_density_at(0, y, mu + s * gh.nodes(j)) +
                 std::log(gh.weights(j) / std::sqrt(M_PI));
      max_term = std::max(max_term, terms(j));
    }
    if (!std::isfinite(max_term)) return std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (int j = 0; j < terms.size(); ++j) acc += std::exp(terms(j) - max_term);
    return -(max_term + std::log(acc));
  }
  }
  return 0.0;
}

/// Median negative log predictive probability over test points. The latent
/// predictive is pushed through the observation model; for Gaussian data the
/// response density (variance including tau^2) is used directly.
inline double mnlp(const GaussianPredictive &pred, const VectorXd &targets,
                   Likelihood lik, MnlpMode mode = MnlpMode::integrate,
                   const VectorXd &offsets = VectorXd()) {
  if (pred.mean.size() != targets.size())
    throw InputError("mnlp: predictive/target size mismatch");
  static const GaussHermite gh(20);
  std::vector<double> nlp(static_cast<size_t>(targets.size()));
  for (int i = 0; i < targets.size(); ++i) {
    const double offset = offsets.size() > 0 ? offsets(i) : 1.0;
    nlp[static_cast<size_t>(i)] = neg_log_prob(
        targets(i), pred.mean(i), pred.var_latent(i), lik, pred.tau2, offset, mode, gh);
  }
  return lower_median(std::move(nlp));
}

/// KL(N(mu1, var1) || N(mu2, var2)).
inline double gaussian_kl(double mu1, double var1, double mu2, double var2) {
  if (var2 <= 0.0) return std::numeric_limits<double>::infinity();
  if (var1 < 0.0) throw InputError("gaussian_kl: negative variance");
  return 0.5 * std::log(var2 / var1) + (var1 + (mu1 - mu2) * (mu1 - mu2)) / (2.0 * var2) -
         0.5;
}

/// Average univariate KL divergence from the full-GP latent predictive to
/// the sparse one, over matched test points.
inline double aukl(const GaussianPredictive &full, const GaussianPredictive &sparse) {
  if (full.mean.size() != sparse.mean.size())
    throw InputError("aukl: predictive size mismatch");
  double acc = 0.0;
  for (int i = 0; i < full.mean.size(); ++i)
    acc += gaussian_kl(full.mean(i), full.var_latent(i), sparse.mean(i),
                       sparse.var_latent(i));
  return acc / static_cast<double>(full.mean.size());
}

/// RMSE of the predictive means against test targets, normalized by the
/// sample (N-1) standard deviation of the targets. NaN when the targets are
/// constant (degenerate denominator).
inline double srmse(const VectorXd &pred_means, const VectorXd &targets) {
  if (pred_means.size() != targets.size())
    throw InputError("srmse: size mismatch");
  const int n = static_cast<int>(targets.size());
  if (n < 2) throw InputError("srmse: need at least two test points");
  const double mean = targets.mean();
  const double sample_var =
      (targets.array() - mean).square().sum() / static_cast<double>(n - 1);
  const double rmse =
      std::sqrt((pred_means - targets).squaredNorm() / static_cast<double>(n));
  if (sample_var <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return rmse / std::sqrt(sample_var);
}

/// Plain RMSE between posterior means and the true latent values.
inline double rmse_latent(const VectorXd &post_means, const VectorXd &true_f) {
  if (post_means.size() != true_f.size()) throw InputError("rmse_latent: size mismatch");
  return std::sqrt((post_means - true_f).squaredNorm() /
                   static_cast<double>(true_f.size()));
}

/// Per-model metric record; fields are present only where the likelihood
/// makes them meaningful.
struct MetricReport {
  std::optional<double> srmse;
  std::optional<double> mnlp;        // latent marginalized by quadrature
  std::optional<double> mnlp_plugin; // likelihood at the latent mean
  std::optional<double> aukl;
  std::optional<double> rmse;        // vs known latent truth
  int n_test = 0;
};

} // namespace oatgp
