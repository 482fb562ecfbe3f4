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
#include <string>

#include "oatgp/dataset.hpp"
#include "oatgp/kernel.hpp"
#include "oatgp/likelihoods.hpp"
#include "oatgp/rng.hpp"

namespace oatgp {

enum class SynthKind { gaussian_1d, poisson_lgcp_1d, banana_like_2d };

inline std::string to_string(SynthKind k) {
  switch (k) {
  case SynthKind::gaussian_1d: return "gaussian_1d";
  case SynthKind::poisson_lgcp_1d: return "poisson_lgcp_1d";
  case SynthKind::banana_like_2d: return "banana_like_2d";
  }
  return "?";
}

inline SynthKind synth_kind_from_string(const std::string &s) {
  if (s == "gaussian_1d") return SynthKind::gaussian_1d;
  if (s == "poisson_lgcp_1d") return SynthKind::poisson_lgcp_1d;
  if (s == "banana_like_2d") return SynthKind::banana_like_2d;
  throw InputError("unknown synth kind: " + s);
}

/// Seeded synthetic-data generator settings. The latent function is drawn
/// from the exact dense GP prior at the generated inputs, then responses are
/// drawn conditional on it. Gaussian inputs are sampled uniformly; Poisson
/// inputs sit on an even grid so the exposure equals the grid spacing.
struct SynthSpec {
  SynthKind kind = SynthKind::gaussian_1d;
  int n = 200;
  VectorXd lower_bounds = VectorXd::Zero(1);
  VectorXd upper_bounds = VectorXd::Constant(1, 10.0);
  double signal_variance = 1.0;
  VectorXd lengthscales = VectorXd::Constant(1, 1.0);
  double noise_variance = 0.1; // gaussian_1d only
  std::uint64_t seed = 0;

  int dim() const { return kind == SynthKind::banana_like_2d ? 2 : 1; }

  void validate() const {
    if (n < 2) throw InputError("SynthSpec: n must be >= 2");
    if (lower_bounds.size() != dim() || upper_bounds.size() != dim())
      throw InputError("SynthSpec: bounds dimension mismatch");
    if (!lower_bounds.allFinite() || !upper_bounds.allFinite())
      throw InputError("SynthSpec: bounds must be finite");
    if ((upper_bounds - lower_bounds).minCoeff() <= 0.0)
      throw InputError("SynthSpec: need lower < upper bounds");
    if (lengthscales.size() != dim())
      throw InputError("SynthSpec: lengthscale dimension mismatch");
    if (noise_variance < 0.0) throw InputError("SynthSpec: negative noise variance");
  }
};

struct SynthResult {
  Dataset data;
  VectorXd latent; // the drawn f at the data locations
};

namespace detail {

/// Draw f ~ N(0, K(X,X)) by dense Cholesky, escalating a tiny diagonal
/// jitter if the factorization fails.
inline VectorXd draw_latent(const MatrixXd &X, const KernelParams &p, Rng &rng) {
  const MatrixXd K = kernel_gram(X, X, p);
  const int n = static_cast<int>(X.rows());
  double jit = 1e-10 * p.signal_variance;
  for (int attempt = 0; attempt < 8; ++attempt) {
    MatrixXd Kj = K;
    Kj.diagonal().array() += jit;
    Eigen::LLT<MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      VectorXd z(n);
      for (int i = 0; i < n; ++i) z(i) = rng.normal();
      return llt.matrixL() * z;
    }
    jit *= 10.0;
  }
  throw NumericalError("synth: prior covariance factorization failed");
}

} // namespace detail

inline SynthResult generate(const SynthSpec &spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int d = spec.dim();

  KernelParams p;
  p.signal_variance = spec.signal_variance;
  p.lengthscales = spec.lengthscales;
  p.noise_variance = std::max(spec.noise_variance, 1e-12);
  p.noise_lower_bound = 0.0;
  p.jitter = 0.0;

  SynthResult out;
  MatrixXd X(spec.n, d);
  switch (spec.kind) {
  case SynthKind::gaussian_1d:
    for (int i = 0; i < spec.n; ++i)
      X(i, 0) = rng.uniform(spec.lower_bounds(0), spec.upper_bounds(0));
    break;
  case SynthKind::poisson_lgcp_1d: {
    const double step = (spec.upper_bounds(0) - spec.lower_bounds(0)) / (spec.n - 1);
    for (int i = 0; i < spec.n; ++i) X(i, 0) = spec.lower_bounds(0) + i * step;
    break;
  }
  case SynthKind::banana_like_2d:
    for (int i = 0; i < spec.n; ++i)
      for (int j = 0; j < d; ++j)
        X(i, j) = rng.uniform(spec.lower_bounds(j), spec.upper_bounds(j));
    break;
  }

  out.latent = detail::draw_latent(X, p, rng);
  out.data.X = X;
  out.data.y.resize(spec.n);

  switch (spec.kind) {
  case SynthKind::gaussian_1d: {
    out.data.likelihood = Likelihood::gaussian;
    const double sd = std::sqrt(spec.noise_variance);
    for (int i = 0; i < spec.n; ++i)
      out.data.y(i) = out.latent(i) + (sd > 0.0 ? rng.normal(0.0, sd) : 0.0);
    break;
  }
  case SynthKind::poisson_lgcp_1d: {
    out.data.likelihood = Likelihood::poisson;
    const double a = X(1, 0) - X(0, 0); // grid spacing as exposure
    out.data.offsets = VectorXd::Constant(spec.n, a);
    for (int i = 0; i < spec.n; ++i)
      out.data.y(i) =
          static_cast<double>(rng.poisson(std::exp(out.latent(i)) * a));
    break;
  }
  case SynthKind::banana_like_2d: {
    out.data.likelihood = Likelihood::bernoulli;
    for (int i = 0; i < spec.n; ++i)
      out.data.y(i) = rng.uniform() < logistic(out.latent(i)) ? 1.0 : 0.0;
    break;
  }
  }
  out.data.validate();
  return out;
}

} // namespace oatgp
