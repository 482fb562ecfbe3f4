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

#include "oatgp/dataset.hpp"
#include "oatgp/fic.hpp"
#include "oatgp/kernel.hpp"
#include "oatgp/linalg.hpp"

namespace oatgp {

/// Exact dense GP regression pieces, O(N^3). Used as the small-N baseline
/// and as the model behind the meta GP.
struct FullGpState {
  MatrixXd X;
  KernelParams params;
  double mean = 0.0;
  MatrixXd Kxx;            // without noise
  Eigen::LLT<MatrixXd> llt; // chol of Kxx + tau^2 I
  VectorXd r;
  VectorXd alpha;
  double log_marginal = 0.0;
  bool fitted = false;
};

inline FullGpState build_full_gp_state(const Eigen::Ref<const MatrixXd> &X,
                                       const Eigen::Ref<const VectorXd> &y,
                                       const KernelParams &p, const MeanFunction &m) {
  p.validate();
  FullGpState s;
  s.X = X;
  s.params = p;
  s.mean = m.value;
  s.Kxx = kernel_gram(X, X, p);
  MatrixXd C = s.Kxx;
  C.diagonal().array() += p.noise_variance;
  s.llt = spd_cholesky(C, "dense GP covariance");
  s.r = y.array() - m.value;
  s.alpha = s.llt.solve(s.r);
  const int n = static_cast<int>(X.rows());
  s.log_marginal =
      -0.5 * (s.r.dot(s.alpha) + log_det_from_llt(s.llt) + n * kLog2Pi);
  s.fitted = true;
  return s;
}

inline double full_gp_log_marginal(const Dataset &data, const KernelParams &p,
                                   const MeanFunction &m) {
  if (data.likelihood != Likelihood::gaussian)
    throw InputError("full_gp_log_marginal requires a Gaussian likelihood");
  data.validate();
  return build_full_gp_state(data.X, data.y, p, m).log_marginal;
}

/// Gradient over (log signal variance, log lengthscales, u) with
/// tau^2 = lb + exp(u). When with_noise is false the u entry is omitted
/// (used by the meta GP, whose noise is held fixed).
inline VectorXd full_gp_grad(const FullGpState &s, bool with_noise = true) {
  const int n = static_cast<int>(s.X.rows());
  const int d = s.params.dim();
  const MatrixXd Cinv = s.llt.solve(MatrixXd::Identity(n, n));
  const MatrixXd M = s.alpha * s.alpha.transpose() - Cinv;

  VectorXd g(1 + d + (with_noise ? 1 : 0));
  g(0) = 0.5 * M.cwiseProduct(s.Kxx).sum();
  for (int dim = 0; dim < d; ++dim) {
    const double inv_l2 =
        1.0 / (s.params.lengthscales(dim) * s.params.lengthscales(dim));
    const VectorXd xd = s.X.col(dim);
    MatrixXd sq = xd.replicate(1, n) - xd.transpose().replicate(n, 1);
    sq = sq.cwiseProduct(sq) * inv_l2;
    g(1 + dim) = 0.5 * M.cwiseProduct(s.Kxx).cwiseProduct(sq).sum();
  }
  if (with_noise)
    g(1 + d) = 0.5 * M.trace() * (s.params.noise_variance - s.params.noise_lower_bound);
  return g;
}

inline GaussianPredictive full_gp_predict(const FullGpState &s,
                                          const Eigen::Ref<const MatrixXd> &Xnew) {
  if (!s.fitted) throw InputError("full_gp_predict: state is not fitted");
  if (Xnew.cols() != s.X.cols()) throw InputError("full_gp_predict: dimension mismatch");
  const MatrixXd Kmx = kernel_gram(Xnew, s.X, s.params); // M x N
  GaussianPredictive out;
  out.tau2 = s.params.noise_variance;
  out.mean = (Kmx * s.alpha).array() + s.mean;
  const MatrixXd W = s.llt.solve(Kmx.transpose()); // N x M
  const int m = static_cast<int>(Xnew.rows());
  out.var_latent.resize(m);
  for (int i = 0; i < m; ++i)
    out.var_latent(i) =
        std::max(s.params.signal_variance - Kmx.row(i).dot(W.col(i)), 0.0);
  return out;
}

inline GaussianPredictive full_gp_predict(const Dataset &data, const KernelParams &p,
                                          const MeanFunction &m,
                                          const Eigen::Ref<const MatrixXd> &Xnew) {
  return full_gp_predict(build_full_gp_state(data.X, data.y, p, m), Xnew);
}

} // namespace oatgp
