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
#include <cmath>
#include <string>

#include "oatgp/common.hpp"

namespace oatgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Squared-exponential covariance hyperparameters with one lengthscale per
/// input dimension, plus the Gaussian observation noise variance and the
/// diagonal jitter added to knot gram matrices.
///
/// Positivity is enforced through transforms: signal variance and
/// lengthscales are optimized as logs, the noise variance as
/// noise_lower_bound + exp(u). The jitter is a fixed constant, never
/// optimized.
struct KernelParams {
  double signal_variance = 1.0;
  VectorXd lengthscales;          // one per input dimension
  double noise_variance = 0.1;    // tau^2
  double noise_lower_bound = 1e-6;
  double jitter = 1e-8;           // added to knot-gram diagonals

  static KernelParams make(double signal_variance, VectorXd lengthscales,
                           double noise_variance, double noise_lower_bound = 1e-6) {
    KernelParams p;
    p.signal_variance = signal_variance;
    p.lengthscales = std::move(lengthscales);
    p.noise_variance = noise_variance;
    p.noise_lower_bound = noise_lower_bound;
    p.jitter = 1e-8 * signal_variance;
    p.validate();
    return p;
  }

  int dim() const { return static_cast<int>(lengthscales.size()); }

  void validate() const {
    if (!(signal_variance > 0.0))
      throw InputError("KernelParams: signal_variance must be > 0");
    if (lengthscales.size() == 0 || (lengthscales.array() <= 0.0).any())
      throw InputError("KernelParams: lengthscales must be > 0");
    if (!(noise_variance >= noise_lower_bound))
      throw InputError("KernelParams: noise_variance below its lower bound");
    if (jitter < 0.0) throw InputError("KernelParams: jitter must be >= 0");
  }
};

/// Constant mean function.
struct MeanFunction {
  double value = 0.0;

  double operator()(const Eigen::Ref<const VectorXd> &) const { return value; }
  VectorXd at(int n) const { return VectorXd::Constant(n, value); }
};

inline void check_same_dim(const Eigen::Ref<const VectorXd> &x1,
                           const Eigen::Ref<const VectorXd> &x2,
                           const KernelParams &p) {
  if (x1.size() != x2.size() || x1.size() != p.lengthscales.size())
    throw InputError("kernel: input/lengthscale dimension mismatch (" +
                     std::to_string(x1.size()) + ", " + std::to_string(x2.size()) +
                     ", " + std::to_string(p.lengthscales.size()) + ")");
}

/// k(x1, x2) = sigma_f^2 exp(-1/2 sum_d ((x1_d - x2_d)/l_d)^2)
inline double kernel_eval(const Eigen::Ref<const VectorXd> &x1,
                          const Eigen::Ref<const VectorXd> &x2,
                          const KernelParams &p) {
  check_same_dim(x1, x2, p);
  const double q = ((x1 - x2).array() / p.lengthscales.array()).square().sum();
  return p.signal_variance * std::exp(-0.5 * q);
}

/// Partials of kernel_eval with respect to (log sigma_f^2, log l_1, ..., log l_d).
inline VectorXd kernel_grad_params(const Eigen::Ref<const VectorXd> &x1,
                                   const Eigen::Ref<const VectorXd> &x2,
                                   const KernelParams &p) {
  check_same_dim(x1, x2, p);
  const double k = kernel_eval(x1, x2, p);
  VectorXd g(1 + p.dim());
  g(0) = k;
  g.tail(p.dim()) =
      k * ((x1 - x2).array() / p.lengthscales.array()).square().matrix();
  return g;
}

enum class KernelArg { first, second };

/// Partials of kernel_eval with respect to the coordinates of one argument.
inline VectorXd kernel_grad_input(const Eigen::Ref<const VectorXd> &x1,
                                  const Eigen::Ref<const VectorXd> &x2,
                                  const KernelParams &p, KernelArg wrt) {
  check_same_dim(x1, x2, p);
  const double k = kernel_eval(x1, x2, p);
  VectorXd g = -k * ((x1 - x2).array() / p.lengthscales.array().square()).matrix();
  if (wrt == KernelArg::second) g = -g;
  return g;
}

/// Cross-gram: rows index X1, columns index X2. No jitter.
inline MatrixXd kernel_gram(const Eigen::Ref<const MatrixXd> &X1,
                            const Eigen::Ref<const MatrixXd> &X2,
                            const KernelParams &p) {
  if (X1.cols() != X2.cols() || X1.cols() != p.lengthscales.size())
    throw InputError("kernel_gram: dimension mismatch");
  const VectorXd inv_l = p.lengthscales.cwiseInverse();
  const MatrixXd A = X1 * inv_l.asDiagonal();
  const MatrixXd B = X2 * inv_l.asDiagonal();
  const VectorXd an = A.rowwise().squaredNorm();
  const VectorXd bn = B.rowwise().squaredNorm();
  MatrixXd sq = an.replicate(1, B.rows()) + bn.transpose().replicate(A.rows(), 1) -
                2.0 * A * B.transpose();
  sq = sq.cwiseMax(0.0); // rounding can produce tiny negatives at zero distance
  return p.signal_variance * (-0.5 * sq.array()).exp().matrix();
}

/// Diagonal of the gram of X with itself: constant sigma_f^2 for the SE kernel.
inline VectorXd kernel_gram_diag(const Eigen::Ref<const MatrixXd> &X,
                                 const KernelParams &p) {
  return VectorXd::Constant(X.rows(), p.signal_variance);
}

} // namespace oatgp
