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
#include <limits>
#include <optional>
#include <vector>

#include "oatgp/dataset.hpp"
#include "oatgp/fic.hpp"
#include "oatgp/full_gp.hpp"
#include "oatgp/laplace.hpp"
#include "oatgp/optimize.hpp"

namespace oatgp {

/// Log marginal likelihood of the sparse model: exact for Gaussian data,
/// Laplace-approximate otherwise.
inline double sparse_log_marginal(const Dataset &data,
                                  const Eigen::Ref<const MatrixXd> &knots,
                                  const KernelParams &p, const MeanFunction &m) {
  if (data.likelihood == Likelihood::gaussian)
    return fic_log_marginal(data, knots, p, m);
  return laplace_log_marginal(data, knots, p, m);
}

/// Latent predictive under the sparse model.
inline GaussianPredictive sparse_predict(const Dataset &data,
                                         const Eigen::Ref<const MatrixXd> &knots,
                                         const KernelParams &p, const MeanFunction &m,
                                         const Eigen::Ref<const MatrixXd> &Xnew) {
  if (data.likelihood == Likelihood::gaussian)
    return fic_predict(build_fic_state(data, knots, p, m), Xnew);
  return laplace_predict(build_fic_laplace_state(data, knots, p, m), Xnew);
}

/// Latent predictive under the full (dense) model.
inline GaussianPredictive full_predict(const Dataset &data, const KernelParams &p,
                                       const MeanFunction &m,
                                       const Eigen::Ref<const MatrixXd> &Xnew) {
  if (data.likelihood == Likelihood::gaussian)
    return full_gp_predict(data, p, m, Xnew);
  return dense_laplace_predict(build_dense_laplace_state(data, p, m), Xnew);
}

/// Which coordinates an optimization moves: the kernel transforms always,
/// the noise transform only for Gaussian data, plus the coordinates of the
/// listed knots. Vector layout:
///   [log signal variance, log lengthscales (d), u (Gaussian only),
///    knot coordinates, knot-major]
struct ParamLayout {
  int dim = 0;
  bool with_noise = false;
  std::vector<int> active_knots;

  int size() const {
    return 1 + dim + (with_noise ? 1 : 0) +
           static_cast<int>(active_knots.size()) * dim;
  }
  int knot_offset() const { return 1 + dim + (with_noise ? 1 : 0); }

  static ParamLayout for_data(const Dataset &data, std::vector<int> active) {
    ParamLayout l;
    l.dim = data.dim();
    l.with_noise = data.likelihood == Likelihood::gaussian;
    l.active_knots = std::move(active);
    return l;
  }
};

inline VectorXd pack_params(const KernelParams &p, const MatrixXd &knots,
                            const ParamLayout &l) {
  VectorXd v(l.size());
  v(0) = std::log(p.signal_variance);
  v.segment(1, l.dim) = p.lengthscales.array().log();
  if (l.with_noise)
    v(1 + l.dim) = std::log(std::max(p.noise_variance - p.noise_lower_bound, 1e-12));
  for (int a = 0; a < static_cast<int>(l.active_knots.size()); ++a)
    v.segment(l.knot_offset() + a * l.dim, l.dim) =
        knots.row(l.active_knots[a]).transpose();
  return v;
}

inline void unpack_params(const VectorXd &v, const ParamLayout &l, KernelParams *p,
                          MatrixXd *knots) {
  p->signal_variance = std::exp(v(0));
  p->lengthscales = v.segment(1, l.dim).array().exp();
  if (l.with_noise)
    p->noise_variance = p->noise_lower_bound + std::exp(v(1 + l.dim));
  for (int a = 0; a < static_cast<int>(l.active_knots.size()); ++a)
    knots->row(l.active_knots[a]) =
        v.segment(l.knot_offset() + a * l.dim, l.dim).transpose();
}

/// Builds a maximization objective over the layout for run_ascent.
/// Numerical failures inside an evaluation surface as -inf so the ascent
/// rolls back instead of crashing mid-fit. eval_count, when given, counts
/// objective evaluations.
inline ObjectiveFn make_sparse_objective(const Dataset &data, MatrixXd knots,
                                         KernelParams params, MeanFunction mean,
                                         ParamLayout layout,
                                         long *eval_count = nullptr) {
  return [=, &data](const VectorXd &v, VectorXd &grad) mutable -> double {
    if (eval_count) ++(*eval_count);
    unpack_params(v, layout, &params, &knots);
    try {
      double value;
      if (data.likelihood == Likelihood::gaussian) {
        value = fic_log_marginal(data, knots, params, mean);
        grad = fic_grad(data, knots, params, mean, layout.active_knots);
      } else {
        value = laplace_log_marginal(data, knots, params, mean);
        const VectorXd g = laplace_grad(data, knots, params, mean, layout.active_knots);
        grad.resize(layout.size());
        grad.head(1 + layout.dim) = g.head(1 + layout.dim);
        grad.tail(static_cast<int>(layout.active_knots.size()) * layout.dim) =
            g.tail(static_cast<int>(layout.active_knots.size()) * layout.dim);
      }
      if (!std::isfinite(value)) return -std::numeric_limits<double>::infinity();
      return value;
    } catch (const NumericalError &) {
      grad.setZero(layout.size());
      return -std::numeric_limits<double>::infinity();
    }
  };
}

/// Hyperparameter-only objective for the dense full GP.
inline ObjectiveFn make_full_gp_objective(const Dataset &data, KernelParams params,
                                          MeanFunction mean, long *eval_count = nullptr) {
  ParamLayout layout = ParamLayout::for_data(data, {});
  return [=, &data](const VectorXd &v, VectorXd &grad) mutable -> double {
    if (eval_count) ++(*eval_count);
    MatrixXd no_knots(0, layout.dim);
    unpack_params(v, layout, &params, &no_knots);
    try {
      double value;
      if (data.likelihood == Likelihood::gaussian) {
        const FullGpState s = build_full_gp_state(data.X, data.y, params, mean);
        value = s.log_marginal;
        grad = full_gp_grad(s, true);
      } else {
        const DenseLaplaceState s = build_dense_laplace_state(data, params, mean);
        value = s.log_marginal;
        grad = dense_laplace_grad(data, s);
      }
      if (!std::isfinite(value)) return -std::numeric_limits<double>::infinity();
      return value;
    } catch (const NumericalError &) {
      grad.setZero(layout.size());
      return -std::numeric_limits<double>::infinity();
    }
  };
}

} // namespace oatgp
