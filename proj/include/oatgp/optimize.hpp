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
#include <deque>
#include <functional>
#include <string>

#include "oatgp/common.hpp"

namespace oatgp {

using Eigen::VectorXd;

/// Adadelta accumulators (decaying averages of squared gradients and squared
/// updates). Both start at zero; no learning rate.
struct AdadeltaState {
  double rho = 0.95;
  double epsilon = 1e-6;
  VectorXd eg2; // E[g^2]
  VectorXd ed2; // E[dx^2]
  long step_count = 0;

  static AdadeltaState make(int dim, double rho = 0.95, double epsilon = 1e-6) {
    AdadeltaState s;
    s.rho = rho;
    s.epsilon = epsilon;
    s.eg2 = VectorXd::Zero(dim);
    s.ed2 = VectorXd::Zero(dim);
    return s;
  }
};

/// One ascent update: delta_c = sqrt(E[dx^2]_c + eps) / sqrt(E[g^2]_c + eps) * g_c.
inline VectorXd adadelta_step(AdadeltaState &state, const VectorXd &gradient) {
  if (gradient.size() != state.eg2.size())
    throw InputError("adadelta_step: gradient size mismatch");
  for (int i = 0; i < gradient.size(); ++i)
    if (!std::isfinite(gradient(i)))
      throw NumericalError("adadelta_step: non-finite gradient at coordinate " +
                           std::to_string(i));
  state.eg2 = state.rho * state.eg2 + (1.0 - state.rho) * gradient.cwiseProduct(gradient);
  const VectorXd delta =
      ((state.ed2.array() + state.epsilon).sqrt() /
       (state.eg2.array() + state.epsilon).sqrt() * gradient.array())
          .matrix();
  state.ed2 = state.rho * state.ed2 + (1.0 - state.rho) * delta.cwiseProduct(delta);
  ++state.step_count;
  return delta;
}

struct ConvergenceSpec {
  double objective_tol = 1e-4;
  double grad_tol = 1e-6;
  long max_iters = 1000;

  void validate() const {
    if (!(objective_tol > 0.0) || !(grad_tol > 0.0))
      throw InputError("ConvergenceSpec: tolerances must be > 0");
    if (max_iters < 0) throw InputError("ConvergenceSpec: max_iters must be >= 0");
  }
};

enum class AscentStatus { converged, budget_exhausted, rolled_back };

struct AscentResult {
  VectorXd best_params;
  double best_value = -std::numeric_limits<double>::infinity();
  long iterations = 0; // gradient steps taken
  AscentStatus status = AscentStatus::budget_exhausted;
};

/// Objective returns the value and fills the gradient. Maximization.
using ObjectiveFn = std::function<double(const VectorXd &, VectorXd &)>;

/// Adadelta ascent with best-so-far tracking. Converged when the gradient
/// max-norm drops below grad_tol, or when five consecutive objective changes
/// all stay below objective_tol (single small changes are common under
/// Adadelta's oscillation). Non-finite objectives roll back to the best
/// iterate seen.
inline AscentResult run_ascent(const ObjectiveFn &objective, const VectorXd &initial,
                               AdadeltaState adadelta, const ConvergenceSpec &spec) {
  spec.validate();
  if (adadelta.eg2.size() != initial.size())
    throw InputError("run_ascent: adadelta state dimension mismatch");

  AscentResult res;
  VectorXd params = initial;
  VectorXd grad(initial.size());
  double value = objective(params, grad);
  if (!std::isfinite(value))
    throw NumericalError("run_ascent: objective not finite at the initial point");

  res.best_params = params;
  res.best_value = value;

  std::deque<double> recent_changes;
  for (long iter = 0; iter < spec.max_iters; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < spec.grad_tol) {
      res.status = AscentStatus::converged;
      return res;
    }
    const VectorXd delta = adadelta_step(adadelta, grad);
    params += delta;
    const double prev = value;
    value = objective(params, grad);
    ++res.iterations;
    if (!std::isfinite(value)) {
      res.status = AscentStatus::rolled_back;
      return res;
    }
    if (value > res.best_value) {
      res.best_value = value;
      res.best_params = params;
    }
    recent_changes.push_back(std::abs(value - prev));
    if (recent_changes.size() > 5) recent_changes.pop_front();
    if (recent_changes.size() == 5) {
      bool all_small = true;
      for (double c : recent_changes) all_small &= (c < spec.objective_tol);
      if (all_small) {
        res.status = AscentStatus::converged;
        return res;
      }
    }
  }
  res.status = AscentStatus::budget_exhausted;
  return res;
}

} // namespace oatgp
