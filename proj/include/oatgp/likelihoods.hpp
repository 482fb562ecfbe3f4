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

#include "oatgp/dataset.hpp"

namespace oatgp {

inline double log1p_exp(double x) {
  // log(1 + e^x) without overflow
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Observation model p(y_i | f_i) with the derivatives the Laplace
/// approximation needs. All three likelihoods are log-concave in f, so
/// d2 <= 0 everywhere and W = -d2 >= 0.
///
///   bernoulli: logistic link, y in {0,1}
///   poisson:   rate offset_i * exp(f_i)
///   gaussian:  N(f_i, tau^2), used to validate Laplace against the exact
///              marginal (the approximation is exact there)
class LikelihoodModel {
public:
  LikelihoodModel(Likelihood kind, VectorXd offsets = VectorXd(), double tau2 = 0.0)
      : kind_(kind), offsets_(std::move(offsets)), tau2_(tau2) {
    if (kind_ == Likelihood::poisson && offsets_.size() == 0)
      throw InputError("poisson likelihood requires offsets");
    if (kind_ == Likelihood::gaussian && !(tau2_ > 0.0))
      throw InputError("gaussian likelihood requires tau^2 > 0");
  }

  static LikelihoodModel for_dataset(const Dataset &data, double tau2 = 0.0) {
    return LikelihoodModel(data.likelihood, data.offsets, tau2);
  }

  Likelihood kind() const { return kind_; }

  double log_density(const VectorXd &y, const VectorXd &f) const {
    double total = 0.0;
    for (int i = 0; i < y.size(); ++i) total += log_density_at(i, y(i), f(i));
    return total;
  }

  /// d log p / df, elementwise.
  VectorXd d1(const VectorXd &y, const VectorXd &f) const {
    VectorXd g(y.size());
    for (int i = 0; i < y.size(); ++i) {
      switch (kind_) {
      case Likelihood::bernoulli: g(i) = y(i) - logistic(f(i)); break;
      case Likelihood::poisson: g(i) = y(i) - offsets_(i) * std::exp(f(i)); break;
      case Likelihood::gaussian: g(i) = (y(i) - f(i)) / tau2_; break;
      }
    }
    return g;
  }

  /// W = -d^2 log p / df^2 >= 0, elementwise.
  VectorXd w(const VectorXd &y, const VectorXd &f) const {
    VectorXd w(y.size());
    for (int i = 0; i < y.size(); ++i) {
      switch (kind_) {
      case Likelihood::bernoulli: {
        const double s = logistic(f(i));
        w(i) = s * (1.0 - s);
        break;
      }
      case Likelihood::poisson: w(i) = offsets_(i) * std::exp(f(i)); break;
      case Likelihood::gaussian: w(i) = 1.0 / tau2_; break;
      }
    }
    (void)y;
    return w;
  }

  /// dW/df, elementwise (enters the implicit part of the Laplace gradient).
  VectorXd dw(const VectorXd &y, const VectorXd &f) const {
    VectorXd dw(y.size());
    for (int i = 0; i < y.size(); ++i) {
      switch (kind_) {
      case Likelihood::bernoulli: {
        const double s = logistic(f(i));
        dw(i) = s * (1.0 - s) * (1.0 - 2.0 * s);
        break;
      }
      case Likelihood::poisson: dw(i) = offsets_(i) * std::exp(f(i)); break;
      case Likelihood::gaussian: dw(i) = 0.0; break;
      }
    }
    (void)y;
    return dw;
  }

  double log_density_at(int i, double y, double f) const {
    switch (kind_) {
    case Likelihood::bernoulli:
      return y * f - log1p_exp(f);
    case Likelihood::poisson: {
      const double log_rate = f + std::log(offsets_(i));
      return y * log_rate - std::exp(log_rate) - std::lgamma(y + 1.0);
    }
    case Likelihood::gaussian: {
      const double d = y - f;
      return -0.5 * (d * d / tau2_ + std::log(2.0 * M_PI * tau2_));
    }
    }
    return 0.0;
  }

private:
  Likelihood kind_;
  VectorXd offsets_;
  double tau2_;
};

} // namespace oatgp
