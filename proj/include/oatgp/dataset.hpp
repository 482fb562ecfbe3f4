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
#include <vector>

#include "oatgp/common.hpp"

namespace oatgp {

enum class Likelihood { gaussian, bernoulli, poisson };

inline std::string to_string(Likelihood lik) {
  switch (lik) {
  case Likelihood::gaussian: return "gaussian";
  case Likelihood::bernoulli: return "bernoulli";
  case Likelihood::poisson: return "poisson";
  }
  return "?";
}

inline Likelihood likelihood_from_string(const std::string &s) {
  if (s == "gaussian") return Likelihood::gaussian;
  if (s == "bernoulli") return Likelihood::bernoulli;
  if (s == "poisson") return Likelihood::poisson;
  throw InputError("unknown likelihood: " + s);
}

/// Regression data: N x d inputs, N targets, and for Poisson data a positive
/// exposure offset per observation.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd offsets; // size 0 unless likelihood == poisson
  Likelihood likelihood = Likelihood::gaussian;

  int n() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }

  void validate() const {
    if (X.rows() == 0 || X.cols() == 0) throw InputError("Dataset: empty inputs");
    if (y.size() != X.rows()) throw InputError("Dataset: X/y size mismatch");
    if (!X.allFinite() || !y.allFinite()) throw InputError("Dataset: non-finite values");
    const bool has_offsets = offsets.size() > 0;
    if (has_offsets != (likelihood == Likelihood::poisson))
      throw InputError("Dataset: offsets present iff likelihood is poisson");
    if (has_offsets) {
      if (offsets.size() != y.size()) throw InputError("Dataset: offsets size mismatch");
      if ((offsets.array() <= 0.0).any()) throw InputError("Dataset: offsets must be > 0");
    }
    if (likelihood == Likelihood::bernoulli) {
      for (int i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0)
          throw InputError("Dataset: bernoulli targets must be 0 or 1");
    }
    if (likelihood == Likelihood::poisson) {
      for (int i = 0; i < y.size(); ++i)
        if (y(i) < 0.0 || y(i) != std::floor(y(i)))
          throw InputError("Dataset: poisson targets must be nonnegative integers");
    }
  }

  Dataset rows(const std::vector<int> &idx) const {
    Dataset out;
    out.likelihood = likelihood;
    out.X.resize(static_cast<int>(idx.size()), X.cols());
    out.y.resize(static_cast<int>(idx.size()));
    if (offsets.size() > 0) out.offsets.resize(static_cast<int>(idx.size()));
    for (int i = 0; i < static_cast<int>(idx.size()); ++i) {
      out.X.row(i) = X.row(idx[i]);
      out.y(i) = y(idx[i]);
      if (offsets.size() > 0) out.offsets(i) = offsets(idx[i]);
    }
    return out;
  }
};

} // namespace oatgp
