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

#include "oatgp/common.hpp"

namespace oatgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Pivoted LDL^T factor of a symmetric positive semidefinite matrix with
/// pivot thresholding, so that exactly singular grams (duplicate knots at
/// zero jitter) solve in the pseudo-inverse sense.
///
/// With A = P^T L D L^T P and D+ the thresholded pivot inverse:
///   solve(M)      -> A+ M
///   half_solve(M) -> (D+)^{1/2} L^{-1} P M, so half_solve(M)^T half_solve(M)
///                    = M^T A+ M. Both use the same pivot threshold, keeping
///                    low-rank identities exact in the rank-deficient case.
class PsdFactor {
public:
  PsdFactor() = default;

  explicit PsdFactor(const MatrixXd &A) : ldlt_(A) {
    if (!A.allFinite())
      throw NumericalError("PsdFactor: matrix has non-finite entries");
    if (ldlt_.info() != Eigen::Success)
      throw NumericalError("PsdFactor: LDLT factorization failed");
    const VectorXd d = ldlt_.vectorD();
    const double dmax = d.size() > 0 ? d.cwiseAbs().maxCoeff() : 0.0;
    tol_ = std::max(dmax, 1.0) * static_cast<double>(d.size()) *
           std::numeric_limits<double>::epsilon();
    if ((d.array() < -16.0 * tol_).any())
      throw NumericalError("PsdFactor: matrix is not positive semidefinite");
    dinv_.resize(d.size());
    dinv_half_.resize(d.size());
    for (int i = 0; i < d.size(); ++i) {
      if (d(i) > tol_) {
        dinv_(i) = 1.0 / d(i);
        dinv_half_(i) = 1.0 / std::sqrt(d(i));
      } else {
        dinv_(i) = 0.0;
        dinv_half_(i) = 0.0;
      }
    }
  }

  int size() const { return static_cast<int>(dinv_.size()); }

  /// A+ M via the thresholded pivots.
  MatrixXd solve(const MatrixXd &M) const {
    MatrixXd Y = half_solve(M);
    Y.array().colwise() *= dinv_half_.array();
    ldlt_.matrixU().solveInPlace(Y);
    return ldlt_.transpositionsP().transpose() * Y;
  }

  VectorXd solve(const VectorXd &v) const {
    return solve(MatrixXd(v)).col(0);
  }

  /// (D+)^{1/2} L^{-1} P M.
  MatrixXd half_solve(const MatrixXd &M) const {
    MatrixXd Y = ldlt_.transpositionsP() * M;
    ldlt_.matrixL().solveInPlace(Y);
    Y.array().colwise() *= dinv_half_.array();
    return Y;
  }

  /// Reconstructs A from the stored factor (used by consistency checks).
  MatrixXd reconstruct() const { return ldlt_.reconstructedMatrix(); }

private:
  Eigen::LDLT<MatrixXd> ldlt_;
  VectorXd dinv_;
  VectorXd dinv_half_;
  double tol_ = 0.0;
};

/// Cholesky of a symmetric positive definite matrix; throws NumericalError
/// instead of returning an invalid factor.
inline Eigen::LLT<MatrixXd> spd_cholesky(const MatrixXd &A, const char *what) {
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string("Cholesky failed: ") + what);
  return llt;
}

inline double log_det_from_llt(const Eigen::LLT<MatrixXd> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

} // namespace oatgp
