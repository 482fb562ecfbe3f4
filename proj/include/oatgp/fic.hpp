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
#include <optional>
#include <sstream>
#include <vector>

#include "oatgp/dataset.hpp"
#include "oatgp/kernel.hpp"
#include "oatgp/linalg.hpp"

namespace oatgp {

inline std::string format_knots(const MatrixXd &knots) {
  std::ostringstream ss;
  ss << knots.format(Eigen::IOFormat(6, 0, ", ", "\n", "[", "]"));
  return ss.str();
}

/// Factors Kzz + jitter*I, escalating the jitter by factors of 10 (up to
/// 1e-4 * signal variance) if the factorization breaks down numerically.
inline PsdFactor factor_knot_gram(const MatrixXd &Kzz, const KernelParams &p,
                                  const MatrixXd &knots, double *jitter_used) {
  double j = p.jitter;
  const double jmax = 1e-4 * p.signal_variance;
  for (;;) {
    try {
      MatrixXd A = Kzz;
      A.diagonal().array() += j;
      PsdFactor f(A);
      if (jitter_used) *jitter_used = j;
      return f;
    } catch (const NumericalError &) {
      const double next = (j == 0.0) ? 1e-10 * p.signal_variance : 10.0 * j;
      if (next > jmax)
        throw NumericalError(
            "knot gram factorization failed after jitter escalation; knots:\n" +
            format_knots(knots));
      j = next;
    }
  }
}

/// Knot-dependent pieces of the FIC prior f_x ~ N(m, Lambda + V^T V),
/// shared by the exact Gaussian marginal and the Laplace approximation.
///
/// V satisfies V^T V = K_xz A+ K_zx with A = K_zz + jitter*I, and
/// Wt = A+ K_zx, so applying the low-rank part never forms an N x N matrix.
struct FicPrior {
  MatrixXd X;       // copy of training inputs, N x d
  MatrixXd knots;   // K x d
  KernelParams params;
  double mean = 0.0;

  MatrixXd Kxz;     // N x K
  MatrixXd Kzz;     // K x K, without jitter
  PsdFactor A;      // factor of Kzz + jitter*I
  double jitter_used = 0.0;
  MatrixXd V;       // K x N
  MatrixXd Wt;      // K x N, A+ K_zx
  VectorXd lambda;  // N, clamped at 0

  int n() const { return static_cast<int>(X.rows()); }
  int k() const { return static_cast<int>(knots.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }

  /// (Lambda + V^T V) x without forming the N x N matrix.
  VectorXd apply_cov(const VectorXd &x) const {
    return lambda.cwiseProduct(x) + V.transpose() * (V * x);
  }
};

inline FicPrior build_fic_prior(const Eigen::Ref<const MatrixXd> &X,
                                const Eigen::Ref<const MatrixXd> &knots,
                                const KernelParams &p, double mean_value = 0.0) {
  if (knots.rows() < 1) throw InputError("FIC: need at least one knot");
  if (knots.cols() != X.cols()) throw InputError("FIC: knot/input dimension mismatch");
  p.validate();

  FicPrior prior;
  prior.X = X;
  prior.knots = knots;
  prior.params = p;
  prior.mean = mean_value;
  prior.Kzz = kernel_gram(knots, knots, p);
  prior.A = factor_knot_gram(prior.Kzz, p, knots, &prior.jitter_used);
  prior.Kxz = kernel_gram(X, knots, p);
  prior.V = prior.A.half_solve(prior.Kxz.transpose());
  prior.Wt = prior.A.solve(MatrixXd(prior.Kxz.transpose()));
  prior.lambda =
      (kernel_gram_diag(X, p) - prior.V.colwise().squaredNorm().transpose())
          .cwiseMax(0.0);
  return prior;
}

/// Marginal Gaussian predictive with the latent variance kept separately
/// from the observation variance (latent + tau^2).
struct GaussianPredictive {
  VectorXd mean;
  VectorXd var_latent;
  double tau2 = 0.0;

  VectorXd var_obs() const {
    return var_latent.array() + tau2;
  }
};

/// Fitted FIC model for Gaussian data: the prior plus the Woodbury pieces of
/// (tau^2 I + Psi)^{-1} and the cached log-marginal likelihood.
struct FicState {
  FicPrior prior;
  VectorXd D;            // tau^2 + lambda
  Eigen::LLT<MatrixXd> Lb; // chol of B = I + V D^{-1} V^T
  VectorXd r;            // y - m
  VectorXd alpha;        // (tau^2 I + Psi)^{-1} r
  double log_marginal = 0.0;
  bool fitted = false;

  /// (tau^2 I + Psi)^{-1} x by the low-rank route.
  VectorXd solve_cov(const VectorXd &x) const {
    const VectorXd dx = x.cwiseQuotient(D);
    return dx - (prior.V.transpose() * Lb.solve(prior.V * dx)).cwiseQuotient(D);
  }
};

inline FicState build_fic_state(const Dataset &data,
                                const Eigen::Ref<const MatrixXd> &knots,
                                const KernelParams &p, const MeanFunction &m) {
  if (data.likelihood != Likelihood::gaussian)
    throw InputError("FIC exact marginal requires a Gaussian likelihood");
  data.validate();

  FicState s;
  s.prior = build_fic_prior(data.X, knots, p, m.value);
  const int n = data.n();
  const int k = s.prior.k();

  s.D = s.prior.lambda.array() + p.noise_variance;
  MatrixXd Vd = s.prior.V; // V D^{-1}
  Vd.array().rowwise() *= s.D.cwiseInverse().transpose().array();
  MatrixXd B = MatrixXd::Identity(k, k) + Vd * s.prior.V.transpose();
  s.Lb = spd_cholesky(B, "FIC inner matrix");

  s.r = data.y.array() - m.value;
  const VectorXd dr = s.r.cwiseQuotient(s.D);
  const VectorXd beta = s.prior.V * dr;
  const VectorXd gamma = s.Lb.solve(beta);
  s.alpha = dr - (s.prior.V.transpose() * gamma).cwiseQuotient(s.D);

  const double quad = s.r.dot(dr) - beta.dot(gamma);
  const double logdet = s.D.array().log().sum() + log_det_from_llt(s.Lb);
  s.log_marginal = -0.5 * (quad + logdet + n * kLog2Pi);
  s.fitted = true;
  return s;
}

/// log N(y; m, tau^2 I + Psi) in O(N K^2) time.
inline double fic_log_marginal(const Dataset &data,
                               const Eigen::Ref<const MatrixXd> &knots,
                               const KernelParams &p, const MeanFunction &m) {
  return build_fic_state(data, knots, p, m).log_marginal;
}

namespace detail {

/// Shared gradient contraction for covariances of the form
///   Psi-part = diag(k_xx) + offdiag(K_xz A^{-1} K_zx):
/// given a symmetric weight matrix M (implicitly, via its diagonal and the
/// products Pt = (M - diag M) K_xz A^{-1} and St = A^{-1} K_zx (M - diag M)
/// K_xz A^{-1}), returns d/dh [ 1/2 tr(M dPsi/dh) ] stacked over
/// h = log signal variance, log lengthscales, then the coordinates of the
/// requested knots.
struct PsiContraction {
  const MatrixXd &X;
  const MatrixXd &Z;
  const KernelParams &p;
  const MatrixXd &Kxz;
  const MatrixXd &Kzz; // without jitter
  VectorXd diag_m;     // N
  MatrixXd Pt;         // N x K
  MatrixXd St;         // K x K

  VectorXd gradient(const std::vector<int> &active_knots) const {
    const int d = p.dim();
    const int nk = static_cast<int>(active_knots.size());
    VectorXd g(1 + d + nk * d);

    const double tr_m = diag_m.sum();
    const MatrixXd E1 = Pt.cwiseProduct(Kxz); // N x K
    const MatrixXd E2 = St.cwiseProduct(Kzz); // K x K

    // log signal variance: every kernel matrix scales linearly.
    g(0) = 0.5 * (p.signal_variance * tr_m + 2.0 * E1.sum() - E2.sum());

    // log lengthscales: dk/dlog l_dim = k * (delta_dim / l_dim)^2.
    for (int dim = 0; dim < d; ++dim) {
      const double inv_l2 = 1.0 / (p.lengthscales(dim) * p.lengthscales(dim));
      const VectorXd xd = X.col(dim);
      const VectorXd zd = Z.col(dim);
      const VectorXd xd2 = xd.cwiseProduct(xd);
      const VectorXd zd2 = zd.cwiseProduct(zd);
      const double s1 = xd2.dot(E1.rowwise().sum()) - 2.0 * xd.dot(E1 * zd) +
                        zd2.dot(E1.colwise().sum().transpose());
      const double s2 = zd2.dot(E2.rowwise().sum()) - 2.0 * zd.dot(E2 * zd) +
                        zd2.dot(E2.colwise().sum().transpose());
      g(1 + dim) = 0.5 * (2.0 * s1 - s2) * inv_l2;
    }

    // knot coordinates; dk(x, z_k)/dz_kd = k * (x_d - z_kd)/l_d^2.
    for (int a = 0; a < nk; ++a) {
      const int kk = active_knots[a];
      const VectorXd cx = E1.col(kk);
      const VectorXd cz = E2.row(kk).transpose();
      for (int dim = 0; dim < d; ++dim) {
        const double inv_l2 = 1.0 / (p.lengthscales(dim) * p.lengthscales(dim));
        const double t1 = (cx.dot(X.col(dim)) - Z(kk, dim) * cx.sum()) * inv_l2;
        const double t2 = (cz.dot(Z.col(dim)) - Z(kk, dim) * cz.sum()) * inv_l2;
        g(1 + d + a * d + dim) = t1 - t2;
      }
    }
    return g;
  }
};

inline std::vector<int> all_knots(int k) {
  std::vector<int> v(k);
  for (int i = 0; i < k; ++i) v[i] = i;
  return v;
}

} // namespace detail

/// Gradient of the exact FIC log-marginal likelihood with respect to
/// (log signal variance, log lengthscales, u with tau^2 = lb + exp(u),
/// coordinates of the active knots). Cost O(N K^2 + N K d).
inline VectorXd fic_grad(const Dataset &data, const Eigen::Ref<const MatrixXd> &knots,
                         const KernelParams &p, const MeanFunction &m,
                         std::optional<std::vector<int>> active = std::nullopt) {
  const FicState s = build_fic_state(data, knots, p, m);
  const FicPrior &pr = s.prior;
  const int d = p.dim();
  const std::vector<int> act = active ? *active : detail::all_knots(pr.k());

  // diag of C^{-1} via U = Lb^{-1} V.
  const MatrixXd U = s.Lb.matrixL().solve(pr.V);
  const VectorXd dinv = s.D.cwiseInverse();
  const VectorXd diag_cinv =
      dinv - U.colwise().squaredNorm().transpose().cwiseProduct(dinv.cwiseProduct(dinv));
  const VectorXd diag_m = s.alpha.cwiseProduct(s.alpha) - diag_cinv;

  // T1 = C^{-1} (A+ K_zx)^T.
  const MatrixXd Wtt = pr.Wt.transpose(); // N x K
  MatrixXd T1 = Wtt.array().colwise() * dinv.array();
  T1 -= ((pr.V.transpose() * s.Lb.solve(pr.V * T1)).array().colwise() * dinv.array())
            .matrix();

  const VectorXd wa = pr.Wt * s.alpha;
  MatrixXd Pt = s.alpha * wa.transpose() - T1;
  Pt -= (Wtt.array().colwise() * diag_m.array()).matrix();
  MatrixXd St = wa * wa.transpose() - pr.Wt * T1;
  St -= pr.Wt * (Wtt.array().colwise() * diag_m.array()).matrix();

  detail::PsiContraction c{pr.X, pr.knots, p, pr.Kxz, pr.Kzz, diag_m, Pt, St};
  const VectorXd psi_grad = c.gradient(act);

  VectorXd g(1 + d + 1 + static_cast<int>(act.size()) * d);
  g.head(1 + d) = psi_grad.head(1 + d);
  g(1 + d) = 0.5 * diag_m.sum() * (p.noise_variance - p.noise_lower_bound);
  g.tail(static_cast<int>(act.size()) * d) = psi_grad.tail(static_cast<int>(act.size()) * d);
  return g;
}

/// Knot-side pieces of the latent posterior: with w = A^{-1} k(z, xnew) the
/// predictive at a new point is
///   mean = m + w^T proj_mean,   var = k(xnew, xnew) - w^T S w,
/// where S = K_zx Op K_xz is positive semidefinite (Op is (tau^2 I +
/// Psi)^{-1} for the exact Gaussian model, (Psi + W^{-1})^{-1} under the
/// Laplace approximation). This arrangement never subtracts two
/// ill-conditioned knot-side terms, so it stays accurate when the knot gram
/// is nearly singular.
struct PredictCache {
  VectorXd proj_mean; // K_zx alpha, resp. K_zx a
  MatrixXd S;         // K x K
};

inline PredictCache fic_predict_cache(const FicState &s) {
  const FicPrior &pr = s.prior;
  PredictCache c;
  c.proj_mean = pr.Kxz.transpose() * s.alpha;
  const VectorXd dinv = s.D.cwiseInverse();
  const MatrixXd Hd = pr.Kxz.array().colwise() * dinv.array(); // D^{-1} K_xz
  const MatrixXd G = pr.V * Hd;                                // K x K
  c.S = pr.Kxz.transpose() * Hd - G.transpose() * s.Lb.solve(G);
  return c;
}

namespace detail {

inline GaussianPredictive predict_from_cache(const FicPrior &pr,
                                             const PredictCache &cache,
                                             const Eigen::Ref<const MatrixXd> &Xnew,
                                             double tau2) {
  if (Xnew.cols() != pr.dim()) throw InputError("predict: input dimension mismatch");
  const MatrixXd Kmz = kernel_gram(Xnew, pr.knots, pr.params); // M x K
  const MatrixXd Wm = pr.A.solve(MatrixXd(Kmz.transpose()));   // K x M

  GaussianPredictive out;
  out.tau2 = tau2;
  const int m = static_cast<int>(Xnew.rows());
  out.mean = (Wm.transpose() * cache.proj_mean).array() + pr.mean;
  out.var_latent.resize(m);
  const MatrixXd SW = cache.S * Wm; // K x M
  for (int i = 0; i < m; ++i)
    out.var_latent(i) =
        std::max(pr.params.signal_variance - Wm.col(i).dot(SW.col(i)), 0.0);
  return out;
}

} // namespace detail

/// Posterior predictive for unobserved responses per the FIC model.
inline GaussianPredictive fic_predict(const FicState &s,
                                      const Eigen::Ref<const MatrixXd> &Xnew) {
  if (!s.fitted) throw InputError("fic_predict: state is not fitted");
  return detail::predict_from_cache(s.prior, fic_predict_cache(s), Xnew,
                                    s.prior.params.noise_variance);
}

} // namespace oatgp
