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
#include <vector>

#include "oatgp/fic.hpp"
#include "oatgp/full_gp.hpp"
#include "oatgp/likelihoods.hpp"

namespace oatgp {

/// Converged Newton artifacts at the mode of
///   psi(f) = log p(y|f) - 1/2 (f-m)^T Sigma^{-1} (f-m).
/// a = Sigma^{-1}(f_hat - m) is tracked instead of ever inverting Sigma, so
/// semidefinite priors (zero-jitter duplicate knots, exact-zero Lambda rows)
/// are handled without special cases. psi_hat stores the objective without
/// the f-independent normalizer -1/2 log|Sigma| - N/2 log 2pi, which cancels
/// against the determinant term of the approximate marginal.
struct LaplaceState {
  VectorXd f_hat;
  VectorXd a;    // Sigma^{-1}(f_hat - m)
  VectorXd w;    // -Hessian diagonal of log p(y|f) at the mode
  double psi_hat = 0.0;
  int newton_iters = 0;
};

struct NewtonOptions {
  int max_iters = 100;
  double grad_tol = 1e-8; // max-norm of the psi gradient at the mode
  int max_halvings = 30;
};

namespace detail {

/// B = I + W^{1/2} Sigma W^{1/2} for the FIC prior Sigma = Lambda + V^T V,
/// kept in Woodbury form: B = Db + Vt^T Db^{-...}; all applications cost
/// O(N K) after an O(N K^2) setup.
struct FicBFactor {
  VectorXd wh;  // sqrt(W)
  VectorXd db;  // 1 + W .* lambda
  MatrixXd Vt;  // V with columns scaled by wh, K x N
  Eigen::LLT<MatrixXd> Lt; // T = I + Vt Db^{-1} Vt^T
  double log_det = 0.0;

  FicBFactor(const FicPrior &prior, const VectorXd &w) {
    wh = w.cwiseSqrt();
    db = (w.cwiseProduct(prior.lambda)).array() + 1.0;
    Vt = prior.V.array().rowwise() * wh.transpose().array();
    const int k = prior.k();
    MatrixXd Vd = Vt.array().rowwise() * db.cwiseInverse().transpose().array();
    MatrixXd T = MatrixXd::Identity(k, k) + Vd * Vt.transpose();
    Lt = spd_cholesky(T, "Laplace inner matrix");
    log_det = db.array().log().sum() + log_det_from_llt(Lt);
  }

  MatrixXd solve_B(const MatrixXd &X) const {
    MatrixXd Y = X.array().colwise() * db.cwiseInverse().array();
    Y -= ((Vt.transpose() * Lt.solve(Vt * Y)).array().colwise() *
          db.cwiseInverse().array())
             .matrix();
    return Y;
  }

  /// R M with R = W^{1/2} B^{-1} W^{1/2} = (Sigma + W^{-1})^{-1}.
  MatrixXd apply_R(const MatrixXd &X) const {
    MatrixXd Y = X.array().colwise() * wh.array();
    Y = solve_B(Y);
    return (Y.array().colwise() * wh.array()).matrix();
  }

  VectorXd apply_R(const VectorXd &x) const {
    return apply_R(MatrixXd(x)).col(0);
  }

  VectorXd diag_R() const {
    const MatrixXd Ut = Lt.matrixL().solve(Vt);
    const VectorXd dbinv = db.cwiseInverse();
    const VectorXd diag_binv =
        dbinv - Ut.colwise().squaredNorm().transpose().cwiseProduct(
                    dbinv.cwiseProduct(dbinv));
    return wh.cwiseProduct(wh).cwiseProduct(diag_binv);
  }

  /// V R V^T = Vt B^{-1} Vt^T, used for diag(Sigma R Sigma).
  MatrixXd vrv() const {
    const int k = static_cast<int>(Vt.rows());
    const MatrixXd G =
        (Vt.array().rowwise() * db.cwiseInverse().transpose().array()).matrix() *
        Vt.transpose();
    return G - G * Lt.solve(G);
    (void)k;
  }
};

/// Dense counterpart used for full-GP priors.
struct DenseBFactor {
  VectorXd wh;
  Eigen::LLT<MatrixXd> Lb;
  double log_det = 0.0;

  DenseBFactor(const MatrixXd &Sigma, const VectorXd &w) {
    wh = w.cwiseSqrt();
    const int n = static_cast<int>(Sigma.rows());
    MatrixXd B = Sigma;
    B.array().colwise() *= wh.array();
    B.array().rowwise() *= wh.transpose().array();
    B += MatrixXd::Identity(n, n);
    Lb = spd_cholesky(B, "Laplace dense B");
    log_det = log_det_from_llt(Lb);
  }

  MatrixXd apply_R(const MatrixXd &X) const {
    MatrixXd Y = X.array().colwise() * wh.array();
    Y = Lb.solve(Y);
    return (Y.array().colwise() * wh.array()).matrix();
  }

  VectorXd apply_R(const VectorXd &x) const {
    return apply_R(MatrixXd(x)).col(0);
  }
};

/// Newton-Raphson for the psi mode in the numerically stable
/// B = I + W^{1/2} Sigma W^{1/2} form, with step halving so psi increases
/// every iteration. apply_cov(x) must return Sigma x; make_b(w) must return
/// a factor exposing apply_R.
template <typename ApplyCov, typename MakeB>
LaplaceState newton_mode_impl(const VectorXd &y, const LikelihoodModel &lik,
                              double mean_value, ApplyCov &&apply_cov, MakeB &&make_b,
                              const NewtonOptions &opts) {
  const int n = static_cast<int>(y.size());
  const VectorXd m = VectorXd::Constant(n, mean_value);

  LaplaceState st;
  st.a = VectorXd::Zero(n);
  st.f_hat = m;
  st.psi_hat = lik.log_density(y, st.f_hat);

  // Floating point limits the achievable stationarity on ill-conditioned
  // priors; once psi stops moving at float granularity the iteration is at
  // its fixed-point noise floor and a still-small gradient is accepted.
  const double stall_tol = std::sqrt(opts.grad_tol);
  int stalled = 0;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const VectorXd g = lik.d1(y, st.f_hat);
    const double stationarity = (g - st.a).lpNorm<Eigen::Infinity>();
    if (stationarity < opts.grad_tol || (stalled >= 2 && stationarity < stall_tol)) {
      st.w = lik.w(y, st.f_hat);
      return st;
    }
    const VectorXd w = lik.w(y, st.f_hat);
    const auto bfac = make_b(w);
    const VectorXd b = w.cwiseProduct(st.f_hat - m) + g;
    const VectorXd a_new = b - bfac.apply_R(apply_cov(b));

    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      const VectorXd a_try = st.a + step * (a_new - st.a);
      const VectorXd f_try = m + apply_cov(a_try);
      const double psi_try =
          lik.log_density(y, f_try) - 0.5 * a_try.dot(f_try - m);
      if (std::isfinite(psi_try) && psi_try >= st.psi_hat) {
        if (psi_try - st.psi_hat <= 1e-13 * (1.0 + std::abs(psi_try)))
          ++stalled;
        else
          stalled = 0;
        st.a = a_try;
        st.f_hat = f_try;
        st.psi_hat = psi_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++st.newton_iters;
    if (!accepted) {
      // No ascent direction left; accept the mode if stationary enough.
      const VectorXd g2 = lik.d1(y, st.f_hat);
      if ((g2 - st.a).lpNorm<Eigen::Infinity>() < stall_tol) {
        st.w = lik.w(y, st.f_hat);
        return st;
      }
      throw NumericalError("Newton mode finding stalled after " +
                           std::to_string(st.newton_iters) +
                           " iterations; stationarity " +
                           std::to_string((g2 - st.a).lpNorm<Eigen::Infinity>()));
    }
  }
  const VectorXd g = lik.d1(y, st.f_hat);
  if ((g - st.a).lpNorm<Eigen::Infinity>() < stall_tol) {
    st.w = lik.w(y, st.f_hat);
    return st;
  }
  throw NumericalError(
      "Newton mode finding did not converge in " + std::to_string(opts.max_iters) +
      " iterations; stationarity " +
      std::to_string((g - st.a).lpNorm<Eigen::Infinity>()));
}

} // namespace detail

/// Laplace pieces for a FIC prior, cached at the converged mode.
struct FicLaplaceState {
  FicPrior prior;
  LaplaceState mode;
  double log_det_b = 0.0;
  double log_marginal = 0.0;
  bool fitted = false;
};

inline LaplaceState newton_mode(const VectorXd &y, const LikelihoodModel &lik,
                                const FicPrior &prior,
                                const NewtonOptions &opts = {}) {
  return detail::newton_mode_impl(
      y, lik, prior.mean, [&](const VectorXd &x) { return prior.apply_cov(x); },
      [&](const VectorXd &w) { return detail::FicBFactor(prior, w); }, opts);
}

inline LaplaceState newton_mode(const VectorXd &y, const LikelihoodModel &lik,
                                const MatrixXd &Sigma, double mean_value,
                                const NewtonOptions &opts = {}) {
  return detail::newton_mode_impl(
      y, lik, mean_value, [&](const VectorXd &x) { return (Sigma * x).eval(); },
      [&](const VectorXd &w) { return detail::DenseBFactor(Sigma, w); }, opts);
}

inline FicLaplaceState build_fic_laplace_state(const Dataset &data,
                                               const Eigen::Ref<const MatrixXd> &knots,
                                               const KernelParams &p,
                                               const MeanFunction &m,
                                               const NewtonOptions &opts = {}) {
  data.validate();
  FicLaplaceState s;
  s.prior = build_fic_prior(data.X, knots, p, m.value);
  const LikelihoodModel lik = LikelihoodModel::for_dataset(data, p.noise_variance);
  s.mode = newton_mode(data.y, lik, s.prior, opts);
  s.log_det_b = detail::FicBFactor(s.prior, s.mode.w).log_det;
  s.log_marginal = s.mode.psi_hat - 0.5 * s.log_det_b;
  s.fitted = true;
  return s;
}

/// Laplace approximation to log p(y | x, knots, theta).
inline double laplace_log_marginal(const Dataset &data,
                                   const Eigen::Ref<const MatrixXd> &knots,
                                   const KernelParams &p, const MeanFunction &m,
                                   const NewtonOptions &opts = {}) {
  return build_fic_laplace_state(data, knots, p, m, opts).log_marginal;
}

/// Gradient of the Laplace-approximate log marginal over
/// (log signal variance, log lengthscales, active knot coordinates).
/// Includes the implicit dependence of the mode on the parameters.
inline VectorXd laplace_grad(const Dataset &data,
                             const Eigen::Ref<const MatrixXd> &knots,
                             const KernelParams &p, const MeanFunction &m,
                             std::optional<std::vector<int>> active = std::nullopt,
                             const NewtonOptions &opts = {}) {
  const FicLaplaceState s = build_fic_laplace_state(data, knots, p, m, opts);
  const FicPrior &pr = s.prior;
  const LikelihoodModel lik = LikelihoodModel::for_dataset(data, p.noise_variance);
  const std::vector<int> act = active ? *active : detail::all_knots(pr.k());

  const detail::FicBFactor bfac(pr, s.mode.w);
  const VectorXd &a = s.mode.a;

  // diag((Sigma^{-1} + W)^{-1}) = diag(Sigma - Sigma R Sigma) without any
  // N x N product: Sigma = Lambda + V^T V.
  const VectorXd diag_r = bfac.diag_R();
  const VectorXd diag_sigma =
      pr.lambda + pr.V.colwise().squaredNorm().transpose();
  const MatrixXd RVt = bfac.apply_R(MatrixXd(pr.V.transpose())); // N x K
  const MatrixXd VRV = bfac.vrv();                               // K x K
  const MatrixXd VRV_V = VRV * pr.V;                             // K x N
  VectorXd diag_srs(pr.n());
  for (int i = 0; i < pr.n(); ++i) {
    const double l = pr.lambda(i);
    diag_srs(i) = l * l * diag_r(i) + 2.0 * l * RVt.row(i).dot(pr.V.col(i)) +
                  pr.V.col(i).dot(VRV_V.col(i));
  }
  const VectorXd diag_k2 = diag_sigma - diag_srs;

  const VectorXd dw = lik.dw(data.y, s.mode.f_hat);
  const VectorXd s2 = (-0.5) * diag_k2.cwiseProduct(dw);
  const VectorXd u = s2 - bfac.apply_R(pr.apply_cov(s2));

  const MatrixXd Wtt = pr.Wt.transpose(); // N x K
  const MatrixXd RWtt = bfac.apply_R(Wtt);
  const VectorXd wa = pr.Wt * a;
  const VectorXd wu = pr.Wt * u;

  const VectorXd diag_m =
      a.cwiseProduct(a) + 2.0 * a.cwiseProduct(u) - diag_r;
  MatrixXd Pt = a * wa.transpose() + u * wa.transpose() + a * wu.transpose() - RWtt;
  Pt -= (Wtt.array().colwise() * diag_m.array()).matrix();
  MatrixXd St = wa * wa.transpose() + wu * wa.transpose() + wa * wu.transpose() -
                pr.Wt * RWtt;
  St -= pr.Wt * (Wtt.array().colwise() * diag_m.array()).matrix();

  detail::PsiContraction c{pr.X, pr.knots, p, pr.Kxz, pr.Kzz, diag_m, Pt, St};
  return c.gradient(act);
}

/// Gaussian approximation to the latent posterior at new inputs, via the
/// knot posterior f_z | Y under the Laplace approximation.
inline GaussianPredictive laplace_predict(const FicLaplaceState &s,
                                          const Eigen::Ref<const MatrixXd> &Xnew) {
  if (!s.fitted) throw InputError("laplace_predict: state is not fitted");
  const FicPrior &pr = s.prior;
  const detail::FicBFactor bfac(pr, s.mode.w);
  PredictCache c;
  c.proj_mean = pr.Kxz.transpose() * s.mode.a;
  c.S = pr.Kxz.transpose() * bfac.apply_R(pr.Kxz);
  return detail::predict_from_cache(pr, c, Xnew, 0.0);
}

/// Dense full-GP Laplace fit (the reference model for non-Gaussian data).
struct DenseLaplaceState {
  MatrixXd X;
  KernelParams params;
  double mean = 0.0;
  MatrixXd Kxx;
  LaplaceState mode;
  double log_marginal = 0.0;
  bool fitted = false;
};

inline DenseLaplaceState build_dense_laplace_state(const Dataset &data,
                                                   const KernelParams &p,
                                                   const MeanFunction &m,
                                                   const NewtonOptions &opts = {}) {
  data.validate();
  DenseLaplaceState s;
  s.X = data.X;
  s.params = p;
  s.mean = m.value;
  s.Kxx = kernel_gram(data.X, data.X, p);
  const LikelihoodModel lik = LikelihoodModel::for_dataset(data, p.noise_variance);
  s.mode = newton_mode(data.y, lik, s.Kxx, m.value, opts);
  const detail::DenseBFactor bfac(s.Kxx, s.mode.w);
  s.log_marginal = s.mode.psi_hat - 0.5 * bfac.log_det;
  s.fitted = true;
  return s;
}

/// Gradient of the dense Laplace marginal over
/// (log signal variance, log lengthscales).
inline VectorXd dense_laplace_grad(const Dataset &data, const DenseLaplaceState &s) {
  const LikelihoodModel lik =
      LikelihoodModel::for_dataset(data, s.params.noise_variance);
  const int n = static_cast<int>(s.X.rows());
  const int d = s.params.dim();
  const detail::DenseBFactor bfac(s.Kxx, s.mode.w);
  const MatrixXd R = bfac.apply_R(MatrixXd(MatrixXd::Identity(n, n)));
  const MatrixXd K2 = s.Kxx - s.Kxx * R * s.Kxx;
  const VectorXd dw = lik.dw(data.y, s.mode.f_hat);
  const VectorXd s2 = (-0.5) * K2.diagonal().cwiseProduct(dw);
  const VectorXd u = s2 - R * (s.Kxx * s2);
  const VectorXd &a = s.mode.a;
  const MatrixXd M =
      a * a.transpose() + u * a.transpose() + a * u.transpose() - R;

  VectorXd g(1 + d);
  g(0) = 0.5 * M.cwiseProduct(s.Kxx).sum();
  for (int dim = 0; dim < d; ++dim) {
    const double inv_l2 =
        1.0 / (s.params.lengthscales(dim) * s.params.lengthscales(dim));
    const VectorXd xd = s.X.col(dim);
    MatrixXd sq = xd.replicate(1, n) - xd.transpose().replicate(n, 1);
    sq = sq.cwiseProduct(sq) * inv_l2;
    g(1 + dim) = 0.5 * M.cwiseProduct(s.Kxx).cwiseProduct(sq).sum();
  }
  return g;
}

inline GaussianPredictive dense_laplace_predict(const DenseLaplaceState &s,
                                                const Eigen::Ref<const MatrixXd> &Xnew) {
  if (!s.fitted) throw InputError("dense_laplace_predict: state is not fitted");
  if (Xnew.cols() != s.X.cols())
    throw InputError("dense_laplace_predict: dimension mismatch");
  const detail::DenseBFactor bfac(s.Kxx, s.mode.w);
  const MatrixXd Kmx = kernel_gram(Xnew, s.X, s.params); // M x N
  GaussianPredictive out;
  out.tau2 = 0.0;
  out.mean = (Kmx * s.mode.a).array() + s.mean;
  const MatrixXd RK = bfac.apply_R(MatrixXd(Kmx.transpose())); // N x M
  const int m = static_cast<int>(Xnew.rows());
  out.var_latent.resize(m);
  for (int i = 0; i < m; ++i)
    out.var_latent(i) =
        std::max(s.params.signal_variance - Kmx.row(i).dot(RK.col(i)), 0.0);
  return out;
}

/// Response-scale point estimate and 95% band obtained by pushing the latent
/// mean and mean +/- 1.96 sd through the (monotone) inverse link. For
/// Poisson data the band is for the expected count, intensity times offset.
struct PredictiveBands {
  VectorXd mean;
  VectorXd lower;
  VectorXd upper;
};

inline PredictiveBands link_bands(const GaussianPredictive &pred, Likelihood lik,
                                  const VectorXd &offsets_new = VectorXd()) {
  const int m = static_cast<int>(pred.mean.size());
  PredictiveBands out;
  out.mean.resize(m);
  out.lower.resize(m);
  out.upper.resize(m);
  const VectorXd sd = pred.var_latent.cwiseSqrt();
  for (int i = 0; i < m; ++i) {
    const double mu = pred.mean(i);
    const double lo = mu - 1.96 * sd(i);
    const double hi = mu + 1.96 * sd(i);
    switch (lik) {
    case Likelihood::gaussian: {
      const double obs_sd = std::sqrt(pred.var_latent(i) + pred.tau2);
      out.mean(i) = mu;
      out.lower(i) = mu - 1.96 * obs_sd;
      out.upper(i) = mu + 1.96 * obs_sd;
      break;
    }
    case Likelihood::bernoulli:
      out.mean(i) = logistic(mu);
      out.lower(i) = logistic(lo);
      out.upper(i) = logistic(hi);
      break;
    case Likelihood::poisson: {
      const double a = offsets_new.size() > 0 ? offsets_new(i) : 1.0;
      out.mean(i) = std::exp(mu) * a;
      out.lower(i) = std::exp(lo) * a;
      out.upper(i) = std::exp(hi) * a;
      break;
    }
    }
  }
  return out;
}

} // namespace oatgp
