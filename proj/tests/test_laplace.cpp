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

#include <catch2/catch_amalgamated.hpp>

#include "oatgp/laplace.hpp"
#include "oatgp/model.hpp"
#include "test_utils.hpp"

using namespace oatgp;
using namespace oatgp::testing;

namespace {

KernelParams params1d(double sv, double l, double tau2 = 0.1, double jitter = 1e-9) {
  KernelParams p;
  p.signal_variance = sv;
  p.lengthscales = VectorXd::Constant(1, l);
  p.noise_variance = tau2;
  p.noise_lower_bound = 1e-6;
  p.jitter = jitter;
  return p;
}

/// Latent prior covariance of the FIC model, assembled densely in test code.
MatrixXd dense_fic_cov(const MatrixXd &X, const MatrixXd &Z, const KernelParams &p) {
  MatrixXd A = kernel_gram(Z, Z, p);
  A.diagonal().array() += p.jitter;
  const MatrixXd Kxz = kernel_gram(X, Z, p);
  const MatrixXd Q = Kxz * A.inverse() * Kxz.transpose();
  MatrixXd sigma = Q;
  for (int i = 0; i < X.rows(); ++i) sigma(i, i) = p.signal_variance;
  return sigma;
}

Dataset poisson_dataset(const MatrixXd &X, const VectorXd &y, double a) {
  Dataset d;
  d.likelihood = Likelihood::poisson;
  d.X = X;
  d.y = y;
  d.offsets = VectorXd::Constant(X.rows(), a);
  return d;
}

Dataset random_poisson(Rng &rng, int n, double a = 0.5) {
  Dataset d;
  d.likelihood = Likelihood::poisson;
  d.X = random_matrix(rng, n, 1, 0.0, 10.0);
  d.y.resize(n);
  d.offsets = VectorXd::Constant(n, a);
  for (int i = 0; i < n; ++i) {
    const double f = std::sin(d.X(i, 0)) + 0.5;
    d.y(i) = static_cast<double>(rng.poisson(std::exp(f) * a));
  }
  return d;
}

Dataset random_bernoulli(Rng &rng, int n) {
  Dataset d;
  d.likelihood = Likelihood::bernoulli;
  d.X = random_matrix(rng, n, 1, 0.0, 10.0);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double f = std::cos(0.8 * d.X(i, 0));
    d.y(i) = rng.uniform() < logistic(f) ? 1.0 : 0.0;
  }
  return d;
}

} // namespace

TEST_CASE("Gaussian likelihood: Newton converges in one step") {
  Rng rng(5);
  Dataset data;
  data.likelihood = Likelihood::gaussian;
  data.X = random_matrix(rng, 15, 1, 0.0, 10.0);
  data.y = random_vector(rng, 15, -2.0, 2.0);
  const KernelParams p = params1d(1.2, 1.0, 0.3);
  const MatrixXd knots = random_matrix(rng, 4, 1, 0.0, 10.0);

  const FicPrior prior = build_fic_prior(data.X, knots, p, 0.0);
  const LikelihoodModel lik(Likelihood::gaussian, VectorXd(), p.noise_variance);
  const LaplaceState st = newton_mode(data.y, lik, prior);
  REQUIRE(st.newton_iters == 1);

  // psi is exactly quadratic: the mode is the posterior mean of f | y
  const MatrixXd sigma = dense_fic_cov(data.X, knots, p);
  MatrixXd C = sigma;
  C.diagonal().array() += p.noise_variance;
  const VectorXd f_expect = sigma * C.llt().solve(data.y);
  REQUIRE((st.f_hat - f_expect).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("Gaussian likelihood: Laplace marginal equals the exact FIC marginal") {
  Rng rng(7);
  Dataset data;
  data.likelihood = Likelihood::gaussian;
  data.X = random_matrix(rng, 25, 1, 0.0, 10.0);
  data.y = random_vector(rng, 25, -2.0, 2.0);
  const KernelParams p = params1d(0.9, 1.3, 0.25);
  const MeanFunction m{0.3};
  const MatrixXd knots = random_matrix(rng, 5, 1, 0.0, 10.0);

  const double exact = fic_log_marginal(data, knots, p, m);
  const double laplace = laplace_log_marginal(data, knots, p, m);
  REQUIRE(laplace == Catch::Approx(exact).margin(1e-8));
}

TEST_CASE("Gaussian likelihood: Laplace gradient matches the exact gradient") {
  Rng rng(11);
  Dataset data;
  data.likelihood = Likelihood::gaussian;
  data.X = random_matrix(rng, 20, 1, 0.0, 10.0);
  data.y = random_vector(rng, 20, -2.0, 2.0);
  const KernelParams p = params1d(1.1, 1.4, 0.3);
  const MeanFunction m{0.0};
  const MatrixXd knots = random_matrix(rng, 4, 1, 0.0, 10.0);

  const VectorXd gl = laplace_grad(data, knots, p, m); // [log sv, log l, knots]
  const VectorXd gf = fic_grad(data, knots, p, m);     // [log sv, log l, u, knots]
  REQUIRE(std::abs(gl(0) - gf(0)) < 1e-6);
  REQUIRE(std::abs(gl(1) - gf(1)) < 1e-6);
  for (int k = 0; k < 4; ++k)
    REQUIRE(std::abs(gl(2 + k) - gf(3 + k)) < 1e-6);
}

TEST_CASE("two-point Poisson: mode matches a grid-search oracle") {
  // nearly independent prior: knot far away leaves Lambda ~ signal variance
  const MatrixXd X = (MatrixXd(2, 1) << 0.0, 100.0).finished();
  const VectorXd y = (VectorXd(2) << 1.0, 3.0).finished();
  const Dataset data = poisson_dataset(X, y, 1.0);
  const KernelParams p = params1d(1.0, 1.0);
  const MatrixXd knots = MatrixXd::Constant(1, 1, -1000.0);

  const FicPrior prior = build_fic_prior(data.X, knots, p, 0.0);
  const LikelihoodModel lik = LikelihoodModel::for_dataset(data);
  const LaplaceState st = newton_mode(data.y, lik, prior);

  const MatrixXd sigma = dense_fic_cov(data.X, knots, p);
  const MatrixXd sigma_inv = sigma.inverse();
  const auto psi = [&](double f1, double f2) {
    const VectorXd f = (VectorXd(2) << f1, f2).finished();
    return lik.log_density(y, f) - 0.5 * f.dot(sigma_inv * f);
  };

  double best_f1 = 0.0, best_f2 = 0.0, best = -1e300;
  for (double f1 = -4.0; f1 <= 5.0; f1 += 0.01)
    for (double f2 = -4.0; f2 <= 5.0; f2 += 0.01)
      if (const double v = psi(f1, f2); v > best) {
        best = v;
        best_f1 = f1;
        best_f2 = f2;
      }
  for (int round = 0; round < 60; ++round) { // coordinate-wise ternary refinement
    for (int c = 0; c < 2; ++c) {
      double lo = (c == 0 ? best_f1 : best_f2) - 0.02;
      double hi = lo + 0.04;
      for (int it = 0; it < 80; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        const double v1 = c == 0 ? psi(m1, best_f2) : psi(best_f1, m1);
        const double v2 = c == 0 ? psi(m2, best_f2) : psi(best_f1, m2);
        if (v1 < v2) lo = m1; else hi = m2;
      }
      (c == 0 ? best_f1 : best_f2) = 0.5 * (lo + hi);
    }
  }
  REQUIRE(std::abs(st.f_hat(0) - best_f1) < 1e-5);
  REQUIRE(std::abs(st.f_hat(1) - best_f2) < 1e-5);
}

TEST_CASE("two-point Poisson: marginal matches 2-D adaptive quadrature") {
  // correlated prior through a shared knot; counts large enough that the
  // Laplace approximation itself is accurate to the tested tolerance
  const MatrixXd X = (MatrixXd(2, 1) << 0.0, 0.7).finished();
  const VectorXd y = (VectorXd(2) << 100.0, 300.0).finished();
  const Dataset data = poisson_dataset(X, y, 100.0);
  const KernelParams p = params1d(1.0, 1.0);
  const MeanFunction m{0.2};
  const MatrixXd knots = MatrixXd::Constant(1, 1, 0.3);

  const double approx = laplace_log_marginal(data, knots, p, m);

  const MatrixXd sigma = dense_fic_cov(data.X, knots, p);
  const double det = sigma(0, 0) * sigma(1, 1) - sigma(0, 1) * sigma(1, 0);
  const LikelihoodModel lik = LikelihoodModel::for_dataset(data);
  const auto log_integrand = [&](double f1, double f2) {
    const double d1 = f1 - m.value, d2 = f2 - m.value;
    const double quad =
        (sigma(1, 1) * d1 * d1 - 2.0 * sigma(0, 1) * d1 * d2 + sigma(0, 0) * d2 * d2) /
        det;
    const double log_prior = -0.5 * quad - 0.5 * std::log(det) - kLog2Pi;
    const VectorXd f = (VectorXd(2) << f1, f2).finished();
    return lik.log_density(y, f) + log_prior;
  };
  // grid search for the peak so the quadrature can be scaled and windowed
  double c1 = 0.0, c2 = 0.0, shift = -1e300;
  for (double f1 = -6.0; f1 <= 6.0; f1 += 0.02)
    for (double f2 = -6.0; f2 <= 6.0; f2 += 0.02)
      if (const double v = log_integrand(f1, f2); v > shift) {
        shift = v;
        c1 = f1;
        c2 = f2;
      }
  const double win = 0.8; // ~10 posterior standard deviations at these counts
  const double integral = adaptive_simpson(
      [&](double f1) {
        return adaptive_simpson(
            [&](double f2) { return std::exp(log_integrand(f1, f2) - shift); },
            c2 - win, c2 + win, 1e-12);
      },
      c1 - win, c1 + win, 1e-12);
  const double truth = shift + std::log(integral);
  REQUIRE(std::abs(approx - truth) / std::abs(truth) < 1e-4);
}

TEST_CASE("Bernoulli with a degenerate prior pins the mode at the prior mean") {
  Dataset data;
  data.likelihood = Likelihood::bernoulli;
  data.X = MatrixXd::Zero(1, 1);
  data.y = VectorXd::Constant(1, 1.0);
  KernelParams p = params1d(1e-12, 1.0);
  p.jitter = 0.0;
  const FicPrior prior = build_fic_prior(data.X, data.X, p, 0.0);
  const LikelihoodModel lik = LikelihoodModel::for_dataset(data);
  const LaplaceState st = newton_mode(data.y, lik, prior);
  REQUIRE(std::abs(st.f_hat(0)) < 1e-6);
}

TEST_CASE("degenerate prior reduces the marginal to the likelihood at the mean") {
  const MatrixXd X = (MatrixXd(3, 1) << 0.0, 1.0, 2.0).finished();
  const VectorXd y = (VectorXd(3) << 0.0, 2.0, 1.0).finished();
  const Dataset data = poisson_dataset(X, y, 1.0);
  KernelParams p = params1d(1e-12, 1.0);
  const MeanFunction m{0.4};
  const MatrixXd knots = MatrixXd::Constant(1, 1, 1.0);

  const double q = laplace_log_marginal(data, knots, p, m);
  const LikelihoodModel lik = LikelihoodModel::for_dataset(data);
  const double expect = lik.log_density(y, VectorXd::Constant(3, m.value));
  REQUIRE(q == Catch::Approx(expect).margin(1e-5));
}

TEST_CASE("Laplace gradient matches finite differences (Poisson and Bernoulli)") {
  Rng rng(13);
  for (int rep = 0; rep < 2; ++rep) {
    const Dataset data = rep == 0 ? random_poisson(rng, 20) : random_bernoulli(rng, 20);
    KernelParams p = params1d(rng.uniform(0.6, 1.4), rng.uniform(1.0, 2.0));
    const MeanFunction m{0.1};
    const int k = 4;
    const MatrixXd knots = random_matrix(rng, k, 1, 0.5, 9.5);

    const VectorXd g = laplace_grad(data, knots, p, m);

    std::vector<int> all(k);
    for (int i = 0; i < k; ++i) all[i] = i;
    ParamLayout layout;
    layout.dim = 1;
    layout.with_noise = false;
    layout.active_knots = all;
    const VectorXd v0 = pack_params(p, knots, layout);
    const auto eval = [&](const VectorXd &v) {
      KernelParams q = p;
      MatrixXd z = knots;
      unpack_params(v, layout, &q, &z);
      return laplace_log_marginal(data, z, q, m);
    };
    const VectorXd fd = finite_diff(eval, v0, 1e-4);
    REQUIRE(max_rel_err(g, fd, 1e-4) < 1e-3);
  }
}

TEST_CASE("balanced symmetric Bernoulli data zeroes the central knot gradient") {
  Dataset data;
  data.likelihood = Likelihood::bernoulli;
  data.X = (MatrixXd(4, 1) << 1.0, 2.0, 3.0, 4.0).finished();
  data.y = (VectorXd(4) << 1.0, 0.0, 0.0, 1.0).finished();
  const KernelParams p = params1d(1.0, 1.0);
  const MeanFunction m{0.0};
  const MatrixXd knots = MatrixXd::Constant(1, 1, 2.5);
  const VectorXd g = laplace_grad(data, knots, p, m);
  REQUIRE(std::abs(g(g.size() - 1)) < 1e-8);
}

TEST_CASE("Laplace predictive far from data reverts to the prior") {
  Rng rng(17);
  const Dataset data = random_poisson(rng, 15);
  const KernelParams p = params1d(1.3, 1.0);
  const MeanFunction m{0.6};
  const MatrixXd knots = random_matrix(rng, 4, 1, 0.0, 10.0);
  const FicLaplaceState s = build_fic_laplace_state(data, knots, p, m);
  const GaussianPredictive pred = laplace_predict(s, MatrixXd::Constant(1, 1, 1e4));
  REQUIRE(pred.mean(0) == Catch::Approx(m.value).margin(1e-10));
  REQUIRE(pred.var_latent(0) == Catch::Approx(p.signal_variance).margin(1e-10));
}

TEST_CASE("knots at the training inputs reproduce the dense Laplace fit") {
  Rng rng(19);
  Dataset data;
  data.likelihood = Likelihood::poisson;
  const int n = 25;
  data.X.resize(n, 1);
  for (int i = 0; i < n; ++i)
    data.X(i, 0) = 10.0 * (i + 0.5) / n + rng.uniform(-0.15, 0.15);
  data.offsets = VectorXd::Constant(n, 0.5);
  data.y.resize(n);
  for (int i = 0; i < n; ++i)
    data.y(i) = static_cast<double>(
        rng.poisson(std::exp(std::sin(data.X(i, 0))) * data.offsets(i)));
  KernelParams p = params1d(1.0, 0.8);
  p.jitter = 1e-10;
  const MeanFunction m{0.0};

  const FicLaplaceState sparse = build_fic_laplace_state(data, data.X, p, m);
  const DenseLaplaceState dense = build_dense_laplace_state(data, p, m);
  REQUIRE(sparse.log_marginal == Catch::Approx(dense.log_marginal).margin(1e-6));

  const MatrixXd Xnew = random_matrix(rng, 6, 1, 0.0, 10.0);
  const GaussianPredictive ps = laplace_predict(sparse, Xnew);
  const GaussianPredictive pd = dense_laplace_predict(dense, Xnew);
  for (int i = 0; i < Xnew.rows(); ++i) {
    REQUIRE(ps.mean(i) == Catch::Approx(pd.mean(i)).margin(1e-6));
    REQUIRE(ps.var_latent(i) == Catch::Approx(pd.var_latent(i)).margin(1e-6));
  }
}

TEST_CASE("dense Laplace gradient matches finite differences") {
  Rng rng(23);
  const Dataset data = random_bernoulli(rng, 15);
  KernelParams p = params1d(0.8, 1.2);
  const MeanFunction m{0.0};

  const DenseLaplaceState s = build_dense_laplace_state(data, p, m);
  const VectorXd g = dense_laplace_grad(data, s);

  ParamLayout layout;
  layout.dim = 1;
  layout.with_noise = false;
  const VectorXd v0 = pack_params(p, MatrixXd(0, 1), layout);
  const auto eval = [&](const VectorXd &v) {
    KernelParams q = p;
    MatrixXd none(0, 1);
    unpack_params(v, layout, &q, &none);
    return build_dense_laplace_state(data, q, m).log_marginal;
  };
  const VectorXd fd = finite_diff(eval, v0, 1e-5);
  REQUIRE(max_rel_err(g, fd, 1e-5) < 1e-3);
}

TEST_CASE("psi at the mode dominates random perturbations") {
  Rng rng(29);
  const Dataset data = random_poisson(rng, 12);
  const KernelParams p = params1d(1.0, 1.5);
  const MatrixXd knots = random_matrix(rng, 3, 1, 1.0, 9.0);

  const FicPrior prior = build_fic_prior(data.X, knots, p, 0.0);
  const LikelihoodModel lik = LikelihoodModel::for_dataset(data);
  const LaplaceState st = newton_mode(data.y, lik, prior);

  const MatrixXd sigma = dense_fic_cov(data.X, knots, p);
  const Eigen::LLT<MatrixXd> llt(sigma);
  const auto psi = [&](const VectorXd &f) {
    return lik.log_density(data.y, f) - 0.5 * f.dot(llt.solve(f));
  };
  const double psi_hat = psi(st.f_hat);
  for (int t = 0; t < 1000; ++t) {
    VectorXd eps = random_vector(rng, data.n(), -1.0, 1.0);
    eps *= rng.uniform(0.0, 0.1) / std::max(eps.norm(), 1e-12);
    REQUIRE(psi(st.f_hat + eps) <= psi_hat + 1e-12);
  }
}

TEST_CASE("Laplace marginal is invariant under row permutations") {
  Rng rng(31);
  const Dataset data = random_poisson(rng, 18);
  const KernelParams p = params1d(1.0, 1.2);
  const MeanFunction m{0.2};
  const MatrixXd knots = random_matrix(rng, 4, 1, 0.0, 10.0);

  const double base = laplace_log_marginal(data, knots, p, m);
  std::vector<int> idx = rng.sample_without_replacement(data.n(), data.n());
  const Dataset shuffled = data.rows(idx);
  REQUIRE(std::abs(laplace_log_marginal(shuffled, knots, p, m) - base) < 1e-10);
}

TEST_CASE("duplicate knots leave the Laplace marginal unchanged at zero jitter") {
  Rng rng(37);
  for (int rep = 0; rep < 2; ++rep) {
    const Dataset data = rep == 0 ? random_poisson(rng, 20) : random_bernoulli(rng, 20);
    KernelParams p = params1d(1.0, 1.5);
    p.jitter = 0.0;
    const MeanFunction m{0.0};
    const MatrixXd knots = random_matrix(rng, 4, 1, 0.5, 9.5);

    const double base = laplace_log_marginal(data, knots, p, m);
    MatrixXd dup(5, 1);
    dup.topRows(4) = knots;
    dup.row(4) = knots.row(1);
    REQUIRE(std::abs(laplace_log_marginal(data, dup, p, m) - base) < 1e-6);
  }
}

TEST_CASE("credible bands stay ordered through the link") {
  Rng rng(41);
  const Dataset data = random_poisson(rng, 15);
  const KernelParams p = params1d(1.0, 1.0);
  const MatrixXd knots = random_matrix(rng, 4, 1, 0.0, 10.0);
  const FicLaplaceState s = build_fic_laplace_state(data, knots, p, MeanFunction{0.0});
  const MatrixXd Xnew = random_matrix(rng, 10, 1, 0.0, 10.0);
  const GaussianPredictive pred = laplace_predict(s, Xnew);
  const PredictiveBands bands =
      link_bands(pred, Likelihood::poisson, VectorXd::Constant(10, 0.5));
  for (int i = 0; i < 10; ++i) {
    REQUIRE(bands.lower(i) <= bands.mean(i));
    REQUIRE(bands.mean(i) <= bands.upper(i));
    REQUIRE(bands.lower(i) >= 0.0);
  }
}
