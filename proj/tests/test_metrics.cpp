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

#include "oatgp/metrics.hpp"
#include "test_utils.hpp"

using namespace oatgp;
using namespace oatgp::testing;

TEST_CASE("mnlp of coin-flip Bernoulli predictions is log 2") {
  GaussianPredictive pred;
  pred.mean = VectorXd::Zero(3); // logistic(0) = 0.5
  pred.var_latent = VectorXd::Zero(3);
  const VectorXd targets = (VectorXd(3) << 1.0, 0.0, 1.0).finished();
  const double v = mnlp(pred, targets, Likelihood::bernoulli, MnlpMode::plugin);
  REQUIRE(v == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  REQUIRE(v == Catch::Approx(0.693147).margin(1e-6));
}

TEST_CASE("mnlp of a standard normal response at its mode") {
  GaussianPredictive pred;
  pred.mean = VectorXd::Zero(4);
  pred.var_latent = VectorXd::Constant(4, 0.6);
  pred.tau2 = 0.4; // response variance 1
  const VectorXd targets = VectorXd::Zero(4);
  const double v = mnlp(pred, targets, Likelihood::gaussian);
  REQUIRE(v == Catch::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
  REQUIRE(v == Catch::Approx(0.918939).margin(1e-6));
}

TEST_CASE("even counts use the lower-median convention") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 * (1 + static_cast<int>(rng.uniform_int(6)));
    GaussianPredictive pred;
    pred.mean = random_vector(rng, n, -1.0, 1.0);
    pred.var_latent = random_vector(rng, n, 0.1, 1.0);
    pred.tau2 = 0.2;
    const VectorXd targets = random_vector(rng, n, -1.0, 1.0);
    const double v = mnlp(pred, targets, Likelihood::gaussian);

    std::vector<double> nlp(n);
    for (int i = 0; i < n; ++i) {
      const double var = pred.var_latent(i) + pred.tau2;
      const double d = targets(i) - pred.mean(i);
      nlp[i] = 0.5 * (d * d / var + std::log(2.0 * M_PI * var));
    }
    std::sort(nlp.begin(), nlp.end());
    REQUIRE(v == nlp[(n - 1) / 2]); // lower of the two middle values
  }
}

TEST_CASE("mnlp is invariant to test-point order") {
  Rng rng(5);
  const int n = 11;
  GaussianPredictive pred;
  pred.mean = random_vector(rng, n, -1.0, 1.0);
  pred.var_latent = random_vector(rng, n, 0.1, 1.0);
  pred.tau2 = 0.1;
  const VectorXd targets = random_vector(rng, n, -1.0, 1.0);
  const double base = mnlp(pred, targets, Likelihood::gaussian);

  const std::vector<int> perm = rng.sample_without_replacement(n, n);
  GaussianPredictive shuffled;
  shuffled.mean.resize(n);
  shuffled.var_latent.resize(n);
  shuffled.tau2 = pred.tau2;
  VectorXd tperm(n);
  for (int i = 0; i < n; ++i) {
    shuffled.mean(i) = pred.mean(perm[i]);
    shuffled.var_latent(i) = pred.var_latent(perm[i]);
    tperm(i) = targets(perm[i]);
  }
  REQUIRE(mnlp(shuffled, tperm, Likelihood::gaussian) == base);
}

TEST_CASE("quadrature-marginalized mnlp matches an adaptive-integration oracle") {
  // one Poisson point: p(y) = int p(y|f) N(f; mu, var) df
  const double mu = 0.4, var = 0.49, offset = 0.8, y = 3.0;
  GaussianPredictive pred;
  pred.mean = VectorXd::Constant(1, mu);
  pred.var_latent = VectorXd::Constant(1, var);
  const double v = mnlp(pred, VectorXd::Constant(1, y), Likelihood::poisson,
                        MnlpMode::integrate, VectorXd::Constant(1, offset));

  const LikelihoodModel lik(Likelihood::poisson, VectorXd::Constant(1, offset));
  const double integral = adaptive_simpson(
      [&](double f) {
        const double d = f - mu;
        return std::exp(lik.log_density_at(0, y, f) - 0.5 * d * d / var) /
               std::sqrt(2.0 * M_PI * var);
      },
      mu - 12.0, mu + 12.0, 1e-13);
  REQUIRE(v == Catch::Approx(-std::log(integral)).margin(1e-8));
}

TEST_CASE("impossible outcomes contribute +inf but leave the median defined") {
  GaussianPredictive pred;
  pred.mean = (VectorXd(3) << 40.0, 0.0, 0.0).finished(); // logistic(40) ~ 1
  pred.var_latent = VectorXd::Zero(3);
  const VectorXd targets = (VectorXd(3) << 0.0, 1.0, 0.0).finished();
  const double v = mnlp(pred, targets, Likelihood::bernoulli, MnlpMode::plugin);
  REQUIRE(std::isfinite(v)); // the +inf point sorts last, median unaffected
}

TEST_CASE("KL between identical Gaussians is exactly zero") {
  GaussianPredictive a;
  a.mean = (VectorXd(2) << 0.5, -1.0).finished();
  a.var_latent = (VectorXd(2) << 0.7, 1.3).finished();
  REQUIRE(aukl(a, a) == 0.0);
}

TEST_CASE("unit-variance mean-shift KL is one half") {
  REQUIRE(gaussian_kl(0.0, 1.0, 1.0, 1.0) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("KL asymmetry verified against numerical integration") {
  const double m1 = 0.0, v1 = 1.0, m2 = 1.0, v2 = 4.0; // sd 2
  const auto kl_numeric = [&](double ma, double va, double mb, double vb) {
    return adaptive_simpson(
        [&](double x) {
          const double lp = -0.5 * (x - ma) * (x - ma) / va - 0.5 * std::log(2.0 * M_PI * va);
          const double lq = -0.5 * (x - mb) * (x - mb) / vb - 0.5 * std::log(2.0 * M_PI * vb);
          return std::exp(lp) * (lp - lq);
        },
        ma - 14.0 * std::sqrt(va), ma + 14.0 * std::sqrt(va), 1e-13);
  };
  const double kl_fwd = gaussian_kl(m1, v1, m2, v2);
  const double kl_rev = gaussian_kl(m2, v2, m1, v1);
  REQUIRE(kl_fwd == Catch::Approx(kl_numeric(m1, v1, m2, v2)).margin(1e-9));
  REQUIRE(kl_rev == Catch::Approx(kl_numeric(m2, v2, m1, v1)).margin(1e-9));
  REQUIRE(kl_fwd != kl_rev);
}

TEST_CASE("KL is nonnegative over random Gaussian pairs") {
  Rng rng(7);
  for (int t = 0; t < 1000; ++t) {
    const double kl = gaussian_kl(rng.uniform(-3, 3), rng.uniform(0.05, 4.0),
                                  rng.uniform(-3, 3), rng.uniform(0.05, 4.0));
    REQUIRE(kl >= 0.0);
  }
}

TEST_CASE("zero sparse variance yields an infinite KL contribution") {
  REQUIRE(std::isinf(gaussian_kl(0.0, 1.0, 0.0, 0.0)));
}

TEST_CASE("perfect predictions have zero srmse") {
  Rng rng(9);
  const VectorXd y = random_vector(rng, 8, -2.0, 2.0);
  REQUIRE(srmse(y, y) == 0.0);
}

TEST_CASE("predicting the test mean at five points gives sqrt(0.8)") {
  Rng rng(11);
  VectorXd y = random_vector(rng, 5, -3.0, 3.0);
  const VectorXd pred = VectorXd::Constant(5, y.mean());
  REQUIRE(srmse(pred, y) == Catch::Approx(std::sqrt(0.8)).margin(1e-12));
  REQUIRE(srmse(pred, y) == Catch::Approx(0.894427).margin(1e-6));
}

TEST_CASE("constant targets make srmse undefined") {
  const VectorXd y = VectorXd::Constant(5, 2.0);
  const VectorXd pred = VectorXd::Constant(5, 1.0);
  REQUIRE(std::isnan(srmse(pred, y)));
}

TEST_CASE("srmse is invariant to jointly rescaling targets and predictions") {
  Rng rng(13);
  const VectorXd y = random_vector(rng, 9, -2.0, 2.0);
  const VectorXd pred = random_vector(rng, 9, -2.0, 2.0);
  const double base = srmse(pred, y);
  for (const double c : {0.5, 3.0, 1234.5}) {
    REQUIRE(srmse(c * pred, c * y) == Catch::Approx(base).margin(1e-12));
  }
}

TEST_CASE("latent rmse basics and a naive-loop oracle") {
  Rng rng(15);
  const VectorXd f = random_vector(rng, 12, -1.0, 1.0);
  REQUIRE(rmse_latent(f, f) == 0.0);
  REQUIRE(rmse_latent((f.array() + 0.75).matrix(), f) ==
          Catch::Approx(0.75).margin(1e-12));

  const VectorXd g = random_vector(rng, 12, -1.0, 1.0);
  double acc = 0.0;
  for (int i = 0; i < 12; ++i) acc += (g(i) - f(i)) * (g(i) - f(i));
  REQUIRE(rmse_latent(g, f) == Catch::Approx(std::sqrt(acc / 12.0)).margin(1e-12));
}

TEST_CASE("gauss-hermite rule integrates low-order polynomials exactly") {
  const GaussHermite gh(20);
  // int e^{-t^2} dt = sqrt(pi); int t^2 e^{-t^2} dt = sqrt(pi)/2
  REQUIRE(gh.weights.sum() == Catch::Approx(std::sqrt(M_PI)).epsilon(1e-12));
  REQUIRE(gh.nodes.cwiseProduct(gh.nodes).dot(gh.weights) ==
          Catch::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-10));
}
