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

#include "oatgp/kernel.hpp"
#include "test_utils.hpp"

using namespace oatgp;
using namespace oatgp::testing;

namespace {

KernelParams params2d(double sv = 1.7, double l1 = 0.8, double l2 = 2.5) {
  KernelParams p;
  p.signal_variance = sv;
  p.lengthscales = (VectorXd(2) << l1, l2).finished();
  p.noise_variance = 0.3;
  return p;
}

} // namespace

TEST_CASE("kernel at zero distance equals the signal variance") {
  const KernelParams p = params2d();
  const VectorXd x = (VectorXd(2) << 1.3, -0.4).finished();
  REQUIRE(kernel_eval(x, x, p) == Catch::Approx(p.signal_variance).epsilon(1e-14));
}

TEST_CASE("kernel is symmetric in its arguments") {
  const KernelParams p = params2d();
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const VectorXd a = random_vector(rng, 2, -3.0, 3.0);
    const VectorXd b = random_vector(rng, 2, -3.0, 3.0);
    REQUIRE(kernel_eval(a, b, p) == Catch::Approx(kernel_eval(b, a, p)).epsilon(1e-15));
    REQUIRE(kernel_eval(a, b, p) <= p.signal_variance + 1e-15);
  }
}

TEST_CASE("unit-parameter kernel at unit distance") {
  KernelParams p;
  p.signal_variance = 1.0;
  p.lengthscales = VectorXd::Constant(1, 1.0);
  const VectorXd a = VectorXd::Zero(1);
  const VectorXd b = VectorXd::Constant(1, 1.0);
  REQUIRE(kernel_eval(a, b, p) == Catch::Approx(std::exp(-0.5)).epsilon(1e-12));
  REQUIRE(kernel_eval(a, b, p) == Catch::Approx(0.606531).margin(1e-6));
}

TEST_CASE("kernel rejects dimension mismatches") {
  const KernelParams p = params2d();
  const VectorXd a = VectorXd::Zero(3);
  const VectorXd b = VectorXd::Zero(2);
  REQUIRE_THROWS_AS(kernel_eval(a, b, p), InputError);
  REQUIRE_THROWS_AS(kernel_grad_params(a, b, p), InputError);
}

TEST_CASE("hyperparameter gradient at coincident inputs") {
  const KernelParams p = params2d();
  const VectorXd x = (VectorXd(2) << 0.5, 2.0).finished();
  const VectorXd g = kernel_grad_params(x, x, p);
  REQUIRE(g(0) == Catch::Approx(p.signal_variance).epsilon(1e-14));
  REQUIRE(g(1) == 0.0);
  REQUIRE(g(2) == 0.0);
}

TEST_CASE("hyperparameter gradient matches central differences") {
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const KernelParams p = params2d(rng.uniform(0.5, 3.0), rng.uniform(0.3, 2.0),
                                    rng.uniform(0.3, 2.0));
    const VectorXd a = random_vector(rng, 2, -2.0, 2.0);
    const VectorXd b = random_vector(rng, 2, -2.0, 2.0);
    const VectorXd g = kernel_grad_params(a, b, p);

    const VectorXd t0 =
        (VectorXd(3) << std::log(p.signal_variance), p.lengthscales.array().log())
            .finished();
    const auto eval = [&](const VectorXd &v) {
      KernelParams q = p;
      q.signal_variance = std::exp(v(0));
      q.lengthscales = v.tail(2).array().exp();
      return kernel_eval(a, b, q);
    };
    const VectorXd fd = finite_diff(eval, t0, 1e-6);
    REQUIRE(max_rel_err(g, fd, 1e-8) < 1e-5);
  }
}

TEST_CASE("lengthscale gradient vanishes in the flat-kernel limit") {
  KernelParams p = params2d();
  p.lengthscales = VectorXd::Constant(2, 1e8);
  const VectorXd a = (VectorXd(2) << 0.0, 0.0).finished();
  const VectorXd b = (VectorXd(2) << 1.0, -1.0).finished();
  const VectorXd g = kernel_grad_params(a, b, p);
  REQUIRE(std::abs(g(1)) < 1e-12);
  REQUIRE(std::abs(g(2)) < 1e-12);
}

TEST_CASE("input gradient: stationary point, finite differences, antisymmetry") {
  const KernelParams p = params2d();
  const VectorXd x = (VectorXd(2) << 0.3, 0.9).finished();
  REQUIRE(kernel_grad_input(x, x, p, KernelArg::first).norm() == 0.0);

  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    const VectorXd a = random_vector(rng, 2, -2.0, 2.0);
    const VectorXd b = random_vector(rng, 2, -2.0, 2.0);
    const VectorXd g1 = kernel_grad_input(a, b, p, KernelArg::first);
    const VectorXd g2 = kernel_grad_input(a, b, p, KernelArg::second);
    REQUIRE((g1 + g2).norm() < 1e-14);

    const auto eval = [&](const VectorXd &v) { return kernel_eval(v, b, p); };
    const VectorXd fd = finite_diff(eval, a, 1e-6);
    REQUIRE(max_rel_err(g1, fd, 1e-8) < 1e-5);
  }
}

TEST_CASE("gram matrices are symmetric and factorizable with jitter") {
  Rng rng(17);
  for (const int n : {50, 1000}) {
    KernelParams p = params2d(1.0, 0.5, 0.5);
    p.jitter = 1e-8 * p.signal_variance;
    const MatrixXd X = random_matrix(rng, n, 2, 0.0, 10.0);
    MatrixXd K = kernel_gram(X, X, p);
    REQUIRE((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    K.diagonal().array() += p.jitter;
    Eigen::LLT<MatrixXd> llt(K);
    REQUIRE(llt.info() == Eigen::Success);
  }
}

TEST_CASE("gram agrees with pairwise kernel evaluations") {
  Rng rng(19);
  const KernelParams p = params2d();
  const MatrixXd A = random_matrix(rng, 7, 2, -1.0, 1.0);
  const MatrixXd B = random_matrix(rng, 5, 2, -1.0, 1.0);
  const MatrixXd K = kernel_gram(A, B, p);
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < B.rows(); ++j)
      REQUIRE(K(i, j) ==
              Catch::Approx(kernel_eval(A.row(i).transpose(), B.row(j).transpose(), p))
                  .margin(1e-13));
}

TEST_CASE("invalid parameters are rejected") {
  KernelParams p = params2d();
  p.signal_variance = -1.0;
  REQUIRE_THROWS_AS(p.validate(), InputError);
  p = params2d();
  p.noise_variance = 0.0;
  p.noise_lower_bound = 1e-6;
  REQUIRE_THROWS_AS(p.validate(), InputError);
}
