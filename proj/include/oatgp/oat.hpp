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
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "oatgp/model.hpp"
#include "oatgp/rng.hpp"

namespace oatgp {

class ProposalError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

enum class InitStrategy { kmeans, random_subset, uniform_grid, explicit_knots };

inline std::string to_string(InitStrategy s) {
  switch (s) {
  case InitStrategy::kmeans: return "kmeans";
  case InitStrategy::random_subset: return "random_subset";
  case InitStrategy::uniform_grid: return "uniform_grid";
  case InitStrategy::explicit_knots: return "explicit";
  }
  return "?";
}

inline InitStrategy init_strategy_from_string(const std::string &s) {
  if (s == "kmeans") return InitStrategy::kmeans;
  if (s == "random_subset") return InitStrategy::random_subset;
  if (s == "uniform_grid") return InitStrategy::uniform_grid;
  if (s == "explicit") return InitStrategy::explicit_knots;
  throw InputError("unknown init strategy: " + s);
}

namespace detail {

/// Lloyd's algorithm with seeded restarts; keeps the centers with the best
/// within-cluster sum of squares. Empty clusters are reseeded with the point
/// farthest from its assigned center.
inline MatrixXd kmeans_centers(const MatrixXd &X, int k, Rng &rng,
                               int restarts = 25, int iters = 100) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (k > n) throw InputError("kmeans: more clusters than points");

  MatrixXd best_centers(k, d);
  double best_inertia = std::numeric_limits<double>::infinity();

  std::vector<int> assign(n);
  for (int r = 0; r < restarts; ++r) {
    const std::vector<int> seed_rows = rng.sample_without_replacement(n, k);
    MatrixXd centers(k, d);
    for (int c = 0; c < k; ++c) centers.row(c) = X.row(seed_rows[c]);

    double inertia = 0.0;
    for (int it = 0; it < iters; ++it) {
      bool changed = false;
      inertia = 0.0;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double dist = (X.row(i) - centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
          const double dc = (X.row(i) - centers.row(c)).squaredNorm();
          if (dc < dist) {
            dist = dc;
            arg = c;
          }
        }
        if (assign[i] != arg) changed = true;
        assign[i] = arg;
        inertia += dist;
      }
      MatrixXd sums = MatrixXd::Zero(k, d);
      std::vector<int> counts(k, 0);
      for (int i = 0; i < n; ++i) {
        sums.row(assign[i]) += X.row(i);
        ++counts[assign[i]];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          centers.row(c) = sums.row(c) / counts[c];
        } else {
          int far = 0;
          double fd = -1.0;
          for (int i = 0; i < n; ++i) {
            const double dc = (X.row(i) - centers.row(assign[i])).squaredNorm();
            if (dc > fd) {
              fd = dc;
              far = i;
            }
          }
          centers.row(c) = X.row(far);
          changed = true;
        }
      }
      if (!changed && it > 0) break;
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_centers = centers;
    }
  }
  return best_centers;
}

inline bool row_matches_any(const Eigen::Ref<const VectorXd> &x, const MatrixXd &M) {
  for (int i = 0; i < M.rows(); ++i)
    if ((M.row(i).transpose().array() == x.array()).all()) return true;
  return false;
}

} // namespace detail

/// Initial knot locations. The grid strategy covers the bounding box and is
/// limited to 1-D and 2-D inputs; in 2-D a ceil(sqrt(K)) x ceil(sqrt(K))
/// grid is generated and the first K nodes are taken in row-major order.
inline MatrixXd init_knots(const Eigen::Ref<const MatrixXd> &X, InitStrategy strategy,
                           int k_init, std::uint64_t seed,
                           const MatrixXd &explicit_knots = MatrixXd()) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (k_init < 1) throw InputError("init_knots: need at least one knot");
  Rng rng(seed);
  switch (strategy) {
  case InitStrategy::kmeans:
    return detail::kmeans_centers(X, k_init, rng);
  case InitStrategy::random_subset: {
    if (k_init > n) throw InputError("init_knots: more knots than data rows");
    const std::vector<int> rows = rng.sample_without_replacement(n, k_init);
    MatrixXd out(k_init, d);
    for (int i = 0; i < k_init; ++i) out.row(i) = X.row(rows[i]);
    return out;
  }
  case InitStrategy::uniform_grid: {
    const VectorXd lo = X.colwise().minCoeff();
    const VectorXd hi = X.colwise().maxCoeff();
    if (d == 1) {
      MatrixXd out(k_init, 1);
      if (k_init == 1) {
        out(0, 0) = 0.5 * (lo(0) + hi(0));
      } else {
        for (int i = 0; i < k_init; ++i)
          out(i, 0) = lo(0) + (hi(0) - lo(0)) * i / (k_init - 1);
      }
      return out;
    }
    if (d == 2) {
      const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k_init))));
      MatrixXd out(k_init, 2);
      int idx = 0;
      for (int i = 0; i < g && idx < k_init; ++i)
        for (int j = 0; j < g && idx < k_init; ++j, ++idx) {
          out(idx, 0) = g == 1 ? 0.5 * (lo(0) + hi(0)) : lo(0) + (hi(0) - lo(0)) * i / (g - 1);
          out(idx, 1) = g == 1 ? 0.5 * (lo(1) + hi(1)) : lo(1) + (hi(1) - lo(1)) * j / (g - 1);
        }
      return out;
    }
    throw InputError("init_knots: uniform_grid supports 1-D and 2-D inputs only");
  }
  case InitStrategy::explicit_knots:
    if (explicit_knots.rows() == 0 || explicit_knots.cols() != d)
      throw InputError("init_knots: explicit knots missing or wrong dimension");
    return explicit_knots;
  }
  throw InputError("init_knots: unknown strategy");
}

/// EI(z) = (mu - w+) Phi(u) + s phi(u), u = (mu - w+)/s; the s = 0 limit is
/// max(mu - w+, 0).
inline double expected_improvement(double mu, double var, double w_best) {
  if (var < -1e-12) throw NumericalError("expected_improvement: negative variance");
  const double s = std::sqrt(std::max(var, 0.0));
  const double diff = mu - w_best;
  if (s == 0.0) return std::max(diff, 0.0);
  const double u = diff / s;
  return diff * normal_cdf(u) + s * normal_pdf(u);
}

struct MetaGpConfig {
  double noise_variance = 0.0; // 0 keeps the meta GP interpolating
  double jitter_scale = 1e-10; // diagonal inflation relative to signal variance
  long refit_iters = 50;
  double refit_tol = 1e-3;
};

/// GP over the log-marginal-likelihood-as-a-function-of-a-new-knot surface.
/// The mean is pinned to the current model's log marginal and the current
/// knots enter as anchor observations at exactly that value, since adding a
/// duplicate knot reproduces the current model.
class MetaGp {
public:
  MetaGp(const MatrixXd &anchors, double current_log_marginal,
         const VectorXd &domain_span, MetaGpConfig cfg = {})
      : anchors_(anchors), mean_(current_log_marginal), cfg_(cfg) {
    const int d = static_cast<int>(anchors.cols());
    params_.signal_variance = 1.0;
    params_.lengthscales = (domain_span / 4.0).cwiseMax(1e-8);
    params_.noise_lower_bound = 0.0;
    params_.noise_variance = 0.0; // effective noise set at build time
    params_.jitter = 0.0;
    (void)d;
  }

  void add(const VectorXd &z, double w) {
    explored_.conservativeResize(explored_.rows() + 1, anchors_.cols());
    explored_.row(explored_.rows() - 1) = z.transpose();
    w_.conservativeResize(w_.size() + 1);
    w_(w_.size() - 1) = w;
    dirty_ = true;
  }

  int explored_count() const { return static_cast<int>(explored_.rows()); }
  const VectorXd &w_values() const { return w_; }
  const MatrixXd &explored() const { return explored_; }

  double w_best() const { return w_.size() > 0 ? std::max(mean_, w_.maxCoeff()) : mean_; }

  /// Scales the signal variance to the spread of the observed values and
  /// refits (log signal variance, log lengthscales) by a short Adadelta
  /// ascent on the meta GP's own dense marginal likelihood. The noise is
  /// held at its configured value. Failures keep the previous parameters.
  void refit() {
    if (explored_.rows() < 2) return;
    const VectorXd v = w_.array() - mean_;
    const double spread = v.squaredNorm() / static_cast<double>(v.size());
    params_.signal_variance = std::max(spread, 1e-10);

    Dataset data = pseudo_dataset();
    KernelParams p = effective_params();
    ConvergenceSpec spec;
    spec.objective_tol = cfg_.refit_tol;
    spec.max_iters = cfg_.refit_iters;
    ParamLayout layout;
    layout.dim = static_cast<int>(anchors_.cols());
    layout.with_noise = false;
    MeanFunction m{mean_};
    try {
      long evals = 0;
      ObjectiveFn obj = [&](const VectorXd &vv, VectorXd &grad) -> double {
        KernelParams pp = p;
        MatrixXd no_knots(0, layout.dim);
        unpack_params(vv, layout, &pp, &no_knots);
        pp.noise_variance = effective_noise(pp.signal_variance);
        try {
          const FullGpState s = build_full_gp_state(data.X, data.y, pp, m);
          grad = full_gp_grad(s, false);
          ++evals;
          return s.log_marginal;
        } catch (const NumericalError &) {
          grad.setZero(layout.size());
          return -std::numeric_limits<double>::infinity();
        }
      };
      MatrixXd no_knots(0, layout.dim);
      const VectorXd v0 = pack_params(p, no_knots, layout);
      const AscentResult res =
          run_ascent(obj, v0, AdadeltaState::make(layout.size()), spec);
      KernelParams fitted = p;
      unpack_params(res.best_params, layout, &fitted, &no_knots);
      params_.signal_variance = fitted.signal_variance;
      params_.lengthscales = fitted.lengthscales;
    } catch (const Error &) {
      // keep previous hyperparameters
    }
    dirty_ = true;
  }

  /// Posterior mean and variance at rows of Z.
  void posterior(const Eigen::Ref<const MatrixXd> &Z, VectorXd *mu, VectorXd *var) const {
    rebuild();
    const GaussianPredictive pred = full_gp_predict(state_, Z);
    *mu = pred.mean;
    *var = pred.var_latent;
  }

  const KernelParams &kernel_params() const { return params_; }

private:
  Dataset pseudo_dataset() const {
    Dataset d;
    d.likelihood = Likelihood::gaussian;
    const int ka = static_cast<int>(anchors_.rows());
    const int ke = static_cast<int>(explored_.rows());
    d.X.resize(ka + ke, anchors_.cols());
    d.y.resize(ka + ke);
    d.X.topRows(ka) = anchors_;
    d.y.head(ka).setConstant(mean_);
    if (ke > 0) {
      d.X.bottomRows(ke) = explored_;
      d.y.tail(ke) = w_;
    }
    return d;
  }

  double effective_noise(double signal_variance) const {
    return cfg_.noise_variance +
           std::max(cfg_.jitter_scale * signal_variance, 1e-12);
  }

  KernelParams effective_params() const {
    KernelParams p = params_;
    p.noise_variance = effective_noise(p.signal_variance);
    return p;
  }

  void rebuild() const {
    if (!dirty_) return;
    const Dataset d = pseudo_dataset();
    state_ = build_full_gp_state(d.X, d.y, effective_params(), MeanFunction{mean_});
    dirty_ = false;
  }

  MatrixXd anchors_;
  MatrixXd explored_{0, 0};
  VectorXd w_{0};
  double mean_ = 0.0;
  KernelParams params_;
  MetaGpConfig cfg_;
  mutable FullGpState state_;
  mutable bool dirty_ = true;
};

struct ProposalResult {
  VectorXd knot;
  double w = -std::numeric_limits<double>::infinity();
  int evals = 0; // log-marginal evaluations spent
};

namespace detail {

/// Data rows available as knot candidates: observed locations that do not
/// coincide exactly with a current knot.
inline std::vector<int> candidate_pool(const Dataset &data, const MatrixXd &knots) {
  std::vector<int> pool;
  pool.reserve(data.n());
  for (int i = 0; i < data.n(); ++i)
    if (!row_matches_any(data.X.row(i).transpose(), knots)) pool.push_back(i);
  return pool;
}

inline double eval_candidate(const Dataset &data, const MatrixXd &knots,
                             const VectorXd &z, const KernelParams &p,
                             const MeanFunction &m, bool *ok) {
  MatrixXd aug(knots.rows() + 1, knots.cols());
  aug.topRows(knots.rows()) = knots;
  aug.bottomRows(1) = z.transpose();
  try {
    const double w = sparse_log_marginal(data, aug, p, m);
    *ok = std::isfinite(w);
    return w;
  } catch (const NumericalError &) {
    *ok = false; // skip this candidate
    return -std::numeric_limits<double>::infinity();
  }
}

} // namespace detail

/// Best-of-random-subset proposal: evaluates the log marginal with each of
/// t_max sampled data locations appended and returns the argmax.
inline ProposalResult propose_rs(const Dataset &data, const MatrixXd &knots,
                                 const KernelParams &theta, const MeanFunction &m,
                                 int t_max, std::uint64_t seed) {
  if (t_max < 1) throw InputError("propose_rs: t_max must be >= 1");
  if (t_max > data.n()) throw InputError("propose_rs: t_max exceeds data size");
  const std::vector<int> pool = detail::candidate_pool(data, knots);
  if (pool.empty()) throw ProposalError("propose_rs: no candidate locations left");

  Rng rng(seed);
  const int take = std::min<int>(t_max, static_cast<int>(pool.size()));
  const std::vector<int> picks =
      rng.sample_without_replacement(static_cast<int>(pool.size()), take);

  ProposalResult best;
  for (int pi : picks) {
    const VectorXd z = data.X.row(pool[pi]).transpose();
    bool ok = false;
    const double w = detail::eval_candidate(data, knots, z, theta, m, &ok);
    ++best.evals;
    if (ok && w > best.w) {
      best.w = w;
      best.knot = z;
    }
  }
  if (best.knot.size() == 0)
    throw ProposalError("propose_rs: every candidate evaluation failed");
  return best;
}

/// Bayesian-optimization proposal: t_min seed evaluations at random data
/// locations, then t_max - t_min rounds of expected-improvement maximization
/// over the remaining data locations, refitting the meta GP each round.
/// Returns the evaluated candidate with the largest log marginal.
inline ProposalResult propose_bo(const Dataset &data, const MatrixXd &knots,
                                 const KernelParams &theta, const MeanFunction &m,
                                 double current_log_marginal, int t_min, int t_max,
                                 std::uint64_t seed, MetaGpConfig meta_cfg = {}) {
  if (t_min < 1 || t_min > t_max) throw InputError("propose_bo: need 1 <= t_min <= t_max");
  std::vector<int> pool = detail::candidate_pool(data, knots);
  if (pool.empty()) throw ProposalError("propose_bo: no candidate locations left");

  const VectorXd span =
      (data.X.colwise().maxCoeff() - data.X.colwise().minCoeff()).transpose();
  MetaGp meta(knots, current_log_marginal, span, meta_cfg);
  Rng rng(seed);

  std::vector<int> explored_rows;
  std::vector<double> explored_w;
  auto evaluate_row = [&](int row) {
    const VectorXd z = data.X.row(row).transpose();
    bool ok = false;
    const double w = detail::eval_candidate(data, knots, z, theta, m, &ok);
    if (ok) {
      meta.add(z, w);
      explored_rows.push_back(row);
      explored_w.push_back(w);
    }
    return ok;
  };

  int evals = 0;
  const int take = std::min<int>(t_min, static_cast<int>(pool.size()));
  const std::vector<int> picks =
      rng.sample_without_replacement(static_cast<int>(pool.size()), take);
  std::vector<bool> used(pool.size(), false);
  for (int pi : picks) {
    used[pi] = true;
    evaluate_row(pool[pi]);
    ++evals;
  }

  while (evals < t_max) {
    std::vector<int> open;
    for (int i = 0; i < static_cast<int>(pool.size()); ++i)
      if (!used[i]) open.push_back(i);
    if (open.empty()) break;

    meta.refit();
    MatrixXd Zo(static_cast<int>(open.size()), data.dim());
    for (int i = 0; i < static_cast<int>(open.size()); ++i)
      Zo.row(i) = data.X.row(pool[open[i]]);
    VectorXd mu, var;
    meta.posterior(Zo, &mu, &var);
    const double wb = meta.w_best();
    int arg = 0;
    double best_ei = -1.0;
    for (int i = 0; i < static_cast<int>(open.size()); ++i) {
      const double ei = expected_improvement(mu(i), var(i), wb);
      if (ei > best_ei) {
        best_ei = ei;
        arg = i;
      }
    }
    used[open[arg]] = true;
    evaluate_row(pool[open[arg]]);
    ++evals;
  }

  if (explored_rows.empty())
    throw ProposalError("propose_bo: every candidate evaluation failed");
  int best = 0;
  for (int i = 1; i < static_cast<int>(explored_w.size()); ++i)
    if (explored_w[i] > explored_w[best]) best = i;

  ProposalResult out;
  out.knot = data.X.row(explored_rows[best]).transpose();
  out.w = explored_w[best];
  out.evals = evals;
  return out;
}

enum class Termination { budget, converged, error };

inline std::string to_string(Termination t) {
  switch (t) {
  case Termination::budget: return "budget";
  case Termination::converged: return "converged";
  case Termination::error: return "error";
  }
  return "?";
}

struct FitResult {
  MatrixXd knots;         // final
  MatrixXd initial_knots;
  KernelParams params;
  MeanFunction mean;
  std::vector<double> trace;        // log marginal after init and each accepted knot
  std::vector<int> proposal_evals;  // per-proposal log-marginal evaluation counts
  long ga_steps = 0;
  double wall_time_s = 0.0;
  double ga_time_s = 0.0;
  Termination termination = Termination::budget;
  std::string error_message;

  double final_log_marginal() const {
    return trace.empty() ? -std::numeric_limits<double>::infinity() : trace.back();
  }
};

enum class ProposalKind { bo, rs };

struct OatConfig {
  int k_init = 5;
  int k_max = 30;
  int t_min = 10;
  int t_max = 30;
  double improvement_threshold = 0.01;
  InitStrategy init = InitStrategy::kmeans;
  MatrixXd explicit_knots;
  std::uint64_t seed = 0;
  MetaGpConfig meta;

  void validate() const {
    if (!(1 <= k_init && k_init <= k_max))
      throw InputError("OatConfig: need 1 <= k_init <= k_max");
    if (!(1 <= t_min && t_min <= t_max))
      throw InputError("OatConfig: need 1 <= t_min <= t_max");
    if (!(improvement_threshold > 0.0))
      throw InputError("OatConfig: improvement_threshold must be > 0");
  }
};

namespace detail {

class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

} // namespace detail

/// One-at-a-time knot selection: a theta-only initialization fit, then
/// alternating knot proposals and joint optimization of the new knot with
/// all covariance parameters (previously accepted knots stay fixed). A knot
/// is accepted only when the reoptimized log marginal improves on the
/// current one by at least improvement_threshold; the first rejection ends
/// the fit.
inline FitResult oat_fit(const Dataset &data, ProposalKind proposal,
                         const OatConfig &cfg, const ConvergenceSpec &conv,
                         const KernelParams &init_params, const MeanFunction &mean) {
  cfg.validate();
  conv.validate();
  data.validate();
  const detail::Stopwatch total;

  FitResult res;
  res.mean = mean;
  res.params = init_params;
  res.knots = init_knots(data.X, cfg.init, cfg.k_init,
                         stream_seed(cfg.seed, "init"), cfg.explicit_knots);
  res.initial_knots = res.knots;

  // Initialization: optimize covariance parameters only.
  {
    const ParamLayout layout = ParamLayout::for_data(data, {});
    const ObjectiveFn obj =
        make_sparse_objective(data, res.knots, res.params, mean, layout);
    const VectorXd v0 = pack_params(res.params, res.knots, layout);
    const detail::Stopwatch ga;
    const AscentResult r = run_ascent(obj, v0, AdadeltaState::make(layout.size()), conv);
    res.ga_time_s += ga.seconds();
    res.ga_steps += r.iterations;
    MatrixXd dummy = res.knots;
    unpack_params(r.best_params, layout, &res.params, &dummy);
    res.trace.push_back(r.best_value);
  }

  res.termination = Termination::budget;
  int round = 0;
  while (res.knots.rows() < cfg.k_max) {
    ProposalResult prop;
    try {
      const std::uint64_t pseed =
          stream_seed(cfg.seed, "proposal/" + std::to_string(round));
      if (proposal == ProposalKind::bo)
        prop = propose_bo(data, res.knots, res.params, mean, res.trace.back(),
                          cfg.t_min, cfg.t_max, pseed, cfg.meta);
      else
        prop = propose_rs(data, res.knots, res.params, mean, cfg.t_max, pseed);
    } catch (const NumericalError &e) {
      res.termination = Termination::error;
      res.error_message = e.what();
      break;
    }
    res.proposal_evals.push_back(prop.evals);

    MatrixXd aug(res.knots.rows() + 1, res.knots.cols());
    aug.topRows(res.knots.rows()) = res.knots;
    aug.bottomRows(1) = prop.knot.transpose();
    const int new_index = static_cast<int>(aug.rows()) - 1;

    const ParamLayout layout = ParamLayout::for_data(data, {new_index});
    const ObjectiveFn obj = make_sparse_objective(data, aug, res.params, mean, layout);
    const VectorXd v0 = pack_params(res.params, aug, layout);
    AscentResult r;
    try {
      const detail::Stopwatch ga;
      r = run_ascent(obj, v0, AdadeltaState::make(layout.size()), conv);
      res.ga_time_s += ga.seconds();
    } catch (const NumericalError &e) {
      res.termination = Termination::error;
      res.error_message = e.what();
      break;
    }
    res.ga_steps += r.iterations;

    if (r.best_value - res.trace.back() < cfg.improvement_threshold) {
      res.termination = Termination::converged; // knot rejected, theta kept
      break;
    }
    KernelParams fitted = res.params;
    unpack_params(r.best_params, layout, &fitted, &aug);
    res.params = fitted;
    res.knots = aug;
    res.trace.push_back(r.best_value);
    ++round;
  }

  res.wall_time_s = total.seconds();
  return res;
}

/// Baseline: joint Adadelta ascent over all knot coordinates and covariance
/// parameters.
inline FitResult simultaneous_fit(const Dataset &data, int k, InitStrategy init,
                                  const ConvergenceSpec &conv,
                                  const KernelParams &init_params,
                                  const MeanFunction &mean, std::uint64_t seed,
                                  const MatrixXd &explicit_knots = MatrixXd()) {
  if (k < 1) throw InputError("simultaneous_fit: need at least one knot");
  conv.validate();
  data.validate();
  const detail::Stopwatch total;

  FitResult res;
  res.mean = mean;
  res.params = init_params;
  res.knots = init_knots(data.X, init, k, stream_seed(seed, "init"), explicit_knots);
  res.initial_knots = res.knots;

  std::vector<int> all(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) all[i] = i;
  const ParamLayout layout = ParamLayout::for_data(data, all);
  const ObjectiveFn obj = make_sparse_objective(data, res.knots, res.params, mean, layout);
  const VectorXd v0 = pack_params(res.params, res.knots, layout);

  VectorXd g0(layout.size());
  const double start_value = obj(v0, g0);
  res.trace.push_back(start_value);

  const detail::Stopwatch ga;
  const AscentResult r = run_ascent(obj, v0, AdadeltaState::make(layout.size()), conv);
  res.ga_time_s += ga.seconds();
  res.ga_steps += r.iterations;
  KernelParams fitted = res.params;
  MatrixXd knots = res.knots;
  unpack_params(r.best_params, layout, &fitted, &knots);
  res.params = fitted;
  res.knots = knots;
  res.trace.push_back(r.best_value);
  res.termination = r.status == AscentStatus::budget_exhausted ? Termination::budget
                                                               : Termination::converged;
  res.wall_time_s = total.seconds();
  return res;
}

/// Theta-only fit with the given fixed knots.
inline FitResult fixed_knots_fit(const Dataset &data, const MatrixXd &knots,
                                 const ConvergenceSpec &conv,
                                 const KernelParams &init_params,
                                 const MeanFunction &mean) {
  conv.validate();
  data.validate();
  const detail::Stopwatch total;

  FitResult res;
  res.mean = mean;
  res.params = init_params;
  res.knots = knots;
  res.initial_knots = knots;

  const ParamLayout layout = ParamLayout::for_data(data, {});
  const ObjectiveFn obj = make_sparse_objective(data, knots, res.params, mean, layout);
  const VectorXd v0 = pack_params(res.params, knots, layout);
  const detail::Stopwatch ga;
  const AscentResult r = run_ascent(obj, v0, AdadeltaState::make(layout.size()), conv);
  res.ga_time_s += ga.seconds();
  res.ga_steps += r.iterations;
  MatrixXd dummy = knots;
  unpack_params(r.best_params, layout, &res.params, &dummy);
  res.trace.push_back(r.best_value);
  res.termination = r.status == AscentStatus::budget_exhausted ? Termination::budget
                                                               : Termination::converged;
  res.wall_time_s = total.seconds();
  return res;
}

/// Theta-only fit of the dense full GP (no knots).
inline FitResult full_gp_fit(const Dataset &data, const ConvergenceSpec &conv,
                             const KernelParams &init_params, const MeanFunction &mean) {
  conv.validate();
  data.validate();
  const detail::Stopwatch total;

  FitResult res;
  res.mean = mean;
  res.params = init_params;
  res.knots.resize(0, data.dim());
  res.initial_knots = res.knots;

  const ObjectiveFn obj = make_full_gp_objective(data, res.params, mean);
  const ParamLayout layout = ParamLayout::for_data(data, {});
  const VectorXd v0 = pack_params(res.params, res.knots, layout);
  const detail::Stopwatch ga;
  const AscentResult r = run_ascent(obj, v0, AdadeltaState::make(layout.size()), conv);
  res.ga_time_s += ga.seconds();
  res.ga_steps += r.iterations;
  MatrixXd dummy = res.knots;
  unpack_params(r.best_params, layout, &res.params, &dummy);
  res.trace.push_back(r.best_value);
  res.termination = r.status == AscentStatus::budget_exhausted ? Termination::budget
                                                               : Termination::converged;
  res.wall_time_s = total.seconds();
  return res;
}

} // namespace oatgp
