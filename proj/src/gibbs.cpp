#include "hdplpcm/gibbs.hpp"

#include <cmath>

#include "hdplpcm/errors.hpp"
#include "hdplpcm/label_sampler.hpp"
#include "hdplpcm/likelihood.hpp"

namespace hdplpcm {

void SamplerConfig::validate() const {
  if (n_tune < 0 || n_burn < 0 || n_keep < 0)
    throw InvalidArgument("iteration counts must be >= 0");
  if (thin <= 0) throw InvalidArgument("thin must be >= 1");
  if (L <= 0 || p <= 0) throw InvalidArgument("L and p must be positive");
  if (step_x <= 0.0 || step_beta0 <= 0.0)
    throw InvalidArgument("step sizes must be > 0");
  if (!(0.0 < target_accept_low && target_accept_low < target_accept_high &&
        target_accept_high < 1.0))
    throw InvalidArgument("acceptance band must satisfy 0 < low < high < 1");
  if (tune_interval <= 0) throw InvalidArgument("tune_interval must be >= 1");
  if (checkpoint_every < 0)
    throw InvalidArgument("checkpoint_every must be >= 0");
}

AcceptStats& AcceptStats::operator+=(const AcceptStats& o) {
  position_accepts += o.position_accepts;
  position_proposals += o.position_proposals;
  intercept_accepts += o.intercept_accepts;
  intercept_proposals += o.intercept_proposals;
  return *this;
}

double tune_step_size(double accept_rate, double step, double low,
                      double high) {
  if (accept_rate > high) return step * 1.1;
  if (accept_rate < low) return step * 0.9;
  return step;
}

void SweepCaches::refresh(const LatentPositions& positions, double beta0) {
  const int T = positions.T(), n = positions.n();
  dist.resize(T);
  soft.resize(T);
  for (int t = 0; t < T; ++t) {
    dist[t].resize(n, n);
    soft[t].resize(n, n);
    for (int i = 0; i < n; ++i) {
      dist[t](i, i) = 0.0;
      soft[t](i, i) = 0.0;
      for (int j = 0; j < i; ++j) {
        const double d = (positions.X[t].col(i) - positions.X[t].col(j)).norm();
        dist[t](i, j) = d;
        dist[t](j, i) = d;
        const double s = softplus(beta0 - d);
        soft[t](i, j) = s;
        soft[t](j, i) = s;
      }
    }
  }
  soft_beta0 = beta0;
  valid = true;
}

void SweepCaches::refresh_soft(double beta0) {
  for (std::size_t t = 0; t < dist.size(); ++t) {
    const int n = static_cast<int>(dist[t].rows());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        const double s = softplus(beta0 - dist[t](i, j));
        soft[t](i, j) = s;
        soft[t](j, i) = s;
      }
  }
  soft_beta0 = beta0;
}

double SweepCaches::log_likelihood(const DynamicNetwork& net,
                                   double beta0) const {
  double total = 0.0;
  for (int t = 0; t < net.T(); ++t)
    for (int i = 0; i < net.n(); ++i)
      for (int j = 0; j < i; ++j)
        total +=
            (net(t, i, j) ? beta0 - dist[t](i, j) : 0.0) - soft[t](i, j);
  return total;
}

namespace {

// Emission term of X_t^i under its own label (the AR mean when t > 0).
double own_emission(const ModelState& state, int t, int i,
                    const Eigen::VectorXd& x) {
  const int g = state.labels.Z(t, i);
  if (t == 0) return emission_log_density(x, nullptr, g, state.groups);
  const Eigen::VectorXd prev = state.positions.X[t - 1].col(i);
  return emission_log_density(x, &prev, g, state.groups);
}

// Emission term of X_{t+1}^i with x as the previous position.
double next_emission(const ModelState& state, int t, int i,
                     const Eigen::VectorXd& x) {
  const int g = state.labels.Z(t + 1, i);
  return emission_log_density(state.positions.X[t + 1].col(i), &x, g,
                              state.groups);
}

}  // namespace

void mh_update_positions(ModelState& state, const DynamicNetwork& net,
                         double step_x, RngStream& rng,
                         std::vector<Eigen::MatrixXd>& dist,
                         std::vector<Eigen::MatrixXd>& soft,
                         AcceptStats& stats) {
  const int T = state.T(), n = state.n(), p = state.p();
  const double beta0 = state.groups.beta0;
  Eigen::VectorXd proposal(p), d_new(n), s_new(n);
  for (int t = 0; t < T; ++t) {
    auto& X_t = state.positions.X[t];
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < p; ++k)
        proposal[k] = X_t(k, i) + step_x * rng.normal();
      const double u = rng.uniform();
      ++stats.position_proposals;

      double delta = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        double d2 = 0.0;
        for (int k = 0; k < p; ++k) {
          const double diff = proposal[k] - X_t(k, j);
          d2 += diff * diff;
        }
        const double d = std::sqrt(d2);
        const double s = softplus(beta0 - d);
        d_new[j] = d;
        s_new[j] = s;
        const double deta = dist[t](i, j) - d;  // eta_new - eta_old
        delta += (net(t, i, j) ? deta : 0.0) - (s - soft[t](i, j));
      }
      const Eigen::VectorXd current = X_t.col(i);
      delta += own_emission(state, t, i, proposal) -
               own_emission(state, t, i, current);
      if (t + 1 < T)
        delta += next_emission(state, t, i, proposal) -
                 next_emission(state, t, i, current);

      if (std::log(u) < delta) {
        X_t.col(i) = proposal;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          dist[t](i, j) = d_new[j];
          dist[t](j, i) = d_new[j];
          soft[t](i, j) = s_new[j];
          soft[t](j, i) = s_new[j];
        }
        ++stats.position_accepts;
      }
    }
  }
}

void mh_update_intercept(ModelState& state, const DynamicNetwork& net,
                         double step_beta0, RngStream& rng,
                         const std::vector<Eigen::MatrixXd>& dist,
                         const std::vector<Eigen::MatrixXd>& soft,
                         AcceptStats& stats) {
  const int T = state.T(), n = state.n();
  const auto& h = state.hyper;
  const double beta0 = state.groups.beta0;
  const double proposal = beta0 + step_beta0 * rng.normal();
  const double u = rng.uniform();
  ++stats.intercept_proposals;

  double delta = 0.0;
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        delta += (net(t, i, j) ? proposal - beta0 : 0.0) -
                 (softplus(proposal - dist[t](i, j)) - soft[t](i, j));
      }
  delta += log_normal_density(proposal, h.mu_beta0, h.sigma2_beta0) -
           log_normal_density(beta0, h.mu_beta0, h.sigma2_beta0);
  if (std::log(u) < delta) {
    state.groups.beta0 = proposal;
    ++stats.intercept_accepts;
  }
}

void sample_group_means(ModelState& state, const TransitionCounts& counts,
                        RngStream& rng) {
  const int T = state.T(), n = state.n(), p = state.p(), L = state.L();
  const auto& h = state.hyper;
  const double lambda = state.groups.lambda;
  const Eigen::VectorXd mu0 =
      h.mu0.size() == p ? h.mu0 : Eigen::VectorXd::Zero(p);

  // Per-group sums: first-slice positions plus lambda-weighted AR residuals.
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(p, L);
  for (int i = 0; i < n; ++i)
    sums.col(state.labels.Z(0, i)) += state.positions.X[0].col(i);
  for (int t = 1; t < T; ++t)
    for (int i = 0; i < n; ++i)
      sums.col(state.labels.Z(t, i)) +=
          lambda * (state.positions.X[t].col(i) -
                    (1.0 - lambda) * state.positions.X[t - 1].col(i));

  for (int g = 0; g < L; ++g) {
    double later = 0.0;
    for (int t = 1; t < T; ++t) later += counts.n_group(t, g);
    const double s2 = state.groups.sigma2[g];
    const double prec =
        (counts.n_group(0, g) + lambda * lambda * later) / s2 + 1.0 / h.tau2;
    const double var = 1.0 / prec;
    const Eigen::VectorXd mean = var * (sums.col(g) / s2 + mu0 / h.tau2);
    for (int k = 0; k < p; ++k)
      state.groups.mu(k, g) = mean[k] + std::sqrt(var) * rng.normal();
  }
}

void sample_group_variances(ModelState& state, const TransitionCounts& counts,
                            RngStream& rng) {
  const int T = state.T(), n = state.n(), p = state.p(), L = state.L();
  const auto& h = state.hyper;
  const double lambda = state.groups.lambda;
  Eigen::VectorXd rss = Eigen::VectorXd::Zero(L);
  for (int i = 0; i < n; ++i) {
    const int g = state.labels.Z(0, i);
    rss[g] +=
        (state.positions.X[0].col(i) - state.groups.mu.col(g)).squaredNorm();
  }
  for (int t = 1; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      const int g = state.labels.Z(t, i);
      rss[g] += (state.positions.X[t].col(i) -
                 (1.0 - lambda) * state.positions.X[t - 1].col(i) -
                 lambda * state.groups.mu.col(g))
                    .squaredNorm();
    }
  for (int g = 0; g < L; ++g) {
    double occupancy = 0.0;
    for (int t = 0; t < T; ++t) occupancy += counts.n_group(t, g);
    const double shape = (occupancy * p + h.a) / 2.0;
    const double scale = (h.b + rss[g]) / 2.0;
    state.groups.sigma2[g] = rng.inverse_gamma(shape, scale);
  }
}

void sample_lambda(ModelState& state, RngStream& rng) {
  const int T = state.T(), n = state.n();
  const auto& h = state.hyper;
  double A = 0.0, B = 0.0;
  for (int t = 1; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      const int g = state.labels.Z(t, i);
      const double inv_s2 = 1.0 / state.groups.sigma2[g];
      const Eigen::VectorXd prev = state.positions.X[t - 1].col(i);
      const Eigen::VectorXd centered = state.groups.mu.col(g) - prev;
      A += inv_s2 * (state.positions.X[t].col(i) - prev).dot(centered);
      B += inv_s2 * centered.squaredNorm();
    }
  const double mean = (h.mu_lambda + h.sigma2_lambda * A) /
                      (1.0 + h.sigma2_lambda * B);
  const double var = 1.0 / (1.0 / h.sigma2_lambda + B);
  state.groups.lambda =
      rng.truncated_normal(mean, std::sqrt(var), 0.0, 1.0);
}

void gibbs_sweep(ModelState& state, const DynamicNetwork& net,
                 const SamplerConfig& config, double step_x, double step_beta0,
                 std::uint32_t sweep, AcceptStats* stats,
                 SweepCaches* caches, bool anchored) {
  const std::uint64_t seed = config.seed;
  AcceptStats local;
  AcceptStats& acc = stats ? *stats : local;

  // 1-2. positions and intercept via MH
  SweepCaches own;
  SweepCaches& cache = caches ? *caches : own;
  if (!cache.valid)
    cache.refresh(state.positions, state.groups.beta0);
  else if (cache.soft_beta0 != state.groups.beta0)
    cache.refresh_soft(state.groups.beta0);
  {
    RngStream rng(seed, RngDomain::positions, 0, sweep);
    mh_update_positions(state, net, step_x, rng, cache.dist, cache.soft, acc);
  }
  {
    RngStream rng(seed, RngDomain::intercept, 0, sweep);
    mh_update_intercept(state, net, step_beta0, rng, cache.dist, cache.soft,
                        acc);
  }

  // 3. blocked label draws, one independent stream per actor
  for (int i = 0; i < state.n(); ++i) {
    Eigen::MatrixXd X_i(state.p(), state.T());
    for (int t = 0; t < state.T(); ++t)
      X_i.col(t) = state.positions.X[t].col(i);
    RngStream rng(seed, RngDomain::labels, static_cast<std::uint32_t>(i),
                  sweep);
    const auto messages = backward_pass(X_i, state.trans, state.groups);
    state.labels.Z.col(i) =
        sample_labels(X_i, messages, state.trans, state.groups, rng);
  }

  // 4-5. counts and CRF auxiliary variables
  const auto counts = compute_transition_counts(state.labels, state.L());
  RngStream aux_rng(seed, RngDomain::aux_tables, 0, sweep);
  auto aux = sample_aux_tables(counts, state.trans.beta, state.hyper.alpha0,
                               state.hyper.alpha, state.hyper.kappa, aux_rng);
  sample_overrides(aux, state.trans.beta, state.hyper.rho, aux_rng);

  // 6-8. global weights, initial distribution, transition rows
  {
    RngStream rng(seed, RngDomain::global_weights, 0, sweep);
    state.trans.beta = sample_beta(aux, state.hyper.gamma, state.L(), rng);
  }
  {
    RngStream rng(seed, RngDomain::initial_dist, 0, sweep);
    state.trans.pi0 = sample_initial_distribution(counts, state.trans.beta,
                                                  state.hyper.alpha0, rng);
  }
  state.trans.Pi =
      sample_transition_rows(counts, state.trans.beta, state.hyper.alpha,
                             state.hyper.kappa, seed, sweep);

  // 9. group parameters
  {
    RngStream rng(seed, RngDomain::group_params, 0, sweep);
    sample_group_means(state, counts, rng);
    sample_group_variances(state, counts, rng);
  }

  // 10-11. blend and hyperparameters (held at their current values during
  // anchored tuning sweeps)
  if (!anchored) {
    {
      RngStream rng(seed, RngDomain::blend, 0, sweep);
      sample_lambda(state, rng);
    }
    if (config.hyper.any()) {
      RngStream rng(seed, RngDomain::hyper, 0, sweep);
      sample_hyperparams(state, counts, aux, config.hyper, rng);
    }
  }
}

namespace {

ModelState strip_sample(const ModelState& state, const SamplerConfig& config) {
  ModelState out = state;
  if (!config.store_positions) out.positions.X.clear();
  if (!config.store_transitions) out.trans.Pi.clear();
  return out;
}

}  // namespace

namespace {

// Phase-structured loop shared by fresh and resumed runs.
Chain run_from(const DynamicNetwork& net, Checkpoint cp,
               const std::atomic<bool>* stop,
               const CheckpointSink& on_checkpoint) {
  const SamplerConfig& config = cp.chain.config;
  Chain& chain = cp.chain;
  ModelState& state = cp.state;

  // Snapshots are taken at iteration boundaries, before the sweep they
  // name runs; during tuning only at adaptation-window boundaries so the
  // (unsaved) window counters are empty.
  const auto maybe_checkpoint = [&]() {
    if (!on_checkpoint || config.checkpoint_every <= 0 || cp.sweep == 0)
      return;
    if (cp.sweep % static_cast<std::uint32_t>(config.checkpoint_every) != 0)
      return;
    if (cp.phase == 0 && cp.phase_iter % config.tune_interval != 0) return;
    on_checkpoint(cp);
  };
  const auto stopped = [&]() {
    if (stop && stop->load()) {
      chain.interrupted = true;
      return true;
    }
    return false;
  };

  SweepCaches caches;

  // phase 0: tuning, with step adaptation every tune_interval sweeps
  if (cp.phase == 0) {
    AcceptStats window;
    for (; cp.phase_iter < config.n_tune; ++cp.phase_iter, ++cp.sweep) {
      if (stopped()) break;
      maybe_checkpoint();
      gibbs_sweep(state, net, config, cp.step_x, cp.step_beta0, cp.sweep,
                  &window, &caches, config.anchored_tuning);
      if ((cp.phase_iter + 1) % config.tune_interval == 0) {
        cp.step_x = tune_step_size(window.position_rate(), cp.step_x,
                                   config.target_accept_low,
                                   config.target_accept_high);
        cp.step_beta0 = tune_step_size(window.intercept_rate(), cp.step_beta0,
                                       config.target_accept_low,
                                       config.target_accept_high);
        chain.tune_stats += window;
        window = AcceptStats{};
      }
    }
    chain.tune_stats += window;
    if (!chain.interrupted) {
      cp.phase = 1;
      cp.phase_iter = 0;
    }
  }
  chain.tuned_step_x = cp.step_x;
  chain.tuned_step_beta0 = cp.step_beta0;

  // phase 1: burn-in with frozen steps
  if (cp.phase == 1) {
    for (; cp.phase_iter < config.n_burn; ++cp.phase_iter, ++cp.sweep) {
      if (stopped()) break;
      maybe_checkpoint();
      gibbs_sweep(state, net, config, cp.step_x, cp.step_beta0, cp.sweep,
                  &chain.run_stats, &caches);
    }
    if (!chain.interrupted) {
      cp.phase = 2;
      cp.phase_iter = 0;
    }
  }

  // phase 2: keep
  if (cp.phase == 2) {
    chain.samples.reserve(config.n_keep / config.thin);
    for (; cp.phase_iter < config.n_keep; ++cp.phase_iter, ++cp.sweep) {
      if (stopped()) break;
      maybe_checkpoint();
      gibbs_sweep(state, net, config, cp.step_x, cp.step_beta0, cp.sweep,
                  &chain.run_stats, &caches);
      if ((cp.phase_iter + 1) % config.thin == 0) {
        if (caches.soft_beta0 != state.groups.beta0)
          caches.refresh_soft(state.groups.beta0);
        const double ll = caches.log_likelihood(net, state.groups.beta0);
        const double lp =
            log_posterior_given_likelihood(state, ll, config.hyper.any());
        if (!std::isfinite(lp))
          throw NumericalError("non-finite posterior at sweep " +
                               std::to_string(cp.sweep));
        chain.samples.push_back(strip_sample(state, config));
        chain.log_post.push_back(lp);
        chain.log_lik.push_back(ll);
      }
    }
  }
  return std::move(cp.chain);
}

}  // namespace

Chain run_chain(const DynamicNetwork& net, const SamplerConfig& config,
                const std::atomic<bool>* stop,
                const CheckpointSink& on_checkpoint) {
  config.validate();
  Checkpoint cp;
  cp.chain.config = config;
  cp.chain.n = net.n();
  cp.chain.T = net.T();
  cp.step_x = config.step_x;
  cp.step_beta0 = config.step_beta0;
  cp.state = initialize_state(net, config);
  const double lp = log_posterior(cp.state, net, config.hyper.any());
  if (!std::isfinite(lp))
    throw NumericalError("initialization produced a non-finite posterior");
  return run_from(net, std::move(cp), stop, on_checkpoint);
}

Chain resume_chain(const DynamicNetwork& net, Checkpoint cp,
                   const std::atomic<bool>* stop,
                   const CheckpointSink& on_checkpoint) {
  if (net.n() != cp.chain.n || net.T() != cp.chain.T)
    throw InvalidArgument("checkpoint does not match this network");
  cp.chain.interrupted = false;
  return run_from(net, std::move(cp), stop, on_checkpoint);
}

}  // namespace hdplpcm
