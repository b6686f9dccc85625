#include <Eigen/Dense>
#include <cmath>
#include <queue>
#include <vector>

#include "hdplpcm/errors.hpp"
#include "hdplpcm/gibbs.hpp"
#include "hdplpcm/likelihood.hpp"

namespace hdplpcm {

namespace {

// Hop-count distances within one slice; unreachable pairs get
// (largest finite distance + 1).
Eigen::MatrixXd shortest_path_dissimilarity(const DynamicNetwork& net, int t) {
  const int n = net.n();
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(n, n, -1.0);
  int max_finite = 0;
  for (int src = 0; src < n; ++src) {
    std::vector<int> dist(n, -1);
    std::queue<int> frontier;
    dist[src] = 0;
    frontier.push(src);
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop();
      for (int w = 0; w < n; ++w)
        if (net(t, v, w) && dist[w] < 0) {
          dist[w] = dist[v] + 1;
          max_finite = std::max(max_finite, dist[w]);
          frontier.push(w);
        }
    }
    for (int w = 0; w < n; ++w) D(src, w) = dist[w];
  }
  const double fill = max_finite + 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (D(i, j) < 0) D(i, j) = fill;
  for (int i = 0; i < n; ++i) D(i, i) = 0.0;
  return D;
}

// Classical multidimensional scaling of one dissimilarity matrix into p
// dimensions (top positive eigenpairs of the double-centered squared
// distances).
Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& D, int p) {
  const int n = static_cast<int>(D.rows());
  Eigen::MatrixXd D2 = D.array().square();
  Eigen::VectorXd row_mean = D2.rowwise().mean();
  const double grand = D2.mean();
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      B(i, j) = -0.5 * (D2(i, j) - row_mean[i] - row_mean[j] + grand);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(p, n);
  for (int k = 0; k < p; ++k) {
    const int idx = n - 1 - k;  // eigenvalues ascend
    if (idx < 0) break;
    const double val = eig.eigenvalues()[idx];
    if (val <= 0.0) continue;
    X.row(k) = std::sqrt(val) * eig.eigenvectors().col(idx).transpose();
  }
  return X;
}

// Orthogonal alignment of A (p x n, centered) onto B: returns R minimizing
// ||R A - B||_F over orthogonal matrices.
Eigen::MatrixXd alignment_rotation(const Eigen::MatrixXd& A,
                                   const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd M = A * B.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixV() * svd.matrixU().transpose();
}

// Maximum-likelihood intercept for fixed positions by Newton iteration
// (the 1-d log likelihood is concave).
double fit_intercept(const DynamicNetwork& net, const LatentPositions& X) {
  double beta0 = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    double grad = 0.0, hess = 0.0;
    for (int t = 0; t < net.T(); ++t)
      for (int i = 0; i < net.n(); ++i)
        for (int j = 0; j < i; ++j) {
          const double eta =
              beta0 - (X.X[t].col(i) - X.X[t].col(j)).norm();
          const double prob = edge_probability(eta);
          grad += (net(t, i, j) ? 1.0 : 0.0) - prob;
          hess -= prob * (1.0 - prob);
        }
    if (hess >= -1e-12) break;
    const double move = grad / hess;
    beta0 -= move;
    if (std::fabs(move) < 1e-10) break;
  }
  return beta0;
}

// Global scale calibration: shrink or grow the whole configuration (with a
// refitted intercept) to maximize the network likelihood before the local
// refinement starts. Graph-distance layouts usually come out far too wide.
void calibrate_scale(const DynamicNetwork& net, LatentPositions& X,
                     double& beta0) {
  double best_scale = 1.0;
  double best_ll = -std::numeric_limits<double>::infinity();
  double best_beta0 = beta0;
  LatentPositions scaled = X;
  for (double log_s = -3.5; log_s <= 1.0 + 1e-9; log_s += 0.25) {
    const double s = std::exp(log_s);
    for (int t = 0; t < X.T(); ++t) scaled.X[t] = s * X.X[t];
    const double b = fit_intercept(net, scaled);
    const double ll = network_log_likelihood(net, scaled, b);
    if (ll > best_ll) {
      best_ll = ll;
      best_scale = s;
      best_beta0 = b;
    }
  }
  for (int t = 0; t < X.T(); ++t) X.X[t] *= best_scale;
  beta0 = best_beta0;
}

// Empirical variance components of the cluster-free random-walk model:
// spread of the first slice and mean squared per-step displacement.
std::pair<double, double> walk_moments(const LatentPositions& X) {
  const int T = X.T(), n = X.n(), p = X.p();
  double tau2 = 0.0;
  for (int i = 0; i < n; ++i) tau2 += X.X[0].col(i).squaredNorm();
  tau2 = std::max(tau2 / (n * p), 1e-3);
  double walk2 = 0.0;
  if (T > 1) {
    for (int t = 1; t < T; ++t)
      for (int i = 0; i < n; ++i)
        walk2 += (X.X[t].col(i) - X.X[t - 1].col(i)).squaredNorm();
    walk2 /= static_cast<double>(T - 1) * n * p;
  }
  walk2 = std::max(walk2, 1e-4);
  return {tau2, walk2};
}

// Short random-walk refinement of positions and intercept under a
// cluster-free random-walk prior; the walk variances are re-estimated as
// the layout tightens, and the best (MAP) visited state wins.
void refine_positions(const DynamicNetwork& net, LatentPositions& X,
                      double& beta0, int sweeps, std::uint64_t seed,
                      double low, double high) {
  const int T = X.T(), n = X.n(), p = X.p();
  auto [tau2, walk2] = walk_moments(X);

  auto log_target = [&](const LatentPositions& pos, double b0) {
    double total = network_log_likelihood(net, pos, b0);
    for (int i = 0; i < n; ++i) {
      total += -0.5 * pos.X[0].col(i).squaredNorm() / tau2;
      for (int t = 1; t < T; ++t)
        total += -0.5 *
                 (pos.X[t].col(i) - pos.X[t - 1].col(i)).squaredNorm() / walk2;
    }
    return total;
  };

  double step_x = 0.1 * std::sqrt(tau2);
  double step_b = 0.1;
  LatentPositions best = X;
  double best_b0 = beta0;
  double best_obj = log_target(X, beta0);

  std::vector<Eigen::MatrixXd> dist(T), soft(T);
  long acc_x = 0, prop_x = 0, acc_b = 0, prop_b = 0;
  Eigen::VectorXd proposal(p), d_new(n), s_new(n);
  // caches stay exact across sweeps; only a beta0 move invalidates soft
  bool soft_stale = true;
  for (int t = 0; t < T; ++t) {
    dist[t].setZero(n, n);
    soft[t].setZero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        const double d = (X.X[t].col(i) - X.X[t].col(j)).norm();
        dist[t](i, j) = dist[t](j, i) = d;
      }
  }
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    RngStream rng(seed, RngDomain::init_refine, 0,
                  static_cast<std::uint32_t>(sweep));
    if (soft_stale) {
      for (int t = 0; t < T; ++t)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < i; ++j) {
            const double s = softplus(beta0 - dist[t](i, j));
            soft[t](i, j) = soft[t](j, i) = s;
          }
      soft_stale = false;
    }
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < p; ++k)
          proposal[k] = X.X[t](k, i) + step_x * rng.normal();
        const double u = rng.uniform();
        ++prop_x;
        double delta = 0.0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          double d2 = 0.0;
          for (int k = 0; k < p; ++k) {
            const double diff = proposal[k] - X.X[t](k, j);
            d2 += diff * diff;
          }
          const double d = std::sqrt(d2);
          const double s = softplus(beta0 - d);
          d_new[j] = d;
          s_new[j] = s;
          delta += (net(t, i, j) ? dist[t](i, j) - d : 0.0) -
                   (s - soft[t](i, j));
        }
        const Eigen::VectorXd cur = X.X[t].col(i);
        if (t == 0)
          delta += -0.5 * (proposal.squaredNorm() - cur.squaredNorm()) / tau2;
        else
          delta += -0.5 *
                   ((proposal - X.X[t - 1].col(i)).squaredNorm() -
                    (cur - X.X[t - 1].col(i)).squaredNorm()) /
                   walk2;
        if (t + 1 < T)
          delta += -0.5 *
                   ((X.X[t + 1].col(i) - proposal).squaredNorm() -
                    (X.X[t + 1].col(i) - cur).squaredNorm()) /
                   walk2;
        if (std::log(u) < delta) {
          X.X[t].col(i) = proposal;
          for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            dist[t](i, j) = dist[t](j, i) = d_new[j];
            soft[t](i, j) = soft[t](j, i) = s_new[j];
          }
          ++acc_x;
        }
      }
    }
    {
      const double prop_b0 = beta0 + step_b * rng.normal();
      const double u = rng.uniform();
      ++prop_b;
      double delta = 0.0;
      for (int t = 0; t < T; ++t)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < i; ++j)
            delta += (net(t, i, j) ? prop_b0 - beta0 : 0.0) -
                     (softplus(prop_b0 - dist[t](i, j)) - soft[t](i, j));
      if (std::log(u) < delta) {
        beta0 = prop_b0;
        soft_stale = true;
        ++acc_b;
      }
    }
    if ((sweep + 1) % 100 == 0) {
      step_x = tune_step_size(static_cast<double>(acc_x) / prop_x, step_x, low,
                              high);
      step_b = tune_step_size(static_cast<double>(acc_b) / prop_b, step_b, low,
                              high);
      acc_x = prop_x = acc_b = prop_b = 0;
      // walk variances track the tightening layout (score under the final
      // variances so candidates stay comparable)
      std::tie(tau2, walk2) = walk_moments(X);
      const double obj = log_target(X, beta0);
      if (obj > best_obj) {
        best_obj = obj;
        best = X;
        best_b0 = beta0;
      }
    }
  }
  const double obj = log_target(X, beta0);
  if (obj > best_obj) {
    best = X;
    best_b0 = beta0;
  }
  X = best;
  beta0 = best_b0;
}

struct KmeansResult {
  std::vector<int> assignment;  // per actor
  Eigen::MatrixXd centers;      // dim x k
};

// Lloyd's algorithm with k-means++ seeding on the stacked trajectories.
KmeansResult kmeans(const Eigen::MatrixXd& points, int k, RngStream& rng) {
  const int dim = static_cast<int>(points.rows());
  const int n = static_cast<int>(points.cols());
  KmeansResult res;
  res.centers.resize(dim, k);
  std::vector<int> chosen;
  // k-means++ seeding
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  {
    const int first = static_cast<int>(rng.uniform() * n);
    chosen.push_back(first);
    res.centers.col(0) = points.col(first);
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d =
            (points.col(i) - res.centers.col(c - 1)).squaredNorm();
        d2[i] = std::min(d2[i], d);
        total += d2[i];
      }
      int pick;
      if (total <= 0.0) {
        pick = static_cast<int>(rng.uniform() * n);
      } else {
        double u = rng.uniform() * total;
        pick = n - 1;
        for (int i = 0; i < n; ++i) {
          u -= d2[i];
          if (u <= 0.0) {
            pick = i;
            break;
          }
        }
      }
      chosen.push_back(pick);
      res.centers.col(c) = points.col(pick);
    }
  }
  res.assignment.assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool moved = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (points.col(i) - res.centers.col(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (best != res.assignment[i]) moved = true;
      res.assignment[i] = best;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(dim, k);
    std::vector<int> sizes(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.col(res.assignment[i]) += points.col(i);
      sizes[res.assignment[i]]++;
    }
    for (int c = 0; c < k; ++c)
      if (sizes[c] > 0) res.centers.col(c) = sums.col(c) / sizes[c];
    if (!moved && iter > 0) break;
  }
  return res;
}

}  // namespace

ModelState initialize_state(const DynamicNetwork& net,
                            const SamplerConfig& config) {
  const int n = net.n(), T = net.T();
  const int p = config.p, L = config.L;

  ModelState state;
  state.hyper = default_hyperparams(n, p);
  state.hyper.mu_lambda = 0.9;
  state.hyper.sigma2_lambda = 0.01;

  // Graph-distance MDS per slice, then sequential rotation alignment.
  state.positions = LatentPositions::zeros(T, n, p);
  for (int t = 0; t < T; ++t) {
    const auto D = shortest_path_dissimilarity(net, t);
    state.positions.X[t] = classical_mds(D, p);
  }
  for (int t = 1; t < T; ++t) {
    const Eigen::MatrixXd R =
        alignment_rotation(state.positions.X[t], state.positions.X[t - 1]);
    state.positions.X[t] = R * state.positions.X[t];
  }

  // Intercept start plus a short cluster-free MH refinement; keeps the best
  // visited state.
  double beta0 = fit_intercept(net, state.positions);
  calibrate_scale(net, state.positions, beta0);
  refine_positions(net, state.positions, beta0, config.init_refine_sweeps,
                   config.seed, config.target_accept_low,
                   config.target_accept_high);
  state.groups.beta0 = beta0;
  state.hyper.mu_beta0 = beta0;
  state.hyper.sigma2_beta0 = 2.0;

  // Longitudinal k-means on stacked trajectories seeds the group structure.
  Eigen::MatrixXd stacked(T * p, n);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < T; ++t)
      stacked.block(t * p, i, p, 1) = state.positions.X[t].col(i);
  RngStream km_rng(config.seed, RngDomain::init_kmeans);
  const auto km = kmeans(stacked, L, km_rng);

  state.labels = LabelSequences::constant(T, n, 0);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < T; ++t) state.labels.Z(t, i) = km.assignment[i];

  state.groups.mu = Eigen::MatrixXd::Zero(p, L);
  state.groups.sigma2 = Eigen::VectorXd::Constant(L, state.hyper.tau2);
  std::vector<long> counts(L, 0);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(p, L);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < T; ++t) {
      sums.col(km.assignment[i]) += state.positions.X[t].col(i);
      counts[km.assignment[i]]++;
    }
  RngStream prior_rng(config.seed, RngDomain::init_priors);
  for (int g = 0; g < L; ++g) {
    if (counts[g] > 0) {
      state.groups.mu.col(g) = sums.col(g) / static_cast<double>(counts[g]);
    } else {
      for (int k = 0; k < p; ++k)
        state.groups.mu(k, g) = std::sqrt(state.hyper.tau2) * prior_rng.normal();
    }
  }
  for (int g = 0; g < L; ++g) {
    if (counts[g] == 0) continue;
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
      if (km.assignment[i] != g) continue;
      for (int t = 0; t < T; ++t)
        rss +=
            (state.positions.X[t].col(i) - state.groups.mu.col(g)).squaredNorm();
    }
    state.groups.sigma2[g] =
        std::max(rss / static_cast<double>(counts[g] * p), 1e-4);
  }
  state.groups.lambda = 0.9;

  // Transition structure from its prior.
  const int L_ = L;
  {
    std::vector<double> conc(L_, state.hyper.gamma / L_);
    const auto beta_draw = prior_rng.dirichlet(conc);
    state.trans.beta = Eigen::Map<const Eigen::VectorXd>(beta_draw.data(), L_);
    Eigen::VectorXd alpha0_conc = state.hyper.alpha0 * state.trans.beta;
    const auto pi0_draw = prior_rng.dirichlet(std::span<const double>(
        alpha0_conc.data(), static_cast<std::size_t>(L_)));
    state.trans.pi0 = Eigen::Map<const Eigen::VectorXd>(pi0_draw.data(), L_);
    state.trans.Pi.assign(T - 1, Eigen::MatrixXd::Zero(L_, L_));
    for (int t = 0; t + 1 < T; ++t)
      for (int g = 0; g < L_; ++g) {
        Eigen::VectorXd conc_row = state.hyper.alpha * state.trans.beta;
        conc_row[g] += state.hyper.kappa;
        const auto row = prior_rng.dirichlet(std::span<const double>(
            conc_row.data(), static_cast<std::size_t>(L_)));
        state.trans.Pi[t].row(g) =
            Eigen::Map<const Eigen::VectorXd>(row.data(), L_).transpose();
      }
  }
  state.validate();
  return state;
}

}  // namespace hdplpcm
