#include "hdplpcm/likelihood.hpp"

#include <cmath>
#include <limits>

#include "hdplpcm/errors.hpp"
#include "hdplpcm/rng.hpp"

namespace hdplpcm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;
}  // namespace

double edge_logit(Eigen::Ref<const Eigen::VectorXd> x_i,
                  Eigen::Ref<const Eigen::VectorXd> x_j, double beta0) {
  if (x_i.size() != x_j.size())
    throw InvalidArgument("edge_logit: dimension mismatch");
  return beta0 - (x_i - x_j).norm();
}

double edge_probability(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double slice_log_likelihood(const DynamicNetwork& net, int t,
                            const Eigen::MatrixXd& X_t, double beta0) {
  const int n = net.n();
  const int p = static_cast<int>(X_t.rows());
  if (static_cast<int>(X_t.cols()) != n)
    throw InvalidArgument("slice_log_likelihood: position count != n");
  const double* xd = X_t.data();
  double total = 0.0;
  for (int i = 1; i < n; ++i) {
    const double* xi = xd + static_cast<std::size_t>(i) * p;
    for (int j = 0; j < i; ++j) {
      const double* xj = xd + static_cast<std::size_t>(j) * p;
      double d2 = 0.0;
      for (int k = 0; k < p; ++k) {
        const double diff = xi[k] - xj[k];
        d2 += diff * diff;
      }
      const double eta = beta0 - std::sqrt(d2);
      total += (net(t, i, j) ? eta : 0.0) - softplus(eta);
    }
  }
  return total;
}

double network_log_likelihood(const DynamicNetwork& net,
                              const LatentPositions& positions, double beta0) {
  if (positions.T() != net.T() || positions.n() != net.n())
    throw InvalidArgument("network_log_likelihood: shape mismatch");
  double total = 0.0;
  for (int t = 0; t < net.T(); ++t)
    total += slice_log_likelihood(net, t, positions.X[t], beta0);
  return total;
}

double emission_log_density(Eigen::Ref<const Eigen::VectorXd> x_t,
                            const Eigen::VectorXd* x_prev, int g,
                            const GroupParams& groups) {
  if (g < 0 || g >= groups.L())
    throw InvalidArgument("emission: label outside 0..L-1");
  const int p = static_cast<int>(x_t.size());
  const double s2 = groups.sigma2[g];
  double ss;
  if (x_prev == nullptr) {
    ss = (x_t - groups.mu.col(g)).squaredNorm();
  } else {
    ss = (x_t - groups.lambda * groups.mu.col(g) -
          (1.0 - groups.lambda) * (*x_prev))
             .squaredNorm();
  }
  return -0.5 * p * (kLog2Pi + std::log(s2)) - 0.5 * ss / s2;
}

double trajectory_log_density(const Eigen::MatrixXd& X_i,
                              const Eigen::VectorXi& Z_i,
                              const TransitionStructure& trans,
                              const GroupParams& groups) {
  const int T = static_cast<int>(X_i.cols());
  if (Z_i.size() != T)
    throw InvalidArgument("trajectory: label/position length mismatch");
  const int z1 = Z_i[0];
  if (z1 < 0 || z1 >= trans.L())
    throw InvalidArgument("trajectory: label outside 0..L-1");
  double total = trans.pi0[z1] > 0.0 ? std::log(trans.pi0[z1]) : kNegInf;
  total += emission_log_density(X_i.col(0), nullptr, z1, groups);
  for (int t = 1; t < T; ++t) {
    const int zp = Z_i[t - 1], zc = Z_i[t];
    const double pi = trans.Pi[t - 1](zp, zc);
    total += pi > 0.0 ? std::log(pi) : kNegInf;
    const Eigen::VectorXd prev = X_i.col(t - 1);
    total += emission_log_density(X_i.col(t), &prev, zc, groups);
  }
  return total;
}

double log_dirichlet_density(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& alpha) {
  if (x.size() != alpha.size())
    throw InvalidArgument("dirichlet: size mismatch");
  double total = 0.0, alpha_sum = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double a = alpha[k];
    if (a < 0.0) throw InvalidArgument("dirichlet: negative concentration");
    if (a == 0.0) {
      // Degenerate component: admissible only at x_k = 0.
      if (x[k] > 0.0) return kNegInf;
      continue;
    }
    alpha_sum += a;
    if (x[k] <= 0.0) {
      if (a < 1.0) return std::numeric_limits<double>::infinity();
      if (a > 1.0) return kNegInf;
      continue;  // a == 1: uniform factor
    }
    total += (a - 1.0) * std::log(x[k]) - std::lgamma(a);
  }
  return total + std::lgamma(alpha_sum);
}

double log_normal_density(double x, double mean, double var) {
  const double diff = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * diff * diff / var;
}

double log_spherical_normal_density(Eigen::Ref<const Eigen::VectorXd> x,
                                    Eigen::Ref<const Eigen::VectorXd> mean,
                                    double var) {
  const int p = static_cast<int>(x.size());
  return -0.5 * p * (kLog2Pi + std::log(var)) -
         0.5 * (x - mean).squaredNorm() / var;
}

double log_inverse_gamma_density(double x, double shape, double scale) {
  if (x <= 0.0) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - scale / x;
}

double log_gamma_density_rate(double x, double shape, double rate) {
  if (x <= 0.0) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

double log_gamma_density_scale(double x, double shape, double scale) {
  return log_gamma_density_rate(x, shape, 1.0 / scale);
}

double log_beta_density(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return kNegInf;
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) +
         std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
}

double log_truncated_normal01_density(double x, double mean, double var) {
  if (x <= 0.0 || x >= 1.0) return kNegInf;
  const double sd = std::sqrt(var);
  const double mass =
      normal_cdf((1.0 - mean) / sd) - normal_cdf((0.0 - mean) / sd);
  return log_normal_density(x, mean, var) - std::log(mass);
}

double log_prior(const ModelState& state, bool include_hyperpriors) {
  const auto& h = state.hyper;
  const auto& trans = state.trans;
  const auto& groups = state.groups;
  const int L = state.L();
  double total = 0.0;

  // Global weights and initial distribution.
  total += log_dirichlet_density(
      trans.beta, Eigen::VectorXd::Constant(L, h.gamma / L));
  total += log_dirichlet_density(trans.pi0, h.alpha0 * trans.beta);

  // Transition rows with the sticky diagonal boost.
  for (const auto& P : trans.Pi)
    for (int g = 0; g < L; ++g) {
      Eigen::VectorXd alpha = h.alpha * trans.beta;
      alpha[g] += h.kappa;
      total += log_dirichlet_density(P.row(g).transpose(), alpha);
    }

  // Group centers and variances.
  const Eigen::VectorXd mu0 = h.mu0.size() == state.p()
                                  ? h.mu0
                                  : Eigen::VectorXd::Zero(state.p());
  for (int g = 0; g < L; ++g) {
    total += log_spherical_normal_density(groups.mu.col(g), mu0, h.tau2);
    total += log_inverse_gamma_density(groups.sigma2[g], h.a / 2.0, h.b / 2.0);
  }

  total += log_truncated_normal01_density(groups.lambda, h.mu_lambda,
                                          h.sigma2_lambda);
  total += log_normal_density(groups.beta0, h.mu_beta0, h.sigma2_beta0);

  if (include_hyperpriors) {
    total += log_inverse_gamma_density(h.tau2, h.a_tau / 2.0, h.b_tau / 2.0);
    total += log_gamma_density_scale(h.b, h.c / 2.0, 2.0 / h.d);
    total += log_gamma_density_rate(h.gamma, h.a_gamma, h.b_gamma);
    total += log_gamma_density_rate(h.alpha0, h.a_alpha0, h.b_alpha0);
    total += log_gamma_density_rate(h.alpha + h.kappa, h.a_alpha_kappa,
                                    h.b_alpha_kappa);
    total += log_beta_density(h.rho, h.a_rho, h.b_rho);
  }
  return total;
}

double log_posterior_given_likelihood(const ModelState& state, double log_lik,
                                      bool include_hyperpriors) {
  double total = log_lik;
  const int T = state.T();
  Eigen::MatrixXd traj(state.p(), T);
  for (int i = 0; i < state.n(); ++i) {
    for (int t = 0; t < T; ++t) traj.col(t) = state.positions.X[t].col(i);
    total += trajectory_log_density(traj, state.labels.Z.col(i), state.trans,
                                    state.groups);
  }
  total += log_prior(state, include_hyperpriors);
  return total;
}

double log_posterior(const ModelState& state, const DynamicNetwork& net,
                     bool include_hyperpriors) {
  return log_posterior_given_likelihood(
      state, network_log_likelihood(net, state.positions, state.groups.beta0),
      include_hyperpriors);
}

}  // namespace hdplpcm
