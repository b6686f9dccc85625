#pragma once

#include <Eigen/Core>

#include "hdplpcm/network.hpp"
#include "hdplpcm/state.hpp"

namespace hdplpcm {

// log(1 + exp(eta)) with a branch at |eta| > 35 so large logits never
// overflow.
inline double softplus(double eta) {
  if (eta > 35.0) return eta;
  if (eta < -35.0) return std::exp(eta);
  return std::log1p(std::exp(eta));
}

// Linear predictor beta0 - ||x_i - x_j||.
double edge_logit(Eigen::Ref<const Eigen::VectorXd> x_i,
                  Eigen::Ref<const Eigen::VectorXd> x_j, double beta0);

// Overflow-safe logistic.
double edge_probability(double eta);

// Bernoulli log-likelihood of all dyads: sum_t sum_{j<i} y*eta - softplus(eta).
double network_log_likelihood(const DynamicNetwork& net,
                              const LatentPositions& positions, double beta0);
// Single-slice version (used by the per-time MH conditionals).
double slice_log_likelihood(const DynamicNetwork& net, int t,
                            const Eigen::MatrixXd& X_t, double beta0);

// Spherical-normal log density of one emission: N(mu_g, sigma_g^2 I) at
// t = 1 (x_prev == nullptr), N(lambda mu_g + (1-lambda) x_prev, sigma_g^2 I)
// afterwards.
double emission_log_density(Eigen::Ref<const Eigen::VectorXd> x_t,
                            const Eigen::VectorXd* x_prev, int g,
                            const GroupParams& groups);

// Full AR-HMM log density of one actor's trajectory: initial weight,
// emissions, and transition terms. Zero-probability transitions yield -inf.
double trajectory_log_density(const Eigen::MatrixXd& X_i,  // p x T
                              const Eigen::VectorXi& Z_i,  // T
                              const TransitionStructure& trans,
                              const GroupParams& groups);

// Log prior of everything above the trajectories: transition structure,
// group parameters, lambda, beta0, and (optionally) the hyperpriors.
double log_prior(const ModelState& state, bool include_hyperpriors = false);

// Unnormalized log joint: likelihood + trajectories + priors.
double log_posterior(const ModelState& state, const DynamicNetwork& net,
                     bool include_hyperpriors = false);
// Same, with the network log likelihood supplied by the caller.
double log_posterior_given_likelihood(const ModelState& state, double log_lik,
                                      bool include_hyperpriors = false);

// Elementary log densities shared by the prior and the samplers.
double log_dirichlet_density(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& alpha);
double log_normal_density(double x, double mean, double var);
double log_spherical_normal_density(Eigen::Ref<const Eigen::VectorXd> x,
                                    Eigen::Ref<const Eigen::VectorXd> mean,
                                    double var);
double log_inverse_gamma_density(double x, double shape, double scale);
double log_gamma_density_rate(double x, double shape, double rate);
double log_gamma_density_scale(double x, double shape, double scale);
double log_beta_density(double x, double a, double b);
// Normal truncated to (0, 1).
double log_truncated_normal01_density(double x, double mean, double var);

}  // namespace hdplpcm
