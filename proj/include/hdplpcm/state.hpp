#pragma once

#include <Eigen/Core>
#include <vector>

namespace hdplpcm {

// Latent coordinates for all actors at all times. Each slice is stored
// p x n (column i = actor i's position) so per-actor columns are
// contiguous.
struct LatentPositions {
  std::vector<Eigen::MatrixXd> X;  // T slices, each p x n

  int T() const { return static_cast<int>(X.size()); }
  int n() const { return X.empty() ? 0 : static_cast<int>(X[0].cols()); }
  int p() const { return X.empty() ? 0 : static_cast<int>(X[0].rows()); }

  static LatentPositions zeros(int T, int n, int p);
  void validate() const;  // finite entries, consistent shapes
};

// Group labels for all actors at all times; entries are 0-based in memory
// (0..L-1), 1-based in every file format.
struct LabelSequences {
  Eigen::MatrixXi Z;  // T x n

  int T() const { return static_cast<int>(Z.rows()); }
  int n() const { return static_cast<int>(Z.cols()); }

  static LabelSequences constant(int T, int n, int value = 0);
  void validate(int L) const;
};

// Gaussian community parameters plus the shared blend and intercept.
struct GroupParams {
  Eigen::MatrixXd mu;       // p x L, column g = center of group g
  Eigen::VectorXd sigma2;   // L, per-group spherical variances
  double lambda = 0.9;      // blend between group center and previous position
  double beta0 = 0.0;       // edge-logit intercept (abundance)

  int L() const { return static_cast<int>(sigma2.size()); }
  int p() const { return static_cast<int>(mu.rows()); }
  void validate() const;
};

// Weak-limit transition structure: global weights, initial distribution,
// and one L x L row-stochastic matrix per transition time t = 2..T
// (stored at index t-2).
struct TransitionStructure {
  Eigen::VectorXd beta;             // L
  Eigen::VectorXd pi0;              // L
  std::vector<Eigen::MatrixXd> Pi;  // T-1 matrices, each L x L

  int L() const { return static_cast<int>(beta.size()); }
  int T() const { return static_cast<int>(Pi.size()) + 1; }
  const Eigen::MatrixXd& at_time(int t) const { return Pi[t - 1]; }  // t>=1, 0-based slice
  void validate() const;  // simplex rows within 1e-10
};

// Fixed or sampled hyperparameters. rho is kept equal to kappa/(alpha+kappa)
// through set_concentration; everything else is a plain field.
struct Hyperparams {
  double gamma = 1.0;    // top-level concentration
  double alpha0 = 1.0;   // initial-distribution concentration
  double alpha = 1.0;
  double kappa = 4.0;
  double rho = 0.8;      // kappa / (alpha + kappa)

  double tau2 = 1.0;     // prior variance of group centers
  double a = 2.0;        // sigma^2 ~ InvGamma(a/2, b/2)
  double b = 1.0;

  // Hyperpriors: tau2 ~ InvGamma(a_tau/2, b_tau/2), b ~ Gamma(c/2, scale 2/d),
  // concentrations ~ Gamma(shape, rate), rho ~ Beta(a_rho, b_rho).
  double a_tau = 4.125, b_tau = 2.125;
  double c = 0.125, d = 1.0 / 32.0;
  double a_gamma = 1.0, b_gamma = 0.1;
  double a_alpha0 = 1.0, b_alpha0 = 1.0;
  double a_alpha_kappa = 5.0, b_alpha_kappa = 0.1;
  double a_rho = 8.0, b_rho = 2.0;

  double mu_beta0 = 0.0, sigma2_beta0 = 2.0;
  double mu_lambda = 0.9, sigma2_lambda = 0.01;
  Eigen::VectorXd mu0;  // p, prior mean of group centers (default zero)

  void set_concentration(double alpha_plus_kappa, double rho_value);
  double alpha_plus_kappa() const { return alpha + kappa; }
  void validate() const;
};

// Scale-dependent defaults: E[tau2] = n^(2/p)/50 with sd 4 E[tau2], and
// (c, d) set so E[b] = 4 E[tau2] (mode of sigma^2 at tau2 under a = 2)
// with sd[b] = 4 E[b]. tau2 and b start at their prior means.
Hyperparams default_hyperparams(int n, int p);

struct ModelState {
  LatentPositions positions;
  LabelSequences labels;
  TransitionStructure trans;
  GroupParams groups;
  Hyperparams hyper;

  int n() const { return positions.n(); }
  int T() const { return positions.T(); }
  int p() const { return positions.p(); }
  int L() const { return groups.L(); }
  void validate() const;  // dimensional consistency across members
};

}  // namespace hdplpcm
