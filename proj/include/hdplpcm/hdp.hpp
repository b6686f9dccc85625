#pragma once

#include <Eigen/Core>
#include <vector>

#include "hdplpcm/rng.hpp"
#include "hdplpcm/state.hpp"

namespace hdplpcm {

// Label-occupancy and transition counts for one sweep.
struct TransitionCounts {
  Eigen::VectorXi n_init;                // L: actors starting in each group
  std::vector<Eigen::MatrixXi> n_trans;  // T-1 matrices, (j,k): moves j->k
  Eigen::MatrixXi n_group;               // T x L occupancy

  int L() const { return static_cast<int>(n_init.size()); }
  int T() const { return static_cast<int>(n_group.rows()); }
  // Customers of restaurant (g, t): actors leaving group g at 0-based
  // time t-1, i.e. occupancy of g at t-1.
  int restaurant_size(int g, int t) const { return n_group(t - 1, g); }
};

TransitionCounts compute_transition_counts(const LabelSequences& labels, int L);

// Chinese-restaurant-franchise auxiliary counts. m0/m_bar0 cover the
// initial restaurant (time 1); m/m_bar/w cover restaurants (j, s) for
// s = 2..T stored at s-2.
struct AuxCounts {
  Eigen::VectorXi m0;                 // L
  std::vector<Eigen::MatrixXi> m;     // T-1, each L x L
  Eigen::VectorXi m_bar0;             // L
  std::vector<Eigen::MatrixXi> m_bar; // T-1, each L x L
  Eigen::MatrixXi w;                  // (T-1) x L, overrides per restaurant

  // Tables serving dish k, summed over every restaurant and time
  // (initial restaurant included).
  Eigen::VectorXd m_bar_dish_totals() const;
  double m_bar_total() const;
  // Table totals restricted to the sticky restaurants (s >= 2).
  double m_total_sticky() const;
  double w_total() const;
  void check_invariants(const TransitionCounts& counts) const;
};

// Sequential-Bernoulli table counts (m only; m_bar/w filled by
// sample_overrides).
AuxCounts sample_aux_tables(const TransitionCounts& counts,
                            const Eigen::VectorXd& beta, double alpha0,
                            double alpha, double kappa, RngStream& rng);

// Draws override counts w and derives m_bar; the initial restaurant is
// never overridden.
void sample_overrides(AuxCounts& aux, const Eigen::VectorXd& beta, double rho,
                      RngStream& rng);

// beta ~ Dirichlet(gamma/L + m_bar dish totals).
Eigen::VectorXd sample_beta(const AuxCounts& aux, double gamma, int L,
                            RngStream& rng);

// pi0 ~ Dirichlet(alpha0 * beta + n_init).
Eigen::VectorXd sample_initial_distribution(const TransitionCounts& counts,
                                            const Eigen::VectorXd& beta,
                                            double alpha0, RngStream& rng);

// One Dirichlet draw per (row, t); unoccupied rows are prior draws. The
// rng factory supplies an independent stream per row so rows may be drawn
// in any order.
std::vector<Eigen::MatrixXd> sample_transition_rows(
    const TransitionCounts& counts, const Eigen::VectorXd& beta, double alpha,
    double kappa, std::uint64_t seed, std::uint32_t epoch);

// Escobar-West auxiliary draw for a DP concentration with Gamma(a, rate b)
// hyperprior, given K components among N observations. K == 0 or N == 0
// returns a fresh prior draw.
double sample_concentration_escobar_west(int K, long N, double a, double b,
                                         double current, RngStream& rng);

// Which hyperparameters sample_hyperparams refreshes.
struct HyperToggles {
  bool tau2 = true;
  bool b = true;
  bool gamma = true;
  bool alpha0 = true;
  bool alpha_kappa = true;  // joint alpha+kappa scale
  bool rho = true;          // stickiness fraction

  bool any() const { return tau2 || b || gamma || alpha0 || alpha_kappa || rho; }
  static HyperToggles none() { return {false, false, false, false, false, false}; }
};

// Full hyperparameter refresh (tau2, b, gamma, alpha0, alpha+kappa, rho)
// given the current group parameters and auxiliary counts.
void sample_hyperparams(ModelState& state, const TransitionCounts& counts,
                        const AuxCounts& aux, const HyperToggles& toggles,
                        RngStream& rng);

}  // namespace hdplpcm
