#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "hdplpcm/network.hpp"
#include "hdplpcm/rng.hpp"
#include "hdplpcm/state.hpp"

namespace hdplpcm {

// Synthetic-benchmark description: fixed group locations, a per-time
// self-transition constant, and a per-time active-group schedule.
struct SimSpec {
  int n = 120;
  int T = 6;
  int p = 2;
  Eigen::MatrixXd group_locations;  // p x G
  double sigma_shape = 6.0;         // sigma_g ~ InvGamma(shape, scale)
  double sigma_scale = 0.05;
  bool sigma_is_sd = true;          // draw is sigma (default) rather than sigma^2
  double lambda = 0.8;
  double beta0 = 1.0;
  std::vector<double> self_const;          // size T; entry t scales the
                                           // self weight of the row into t
  std::vector<std::vector<int>> active_sets;  // size T, 0-based group ids
  Eigen::VectorXd pi0_alpha;               // size G, 0 outside active_sets[0]
  std::uint64_t seed = 0;
  int max_retries = 10;
  bool retry_degenerate_slices = true;  // redraw on empty/complete slices
  bool retry_unoccupied_groups = false; // redraw until ground truth occupies
                                        // exactly the scheduled active sets

  int G() const { return static_cast<int>(group_locations.cols()); }
  void validate() const;
};

// The paper-style presets: a six-group static schedule and the
// two->six->four split/merge schedule.
SimSpec homogeneous_spec(std::uint64_t seed);
SimSpec inhomogeneous_spec(std::uint64_t seed);

// Transition row out of group g given group locations: off-diagonal weight
// 1/distance restricted to the active set, self weight const times the
// largest off-diagonal weight.
Eigen::VectorXd transition_row_from_locations(int g,
                                              const Eigen::MatrixXd& locations,
                                              double self_const,
                                              const std::vector<int>& active);

struct SimResult {
  DynamicNetwork net;
  LatentPositions X;
  LabelSequences Z;  // ground truth, 0-based over 1..G
  Eigen::VectorXd sigma2;
  Eigen::VectorXd pi0;
  std::vector<Eigen::MatrixXd> Pi;
  int retries = 0;
};

SimResult simulate(const SimSpec& spec);

// Forward draw of (X, Z) from the AR-HMM given explicit parameters; shares
// the code path the simulators and the joint-distribution checks use.
void draw_trajectories(const TransitionStructure& trans,
                       const GroupParams& groups, int n, LatentPositions& X,
                       LabelSequences& Z, RngStream& rng);

// Bernoulli network draw given positions and intercept.
DynamicNetwork draw_network(const LatentPositions& X, double beta0,
                            RngStream& rng);

struct GenerativeDraw {
  LatentPositions X;
  LabelSequences Z;
  DynamicNetwork net;
};

// Full forward draw from the model given fixed transition and group
// parameters.
GenerativeDraw sample_generative(const TransitionStructure& trans,
                                 const GroupParams& groups, int n,
                                 std::uint64_t seed, std::uint32_t epoch = 0);

}  // namespace hdplpcm
