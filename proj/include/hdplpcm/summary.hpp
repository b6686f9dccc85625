#pragma once

#include <Eigen/Core>
#include <vector>

#include "hdplpcm/gibbs.hpp"
#include "hdplpcm/state.hpp"

namespace hdplpcm {

// Posterior co-assignment probabilities: one symmetric n x n matrix per
// time with unit diagonal.
std::vector<Eigen::MatrixXd> coassignment_probabilities(const Chain& chain);

// Variation of information between two partitions, natural-log units.
double vi_distance(const Eigen::VectorXi& z, const Eigen::VectorXi& zhat);

// Chance-corrected partition agreement (permutation-model ARI).
double adjusted_rand_index(const Eigen::VectorXi& z,
                           const Eigen::VectorXi& zhat);

struct SelectedPartition {
  LabelSequences labels;
  int sample_index = -1;
  double objective = 0.0;
};

// Minimizes the time-summed VI lower bound over the sampled partitions
// using the co-assignment probabilities; ties go to the sample with the
// highest network log-likelihood.
SelectedPartition select_partition(const Chain& chain,
                                   const std::vector<Eigen::MatrixXd>& coassign);
SelectedPartition select_partition(const Chain& chain);

// Centers both configurations (stacked over time) and rotates/reflects the
// sample onto the reference; no scaling. Returns the transformed copy.
LatentPositions procrustes_align(const LatentPositions& sample,
                                 const LatentPositions& reference,
                                 Eigen::MatrixXd* rotation = nullptr,
                                 bool* degenerate = nullptr);

// Fraction of kept samples with exactly k occupied groups at each time;
// rows are times, columns group counts 0..L.
Eigen::MatrixXd group_count_posterior(const Chain& chain);

struct EssResult {
  double ess = 0.0;
  std::vector<double> acf;  // lags 0..max_lag
};

// Autocorrelation function and effective sample size with Geyer
// initial-positive-sequence truncation.
EssResult ess_and_acf(const std::vector<double>& series, int max_lag = 200);

// Posterior-mean edge scores ranked against the observed dyads (midrank
// AUC over all dyad-times).
double in_sample_auc(const DynamicNetwork& net, const Chain& chain);

// Flows between consecutive selected partitions: entry (g, h) of flows[t]
// counts actors moving g -> h from time t to t+1.
std::vector<Eigen::MatrixXi> alluvial_flows(const LabelSequences& labels, int L);

struct PartitionSummary {
  std::vector<Eigen::MatrixXd> coassign;
  LabelSequences selected;
  int selected_sample_index = -1;
  LatentPositions aligned_positions;  // posterior mean of aligned samples
  LatentPositions selected_positions; // the reference layout itself
  Eigen::MatrixXd selected_mu;        // p x L group centers of the selection
  Eigen::VectorXd selected_sigma;     // L group spreads (sd) of the selection
  Eigen::MatrixXd group_counts;       // T x (L+1) posterior of |G_t|
  std::vector<Eigen::MatrixXi> flows;

  void validate() const;
};

// Full posterior summary of a chain (requires stored positions for the
// aligned layouts).
PartitionSummary summarize(const Chain& chain);

}  // namespace hdplpcm
