#pragma once

#include <Eigen/Core>
#include <vector>

#include "hdplpcm/rng.hpp"
#include "hdplpcm/state.hpp"

namespace hdplpcm {

// Backward messages for one actor's label chain. Row t holds the message
// attached to (0-based) time t, renormalized to sum to one; log_cum[t]
// restores the unnormalized value. The last row is the all-ones boundary
// (stored as 1/L with log_cum = log L).
struct BackwardMessages {
  Eigen::MatrixXd msg;      // T x L, rows sum to 1
  Eigen::VectorXd log_cum;  // T, cumulative log normalizers
  Eigen::VectorXd log_step; // T, per-step log normalizer (last entry log L)

  int T() const { return static_cast<int>(msg.rows()); }
  int L() const { return static_cast<int>(msg.cols()); }
  double unnormalized_log(int t, int k) const {
    return std::log(msg(t, k)) + log_cum[t];
  }
};

// Backward pass of the blocked label sampler: message at time t-1, state k,
// sums transition x AR-emission x future message over next states, with
// per-step renormalization against underflow.
BackwardMessages backward_pass(const Eigen::MatrixXd& X_i,  // p x T
                               const TransitionStructure& trans,
                               const GroupParams& groups);

// Forward sampling of the full label sequence given messages computed from
// the same (X_i, trans, groups); an exact draw from p(Z_{1:T} | X_{1:T}, .).
Eigen::VectorXi sample_labels(const Eigen::MatrixXd& X_i,
                              const BackwardMessages& messages,
                              const TransitionStructure& trans,
                              const GroupParams& groups, RngStream& rng);

// Exact label-sequence posterior by enumerating all L^T sequences
// (test oracle; refuses enumerations above 10^6). Sequence s encodes
// labels base L, least-significant digit = time 0.
std::vector<double> brute_force_label_posterior(
    const Eigen::MatrixXd& X_i, const TransitionStructure& trans,
    const GroupParams& groups);

}  // namespace hdplpcm
