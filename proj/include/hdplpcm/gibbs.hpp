#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hdplpcm/hdp.hpp"
#include "hdplpcm/network.hpp"
#include "hdplpcm/rng.hpp"
#include "hdplpcm/state.hpp"

namespace hdplpcm {

struct SamplerConfig {
  int n_tune = 5000;
  int n_burn = 5000;
  int n_keep = 10000;
  int thin = 1;
  int L = 10;
  int p = 2;
  double step_x = 0.1;
  double step_beta0 = 0.1;
  double target_accept_low = 0.25;
  double target_accept_high = 0.40;
  int tune_interval = 100;
  std::uint64_t seed = 0;
  HyperToggles hyper;            // which hyperparameters are resampled
  // Hold the blend and hyperparameters at their initialized values during
  // the tuning phase. The early conditional for the blend is dominated by
  // initialization noise and a near-zero draw strands the chain in a
  // degenerate random-walk mode; anchoring it while the layout organizes
  // keeps the start inside the clustered basin. Burn-in and kept sweeps
  // always run the full kernel.
  bool anchored_tuning = true;
  int init_refine_sweeps = 1000; // no-cluster MH refinement of the start state
  bool store_positions = true;   // keep per-sample position snapshots
  bool store_transitions = true; // keep per-sample transition matrices
  int checkpoint_every = 0;      // sweeps between checkpoints; 0 disables
  std::string checkpoint_path;

  void validate() const;
};

struct AcceptStats {
  long position_accepts = 0;
  long position_proposals = 0;
  long intercept_accepts = 0;
  long intercept_proposals = 0;

  double position_rate() const {
    return position_proposals ? static_cast<double>(position_accepts) /
                                    position_proposals
                              : 0.0;
  }
  double intercept_rate() const {
    return intercept_proposals ? static_cast<double>(intercept_accepts) /
                                     intercept_proposals
                               : 0.0;
  }
  AcceptStats& operator+=(const AcceptStats& o);
};

struct Chain {
  SamplerConfig config;
  std::string rng_algorithm = kRngAlgorithm;
  int n = 0, T = 0;
  std::vector<ModelState> samples;  // positions/Pi stripped per config flags
  std::vector<double> log_post;
  std::vector<double> log_lik;
  AcceptStats tune_stats;
  AcceptStats run_stats;
  double tuned_step_x = 0.0;
  double tuned_step_beta0 = 0.0;
  bool interrupted = false;

  std::size_t size() const { return samples.size(); }
};

// Multiplicative step adaptation toward the target acceptance band:
// overshooting grows the step by 1.1, undershooting shrinks it by 0.9.
double tune_step_size(double accept_rate, double step, double low, double high);

// Per-slice caches reused across sweeps: dist(t)(i,j) = ||X_t^i - X_t^j||
// and soft(t)(i,j) = softplus(beta0 - dist). The position kernel keeps them
// exact (entries are recomputed, never incremented), so they stay valid as
// long as nothing outside the sweep moves the positions.
struct SweepCaches {
  std::vector<Eigen::MatrixXd> dist;
  std::vector<Eigen::MatrixXd> soft;
  double soft_beta0 = 0.0;
  bool valid = false;

  void refresh(const LatentPositions& positions, double beta0);
  void refresh_soft(double beta0);
  // Network log likelihood assembled from the cached terms.
  double log_likelihood(const DynamicNetwork& net, double beta0) const;
};

// One site-by-site random-walk update of every latent position; returns
// acceptance counts through stats. dist/soft are the per-slice distance and
// softplus caches kept in sync across the sweep.
void mh_update_positions(ModelState& state, const DynamicNetwork& net,
                         double step_x, RngStream& rng,
                         std::vector<Eigen::MatrixXd>& dist,
                         std::vector<Eigen::MatrixXd>& soft,
                         AcceptStats& stats);

// Random-walk update of the intercept given cached distances and softplus
// values (soft must correspond to the current intercept).
void mh_update_intercept(ModelState& state, const DynamicNetwork& net,
                         double step_beta0, RngStream& rng,
                         const std::vector<Eigen::MatrixXd>& dist,
                         const std::vector<Eigen::MatrixXd>& soft,
                         AcceptStats& stats);

// Conjugate draws for group centers, spherical variances, and the blend.
void sample_group_means(ModelState& state, const TransitionCounts& counts,
                        RngStream& rng);
void sample_group_variances(ModelState& state, const TransitionCounts& counts,
                            RngStream& rng);
void sample_lambda(ModelState& state, RngStream& rng);

// One full blocked sweep in the fixed order: positions, intercept, labels,
// auxiliary counts, global weights, initial distribution, transition rows,
// group means/variances, blend, hyperparameters. Passing caches reuses the
// distance/softplus tables between sweeps; anchored sweeps skip the blend
// and hyperparameter draws (tuning-phase warm-up).
void gibbs_sweep(ModelState& state, const DynamicNetwork& net,
                 const SamplerConfig& config, double step_x, double step_beta0,
                 std::uint32_t sweep, AcceptStats* stats,
                 SweepCaches* caches = nullptr, bool anchored = false);

// Data-driven start: per-slice graph-distance MDS, sequential rotation
// alignment, a short no-cluster MH refinement of positions and intercept,
// k-means clustering of stacked trajectories, prior draws for the
// transition structure.
ModelState initialize_state(const DynamicNetwork& net,
                            const SamplerConfig& config);

// Mid-run snapshot: sampler state, phase position, adapted step sizes, and
// the partial chain. Resuming replays the remaining sweeps bit-exactly
// because every random stream is keyed by (seed, sweep).
struct Checkpoint {
  std::uint32_t sweep = 0;  // next sweep to run
  int phase = 0;            // 0 tune, 1 burn, 2 keep
  int phase_iter = 0;       // iterations completed inside the phase
  double step_x = 0.0;
  double step_beta0 = 0.0;
  ModelState state;
  Chain chain;              // samples collected so far
};

using CheckpointSink = std::function<void(const Checkpoint&)>;

Chain run_chain(const DynamicNetwork& net, const SamplerConfig& config,
                const std::atomic<bool>* stop = nullptr,
                const CheckpointSink& on_checkpoint = nullptr);

// Continues a checkpointed run to completion.
Chain resume_chain(const DynamicNetwork& net, Checkpoint cp,
                   const std::atomic<bool>* stop = nullptr,
                   const CheckpointSink& on_checkpoint = nullptr);

}  // namespace hdplpcm
