#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace hdplpcm {

// Counter-based generator: Philox4x32 with 10 rounds (Salmon et al. 2011).
// Every random draw in the library flows from a single 64-bit seed through
// streams keyed by (domain, unit, epoch), so independent blocks of a sweep
// (actors, transition rows, chains) get non-overlapping, reproducible
// streams and a run can be resumed mid-chain bit-exactly.
inline constexpr const char* kRngAlgorithm = "philox4x32-10";

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

// Stream domains. Each (domain, unit, epoch) triple owns a disjoint slice
// of counter space.
enum class RngDomain : std::uint32_t {
  generic = 0,
  init_refine = 1,
  init_kmeans = 2,
  init_priors = 3,
  positions = 4,
  intercept = 5,
  labels = 6,        // unit = actor
  aux_tables = 7,
  global_weights = 8,
  initial_dist = 9,
  transition_rows = 10,  // unit = row index k*T + t
  group_params = 11,
  blend = 12,
  hyper = 13,
  sim_params = 14,
  sim_trajectories = 15,
  sim_edges = 16,
  test = 17,
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, RngDomain domain, std::uint32_t unit = 0,
            std::uint32_t epoch = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1]; safe to take logs of.
  double uniform_pos();

  double normal();                       // standard normal (Box-Muller)
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p);
  // Gamma with given shape and unit scale (Marsaglia-Tsang). shape == 0
  // returns 0.
  double gamma(double shape);
  double gamma(double shape, double scale) { return scale * gamma(shape); }
  double gamma_rate(double shape, double rate) { return gamma(shape) / rate; }
  // Inverse gamma with shape a and scale b (density ∝ x^{-a-1} e^{-b/x}).
  double inverse_gamma(double shape, double scale);
  double beta(double a, double b);
  int binomial(int n, double p);
  // Index draw proportional to nonnegative weights; throws
  // DegenerateDistribution when all weights vanish.
  int categorical(std::span<const double> weights);
  // Same, from unnormalized log weights (max-shifted internally).
  int categorical_log(std::span<const double> log_weights);
  // Dirichlet draw; each gamma deviate is floored at DBL_MIN so no
  // component is exactly zero (keeps downstream log-densities finite).
  std::vector<double> dirichlet(std::span<const double> alpha);
  // Normal restricted to the open interval (lo, hi), drawn by CDF inversion.
  double truncated_normal(double mean, double sd, double lo, double hi);

 private:
  void refill();
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;  // buffer exhausted
};

// Standard normal CDF.
double normal_cdf(double x);
// Standard normal quantile (Wichura's AS 241, double precision).
double normal_quantile(double p);

}  // namespace hdplpcm
