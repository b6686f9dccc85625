#include "hdplpcm/label_sampler.hpp"

#include <cmath>
#include <limits>

#include "hdplpcm/errors.hpp"
#include "hdplpcm/likelihood.hpp"

namespace hdplpcm {

namespace {

// Log emission densities of X_t under every group, 0-based t >= 1 uses the
// AR mean.
Eigen::VectorXd log_emissions(const Eigen::MatrixXd& X_i, int t,
                              const GroupParams& groups) {
  const int L = groups.L();
  Eigen::VectorXd le(L);
  if (t == 0) {
    for (int g = 0; g < L; ++g)
      le[g] = emission_log_density(X_i.col(0), nullptr, g, groups);
  } else {
    const Eigen::VectorXd prev = X_i.col(t - 1);
    for (int g = 0; g < L; ++g)
      le[g] = emission_log_density(X_i.col(t), &prev, g, groups);
  }
  return le;
}

}  // namespace

BackwardMessages backward_pass(const Eigen::MatrixXd& X_i,
                               const TransitionStructure& trans,
                               const GroupParams& groups) {
  const int T = static_cast<int>(X_i.cols());
  const int L = trans.L();
  BackwardMessages out;
  out.msg.resize(T, L);
  out.log_cum.resize(T);
  out.log_step.resize(T);

  out.msg.row(T - 1).setConstant(1.0 / L);
  out.log_step[T - 1] = std::log(static_cast<double>(L));
  out.log_cum[T - 1] = out.log_step[T - 1];

  for (int t = T - 2; t >= 0; --t) {
    const Eigen::VectorXd le = log_emissions(X_i, t + 1, groups);
    const double shift = le.maxCoeff();
    if (!std::isfinite(shift))
      throw DegenerateDistribution("backward pass: all emissions vanished");
    const Eigen::VectorXd scaled =
        (le.array() - shift).exp() * out.msg.row(t + 1).transpose().array();
    Eigen::VectorXd raw = trans.Pi[t] * scaled;  // Pi[t]: transition into t+1
    double norm = raw.sum();
    double log_shift = shift;
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      // products underflowed in linear space; redo the step with logsumexp
      Eigen::VectorXd log_terms(L);
      Eigen::VectorXd log_raw(L);
      for (int j = 0; j < L; ++j) {
        const double m = out.msg(t + 1, j);
        log_terms[j] =
            le[j] + (m > 0.0 ? std::log(m)
                             : -std::numeric_limits<double>::infinity());
      }
      for (int k = 0; k < L; ++k) {
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < L; ++j) {
          const double pi = trans.Pi[t](k, j);
          if (pi > 0.0) best = std::max(best, std::log(pi) + log_terms[j]);
        }
        if (!std::isfinite(best)) {
          log_raw[k] = -std::numeric_limits<double>::infinity();
          continue;
        }
        double acc = 0.0;
        for (int j = 0; j < L; ++j) {
          const double pi = trans.Pi[t](k, j);
          if (pi > 0.0)
            acc += std::exp(std::log(pi) + log_terms[j] - best);
        }
        log_raw[k] = best + std::log(acc);
      }
      log_shift = log_raw.maxCoeff();
      if (!std::isfinite(log_shift))
        throw DegenerateDistribution(
            "backward pass: message vanished at every state");
      raw = (log_raw.array() - log_shift).exp();
      norm = raw.sum();
    }
    out.msg.row(t) = (raw / norm).transpose();
    out.log_step[t] = std::log(norm) + log_shift;
    out.log_cum[t] = out.log_step[t] + out.log_cum[t + 1];
  }
  return out;
}

Eigen::VectorXi sample_labels(const Eigen::MatrixXd& X_i,
                              const BackwardMessages& messages,
                              const TransitionStructure& trans,
                              const GroupParams& groups, RngStream& rng) {
  const int T = static_cast<int>(X_i.cols());
  const int L = trans.L();
  if (messages.T() != T || messages.L() != L)
    throw InvalidArgument("sample_labels: message shape mismatch");
  Eigen::VectorXi Z(T);
  Eigen::VectorXd logw(L);
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd le = log_emissions(X_i, t, groups);
    for (int k = 0; k < L; ++k) {
      const double pi =
          t == 0 ? trans.pi0[k] : trans.Pi[t - 1](Z[t - 1], k);
      const double lpi =
          pi > 0.0 ? std::log(pi) : -std::numeric_limits<double>::infinity();
      const double m = messages.msg(t, k);
      const double lm =
          m > 0.0 ? std::log(m) : -std::numeric_limits<double>::infinity();
      logw[k] = lpi + le[k] + lm;
    }
    try {
      Z[t] = rng.categorical_log(
          std::span<const double>(logw.data(), static_cast<std::size_t>(L)));
    } catch (const DegenerateDistribution&) {
      throw DegenerateDistribution(
          "sample_labels: all-zero weights at t=" + std::to_string(t));
    }
  }
  return Z;
}

std::vector<double> brute_force_label_posterior(
    const Eigen::MatrixXd& X_i, const TransitionStructure& trans,
    const GroupParams& groups) {
  const int T = static_cast<int>(X_i.cols());
  const int L = trans.L();
  double count = std::pow(static_cast<double>(L), T);
  if (count > 1e6)
    throw InvalidArgument("brute force enumeration too large (L^T > 1e6)");
  const long total = static_cast<long>(std::llround(count));
  std::vector<double> logp(total);
  Eigen::VectorXi Z(T);
  double max_lp = -std::numeric_limits<double>::infinity();
  for (long s = 0; s < total; ++s) {
    long rem = s;
    for (int t = 0; t < T; ++t) {
      Z[t] = static_cast<int>(rem % L);
      rem /= L;
    }
    logp[s] = trajectory_log_density(X_i, Z, trans, groups);
    max_lp = std::max(max_lp, logp[s]);
  }
  if (!std::isfinite(max_lp))
    throw DegenerateDistribution("brute force: all sequences have zero mass");
  double norm = 0.0;
  for (double lp : logp) norm += std::exp(lp - max_lp);
  std::vector<double> prob(total);
  for (long s = 0; s < total; ++s)
    prob[s] = std::exp(logp[s] - max_lp) / norm;
  return prob;
}

}  // namespace hdplpcm
