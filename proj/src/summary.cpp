#include "hdplpcm/summary.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hdplpcm/errors.hpp"
#include "hdplpcm/likelihood.hpp"

namespace hdplpcm {

std::vector<Eigen::MatrixXd> coassignment_probabilities(const Chain& chain) {
  if (chain.samples.empty()) throw EmptyResult("chain has no kept samples");
  const int T = chain.samples[0].labels.T();
  const int n = chain.samples[0].labels.n();
  std::vector<Eigen::MatrixXd> co(T, Eigen::MatrixXd::Zero(n, n));
  for (const auto& s : chain.samples)
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i) {
        co[t](i, i) += 1.0;
        for (int j = 0; j < i; ++j)
          if (s.labels.Z(t, i) == s.labels.Z(t, j)) {
            co[t](i, j) += 1.0;
            co[t](j, i) += 1.0;
          }
      }
  const double S = static_cast<double>(chain.samples.size());
  for (auto& M : co) M /= S;
  return co;
}

namespace {

// Cluster sizes keyed by label.
std::map<int, int> cluster_sizes(const Eigen::VectorXi& z) {
  std::map<int, int> sizes;
  for (int i = 0; i < z.size(); ++i) sizes[z[i]]++;
  return sizes;
}

}  // namespace

double vi_distance(const Eigen::VectorXi& z, const Eigen::VectorXi& zhat) {
  const int n = static_cast<int>(z.size());
  if (zhat.size() != n) throw InvalidArgument("vi: length mismatch");
  if (n == 0) throw InvalidArgument("vi: empty partitions");
  const auto sa = cluster_sizes(z);
  const auto sb = cluster_sizes(zhat);
  std::map<std::pair<int, int>, int> joint;
  for (int i = 0; i < n; ++i) joint[{z[i], zhat[i]}]++;
  double hz = 0.0, hzh = 0.0, mi = 0.0;
  for (const auto& [label, count] : sa) {
    const double p = static_cast<double>(count) / n;
    hz -= p * std::log(p);
  }
  for (const auto& [label, count] : sb) {
    const double p = static_cast<double>(count) / n;
    hzh -= p * std::log(p);
  }
  for (const auto& [labels, count] : joint) {
    const double pij = static_cast<double>(count) / n;
    const double pi = static_cast<double>(sa.at(labels.first)) / n;
    const double pj = static_cast<double>(sb.at(labels.second)) / n;
    mi += pij * std::log(pij / (pi * pj));
  }
  const double vi = hz + hzh - 2.0 * mi;
  return vi < 0.0 ? 0.0 : vi;  // clamp -0 from rounding
}

double adjusted_rand_index(const Eigen::VectorXi& z,
                           const Eigen::VectorXi& zhat) {
  const int n = static_cast<int>(z.size());
  if (zhat.size() != n) throw InvalidArgument("ari: length mismatch");
  if (n < 2) throw InvalidArgument("ari: need at least two items");
  const auto sa = cluster_sizes(z);
  const auto sb = cluster_sizes(zhat);
  std::map<std::pair<int, int>, int> joint;
  for (int i = 0; i < n; ++i) joint[{z[i], zhat[i]}]++;
  auto choose2 = [](long m) { return 0.5 * m * (m - 1); };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [k, v] : joint) sum_ij += choose2(v);
  for (const auto& [k, v] : sa) sum_a += choose2(v);
  for (const auto& [k, v] : sb) sum_b += choose2(v);
  const double expected = sum_a * sum_b / choose2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_ij - expected) / (max_index - expected);
}

SelectedPartition select_partition(
    const Chain& chain, const std::vector<Eigen::MatrixXd>& coassign) {
  if (chain.samples.empty()) throw EmptyResult("chain has no kept samples");
  const int T = chain.samples[0].labels.T();
  const int n = chain.samples[0].labels.n();
  SelectedPartition best;
  double best_obj = std::numeric_limits<double>::infinity();
  double best_lik = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < chain.samples.size(); ++s) {
    const auto& Z = chain.samples[s].labels.Z;
    double obj = 0.0;
    for (int t = 0; t < T; ++t) {
      // cluster sizes of this sample at time t
      std::map<int, int> sizes;
      for (int i = 0; i < n; ++i) sizes[Z(t, i)]++;
      for (int i = 0; i < n; ++i) {
        obj += std::log(static_cast<double>(sizes[Z(t, i)]));
        double mass = 0.0;
        for (int j = 0; j < n; ++j)
          if (Z(t, j) == Z(t, i)) mass += coassign[t](i, j);
        obj -= 2.0 * std::log(mass);
      }
    }
    const double lik = chain.log_lik.empty() ? 0.0 : chain.log_lik[s];
    if (obj < best_obj || (obj == best_obj && lik > best_lik)) {
      best_obj = obj;
      best_lik = lik;
      best.labels = chain.samples[s].labels;
      best.sample_index = static_cast<int>(s);
      best.objective = obj;
    }
  }
  return best;
}

SelectedPartition select_partition(const Chain& chain) {
  return select_partition(chain, coassignment_probabilities(chain));
}

LatentPositions procrustes_align(const LatentPositions& sample,
                                 const LatentPositions& reference,
                                 Eigen::MatrixXd* rotation, bool* degenerate) {
  const int T = sample.T(), n = sample.n(), p = sample.p();
  if (reference.T() != T || reference.n() != n || reference.p() != p)
    throw InvalidArgument("procrustes: shape mismatch");
  // stack over time and center both configurations
  Eigen::VectorXd mean_s = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd mean_r = Eigen::VectorXd::Zero(p);
  for (int t = 0; t < T; ++t) {
    mean_s += sample.X[t].rowwise().sum();
    mean_r += reference.X[t].rowwise().sum();
  }
  mean_s /= static_cast<double>(T) * n;
  mean_r /= static_cast<double>(T) * n;

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p, p);  // A B^T over stacked cols
  double scale = 0.0;
  for (int t = 0; t < T; ++t) {
    const Eigen::MatrixXd A = sample.X[t].colwise() - mean_s;
    const Eigen::MatrixXd B = reference.X[t].colwise() - mean_r;
    M += A * B.transpose();
    scale += A.squaredNorm();
  }
  Eigen::MatrixXd R;
  bool degen = false;
  if (scale <= 0.0 || M.norm() == 0.0) {
    R = Eigen::MatrixXd::Identity(p, p);
    degen = true;
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    R = svd.matrixV() * svd.matrixU().transpose();
  }
  if (rotation) *rotation = R;
  if (degenerate) *degenerate = degen;
  LatentPositions out = LatentPositions::zeros(T, n, p);
  for (int t = 0; t < T; ++t)
    out.X[t] = (R * (sample.X[t].colwise() - mean_s)).colwise() + mean_r;
  return out;
}

Eigen::MatrixXd group_count_posterior(const Chain& chain) {
  if (chain.samples.empty()) throw EmptyResult("chain has no kept samples");
  const int T = chain.samples[0].labels.T();
  const int n = chain.samples[0].labels.n();
  const int L = chain.samples[0].L();
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(T, L + 1);
  for (const auto& s : chain.samples)
    for (int t = 0; t < T; ++t) {
      std::vector<bool> occupied(L, false);
      for (int i = 0; i < n; ++i) occupied[s.labels.Z(t, i)] = true;
      const int count = static_cast<int>(
          std::count(occupied.begin(), occupied.end(), true));
      table(t, count) += 1.0;
    }
  table /= static_cast<double>(chain.samples.size());
  return table;
}

EssResult ess_and_acf(const std::vector<double>& series, int max_lag) {
  const int N = static_cast<int>(series.size());
  if (N < 4) throw InvalidArgument("ess: series too short");
  const double mean =
      std::accumulate(series.begin(), series.end(), 0.0) / N;
  double c0 = 0.0;
  for (double x : series) c0 += (x - mean) * (x - mean);
  c0 /= N;
  if (c0 <= 0.0) throw NumericalError("ess: series has zero variance");
  const int K = std::min(max_lag, N - 1);
  EssResult res;
  res.acf.resize(K + 1);
  res.acf[0] = 1.0;
  for (int k = 1; k <= K; ++k) {
    double ck = 0.0;
    for (int t = 0; t + k < N; ++t)
      ck += (series[t] - mean) * (series[t + k] - mean);
    res.acf[k] = ck / N / c0;
  }
  // Geyer initial positive sequence over pair sums
  double tau = -1.0;
  for (int m = 0; 2 * m <= K; ++m) {
    const double pair =
        res.acf[2 * m] + (2 * m + 1 <= K ? res.acf[2 * m + 1] : 0.0);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1e-12);
  res.ess = N / tau;
  return res;
}

double in_sample_auc(const DynamicNetwork& net, const Chain& chain) {
  if (chain.samples.empty()) throw EmptyResult("chain has no kept samples");
  const int T = net.T(), n = net.n();
  for (const auto& s : chain.samples)
    if (s.positions.X.empty())
      throw InvalidArgument("auc requires stored positions");
  const long dyads = static_cast<long>(T) * n * (n - 1) / 2;
  std::vector<double> score(dyads, 0.0);
  for (const auto& s : chain.samples) {
    long idx = 0;
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
          const double eta =
              s.groups.beta0 -
              (s.positions.X[t].col(i) - s.positions.X[t].col(j)).norm();
          score[idx++] += edge_probability(eta);
        }
  }
  for (double& v : score) v /= static_cast<double>(chain.samples.size());

  std::vector<char> label(dyads);
  long positives = 0;
  {
    long idx = 0;
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
          label[idx] = net(t, i, j);
          positives += label[idx];
          ++idx;
        }
  }
  if (positives == 0 || positives == dyads)
    throw InvalidArgument("auc undefined for all-zero or all-one networks");

  // midrank Mann-Whitney statistic
  std::vector<long> order(dyads);
  std::iota(order.begin(), order.end(), 0L);
  std::sort(order.begin(), order.end(),
            [&](long a, long b) { return score[a] < score[b]; });
  std::vector<double> rank(dyads);
  long pos = 0;
  while (pos < dyads) {
    long end = pos;
    while (end + 1 < dyads && score[order[end + 1]] == score[order[pos]]) ++end;
    const double mid = 0.5 * (pos + end) + 1.0;  // 1-based midrank
    for (long k = pos; k <= end; ++k) rank[order[k]] = mid;
    pos = end + 1;
  }
  double rank_sum = 0.0;
  for (long idx = 0; idx < dyads; ++idx)
    if (label[idx]) rank_sum += rank[idx];
  const double negatives = static_cast<double>(dyads - positives);
  return (rank_sum - 0.5 * positives * (positives + 1.0)) /
         (static_cast<double>(positives) * negatives);
}

std::vector<Eigen::MatrixXi> alluvial_flows(const LabelSequences& labels,
                                            int L) {
  const int T = labels.T(), n = labels.n();
  std::vector<Eigen::MatrixXi> flows(std::max(T - 1, 0),
                                     Eigen::MatrixXi::Zero(L, L));
  for (int t = 0; t + 1 < T; ++t)
    for (int i = 0; i < n; ++i)
      flows[t](labels.Z(t, i), labels.Z(t + 1, i))++;
  return flows;
}

void PartitionSummary::validate() const {
  for (const auto& M : coassign) {
    if ((M.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
      throw InvalidArgument("coassignment diagonal must be 1");
    if ((M.array() < -1e-12).any() || (M.array() > 1.0 + 1e-12).any())
      throw InvalidArgument("coassignment entries must lie in [0,1]");
    if ((M - M.transpose()).norm() > 1e-12)
      throw InvalidArgument("coassignment must be symmetric");
  }
  for (int t = 0; t < group_counts.rows(); ++t)
    if (std::abs(group_counts.row(t).sum() - 1.0) > 1e-10)
      throw InvalidArgument("group count rows must sum to 1");
}

PartitionSummary summarize(const Chain& chain) {
  PartitionSummary out;
  out.coassign = coassignment_probabilities(chain);
  const auto sel = select_partition(chain, out.coassign);
  out.selected = sel.labels;
  out.selected_sample_index = sel.sample_index;
  out.group_counts = group_count_posterior(chain);
  const auto& chosen = chain.samples[sel.sample_index];
  out.selected_mu = chosen.groups.mu;
  out.selected_sigma = chosen.groups.sigma2.array().sqrt();
  out.flows = alluvial_flows(out.selected, chosen.L());

  if (!chosen.positions.X.empty()) {
    out.selected_positions = chosen.positions;
    // posterior mean of aligned samples, reference = selection
    LatentPositions mean = LatentPositions::zeros(
        chosen.positions.T(), chosen.positions.n(), chosen.positions.p());
    for (const auto& s : chain.samples) {
      const auto aligned = procrustes_align(s.positions, chosen.positions);
      for (int t = 0; t < mean.T(); ++t) mean.X[t] += aligned.X[t];
    }
    for (int t = 0; t < mean.T(); ++t)
      mean.X[t] /= static_cast<double>(chain.samples.size());
    out.aligned_positions = mean;
  }
  out.validate();
  return out;
}

}  // namespace hdplpcm
