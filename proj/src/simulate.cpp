#include "hdplpcm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hdplpcm/errors.hpp"
#include "hdplpcm/likelihood.hpp"

namespace hdplpcm {

void SimSpec::validate() const {
  if (n <= 0 || T <= 0 || p <= 0)
    throw InvalidArgument("sim spec sizes must be positive");
  if (group_locations.rows() != p)
    throw InvalidArgument("group locations must be p x G");
  if (static_cast<int>(self_const.size()) != T)
    throw InvalidArgument("self_const must have T entries");
  if (static_cast<int>(active_sets.size()) != T)
    throw InvalidArgument("active_sets must have T entries");
  for (const auto& a : active_sets) {
    if (a.empty()) throw InvalidArgument("active set may not be empty");
    for (int g : a)
      if (g < 0 || g >= G())
        throw InvalidArgument("active set references unknown group");
  }
  if (pi0_alpha.size() != G())
    throw InvalidArgument("pi0_alpha must have G entries");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw InvalidArgument("lambda must lie in (0,1)");
  // distinct locations
  for (int g = 0; g < G(); ++g)
    for (int h = 0; h < g; ++h)
      if ((group_locations.col(g) - group_locations.col(h)).norm() == 0.0)
        throw InvalidArgument("duplicate group locations");
}

SimSpec homogeneous_spec(std::uint64_t seed) {
  SimSpec spec;
  spec.n = 120;
  spec.T = 6;
  spec.p = 2;
  spec.group_locations.resize(2, 6);
  spec.group_locations << -1.5, 1.5, -3.0, 3.0, 0.0, 0.0,
                           0.0, 0.0,  0.0, 0.0, -2.0, 2.0;
  spec.sigma_shape = 6.0;
  spec.sigma_scale = 0.05;
  spec.lambda = 0.8;
  spec.beta0 = 1.0;
  spec.self_const.assign(6, 20.0);
  std::vector<int> all{0, 1, 2, 3, 4, 5};
  spec.active_sets.assign(6, all);
  spec.pi0_alpha = Eigen::VectorXd::Constant(6, 10.0);
  spec.seed = seed;
  return spec;
}

SimSpec inhomogeneous_spec(std::uint64_t seed) {
  SimSpec spec = homogeneous_spec(seed);
  spec.T = 9;
  spec.self_const.assign(9, 20.0);
  spec.self_const[3] = 1.0;  // even spread when the two groups split at t=4
  spec.active_sets.assign(9, {});
  for (int t = 0; t < 3; ++t) spec.active_sets[t] = {0, 1};
  for (int t = 3; t < 6; ++t) spec.active_sets[t] = {0, 1, 2, 3, 4, 5};
  for (int t = 6; t < 9; ++t) spec.active_sets[t] = {2, 3, 4, 5};
  spec.pi0_alpha = Eigen::VectorXd::Zero(6);
  spec.pi0_alpha[0] = spec.pi0_alpha[1] = 10.0;
  return spec;
}

Eigen::VectorXd transition_row_from_locations(int g,
                                              const Eigen::MatrixXd& locations,
                                              double self_const,
                                              const std::vector<int>& active) {
  const int G = static_cast<int>(locations.cols());
  if (g < 0 || g >= G) throw InvalidArgument("unknown source group");
  if (active.empty()) throw InvalidArgument("no active target group");
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(G);
  bool self_active = false;
  double max_inv = 0.0;
  for (int k : active) {
    if (k == g) {
      self_active = true;
      continue;
    }
    const double dist = (locations.col(k) - locations.col(g)).norm();
    if (dist == 0.0)
      throw InvalidArgument("duplicate group locations in transition row");
    weights[k] = 1.0 / dist;
    max_inv = std::max(max_inv, weights[k]);
  }
  if (self_active)
    weights[g] = active.size() == 1 ? 1.0 : self_const * max_inv;
  const double total = weights.sum();
  if (!(total > 0.0))
    throw InvalidArgument("transition row has no reachable target");
  return weights / total;
}

void draw_trajectories(const TransitionStructure& trans,
                       const GroupParams& groups, int n, LatentPositions& X,
                       LabelSequences& Z, RngStream& rng) {
  const int T = trans.T();
  const int p = groups.p();
  const int L = trans.L();
  X = LatentPositions::zeros(T, n, p);
  Z = LabelSequences::constant(T, n, 0);
  std::vector<double> row(L);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) {
      if (t == 0) {
        for (int k = 0; k < L; ++k) row[k] = trans.pi0[k];
      } else {
        const int prev = Z.Z(t - 1, i);
        for (int k = 0; k < L; ++k) row[k] = trans.Pi[t - 1](prev, k);
      }
      const int g = rng.categorical(row);
      Z.Z(t, i) = g;
      const double sd = std::sqrt(groups.sigma2[g]);
      for (int k = 0; k < p; ++k) {
        const double mean =
            t == 0 ? groups.mu(k, g)
                   : groups.lambda * groups.mu(k, g) +
                         (1.0 - groups.lambda) * X.X[t - 1](k, i);
        X.X[t](k, i) = mean + sd * rng.normal();
      }
    }
  }
}

DynamicNetwork draw_network(const LatentPositions& X, double beta0,
                            RngStream& rng) {
  const int T = X.T(), n = X.n();
  DynamicNetwork net(n, T);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        const double eta = beta0 - (X.X[t].col(i) - X.X[t].col(j)).norm();
        if (rng.uniform() < edge_probability(eta)) net.set_edge(t, i, j, true);
      }
  return net;
}

GenerativeDraw sample_generative(const TransitionStructure& trans,
                                 const GroupParams& groups, int n,
                                 std::uint64_t seed, std::uint32_t epoch) {
  GenerativeDraw out{LatentPositions{}, LabelSequences{}, DynamicNetwork(1, 1)};
  RngStream traj_rng(seed, RngDomain::sim_trajectories, 0, epoch);
  draw_trajectories(trans, groups, n, out.X, out.Z, traj_rng);
  RngStream edge_rng(seed, RngDomain::sim_edges, 0, epoch);
  out.net = draw_network(out.X, groups.beta0, edge_rng);
  return out;
}

namespace {

bool slice_degenerate(const DynamicNetwork& net) {
  const long full = static_cast<long>(net.n()) * (net.n() - 1) / 2;
  for (int t = 0; t < net.T(); ++t) {
    long edges = 0;
    for (int i = 0; i < net.n(); ++i)
      for (int j = 0; j < i; ++j) edges += net(t, i, j);
    if (edges == 0 || edges == full) return true;
  }
  return false;
}

bool occupancy_matches_schedule(const LabelSequences& Z,
                                const std::vector<std::vector<int>>& sched,
                                int G) {
  for (int t = 0; t < Z.T(); ++t) {
    std::vector<bool> occupied(G, false);
    for (int i = 0; i < Z.n(); ++i) occupied[Z.Z(t, i)] = true;
    std::vector<bool> expect(G, false);
    for (int g : sched[t]) expect[g] = true;
    if (occupied != expect) return false;
  }
  return true;
}

}  // namespace

SimResult simulate(const SimSpec& spec) {
  spec.validate();
  const int G = spec.G();
  for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
    const auto epoch = static_cast<std::uint32_t>(attempt);
    RngStream param_rng(spec.seed, RngDomain::sim_params, 0, epoch);

    GroupParams groups;
    groups.mu = spec.group_locations;
    groups.sigma2.resize(G);
    for (int g = 0; g < G; ++g) {
      const double draw =
          param_rng.inverse_gamma(spec.sigma_shape, spec.sigma_scale);
      groups.sigma2[g] = spec.sigma_is_sd ? draw * draw : draw;
    }
    groups.lambda = spec.lambda;
    groups.beta0 = spec.beta0;

    TransitionStructure trans;
    trans.beta = Eigen::VectorXd::Constant(G, 1.0 / G);
    Eigen::VectorXd pi0 = Eigen::VectorXd::Zero(G);
    {
      const auto& active = spec.active_sets[0];
      std::vector<double> alpha;
      alpha.reserve(active.size());
      for (int g : active) alpha.push_back(spec.pi0_alpha[g]);
      const auto draw = param_rng.dirichlet(alpha);
      for (std::size_t k = 0; k < active.size(); ++k)
        pi0[active[k]] = draw[k];
    }
    trans.pi0 = pi0;
    trans.Pi.assign(spec.T - 1, Eigen::MatrixXd::Zero(G, G));
    for (int t = 1; t < spec.T; ++t)
      for (int g = 0; g < G; ++g)
        trans.Pi[t - 1].row(g) =
            transition_row_from_locations(g, spec.group_locations,
                                          spec.self_const[t],
                                          spec.active_sets[t])
                .transpose();

    LatentPositions X;
    LabelSequences Z;
    RngStream traj_rng(spec.seed, RngDomain::sim_trajectories, 0, epoch);
    draw_trajectories(trans, groups, spec.n, X, Z, traj_rng);
    RngStream edge_rng(spec.seed, RngDomain::sim_edges, 0, epoch);
    DynamicNetwork net = draw_network(X, spec.beta0, edge_rng);

    const bool bad_slices =
        spec.retry_degenerate_slices && slice_degenerate(net);
    const bool bad_occupancy =
        spec.retry_unoccupied_groups &&
        !occupancy_matches_schedule(Z, spec.active_sets, G);
    if ((bad_slices || bad_occupancy) && attempt < spec.max_retries) continue;
    if (bad_slices || bad_occupancy)
      throw NumericalError("simulation kept producing degenerate draws");

    return SimResult{std::move(net), std::move(X),      std::move(Z),
                     groups.sigma2,  std::move(trans.pi0), std::move(trans.Pi),
                     attempt};
  }
  throw NumericalError("unreachable");
}

}  // namespace hdplpcm
