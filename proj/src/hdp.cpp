#include "hdplpcm/hdp.hpp"

#include <cmath>

#include "hdplpcm/errors.hpp"

namespace hdplpcm {

TransitionCounts compute_transition_counts(const LabelSequences& labels,
                                           int L) {
  const int T = labels.T(), n = labels.n();
  labels.validate(L);
  TransitionCounts counts;
  counts.n_init = Eigen::VectorXi::Zero(L);
  counts.n_group = Eigen::MatrixXi::Zero(T, L);
  counts.n_trans.assign(std::max(T - 1, 0), Eigen::MatrixXi::Zero(L, L));
  for (int i = 0; i < n; ++i) {
    counts.n_init[labels.Z(0, i)] += 1;
    for (int t = 0; t < T; ++t) counts.n_group(t, labels.Z(t, i)) += 1;
    for (int t = 1; t < T; ++t)
      counts.n_trans[t - 1](labels.Z(t - 1, i), labels.Z(t, i)) += 1;
  }
  return counts;
}

Eigen::VectorXd AuxCounts::m_bar_dish_totals() const {
  Eigen::VectorXd totals = m_bar0.cast<double>();
  for (const auto& mb : m_bar)
    totals += mb.colwise().sum().transpose().cast<double>();
  return totals;
}

double AuxCounts::m_bar_total() const { return m_bar_dish_totals().sum(); }

double AuxCounts::m_total_sticky() const {
  double total = 0.0;
  for (const auto& mm : m) total += mm.sum();
  return total;
}

double AuxCounts::w_total() const { return w.sum(); }

void AuxCounts::check_invariants(const TransitionCounts& counts) const {
  const int S = static_cast<int>(m.size());
  for (int k = 0; k < m0.size(); ++k) {
    if (m0[k] < 0 || m0[k] > counts.n_init[k])
      throw InvalidArgument("aux: m0 outside [0, n_init]");
    if (m_bar0[k] != m0[k])
      throw InvalidArgument("aux: initial restaurant m_bar != m");
  }
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < m[s].rows(); ++j) {
      if (w(s, j) < 0 || w(s, j) > m[s](j, j))
        throw InvalidArgument("aux: w outside [0, m_jj]");
      for (int k = 0; k < m[s].cols(); ++k) {
        if (m[s](j, k) < 0 || m[s](j, k) > counts.n_trans[s](j, k))
          throw InvalidArgument("aux: m outside [0, n]");
        const int expect =
            (j == k) ? m[s](j, j) - w(s, j) : m[s](j, k);
        if (m_bar[s](j, k) != expect)
          throw InvalidArgument("aux: m_bar inconsistent with m and w");
      }
    }
}

namespace {

// Tables opened by a sequence of customers: the i-th customer opens a new
// table with probability weight/(i + weight).
int sample_table_count(int customers, double weight, RngStream& rng) {
  int tables = 0;
  for (int i = 0; i < customers; ++i)
    if (rng.uniform() * (i + weight) < weight) ++tables;
  return tables;
}

}  // namespace

AuxCounts sample_aux_tables(const TransitionCounts& counts,
                            const Eigen::VectorXd& beta, double alpha0,
                            double alpha, double kappa, RngStream& rng) {
  const int L = counts.L();
  const int S = static_cast<int>(counts.n_trans.size());
  AuxCounts aux;
  aux.m0 = Eigen::VectorXi::Zero(L);
  aux.m_bar0 = Eigen::VectorXi::Zero(L);
  aux.m.assign(S, Eigen::MatrixXi::Zero(L, L));
  aux.m_bar.assign(S, Eigen::MatrixXi::Zero(L, L));
  aux.w = Eigen::MatrixXi::Zero(S, L);
  for (int k = 0; k < L; ++k) {
    aux.m0[k] = sample_table_count(counts.n_init[k], alpha0 * beta[k], rng);
    aux.m_bar0[k] = aux.m0[k];
  }
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < L; ++k) {
        const double weight = alpha * beta[k] + (j == k ? kappa : 0.0);
        aux.m[s](j, k) =
            sample_table_count(counts.n_trans[s](j, k), weight, rng);
      }
  return aux;
}

void sample_overrides(AuxCounts& aux, const Eigen::VectorXd& beta, double rho,
                      RngStream& rng) {
  if (rho < 0.0 || rho >= 1.0)
    throw InvalidArgument("rho must lie in [0, 1)");
  const int S = static_cast<int>(aux.m.size());
  const int L = static_cast<int>(aux.m0.size());
  for (int s = 0; s < S; ++s) {
    for (int j = 0; j < L; ++j) {
      int w = 0;
      if (rho > 0.0) {
        const double p = rho / (rho + beta[j] * (1.0 - rho));
        w = rng.binomial(aux.m[s](j, j), p);
      }
      aux.w(s, j) = w;
    }
  }
  for (int s = 0; s < S; ++s) {
    aux.m_bar[s] = aux.m[s];
    for (int j = 0; j < L; ++j) aux.m_bar[s](j, j) -= aux.w(s, j);
  }
}

Eigen::VectorXd sample_beta(const AuxCounts& aux, double gamma, int L,
                            RngStream& rng) {
  Eigen::VectorXd alpha =
      Eigen::VectorXd::Constant(L, gamma / L) + aux.m_bar_dish_totals();
  const auto draw = rng.dirichlet(
      std::span<const double>(alpha.data(), static_cast<std::size_t>(L)));
  return Eigen::Map<const Eigen::VectorXd>(draw.data(), L);
}

Eigen::VectorXd sample_initial_distribution(const TransitionCounts& counts,
                                            const Eigen::VectorXd& beta,
                                            double alpha0, RngStream& rng) {
  const int L = counts.L();
  Eigen::VectorXd alpha = alpha0 * beta + counts.n_init.cast<double>();
  const auto draw = rng.dirichlet(
      std::span<const double>(alpha.data(), static_cast<std::size_t>(L)));
  return Eigen::Map<const Eigen::VectorXd>(draw.data(), L);
}

std::vector<Eigen::MatrixXd> sample_transition_rows(
    const TransitionCounts& counts, const Eigen::VectorXd& beta, double alpha,
    double kappa, std::uint64_t seed, std::uint32_t epoch) {
  const int L = counts.L();
  const int S = static_cast<int>(counts.n_trans.size());
  std::vector<Eigen::MatrixXd> Pi(S, Eigen::MatrixXd::Zero(L, L));
  for (int s = 0; s < S; ++s)
    for (int g = 0; g < L; ++g) {
      RngStream row_rng(seed, RngDomain::transition_rows,
                        static_cast<std::uint32_t>(s * L + g), epoch);
      Eigen::VectorXd alpha_row = alpha * beta;
      alpha_row[g] += kappa;
      alpha_row += counts.n_trans[s].row(g).transpose().cast<double>();
      const auto draw = row_rng.dirichlet(std::span<const double>(
          alpha_row.data(), static_cast<std::size_t>(L)));
      Pi[s].row(g) = Eigen::Map<const Eigen::VectorXd>(draw.data(), L);
    }
  return Pi;
}

double sample_concentration_escobar_west(int K, long N, double a, double b,
                                         double current, RngStream& rng) {
  if (a <= 0.0 || b <= 0.0)
    throw InvalidArgument("escobar-west: prior parameters must be > 0");
  if (K == 0 || N == 0) return rng.gamma_rate(a, b);
  if (a + K - 1 <= 0.0)
    throw InvalidArgument("escobar-west: a + K - 1 must be > 0");
  const double eta = rng.beta(current + 1.0, static_cast<double>(N));
  const double rate = b - std::log(eta);
  const double pi1 = a + K - 1;
  const double pi2 = N * rate;
  const bool first = rng.bernoulli(pi1 / (pi1 + pi2));
  return rng.gamma_rate(first ? a + K : a + K - 1, rate);
}

void sample_hyperparams(ModelState& state, const TransitionCounts& counts,
                        const AuxCounts& aux, const HyperToggles& toggles,
                        RngStream& rng) {
  auto& h = state.hyper;
  const int L = state.L();
  const int T = state.T();

  if (toggles.tau2) {
    double ss = 0.0;
    for (int g = 0; g < L; ++g) ss += state.groups.mu.col(g).squaredNorm();
    h.tau2 = rng.inverse_gamma((h.a_tau + L) / 2.0, (h.b_tau + ss) / 2.0);
  }
  if (toggles.b) {
    double inv_sum = 0.0;
    for (int g = 0; g < L; ++g) inv_sum += 1.0 / state.groups.sigma2[g];
    h.b = rng.gamma((h.c + L * h.a) / 2.0, 2.0 / (h.d + inv_sum));
  }
  if (toggles.gamma) {
    const Eigen::VectorXd dish_totals = aux.m_bar_dish_totals();
    const int K = static_cast<int>((dish_totals.array() > 0.0).count());
    const long N = static_cast<long>(std::llround(dish_totals.sum()));
    h.gamma = sample_concentration_escobar_west(K, N, h.a_gamma, h.b_gamma,
                                                h.gamma, rng);
  }
  if (toggles.alpha0) {
    const int K = aux.m0.sum();
    const long N = counts.n_init.sum();
    h.alpha0 = sample_concentration_escobar_west(K, N, h.a_alpha0, h.b_alpha0,
                                                 h.alpha0, rng);
  }
  double alpha_kappa = h.alpha + h.kappa;
  if (toggles.alpha_kappa) {
    double log_r_sum = 0.0;
    double s_sum = 0.0;
    for (int t = 2; t <= T; ++t)
      for (int g = 0; g < L; ++g) {
        const int ng = counts.restaurant_size(g, t);
        // Empty restaurants give r = 1 (Beta(.,0) point mass) and s = 0.
        const double r =
            ng == 0 ? 1.0
                    : rng.beta(alpha_kappa + 1.0, static_cast<double>(ng));
        log_r_sum += std::log(r);
        if (ng > 0) s_sum += rng.bernoulli(ng / (ng + alpha_kappa)) ? 1.0 : 0.0;
      }
    const double shape = h.a_alpha_kappa + aux.m_total_sticky() - s_sum;
    const double rate = h.b_alpha_kappa - log_r_sum;
    alpha_kappa = rng.gamma_rate(shape, rate);
  }
  double rho = h.rho;
  if (toggles.rho) {
    const double w_total = aux.w_total();
    const double considered = aux.m_total_sticky();
    rho = rng.beta(w_total + h.a_rho, considered - w_total + h.b_rho);
    if (rho >= 1.0) rho = std::nextafter(1.0, 0.0);
  }
  if (toggles.alpha_kappa || toggles.rho)
    h.set_concentration(alpha_kappa, rho);
}

}  // namespace hdplpcm
