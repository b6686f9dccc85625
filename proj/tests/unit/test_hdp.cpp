#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <vector>

#include "hdplpcm/errors.hpp"
#include "hdplpcm/hdp.hpp"
#include "hdplpcm/rng.hpp"

using namespace hdplpcm;

namespace {

LabelSequences labels_from(std::initializer_list<std::initializer_list<int>> rows) {
  LabelSequences out;
  const int T = static_cast<int>(rows.size());
  const int n = static_cast<int>(rows.begin()->size());
  out.Z.resize(T, n);
  int t = 0;
  for (const auto& row : rows) {
    int i = 0;
    for (int v : row) out.Z(t, i++) = v;
    ++t;
  }
  return out;
}

}  // namespace

TEST_CASE("transition counts on hand instances") {
  SUBCASE("everyone stays in group 0") {
    const auto labels = labels_from({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
    const auto c = compute_transition_counts(labels, 2);
    CHECK(c.n_init[0] == 3);
    CHECK(c.n_init[1] == 0);
    for (int s = 0; s < 2; ++s) {
      CHECK(c.n_trans[s](0, 0) == 3);
      CHECK(c.n_trans[s].sum() == 3);
    }
    CHECK(c.n_group(2, 0) == 3);
  }
  SUBCASE("single actor moves 0 -> 1") {
    const auto labels = labels_from({{0}, {1}});
    const auto c = compute_transition_counts(labels, 2);
    CHECK(c.n_init[0] == 1);
    CHECK(c.n_trans[0](0, 1) == 1);
    CHECK(c.n_trans[0].sum() == 1);
  }
  SUBCASE("random instance matches a naive triple loop") {
    RngStream rng(3, RngDomain::test);
    const int T = 3, n = 5, L = 3;
    LabelSequences labels;
    labels.Z.resize(T, n);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i)
        labels.Z(t, i) = static_cast<int>(rng.uniform() * L);
    const auto c = compute_transition_counts(labels, L);
    for (int s = 0; s < T - 1; ++s)
      for (int j = 0; j < L; ++j)
        for (int k = 0; k < L; ++k) {
          int expect = 0;
          for (int i = 0; i < n; ++i)
            if (labels.Z(s, i) == j && labels.Z(s + 1, i) == k) ++expect;
          CHECK(c.n_trans[s](j, k) == expect);
        }
    for (int t = 0; t < T; ++t) {
      int tot = 0;
      for (int k = 0; k < L; ++k) tot += c.n_group(t, k);
      CHECK(tot == n);
    }
  }
}

TEST_CASE("aux table counts") {
  const int L = 2;
  TransitionCounts counts;
  counts.n_init = Eigen::VectorXi::Zero(L);
  counts.n_group = Eigen::MatrixXi::Zero(2, L);
  counts.n_trans.assign(1, Eigen::MatrixXi::Zero(L, L));
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(L, 0.5);

  SUBCASE("no customers, no tables") {
    RngStream rng(4, RngDomain::test);
    const auto aux = sample_aux_tables(counts, beta, 1.0, 1.0, 1.0, rng);
    CHECK(aux.m0.sum() == 0);
    CHECK(aux.m[0].sum() == 0);
  }
  SUBCASE("the first customer always opens a table") {
    counts.n_trans[0](0, 1) = 1;
    counts.n_init[1] = 1;
    for (int rep = 0; rep < 50; ++rep) {
      RngStream rng(5, RngDomain::test, 0, rep);
      const auto aux = sample_aux_tables(counts, beta, 1.0, 1.0, 1.0, rng);
      CHECK(aux.m[0](0, 1) == 1);
      CHECK(aux.m0[1] == 1);
    }
  }
  SUBCASE("expected tables equal the harmonic sum") {
    // 20 customers with concentration weight alpha*beta + kappa = 2 on the
    // diagonal
    counts.n_trans[0](0, 0) = 20;
    const double weight = 2.0;  // alpha=2, beta0=0.5, kappa=1
    double expect = 0.0, var = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double p = weight / (i + weight);
      expect += p;
      var += p * (1 - p);
    }
    const int N = 100000;
    double sum = 0.0;
    for (int rep = 0; rep < N; ++rep) {
      RngStream rng(6, RngDomain::test, 0, rep);
      const auto aux = sample_aux_tables(counts, beta, 1.0, 2.0, 1.0, rng);
      sum += aux.m[0](0, 0);
    }
    const double se = std::sqrt(var / N);
    CHECK(std::fabs(sum / N - expect) < 3.0 * se);
    // sanity: the stated sum evaluates near 5.29
    CHECK(expect == doctest::Approx(5.290717).epsilon(1e-5));
  }
}

TEST_CASE("override draws") {
  const int L = 2;
  TransitionCounts counts;
  counts.n_init = Eigen::VectorXi::Zero(L);
  counts.n_group = Eigen::MatrixXi::Zero(2, L);
  counts.n_trans.assign(1, Eigen::MatrixXi::Zero(L, L));
  counts.n_trans[0](0, 0) = 10;
  Eigen::VectorXd beta(2);
  beta << 0.5, 0.5;

  SUBCASE("rho = 0 never overrides") {
    RngStream rng(7, RngDomain::test);
    auto aux = sample_aux_tables(counts, beta, 1.0, 1.0, 0.0, rng);
    sample_overrides(aux, beta, 0.0, rng);
    CHECK(aux.w.sum() == 0);
    CHECK(aux.m_bar[0] == aux.m[0]);
  }
  SUBCASE("beta_j = 0 with rho > 0 overrides everything") {
    Eigen::VectorXd beta0(2);
    beta0 << 0.0, 1.0;
    for (int rep = 0; rep < 50; ++rep) {
      RngStream rng(8, RngDomain::test, 0, rep);
      auto aux = sample_aux_tables(counts, beta, 1.0, 1.0, 1.0, rng);
      sample_overrides(aux, beta0, 0.5, rng);
      CHECK(aux.w(0, 0) == aux.m[0](0, 0));
      CHECK(aux.m_bar[0](0, 0) == 0);
    }
  }
  SUBCASE("override mean matches the closed form") {
    // m_jj = 10, rho = 0.8, beta_j = 0.5 -> success prob 8/9
    const double p = 0.8 / (0.8 + 0.5 * 0.2);
    CHECK(p == doctest::Approx(8.0 / 9.0));
    const int N = 100000;
    double sum = 0.0;
    for (int rep = 0; rep < N; ++rep) {
      RngStream rng(9, RngDomain::test, 0, rep);
      AuxCounts aux;
      aux.m0 = Eigen::VectorXi::Zero(L);
      aux.m_bar0 = Eigen::VectorXi::Zero(L);
      aux.m.assign(1, Eigen::MatrixXi::Zero(L, L));
      aux.m_bar.assign(1, Eigen::MatrixXi::Zero(L, L));
      aux.w = Eigen::MatrixXi::Zero(1, L);
      aux.m[0](0, 0) = 10;
      sample_overrides(aux, beta, 0.8, rng);
      sum += aux.w(0, 0);
    }
    const double expect = 10 * p;
    const double se = std::sqrt(10 * p * (1 - p) / N);
    CHECK(std::fabs(sum / N - expect) < 3.0 * se);
  }
}

TEST_CASE("global weight draws") {
  AuxCounts aux;
  aux.m0 = Eigen::VectorXi::Zero(2);
  aux.m_bar0 = Eigen::VectorXi::Zero(2);
  aux.m.assign(1, Eigen::MatrixXi::Zero(2, 2));
  aux.m_bar.assign(1, Eigen::MatrixXi::Zero(2, 2));
  aux.w = Eigen::MatrixXi::Zero(1, 2);

  SUBCASE("symmetric prior has uniform means") {
    const int L = 2, N = 100000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(L);
    for (int rep = 0; rep < N; ++rep) {
      RngStream rng(10, RngDomain::test, 0, rep);
      mean += sample_beta(aux, static_cast<double>(L), L, rng);
    }
    mean /= N;
    // Dirichlet(1,1): component sd = sqrt(1/4/3)
    const double se = std::sqrt(0.25 / 3.0 / N);
    for (int k = 0; k < L; ++k) CHECK(std::fabs(mean[k] - 0.5) < 3.0 * se);
  }
  SUBCASE("sums to one and tracks table counts") {
    aux.m_bar0[0] = 100;
    RngStream rng(11, RngDomain::test);
    const int N = 100000;
    double mean0 = 0.0;
    for (int rep = 0; rep < N; ++rep) {
      const auto beta = sample_beta(aux, 1.0, 2, rng);
      CHECK(beta.sum() == doctest::Approx(1.0).epsilon(1e-12));
      mean0 += beta[0];
    }
    const double expect = 100.5 / 101.0;
    const double var = expect * (1 - expect) / 102.0;
    CHECK(std::fabs(mean0 / N - expect) < 3.0 * std::sqrt(var / N));
  }
}

TEST_CASE("initial distribution draw") {
  TransitionCounts counts;
  counts.n_init = Eigen::VectorXi::Zero(3);
  counts.n_init << 5, 0, 0;
  counts.n_group = Eigen::MatrixXi::Zero(1, 3);
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(3, 1.0 / 3);
  const int N = 100000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (int rep = 0; rep < N; ++rep) {
    RngStream rng(12, RngDomain::test, 0, rep);
    const auto pi0 = sample_initial_distribution(counts, beta, 3.0, rng);
    CHECK(pi0.sum() == doctest::Approx(1.0).epsilon(1e-12));
    mean += pi0;
  }
  mean /= N;
  // Dirichlet(1+5, 1, 1)
  const double expect0 = 6.0 / 8.0;
  const double se0 = std::sqrt(expect0 * (1 - expect0) / 9.0 / N);
  CHECK(std::fabs(mean[0] - expect0) < 3.0 * se0);
}

TEST_CASE("transition row draws") {
  const int L = 3, T = 3;
  TransitionCounts counts;
  counts.n_init = Eigen::VectorXi::Zero(L);
  counts.n_group = Eigen::MatrixXi::Zero(T, L);
  counts.n_trans.assign(T - 1, Eigen::MatrixXi::Zero(L, L));
  Eigen::VectorXd beta(3);
  beta << 0.2, 0.5, 0.3;

  SUBCASE("rows are simplices; sticky mass concentrates the diagonal") {
    const double alpha = 2.0, kappa = 50.0;
    const int N = 20000;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(L, L);
    for (int rep = 0; rep < N; ++rep) {
      const auto Pi =
          sample_transition_rows(counts, beta, alpha, kappa, 13, rep);
      for (int s = 0; s < T - 1; ++s)
        for (int g = 0; g < L; ++g)
          CHECK(Pi[s].row(g).sum() == doctest::Approx(1.0).epsilon(1e-12));
      mean += Pi[0];
    }
    mean /= N;
    for (int g = 0; g < L; ++g) {
      const double expect = (alpha * beta[g] + kappa) / (alpha + kappa);
      CHECK(mean(g, g) == doctest::Approx(expect).epsilon(0.02));
      CHECK(mean(g, g) > 0.9);
    }
  }
  SUBCASE("kappa = 0 prior rows center on beta") {
    const int N = 50000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(L);
    for (int rep = 0; rep < N; ++rep) {
      const auto Pi = sample_transition_rows(counts, beta, 3.0, 0.0, 14, rep);
      mean += Pi[0].row(1).transpose();
    }
    mean /= N;
    for (int k = 0; k < L; ++k) {
      const double se = std::sqrt(beta[k] * (1 - beta[k]) / 4.0 / N);
      CHECK(std::fabs(mean[k] - beta[k]) < 3.5 * se);
    }
  }
}

TEST_CASE("escobar-west concentration sampler") {
  SUBCASE("draws are positive") {
    RngStream rng(15, RngDomain::test);
    double g = 1.0;
    for (int i = 0; i < 10000; ++i) {
      g = sample_concentration_escobar_west(3, 50, 1.0, 0.1, g, rng);
      CHECK(g > 0.0);
    }
  }
  SUBCASE("matches an independent reference implementation") {
    // identical two-step scheme written against std::mt19937_64
    std::mt19937_64 ref_rng(99);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto ref_gamma = [&](double shape, double rate) {
      std::gamma_distribution<double> g(shape, 1.0 / rate);
      return g(ref_rng);
    };
    auto ref_beta = [&](double a, double b) {
      const double x = ref_gamma(a, 1.0), y = ref_gamma(b, 1.0);
      return x / (x + y);
    };
    const int K = 1;
    const long N = 1;
    const double a = 1.0, b = 1.0;
    const int iters = 1000000;
    double ref_sum = 0.0, cur = 1.0;
    for (int i = 0; i < iters; ++i) {
      const double eta = ref_beta(cur + 1.0, static_cast<double>(N));
      const double rate = b - std::log(eta);
      const double pi1 = a + K - 1, pi2 = N * rate;
      const bool first = unif(ref_rng) < pi1 / (pi1 + pi2);
      cur = ref_gamma(first ? a + K : a + K - 1, rate);
      ref_sum += cur;
    }
    RngStream rng(16, RngDomain::test);
    double sum = 0.0, g = 1.0;
    std::vector<double> batch_means;
    double batch = 0.0;
    for (int i = 0; i < iters; ++i) {
      g = sample_concentration_escobar_west(K, N, a, b, g, rng);
      sum += g;
      batch += g;
      if ((i + 1) % 10000 == 0) {
        batch_means.push_back(batch / 10000);
        batch = 0.0;
      }
    }
    double bm = 0.0, bv = 0.0;
    for (double m : batch_means) bm += m;
    bm /= batch_means.size();
    for (double m : batch_means) bv += (m - bm) * (m - bm);
    bv /= (batch_means.size() - 1);
    const double se = std::sqrt(2.0 * bv / batch_means.size());
    CHECK(std::fabs(sum / iters - ref_sum / iters) < 4.0 * se);
  }
  SUBCASE("posterior mean grows with K") {
    auto chain_mean = [](int K, long N, uint64_t seed) {
      RngStream rng(seed, RngDomain::test);
      double g = 1.0, sum = 0.0;
      for (int i = 0; i < 100000; ++i) {
        g = sample_concentration_escobar_west(K, N, 1.0, 0.1, g, rng);
        sum += g;
      }
      return sum / 100000;
    };
    CHECK(chain_mean(50, 100, 17) > chain_mean(2, 100, 18));
  }
  SUBCASE("K=0 or N=0 falls back to the prior") {
    const int N = 100000;
    double sum = 0.0;
    RngStream rng(19, RngDomain::test);
    for (int i = 0; i < N; ++i)
      sum += sample_concentration_escobar_west(0, 10, 2.0, 0.5, 1.0, rng);
    // Gamma(2, rate 0.5) has mean 4, var 8
    CHECK(std::fabs(sum / N - 4.0) < 3.0 * std::sqrt(8.0 / N));
  }
}

TEST_CASE("aux invariants hold after full sweeps on random labels") {
  RngStream lab_rng(20, RngDomain::test);
  for (int rep = 0; rep < 20; ++rep) {
    const int T = 4, n = 8, L = 3;
    LabelSequences labels;
    labels.Z.resize(T, n);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i)
        labels.Z(t, i) = static_cast<int>(lab_rng.uniform() * L);
    const auto counts = compute_transition_counts(labels, L);
    RngStream rng(21, RngDomain::test, 0, rep);
    Eigen::VectorXd beta(3);
    beta << 0.3, 0.3, 0.4;
    auto aux = sample_aux_tables(counts, beta, 1.5, 1.0, 2.0, rng);
    sample_overrides(aux, beta, 2.0 / 3.0, rng);
    aux.check_invariants(counts);
  }
}

TEST_CASE("n=0 cycle reproduces the prior on beta") {
  const int L = 4;
  TransitionCounts counts;
  counts.n_init = Eigen::VectorXi::Zero(L);
  counts.n_group = Eigen::MatrixXi::Zero(3, L);
  counts.n_trans.assign(2, Eigen::MatrixXi::Zero(L, L));
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(L, 0.25);
  const int N = 50000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(L);
  for (int rep = 0; rep < N; ++rep) {
    RngStream rng(22, RngDomain::test, 0, rep);
    auto aux = sample_aux_tables(counts, beta, 1.0, 1.0, 4.0, rng);
    sample_overrides(aux, beta, 0.8, rng);
    beta = sample_beta(aux, 2.0, L, rng);
    mean += beta;
  }
  mean /= N;
  // stationary law is Dirichlet(gamma/L,...): mean 1/L
  // (component sd for gamma=2, L=4: sqrt(p(1-p)/3))
  const double se = std::sqrt(0.25 * 0.75 / 3.0 / N);
  for (int k = 0; k < L; ++k) CHECK(std::fabs(mean[k] - 0.25) < 4.0 * se);
}

TEST_CASE("hyperparameter refresh") {
  const int L = 3, p = 2;
  ModelState state;
  state.positions = LatentPositions::zeros(2, 4, p);
  state.labels = LabelSequences::constant(2, 4, 0);
  state.groups.mu = Eigen::MatrixXd::Zero(p, L);
  state.groups.mu << 1.0, -2.0, 0.5, 0.0, 1.0, -1.5;
  state.groups.sigma2 = Eigen::VectorXd::Constant(L, 0.7);
  state.trans.beta = Eigen::VectorXd::Constant(L, 1.0 / 3);
  state.trans.pi0 = state.trans.beta;
  state.trans.Pi.assign(1, Eigen::MatrixXd::Constant(L, L, 1.0 / 3));
  state.hyper = default_hyperparams(4, p);
  const auto counts = compute_transition_counts(state.labels, L);

  SUBCASE("tau2 posterior mean matches the inverse-gamma formula") {
    double ss = 0.0;
    for (int g = 0; g < L; ++g) ss += state.groups.mu.col(g).squaredNorm();
    const double shape = (state.hyper.a_tau + L) / 2.0;
    const double scale = (state.hyper.b_tau + ss) / 2.0;
    const double expect = scale / (shape - 1.0);
    const int N = 100000;
    double sum = 0.0;
    HyperToggles only_tau = HyperToggles::none();
    only_tau.tau2 = true;
    for (int rep = 0; rep < N; ++rep) {
      RngStream rng(23, RngDomain::test, 0, rep);
      AuxCounts aux;
      aux.m0 = Eigen::VectorXi::Zero(L);
      aux.m_bar0 = Eigen::VectorXi::Zero(L);
      aux.m.assign(1, Eigen::MatrixXi::Zero(L, L));
      aux.m_bar.assign(1, Eigen::MatrixXi::Zero(L, L));
      aux.w = Eigen::MatrixXi::Zero(1, L);
      auto s = state;
      sample_hyperparams(s, counts, aux, only_tau, rng);
      sum += s.hyper.tau2;
    }
    const double sd = expect / std::sqrt(shape - 2.0);
    CHECK(std::fabs(sum / N - expect) < 3.0 * sd / std::sqrt(static_cast<double>(N)));
  }
  SUBCASE("with L=1 and mu=0 the tau2 posterior is the prior update") {
    ModelState s1 = state;
    s1.groups.mu = Eigen::MatrixXd::Zero(p, 1);
    s1.groups.sigma2 = Eigen::VectorXd::Constant(1, 0.7);
    s1.trans.beta = Eigen::VectorXd::Ones(1);
    s1.trans.pi0 = s1.trans.beta;
    s1.trans.Pi.assign(1, Eigen::MatrixXd::Ones(1, 1));
    s1.labels = LabelSequences::constant(2, 4, 0);
    const auto c1 = compute_transition_counts(s1.labels, 1);
    const double shape = (s1.hyper.a_tau + 1) / 2.0;
    const double scale = s1.hyper.b_tau / 2.0;
    const int N = 100000;
    double sum = 0.0;
    HyperToggles only_tau = HyperToggles::none();
    only_tau.tau2 = true;
    for (int rep = 0; rep < N; ++rep) {
      RngStream rng(24, RngDomain::test, 0, rep);
      AuxCounts aux;
      aux.m0 = Eigen::VectorXi::Zero(1);
      aux.m_bar0 = Eigen::VectorXi::Zero(1);
      aux.m.assign(1, Eigen::MatrixXi::Zero(1, 1));
      aux.m_bar.assign(1, Eigen::MatrixXi::Zero(1, 1));
      aux.w = Eigen::MatrixXi::Zero(1, 1);
      auto s = s1;
      sample_hyperparams(s, c1, aux, only_tau, rng);
      sum += s.hyper.tau2;
    }
    const double expect = scale / (shape - 1.0);
    const double sd = expect / std::sqrt(shape - 2.0);
    CHECK(std::fabs(sum / N - expect) <
          3.5 * sd / std::sqrt(static_cast<double>(N)));
  }
  SUBCASE("rho with no considered dishes is a fresh prior draw") {
    const int N = 100000;
    double sum = 0.0;
    HyperToggles only_rho = HyperToggles::none();
    only_rho.rho = true;
    for (int rep = 0; rep < N; ++rep) {
      RngStream rng(25, RngDomain::test, 0, rep);
      AuxCounts aux;
      aux.m0 = Eigen::VectorXi::Zero(L);
      aux.m_bar0 = Eigen::VectorXi::Zero(L);
      aux.m.assign(1, Eigen::MatrixXi::Zero(L, L));
      aux.m_bar.assign(1, Eigen::MatrixXi::Zero(L, L));
      aux.w = Eigen::MatrixXi::Zero(1, L);
      auto s = state;
      sample_hyperparams(s, counts, aux, only_rho, rng);
      sum += s.hyper.rho;
    }
    // Beta(8, 2): mean 0.8, var 0.8*0.2/11
    const double se = std::sqrt(0.8 * 0.2 / 11.0 / N);
    CHECK(std::fabs(sum / N - 0.8) < 3.0 * se);
  }
}
