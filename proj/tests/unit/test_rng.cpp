#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hdplpcm/errors.hpp"
#include "hdplpcm/rng.hpp"

using namespace hdplpcm;

TEST_CASE("philox known-answer vectors") {
  // Reference vectors for philox4x32-10 (Random123 test suite).
  auto out = philox4x32_10({0u, 0u, 0u, 0u}, {0u, 0u});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);

  out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      {0xffffffffu, 0xffffffffu});
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);

  out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u});
  CHECK(out[0] == 0xd16cfe09u);
  CHECK(out[1] == 0x94fdccebu);
  CHECK(out[2] == 0x5001e420u);
  CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(42, RngDomain::test, 0, 0);
  RngStream b(42, RngDomain::test, 0, 0);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());

  RngStream c(42, RngDomain::test, 1, 0);
  RngStream d(42, RngDomain::test, 0, 1);
  RngStream e(43, RngDomain::test, 0, 0);
  RngStream base(42, RngDomain::test, 0, 0);
  const auto x = base.next_u64();
  CHECK(c.next_u64() != x);
  CHECK(d.next_u64() != x);
  CHECK(e.next_u64() != x);
}

TEST_CASE("uniform moments and range") {
  RngStream rng(7, RngDomain::test);
  const int N = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < N; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / N;
  const double var = sumsq / N - mean * mean;
  CHECK(std::fabs(mean - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / N));
  CHECK(std::fabs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("normal moments") {
  RngStream rng(11, RngDomain::test);
  const int N = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < N; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / N;
  const double var = sumsq / N - mean * mean;
  CHECK(std::fabs(mean) < 5.0 / std::sqrt(static_cast<double>(N)));
  CHECK(std::fabs(var - 1.0) < 5.0 * std::sqrt(2.0 / N));
}

TEST_CASE("normal cdf and quantile invert each other") {
  for (double x : {-3.0, -1.2, -0.5, 0.0, 0.7, 1.5, 4.0}) {
    CHECK(normal_quantile(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-9));
  }
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(normal_quantile(0.0), InvalidArgument);
}

TEST_CASE("gamma moments") {
  for (double shape : {0.4, 1.0, 3.7}) {
    RngStream rng(13, RngDomain::test, static_cast<uint32_t>(shape * 10));
    const int N = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < N; ++i) {
      const double g = rng.gamma(shape);
      CHECK(g >= 0.0);
      sum += g;
      sumsq += g * g;
    }
    const double mean = sum / N;
    const double var = sumsq / N - mean * mean;
    // mean = shape, var = shape for unit scale
    CHECK(std::fabs(mean - shape) < 5.0 * std::sqrt(shape / N));
    CHECK(std::fabs(var - shape) < 0.1 * shape);
  }
  RngStream rng(13, RngDomain::test);
  CHECK(rng.gamma(0.0) == 0.0);
  CHECK_THROWS_AS(rng.gamma(-1.0), InvalidArgument);
}

TEST_CASE("beta and binomial moments") {
  RngStream rng(17, RngDomain::test);
  const int N = 100000;
  double sum = 0.0;
  for (int i = 0; i < N; ++i) sum += rng.beta(2.0, 5.0);
  const double mean = sum / N;
  const double expect = 2.0 / 7.0;
  const double sd = std::sqrt(expect * (1 - expect) / 8.0);
  CHECK(std::fabs(mean - expect) < 5.0 * sd / std::sqrt(static_cast<double>(N)));
  CHECK(rng.beta(0.0, 3.0) == 0.0);
  CHECK(rng.beta(3.0, 0.0) == 1.0);

  long total = 0;
  for (int i = 0; i < N; ++i) total += rng.binomial(20, 0.3);
  const double bmean = static_cast<double>(total) / N;
  CHECK(std::fabs(bmean - 6.0) <
        5.0 * std::sqrt(20 * 0.3 * 0.7 / N));
  CHECK(rng.binomial(10, 0.0) == 0);
  CHECK(rng.binomial(10, 1.0) == 10);
}

TEST_CASE("dirichlet sums to one with matching means") {
  RngStream rng(19, RngDomain::test);
  const std::vector<double> alpha{1.0, 2.0, 3.0};
  const int N = 50000;
  std::vector<double> mean(3, 0.0);
  for (int i = 0; i < N; ++i) {
    const auto x = rng.dirichlet(alpha);
    double s = 0.0;
    for (double v : x) {
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 0; k < 3; ++k) mean[k] += x[k];
  }
  for (int k = 0; k < 3; ++k) {
    const double e = alpha[k] / 6.0;
    const double sd = std::sqrt(e * (1 - e) / 7.0 / N);
    CHECK(std::fabs(mean[k] / N - e) < 5.0 * sd);
  }
}

TEST_CASE("categorical follows weights and rejects degenerate input") {
  RngStream rng(23, RngDomain::test);
  const std::vector<double> w{1.0, 3.0, 0.0, 6.0};
  std::vector<int> counts(4, 0);
  const int N = 100000;
  for (int i = 0; i < N; ++i) counts[rng.categorical(w)]++;
  CHECK(counts[2] == 0);
  CHECK(std::fabs(counts[0] / static_cast<double>(N) - 0.1) < 0.01);
  CHECK(std::fabs(counts[1] / static_cast<double>(N) - 0.3) < 0.01);
  CHECK(std::fabs(counts[3] / static_cast<double>(N) - 0.6) < 0.01);

  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(rng.categorical(zero), DegenerateDistribution);
  const std::vector<double> neginf{-INFINITY, -INFINITY};
  CHECK_THROWS_AS(rng.categorical_log(neginf), DegenerateDistribution);
}

TEST_CASE("truncated normal stays inside and matches analytic mean") {
  RngStream rng(29, RngDomain::test);
  const double mu = 0.7, sd = 0.5;
  const int N = 100000;
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = rng.truncated_normal(mu, sd, 0.0, 1.0);
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    sum += x;
  }
  const double a = (0.0 - mu) / sd, b = (1.0 - mu) / sd;
  auto phi = [](double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  };
  const double Z = normal_cdf(b) - normal_cdf(a);
  const double expect = mu + sd * (phi(a) - phi(b)) / Z;
  CHECK(std::fabs(sum / N - expect) < 5.0 * sd / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("inverse gamma mean") {
  RngStream rng(31, RngDomain::test);
  const double shape = 4.0, scale = 6.0;
  const int N = 200000;
  double sum = 0.0;
  for (int i = 0; i < N; ++i) sum += rng.inverse_gamma(shape, scale);
  // mean = scale / (shape - 1), var = mean^2 / (shape - 2)
  const double expect = scale / (shape - 1.0);
  const double se = expect / std::sqrt((shape - 2.0) * N);
  CHECK(std::fabs(sum / N - expect) < 5.0 * se);
}
