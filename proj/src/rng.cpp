#include "hdplpcm/rng.hpp"

#include <cfloat>
#include <cmath>
#include <limits>

#include "hdplpcm/errors.hpp"

namespace hdplpcm {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox_round(
    const std::array<std::uint32_t, 4>& c,
    const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0],
          static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1],
          static_cast<std::uint32_t>(p0)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    ctr = philox_round(ctr, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, RngDomain domain, std::uint32_t unit,
                     std::uint32_t epoch) {
  key_ = {static_cast<std::uint32_t>(seed),
          static_cast<std::uint32_t>(seed >> 32)};
  ctr_ = {0u, static_cast<std::uint32_t>(domain), unit, epoch};
}

void RngStream::refill() {
  buf_ = philox4x32_10(ctr_, key_);
  ++ctr_[0];  // 2^32 blocks per stream
  pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() { return 1.0 - uniform(); }

double RngStream::normal() {
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

double RngStream::gamma(double shape) {
  if (shape < 0.0 || !std::isfinite(shape))
    throw InvalidArgument("gamma shape must be finite and >= 0");
  if (shape == 0.0) return 0.0;
  if (shape < 1.0) {
    // Boost to shape+1 and scale back (Marsaglia-Tsang section 6).
    const double g = gamma(shape + 1.0);
    const double u = uniform_pos();
    return g * std::exp(std::log(u) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::inverse_gamma(double shape, double scale) {
  if (scale <= 0.0) throw InvalidArgument("inverse_gamma scale must be > 0");
  double g = gamma(shape);
  if (g < DBL_MIN) g = DBL_MIN;
  return scale / g;
}

double RngStream::beta(double a, double b) {
  if (a < 0.0 || b < 0.0) throw InvalidArgument("beta parameters must be >= 0");
  if (a == 0.0 && b == 0.0)
    throw InvalidArgument("beta(0, 0) is undefined");
  if (a == 0.0) return 0.0;
  if (b == 0.0) return 1.0;
  const double x = gamma(a);
  const double y = gamma(b);
  if (x + y < DBL_MIN) {
    // Both deviates underflowed; fall back to the Bernoulli limit.
    return bernoulli(a / (a + b)) ? 1.0 : 0.0;
  }
  return x / (x + y);
}

int RngStream::binomial(int n, double p) {
  if (n < 0) throw InvalidArgument("binomial n must be >= 0");
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  int count = 0;
  for (int i = 0; i < n; ++i) count += bernoulli(p) ? 1 : 0;
  return count;
}

int RngStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w))
      throw InvalidArgument("categorical weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0)
    throw DegenerateDistribution("categorical: all weights are zero");
  const double u = uniform() * total;
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    cum += weights[k];
    if (u < cum) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size()) - 1;
}

int RngStream::categorical_log(std::span<const double> log_weights) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights)
    if (lw > max_lw) max_lw = lw;
  if (!std::isfinite(max_lw))
    throw DegenerateDistribution("categorical: all log weights are -inf");
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = std::exp(log_weights[k] - max_lw);
  return categorical(w);
}

std::vector<double> RngStream::dirichlet(std::span<const double> alpha) {
  std::vector<double> x(alpha.size());
  double total = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    double g = gamma(alpha[k]);
    if (g < DBL_MIN) g = DBL_MIN;
    x[k] = g;
    total += g;
  }
  for (double& v : x) v /= total;
  return x;
}

double RngStream::truncated_normal(double mean, double sd, double lo,
                                   double hi) {
  if (!(lo < hi)) throw InvalidArgument("truncated_normal: lo must be < hi");
  if (sd <= 0.0) throw InvalidArgument("truncated_normal: sd must be > 0");
  const double p_lo = normal_cdf((lo - mean) / sd);
  const double p_hi = normal_cdf((hi - mean) / sd);
  double u = p_lo + uniform() * (p_hi - p_lo);
  // Guard the quantile against the exact endpoints when the window's
  // probability mass underflows.
  const double tiny = 1e-300;
  if (u <= tiny) u = tiny;
  if (u >= 1.0 - 1e-16) u = 1.0 - 1e-16;
  double x = mean + sd * normal_quantile(u);
  if (x <= lo) x = std::nextafter(lo, hi);
  if (x >= hi) x = std::nextafter(hi, lo);
  return x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// AS 241 algorithm PPND16.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw InvalidArgument("normal_quantile requires p in (0, 1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

}  // namespace hdplpcm
