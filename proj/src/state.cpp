#include "hdplpcm/state.hpp"

#include <cmath>

#include "hdplpcm/errors.hpp"

namespace hdplpcm {

LatentPositions LatentPositions::zeros(int T, int n, int p) {
  LatentPositions out;
  out.X.assign(T, Eigen::MatrixXd::Zero(p, n));
  return out;
}

void LatentPositions::validate() const {
  if (X.empty()) throw InvalidArgument("positions: T must be >= 1");
  const auto p = X[0].rows();
  const auto n = X[0].cols();
  for (const auto& slice : X) {
    if (slice.rows() != p || slice.cols() != n)
      throw InvalidArgument("positions: inconsistent slice shapes");
    if (!slice.allFinite())
      throw InvalidArgument("positions: non-finite entries");
  }
}

LabelSequences LabelSequences::constant(int T, int n, int value) {
  LabelSequences out;
  out.Z = Eigen::MatrixXi::Constant(T, n, value);
  return out;
}

void LabelSequences::validate(int L) const {
  if ((Z.array() < 0).any() || (Z.array() >= L).any())
    throw InvalidArgument("labels outside 0..L-1");
}

void GroupParams::validate() const {
  if (mu.cols() != sigma2.size())
    throw InvalidArgument("group params: mu/sigma2 size mismatch");
  if ((sigma2.array() <= 0.0).any())
    throw InvalidArgument("group variances must be > 0");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw InvalidArgument("lambda must lie in (0, 1)");
  if (!std::isfinite(beta0)) throw InvalidArgument("beta0 must be finite");
}

namespace {
void check_simplex(const Eigen::VectorXd& v, const char* what) {
  if ((v.array() < 0.0).any())
    throw InvalidArgument(std::string(what) + ": negative entry");
  if (std::abs(v.sum() - 1.0) > 1e-10)
    throw InvalidArgument(std::string(what) + ": does not sum to 1");
}
}  // namespace

void TransitionStructure::validate() const {
  check_simplex(beta, "beta");
  check_simplex(pi0, "pi0");
  const auto L_ = beta.size();
  if (pi0.size() != L_) throw InvalidArgument("pi0 size mismatch");
  for (const auto& P : Pi) {
    if (P.rows() != L_ || P.cols() != L_)
      throw InvalidArgument("transition matrix shape mismatch");
    for (Eigen::Index g = 0; g < L_; ++g)
      check_simplex(P.row(g).transpose(), "transition row");
  }
}

void Hyperparams::set_concentration(double alpha_plus_kappa, double rho_value) {
  if (alpha_plus_kappa <= 0.0)
    throw InvalidArgument("alpha + kappa must be > 0");
  if (!(rho_value >= 0.0 && rho_value < 1.0))
    throw InvalidArgument("rho must lie in [0, 1)");
  kappa = rho_value * alpha_plus_kappa;
  alpha = alpha_plus_kappa - kappa;
  rho = rho_value;
}

void Hyperparams::validate() const {
  for (double v : {gamma, alpha0, alpha, tau2, a, b, a_tau, b_tau, c, d,
                   sigma2_beta0, sigma2_lambda})
    if (!(v > 0.0)) throw InvalidArgument("hyperparameter scale must be > 0");
  if (kappa < 0.0) throw InvalidArgument("kappa must be >= 0");
  if (std::abs(rho - kappa / (alpha + kappa)) > 1e-12)
    throw InvalidArgument("rho out of sync with kappa/(alpha+kappa)");
}

Hyperparams default_hyperparams(int n, int p) {
  if (n <= 0 || p <= 0) throw InvalidArgument("n and p must be positive");
  Hyperparams h;
  const double mean_tau2 = std::pow(static_cast<double>(n), 2.0 / p) / 50.0;
  // InvGamma(shape, scale): sd = 4*mean forces shape = 2 + 1/16.
  const double shape_tau = 2.0 + 1.0 / 16.0;
  h.a_tau = 2.0 * shape_tau;
  h.b_tau = 2.0 * mean_tau2 * (shape_tau - 1.0);
  // Gamma(c/2, scale 2/d): E[b] = 4*mean_tau2 and sd[b] = 4 E[b] force
  // c = 1/8.
  h.c = 0.125;
  h.d = h.c / (4.0 * mean_tau2);
  h.tau2 = mean_tau2;
  h.b = 4.0 * mean_tau2;
  h.a = 2.0;
  h.mu0 = Eigen::VectorXd::Zero(p);
  h.set_concentration(5.0, 0.8);  // alpha = 1, kappa = 4
  return h;
}

void ModelState::validate() const {
  positions.validate();
  groups.validate();
  trans.validate();
  hyper.validate();
  const int T_ = T(), n_ = n(), p_ = p(), L_ = L();
  if (labels.T() != T_ || labels.n() != n_)
    throw InvalidArgument("labels shape disagrees with positions");
  labels.validate(L_);
  if (trans.L() != L_) throw InvalidArgument("transition L disagrees");
  if (trans.T() != T_ && !(T_ == 1 && trans.Pi.empty()))
    throw InvalidArgument("transition count disagrees with T");
  if (groups.p() != p_) throw InvalidArgument("group center dimension disagrees");
  if (hyper.mu0.size() != 0 && hyper.mu0.size() != p_)
    throw InvalidArgument("mu0 dimension disagrees");
}

}  // namespace hdplpcm
