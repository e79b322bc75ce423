#include "vbmse/portfolio.hpp"

#include <cmath>
#include <limits>

namespace vbmse {

namespace {

// Normalizes z to unit sum, rejecting near-cancelling denominators where the
// budget constraint would amplify noise without bound.
Vec normalize_budget(const Vec& z, const std::string& method) {
  const double denom = z.sum();
  const double mass = z.cwiseAbs().sum();
  if (!(std::abs(denom) > 1e-10 * std::max(mass, 1e-300))) {
    throw NumericError(method + ": budget normalization degenerate (1'z = " +
                       std::to_string(denom) + ")");
  }
  Vec w = z / denom;
  if (std::abs(w.sum() - 1.0) > 1e-12)
    throw NumericError(method + ": weights failed the sum-to-one check");
  return w;
}

}  // namespace

PortfolioWeights gmvp_weights(const SpectralMoments& sm, double gamma) {
  if (gamma <= 0.0) throw InvalidArgument("gamma must be positive");
  const Vec ones = Vec::Ones(sm.p);
  const Vec u = sm.eigenvectors.transpose() * ones;
  Vec scaled(sm.p);
  for (Index i = 0; i < sm.p; ++i) scaled(i) = u(i) / (sm.eigenvalues(i) + gamma);
  PortfolioWeights pw;
  pw.weights = normalize_budget(sm.eigenvectors * scaled, "rscm_gmvp");
  pw.method = "rscm_gmvp";
  pw.gamma_used = gamma;
  return pw;
}

PortfolioWeights gmvp_weights_true(const Mat& sigma_true) {
  if (sigma_true.rows() != sigma_true.cols()) throw InvalidArgument("covariance must be square");
  const Index p = sigma_true.rows();
  Eigen::LLT<Mat> llt(sigma_true);
  if (llt.info() != Eigen::Success)
    throw NumericError("true covariance is singular or not positive definite");
  const Vec z = llt.solve(Vec::Ones(p));
  PortfolioWeights pw;
  pw.weights = normalize_budget(z, "true_gmvp");
  pw.method = "true_gmvp";
  return pw;
}

PortfolioWeights lw_weights(const Mat& train, LwEstimate* estimate) {
  const Index p = train.rows();
  const Index n = train.cols();
  if (n < 2) throw NumericError("degenerate SCM: need at least 2 observations");

  const Vec mu = train.rowwise().mean();
  const Mat centered = train.colwise() - mu;
  const Mat scm_n = (centered * centered.transpose()) / static_cast<double>(n);

  const double m = scm_n.trace() / static_cast<double>(p);
  const double d2 = (scm_n - m * Mat::Identity(p, p)).squaredNorm() / static_cast<double>(p);

  // (1/n^2) sum_k ||b_k b_k' - S_n||_F^2 / p collapses to the two terms below.
  double fourth = 0.0;
  for (Index k = 0; k < n; ++k) fourth += std::pow(centered.col(k).squaredNorm(), 2);
  const double scm_norm2 = scm_n.squaredNorm();
  double b2_bar = (fourth / static_cast<double>(n * n) - scm_norm2 / static_cast<double>(n)) /
                  static_cast<double>(p);
  b2_bar = std::max(b2_bar, 0.0);
  const double b2 = std::min(b2_bar, d2);

  LwEstimate est;
  PortfolioWeights pw;
  pw.method = "lw";
  if (d2 <= 0.0) {
    // The SCM already equals its shrinkage target; any intensity gives the
    // same matrix and the minimum-variance holdings are uniform.
    est.beta = 0.0;
    est.gamma = m;
    est.intensity = 1.0;
    pw.weights = Vec::Constant(p, 1.0 / static_cast<double>(p));
  } else {
    est.intensity = b2 / d2;
    est.beta = 1.0 - est.intensity;
    est.gamma = est.intensity * m;
    Mat shrunk = est.beta * scm_n;
    shrunk.diagonal().array() += est.gamma;
    Eigen::LLT<Mat> llt(shrunk);
    if (llt.info() != Eigen::Success) throw NumericError("lw: shrunk covariance not positive definite");
    pw.weights = normalize_budget(llt.solve(Vec::Ones(p)), "lw");
  }
  pw.gamma_used = est.gamma;
  if (estimate) *estimate = est;
  return pw;
}

PortfolioWeights scm_pinv_weights(const SpectralMoments& sm) {
  const double lmax = sm.p > 0 ? sm.eigenvalues(0) : 0.0;
  if (lmax <= 0.0) throw NumericError("scm_pinv: zero covariance has no pseudo-inverse direction");
  const double tol =
      static_cast<double>(std::max(sm.p, sm.n)) * std::numeric_limits<double>::epsilon() * lmax;
  const Vec u = sm.eigenvectors.transpose() * Vec::Ones(sm.p);
  Vec scaled = Vec::Zero(sm.p);
  for (Index i = 0; i < sm.p; ++i) {
    if (sm.eigenvalues(i) > tol) scaled(i) = u(i) / sm.eigenvalues(i);
  }
  PortfolioWeights pw;
  pw.weights = normalize_budget(sm.eigenvectors * scaled, "scm_pinv");
  pw.method = "scm_pinv";
  return pw;
}

PortfolioWeights equal_weights(Index p) {
  if (p < 1) throw InvalidArgument("dimension must be positive");
  PortfolioWeights pw;
  pw.weights = Vec::Constant(p, 1.0 / static_cast<double>(p));
  pw.method = "equal_weight";
  return pw;
}

}  // namespace vbmse
