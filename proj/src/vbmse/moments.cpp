#include "vbmse/moments.hpp"

#include <cmath>
#include <limits>

namespace vbmse {

Index SpectralMoments::rank() const {
  if (p == 0) return 0;
  const double lmax = eigenvalues(0);
  if (lmax <= 0.0) return 0;
  const double tol = static_cast<double>(std::max(p, n)) * std::numeric_limits<double>::epsilon() * lmax;
  Index r = 0;
  for (Index i = 0; i < p; ++i)
    if (eigenvalues(i) > tol) ++r;
  return r;
}

Vec sample_mean(const Mat& train) {
  if (train.cols() < 1) throw InvalidArgument("sample_mean needs at least one observation");
  return train.rowwise().mean();
}

Mat sample_cov(const Mat& train) {
  const Index n = train.cols();
  if (n < 2) throw NumericError("degenerate SCM: need at least 2 observations, got " + std::to_string(n));
  const Vec mu = train.rowwise().mean();
  const Mat centered = train.colwise() - mu;
  Mat cov = (centered * centered.transpose()) / static_cast<double>(n - 1);
  // Force exact symmetry; downstream eigensolves assume it.
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

SpectralMoments spectral(const Mat& sigma_hat, const Vec& mu_hat, Index n) {
  if (sigma_hat.rows() != sigma_hat.cols()) throw InvalidArgument("covariance matrix must be square");
  if (mu_hat.size() != sigma_hat.rows()) throw InvalidArgument("mean length does not match covariance size");
  if (n < 1) throw InvalidArgument("sample count must be positive");

  const double scale = sigma_hat.cwiseAbs().maxCoeff();
  const double asym = (sigma_hat - sigma_hat.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1e-300)) {
    throw NumericError("matrix is not symmetric: max asymmetry " + std::to_string(asym));
  }

  SpectralMoments sm;
  sm.mu = mu_hat;
  sm.sigma = 0.5 * (sigma_hat + sigma_hat.transpose());
  sm.n = n;
  sm.p = sigma_hat.rows();
  sm.aspect_ratio = static_cast<double>(sm.p) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Mat> solver(sm.sigma);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");

  // Eigen returns ascending order; store non-increasing.
  sm.eigenvalues = solver.eigenvalues().reverse();
  sm.eigenvectors = solver.eigenvectors().rowwise().reverse();

  const double lmax = std::max(sm.eigenvalues(0), 0.0);
  const double floor = -1e-10 * std::max(lmax, 1e-300);
  for (Index i = 0; i < sm.p; ++i) {
    if (sm.eigenvalues(i) < floor) {
      throw NumericError("matrix is not positive semidefinite: eigenvalue " +
                         std::to_string(sm.eigenvalues(i)));
    }
    if (sm.eigenvalues(i) < 0.0) sm.eigenvalues(i) = 0.0;
  }
  return sm;
}

SpectralMoments fit_moments(const Mat& train) {
  return spectral(sample_cov(train), sample_mean(train), train.cols());
}

TraceFunctionals trace_functionals(const Vec& eigenvalues, Index n, double gamma) {
  if (gamma <= 0.0) throw InvalidArgument("gamma must be positive");
  if (n < 1) throw InvalidArgument("sample count must be positive");
  TraceFunctionals tf;
  tf.gamma = gamma;
  const double sqrt_gamma = std::sqrt(gamma);
  double a = 0.0, ap = 0.0, b_im = 0.0;
  for (Index i = 0; i < eigenvalues.size(); ++i) {
    const double lam = eigenvalues(i);
    const double denom = lam + gamma;
    a += lam / denom;
    ap -= lam / (denom * denom);
    // sqrt(lam)/(sqrt(lam) - i sqrt(gamma)) = (lam + i sqrt(lam*gamma)) / (lam + gamma)
    b_im += std::sqrt(lam) * sqrt_gamma / denom;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  tf.a = a * inv_n;
  tf.a_prime = ap * inv_n;
  tf.b = Complex(tf.a, b_im * inv_n);
  return tf;
}

TraceFunctionals trace_functionals(const SpectralMoments& sm, double gamma) {
  return trace_functionals(sm.eigenvalues, sm.n, gamma);
}

}  // namespace vbmse
